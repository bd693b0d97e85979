#pragma once

#include "oscan/core/polyline.hpp"

#include <functional>
#include <vector>

namespace oscan {

struct RobotState {
  Point3 position = Point3::Zero();
  double heading = 0.0;
  double traveled = 0.0;
  int scan_index = 0;
  double budget = 0.0;  // travel still allowed, meters
};

struct MotionParams {
  double speed = 1.0;        // m/s
  double scan_period = 8.0;  // s of simulated time between timer scans
  double step = 0.1;         // pose sampling along the path, meters
};

enum class MotionOutcome { Arrived, Halted, Interrupted, BudgetExhausted };

inline const char* to_string(MotionOutcome o) {
  switch (o) {
    case MotionOutcome::Arrived: return "arrived";
    case MotionOutcome::Halted: return "halted";
    case MotionOutcome::Interrupted: return "interrupted";
    case MotionOutcome::BudgetExhausted: return "budget_exhausted";
  }
  return "?";
}

struct MotionEvent {
  Point3 pose;
  double time;  // seconds since the motion began
  bool timer_scan;
};

struct MotionResult {
  MotionOutcome outcome = MotionOutcome::Arrived;
  std::vector<Point3> poses;          // every sampled pose, start included
  std::vector<MotionEvent> events;    // timer scans, then the final stop
  double moved = 0.0;
  int timer_scans = 0;
};

/// Drives `robot` along `path` (which should start at the robot) at constant
/// speed. A timer scan fires every `scan_period` seconds, the one coinciding
/// with arrival included; `on_timer` may return false to stop there. Before
/// each pose is taken `safe` must accept it, otherwise the robot halts at the
/// last safe pose. Motion also stops when the budget runs out.
inline MotionResult step_robot(RobotState& robot, const PathPolyline& path,
                               const MotionParams& params,
                               const std::function<bool(const Point3&)>& safe,
                               const std::function<bool(const RobotState&)>& on_timer) {
  if (!(params.speed > 0.0) || !(params.scan_period > 0.0) || !(params.step > 0.0))
    throw InvalidArgument("step_robot: speed, period and step must be positive");
  MotionResult r;
  r.poses.push_back(robot.position);
  const double length = path.size() < 2 ? 0.0 : path.length();
  const double spacing = params.speed * params.scan_period;
  const auto& arc = path.cumulative();

  double s = 0.0;
  std::size_t next_vertex = 1;
  double next_timer = spacing;
  auto advance_to = [&](double target) {
    const Point3 p = path.at(target);
    const double chord = (p - robot.position).norm();
    if (chord > 0.0) robot.heading = std::atan2(p.y() - robot.position.y(), p.x() - robot.position.x());
    robot.position = p;
    robot.traveled += chord;
    robot.budget -= chord;
    r.moved += chord;
    r.poses.push_back(p);
    s = target;
  };

  while (s < length) {
    while (next_vertex < arc.size() && arc[next_vertex] <= s) ++next_vertex;
    double target = std::min({s + params.step, length, next_timer});
    if (next_vertex < arc.size()) target = std::min(target, arc[next_vertex]);
    bool exhausted = false;
    if (target - s > robot.budget) {
      target = s + std::max(0.0, robot.budget);
      exhausted = true;
    }
    if (!safe(path.at(target))) {
      r.outcome = MotionOutcome::Halted;
      break;
    }
    advance_to(target);
    if (exhausted) {
      r.outcome = MotionOutcome::BudgetExhausted;
      break;
    }
    if (s >= next_timer - 1e-12) {
      next_timer += spacing;
      ++r.timer_scans;
      r.events.push_back({robot.position, r.moved / params.speed, true});
      if (!on_timer(robot)) {
        r.outcome = MotionOutcome::Interrupted;
        break;
      }
    }
  }
  r.events.push_back({robot.position, r.moved / params.speed, false});
  return r;
}

}  // namespace oscan
