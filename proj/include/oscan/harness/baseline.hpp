#pragma once

#include "oscan/harness/metrics.hpp"
#include "oscan/sim/episode.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace oscan {

/// Applies named overrides to an episode configuration. Unknown keys are
/// rejected so that a typo in a config file does not go unnoticed.
inline void apply_overrides(EpisodeConfig& cfg, const nlohmann::json& j) {
  if (j.is_null()) return;
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  auto& g = cfg.planner.guidance;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "budget") cfg.budget = value.get<double>();
      else if (key == "sigma") g.sigma = value.get<double>();
      else if (key == "rn") g.site_spacing = value.get<double>();
      else if (key == "lambda") g.lambda = value.get<double>();
      else if (key == "omega") g.omega = value.get<double>();
      else if (key == "site_floor") g.site_floor = value.get<double>();
      else if (key == "policy") cfg.policy = parse_policy(value.get<std::string>());
      else if (key == "use_tsp") cfg.planner.use_tsp = value.get<bool>();
      else if (key == "noise") cfg.lidar.noise_sigma = value.get<double>();
      else if (key == "max_range") cfg.lidar.max_range = value.get<double>();
      else if (key == "speed") cfg.motion.speed = value.get<double>();
      else if (key == "scan_period") cfg.motion.scan_period = value.get<double>();
      else if (key == "visit_radius") cfg.planner.visit_radius = value.get<double>();
      else if (key == "max_steps") cfg.max_steps = value.get<int>();
      else if (key == "start") cfg.start = Vec2(value.at(0).get<double>(), value.at(1).get<double>());
      else throw InvalidArgument("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("config: bad value for '" + key + "': " + e.what());
    }
  }
  if (!(cfg.budget >= 0.0)) throw InvalidArgument("config: budget must be >= 0");
  if (!(g.sigma > 0.0)) throw InvalidArgument("config: sigma must be positive");
  if (!(g.site_spacing > 0.0)) throw InvalidArgument("config: rn must be positive");
  if (!(g.lambda >= 0.0 && g.lambda <= 1.0)) throw InvalidArgument("config: lambda must be in [0, 1]");
  if (!(g.omega >= 0.0 && g.omega <= 1.0)) throw InvalidArgument("config: omega must be in [0, 1]");
}

/// Episode configuration for a scene: defaults, then the scene's own
/// parameter block, then `overrides`.
inline EpisodeConfig config_for(const Scene& scene, const nlohmann::json& overrides = {}) {
  EpisodeConfig cfg;
  apply_overrides(cfg, scene.params);
  apply_overrides(cfg, overrides);
  return cfg;
}

/// One episode under `policy`, reduced to its metrics.
inline MetricsReport run_baseline(const Scene& scene, Policy policy, std::uint64_t seed,
                                  EpisodeConfig cfg = {}) {
  cfg.policy = policy;
  return run_episode(scene, cfg, seed).metrics;
}

struct CompareRow {
  Policy policy;
  std::uint64_t seed;
  double final_iou;
  double travel;
  double travel_to_80;
  double curvature;
  std::size_t steps;
  int scans;
  std::string status;
  std::uint64_t trace_hash;
};

inline CompareRow compare_row(Policy policy, std::uint64_t seed, const EpisodeResult& r) {
  return {policy,
          seed,
          r.metrics.final_iou,
          r.metrics.travel,
          r.metrics.travel_to(0.8),
          r.metrics.curvature,
          r.trace.size(),
          r.scans,
          r.status,
          r.trace_hash};
}

/// Timing is left out so identical inputs give byte-identical tables.
inline void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << "policy,seed,final_iou,travel,travel_to_80,curvature,steps,scans,status,trace_hash\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%llu,%.5f,%.4f,%.4f,%.4f,%zu,%d,\"%s\",%016llx\n",
                  to_string(r.policy), static_cast<unsigned long long>(r.seed), r.final_iou,
                  r.travel, r.travel_to_80, r.curvature, r.steps, r.scans, r.status.c_str(),
                  static_cast<unsigned long long>(r.trace_hash));
    os << buf;
  }
}

inline void write_metrics_csv(std::ostream& os, const EpisodeResult& r) {
  double mean_step = 0.0;
  for (double s : r.metrics.step_seconds) mean_step += s;
  if (!r.metrics.step_seconds.empty()) mean_step /= static_cast<double>(r.metrics.step_seconds.size());
  os << "final_iou,travel,travel_to_80,curvature,steps,scans,mean_step_seconds,seconds,status,"
        "trace_hash\n";
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.5f,%.4f,%.4f,%.4f,%zu,%d,%.4f,%.3f,\"%s\",%016llx\n",
                r.metrics.final_iou, r.metrics.travel, r.metrics.travel_to(0.8),
                r.metrics.curvature, r.trace.size(), r.scans, mean_step, r.seconds,
                r.status.c_str(), static_cast<unsigned long long>(r.trace_hash));
  os << buf;
}

}  // namespace oscan
