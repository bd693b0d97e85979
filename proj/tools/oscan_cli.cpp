#include "oscan/core/cloud_io.hpp"
#include "oscan/harness/baseline.hpp"
#include "oscan/quality/fractal.hpp"
#include "oscan/visibility/ghpr.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace oscan;

namespace {

/// Flags shared by the episode subcommands; unset flags leave the config file
/// and scene values alone.
struct EpisodeFlags {
  std::string scene;
  std::string config;
  std::uint64_t seed = 1;
  std::optional<double> budget, sigma, rn, lambda, omega;
  std::string policy;

  void attach(CLI::App* app) {
    app->add_option("--scene", scene, "scene JSON file")->required();
    app->add_option("--config", config, "JSON file with parameter overrides");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--budget", budget, "travel budget in meters");
    app->add_option("--sigma", sigma, "planning radius and explorability scale, meters");
    app->add_option("--rn", rn, "minimum spacing of visit sites, meters");
    app->add_option("--lambda", lambda, "explorability weight in the guidance field");
    app->add_option("--omega", omega, "distance weight within explorability");
  }

  nlohmann::json overrides() const {
    nlohmann::json j = nlohmann::json::object();
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw Error("cannot open config file: " + config);
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw Error("malformed config file " + config + ": " + e.what());
      }
    }
    if (budget) j["budget"] = *budget;
    if (sigma) j["sigma"] = *sigma;
    if (rn) j["rn"] = *rn;
    if (lambda) j["lambda"] = *lambda;
    if (omega) j["omega"] = *omega;
    if (!policy.empty()) j["policy"] = policy;
    return j;
  }
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  return os;
}

int cmd_run(const EpisodeFlags& f, const std::string& out_dir) {
  const auto scene = load_scene(f.scene);
  const auto cfg = config_for(scene, f.overrides());
  const auto r = run_episode(scene, cfg, f.seed);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  {
    auto os = open_out(dir / "trace.csv");
    write_trace_csv(os, r.trace);
  }
  {
    auto os = open_out(dir / "curve.csv");
    write_curve_csv(os, r.metrics);
  }
  {
    auto os = open_out(dir / "metrics.csv");
    write_metrics_csv(os, r);
  }
  {
    auto os = open_out(dir / "cloud.ply");
    const auto& c = r.map.cloud();
    io::write_ply(os, c, {{"explorability", &c.explorability}, {"guidance", &c.guidance}});
  }
  std::printf("%s: policy=%s seed=%llu iou=%.4f travel=%.1f m steps=%zu scans=%d (%s) %.1f s\n",
              scene.name.c_str(), to_string(cfg.policy), static_cast<unsigned long long>(f.seed),
              r.metrics.final_iou, r.metrics.travel, r.trace.size(), r.scans, r.status.c_str(),
              r.seconds);
  return 0;
}

std::vector<Policy> parse_policies(const std::string& list) {
  std::vector<Policy> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(parse_policy(item));
  if (out.empty()) throw InvalidArgument("no policies given");
  return out;
}

int cmd_compare(const EpisodeFlags& f, const std::string& policies, int seeds, unsigned jobs,
                const std::string& out_file) {
  if (seeds < 1) throw InvalidArgument("--seeds must be at least 1");
  const auto scene = load_scene(f.scene);
  const auto base = config_for(scene, f.overrides());
  struct Job {
    Policy policy;
    std::uint64_t seed;
  };
  std::vector<Job> work;
  for (auto p : parse_policies(policies))
    for (int s = 0; s < seeds; ++s) work.push_back({p, f.seed + static_cast<std::uint64_t>(s)});

  std::vector<CompareRow> rows(work.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string first_error;
  auto worker = [&] {
    for (std::size_t k; (k = next++) < work.size();) {
      try {
        auto cfg = base;
        cfg.policy = work[k].policy;
        rows[k] = compare_row(work[k].policy, work[k].seed, run_episode(scene, cfg, work[k].seed));
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(work.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (!first_error.empty()) throw Error(first_error);

  if (out_file.empty() || out_file == "-") {
    write_compare_csv(std::cout, rows);
  } else {
    if (fs::path(out_file).has_parent_path()) fs::create_directories(fs::path(out_file).parent_path());
    auto os = open_out(out_file);
    write_compare_csv(os, rows);
  }
  return 0;
}

int cmd_quality(const std::string& cloud_path, double half_width, const std::string& out) {
  auto cloud = io::load_cloud(cloud_path);
  if (cloud.empty()) throw EmptyInputError("cloud has no points: " + cloud_path);
  QualityParams q;
  q.half_width = half_width;
  const auto d = local_quality_field(cloud, q);
  std::size_t under = 0, set = 0;
  for (double v : d) {
    set += is_set(v);
    under += is_under_scanned(v, q);
  }
  auto os = open_out(out);
  io::write_ply(os, cloud, {{"fractal_dim", &cloud.fractal_dim}});
  std::printf("points=%zu evaluated=%zu under_scanned=%zu (D < %.2f)\n", cloud.size(), set, under,
              q.under_scanned_below);
  return 0;
}

int cmd_visibility(const std::string& cloud_path, const std::vector<double>& viewpoint,
                   double alpha, const std::string& out) {
  if (viewpoint.size() != 3) throw InvalidArgument("--viewpoint takes three numbers");
  auto cloud = io::load_cloud(cloud_path);
  const Point3 v(viewpoint[0], viewpoint[1], viewpoint[2]);
  const auto vis = visible_set(cloud.points, v, alpha);
  std::vector<double> flag(vis.begin(), vis.end());
  auto os = open_out(out);
  io::write_ply(os, cloud, {{"visible", &flag}});
  const auto n = static_cast<std::size_t>(std::count(vis.begin(), vis.end(), true));
  std::printf("points=%zu visible=%zu\n", cloud.size(), n);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online scanning planner: episodes, baselines and point-cloud tools"};
  app.require_subcommand(1);

  EpisodeFlags run_flags;
  std::string run_out = "runs";
  auto* run = app.add_subcommand("run", "run one exploration episode");
  run_flags.attach(run);
  run->add_option("--policy", run_flags.policy, "full, norefine, greedy or random");
  run->add_option("--out", run_out, "output directory");

  EpisodeFlags cmp_flags;
  std::string policies = "full,random", cmp_out;
  int seeds = 5;
  unsigned jobs = 1;
  auto* cmp = app.add_subcommand("compare", "compare policies over several seeds");
  cmp_flags.attach(cmp);
  cmp->add_option("--policies", policies, "comma-separated policies");
  cmp->add_option("--seeds", seeds, "number of consecutive seeds starting at --seed");
  cmp->add_option("--jobs", jobs, "episodes run concurrently");
  cmp->add_option("--out", cmp_out, "CSV file (standard output if omitted)");

  std::string q_cloud, q_out = "quality.ply";
  double q_half = QualityParams{}.half_width;
  auto* qual = app.add_subcommand("quality", "local fractal dimension of a cloud");
  qual->add_option("--cloud", q_cloud, "PLY or XYZ cloud")->required();
  qual->add_option("--half-width", q_half, "half width of the cube neighborhood, meters");
  qual->add_option("--out", q_out, "output PLY");

  std::string v_cloud, v_out = "visibility.ply";
  std::vector<double> viewpoint;
  double alpha = kDefaultGhprAlpha;
  auto* vis = app.add_subcommand("visibility", "points visible from a viewpoint");
  vis->add_option("--cloud", v_cloud, "PLY or XYZ cloud")->required();
  vis->add_option("--viewpoint", viewpoint, "x y z")->expected(3)->delimiter(',')->required();
  vis->add_option("--alpha", alpha, "kernel parameter");
  vis->add_option("--out", v_out, "output PLY");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_flags, run_out);
    if (*cmp) return cmd_compare(cmp_flags, policies, seeds, jobs, cmp_out);
    if (*qual) return cmd_quality(q_cloud, q_half, q_out);
    if (*vis) return cmd_visibility(v_cloud, viewpoint, alpha, v_out);
  } catch (const std::exception& e) {
    std::cerr << "oscan: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
