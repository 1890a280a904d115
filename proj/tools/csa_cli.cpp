// Command-line experiment harness.
//
//   csa run <config.json | preset-name> [--seeds ...] [--reps N]
//           [--out DIR] [--threads K]
//   csa list-presets
//   csa emit <bundle-dir-or-config> --format {summary-json|table-csv|trajectory-csv}
//           [--out DIR] ...
//
// `run` executes every condition and writes summary.json plus table.csv
// into the output directory. Errors exit nonzero with a one-line JSON
// record on stderr.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "csa/runner.hpp"

namespace {

std::vector<csa::ExperimentConfig> load_conditions(const std::string& source) {
  if (std::filesystem::exists(source)) {
    std::ifstream f(source);
    nlohmann::json j;
    f >> j;
    std::vector<csa::ExperimentConfig> out;
    if (j.is_array())
      for (const auto& item : j) out.push_back(item.get<csa::ExperimentConfig>());
    else
      out.push_back(j.get<csa::ExperimentConfig>());
    return out;
  }
  return csa::preset(source);
}

void fail(const std::string& code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << '\n';
  std::exit(1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"e-process selective-acting experiment harness"};
  app.require_subcommand(1);

  std::string source, out_dir = ".", format = "summary-json";
  std::vector<std::uint64_t> seeds;
  std::size_t reps = 0, threads = 1, traj_rep = 0;

  auto* run = app.add_subcommand("run", "run a config file or preset");
  run->add_option("source", source, "config JSON path or preset name")->required();
  run->add_option("--seeds", seeds, "explicit replication seeds");
  run->add_option("--reps", reps, "override replication count");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads per condition");

  auto* list = app.add_subcommand("list-presets", "list built-in presets");

  auto* emit = app.add_subcommand("emit", "re-emit outputs for a config or preset");
  emit->add_option("source", source, "config JSON path or preset name")->required();
  emit->add_option("--format", format, "summary-json | table-csv | trajectory-csv");
  emit->add_option("--out", out_dir, "output directory");
  emit->add_option("--seeds", seeds, "explicit replication seeds");
  emit->add_option("--reps", reps, "override replication count");
  emit->add_option("--threads", threads, "worker threads per condition");
  emit->add_option("--rep", traj_rep, "replication index for trajectory-csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& name : csa::preset_names()) std::cout << name << '\n';
      return 0;
    }

    auto conditions = load_conditions(source);
    for (auto& c : conditions) {
      if (!seeds.empty()) c.seeds = seeds;
      if (reps > 0) {
        c.n_reps = reps;
        if (!c.seeds.empty() && c.seeds.size() > reps) c.seeds.resize(reps);
      }
    }
    std::filesystem::create_directories(out_dir);

    if (run->parsed() || (emit->parsed() && format != "trajectory-csv")) {
      std::vector<csa::ResultBundle> bundles;
      bundles.reserve(conditions.size());
      for (const auto& c : conditions)
        bundles.push_back(csa::run_experiment(c, threads));

      if (run->parsed() || format == "summary-json") {
        std::ofstream f(std::filesystem::path(out_dir) / "summary.json");
        csa::emit_summary_json(bundles, f);
      }
      if (run->parsed() || format == "table-csv") {
        std::ofstream f(std::filesystem::path(out_dir) / "table.csv");
        csa::emit_table_csv(bundles, f);
      }
    } else if (emit->parsed()) {
      for (std::size_t i = 0; i < conditions.size(); ++i) {
        std::ofstream f(std::filesystem::path(out_dir) /
                        ("trajectory_" + std::to_string(i) + ".csv"));
        csa::emit_trajectory_csv(conditions[i], traj_rep, f);
      }
    }
  } catch (const std::exception& e) {
    fail("run_failed", e.what());
  }
  return 0;
}
