#pragma once
// Experiment orchestration: config records with lossless JSON form,
// named presets covering the ablation and stress tables, parallel
// seeded replications, and summary/table/trajectory emission.

#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "csa/baselines.hpp"
#include "csa/controller.hpp"
#include "csa/epoch.hpp"
#include "csa/metrics.hpp"
#include "csa/rng.hpp"
#include "csa/sparse.hpp"
#include "csa/streams.hpp"

namespace csa {

inline constexpr const char* kVersion = "0.1.0";

struct StreamSpec {
  std::string kind = "stationary";  // stationary | monotone
  double tau = 0.5;
  double tau0 = 0.35;       // monotone ramp start
  double tau_max = 0.6;     // monotone ramp end
  std::size_t ramp_rounds = 1500;
  std::size_t T = 3000;
  double bias = 0.0;
  double flip_p = 0.0;
  std::string ordering;  // empty = generated order
};

// One experimental condition; every emitted number is a deterministic
// function of this record.
struct ExperimentConfig {
  std::string name = "csa";
  std::string label;   // condition tag for table rows, e.g. "p=0.10"
  std::string param_key = "condition";
  std::string method = "csa";  // csa | csa_epoch | csa_sparse | always_act |
                               // fixed_threshold | naive_tuning | aci |
                               // offline_calibrated
  StreamSpec stream;
  double alpha = 0.3;
  double delta = 0.05;
  std::size_t m = 20;
  std::size_t burn_in = 500;
  std::string budget = "equal_halved";  // equal_halved | equal
  double fixed_lambda = -1.0;           // csa only; < 0 = adaptive bet
  double pi = 1.0;                      // csa_sparse
  std::size_t epoch_length = 0;         // csa_epoch; 0 = single epoch
  double q0 = 0.5;                      // fixed_threshold
  std::size_t naive_window = 0;         // naive_tuning; 0 = unbounded
  double aci_gamma = 0.01;              // aci
  std::size_t cal_size = 2000;          // offline_calibrated
  std::uint64_t base_seed = 1234;
  std::size_t n_reps = 50;
  std::vector<std::uint64_t> seeds;  // explicit per-rep seeds, optional
};

inline void to_json(nlohmann::json& j, const StreamSpec& s) {
  j = {{"kind", s.kind},         {"tau", s.tau},
       {"tau0", s.tau0},         {"tau_max", s.tau_max},
       {"ramp_rounds", s.ramp_rounds}, {"T", s.T},
       {"bias", s.bias},         {"flip_p", s.flip_p},
       {"ordering", s.ordering}};
}

inline void from_json(const nlohmann::json& j, StreamSpec& s) {
  s = StreamSpec{};
  j.at("kind").get_to(s.kind);
  if (j.contains("tau")) j.at("tau").get_to(s.tau);
  if (j.contains("tau0")) j.at("tau0").get_to(s.tau0);
  if (j.contains("tau_max")) j.at("tau_max").get_to(s.tau_max);
  if (j.contains("ramp_rounds")) j.at("ramp_rounds").get_to(s.ramp_rounds);
  if (j.contains("T")) j.at("T").get_to(s.T);
  if (j.contains("bias")) j.at("bias").get_to(s.bias);
  if (j.contains("flip_p")) j.at("flip_p").get_to(s.flip_p);
  if (j.contains("ordering")) j.at("ordering").get_to(s.ordering);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"name", c.name},
       {"label", c.label},
       {"param_key", c.param_key},
       {"method", c.method},
       {"stream", c.stream},
       {"alpha", c.alpha},
       {"delta", c.delta},
       {"m", c.m},
       {"burn_in", c.burn_in},
       {"budget", c.budget},
       {"fixed_lambda", c.fixed_lambda},
       {"pi", c.pi},
       {"epoch_length", c.epoch_length},
       {"q0", c.q0},
       {"naive_window", c.naive_window},
       {"aci_gamma", c.aci_gamma},
       {"cal_size", c.cal_size},
       {"base_seed", c.base_seed},
       {"n_reps", c.n_reps},
       {"seeds", c.seeds}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  j.at("name").get_to(c.name);
  j.at("method").get_to(c.method);
  j.at("stream").get_to(c.stream);
  if (j.contains("label")) j.at("label").get_to(c.label);
  if (j.contains("param_key")) j.at("param_key").get_to(c.param_key);
  if (j.contains("alpha")) j.at("alpha").get_to(c.alpha);
  if (j.contains("delta")) j.at("delta").get_to(c.delta);
  if (j.contains("m")) j.at("m").get_to(c.m);
  if (j.contains("burn_in")) j.at("burn_in").get_to(c.burn_in);
  if (j.contains("budget")) j.at("budget").get_to(c.budget);
  if (j.contains("fixed_lambda")) j.at("fixed_lambda").get_to(c.fixed_lambda);
  if (j.contains("pi")) j.at("pi").get_to(c.pi);
  if (j.contains("epoch_length")) j.at("epoch_length").get_to(c.epoch_length);
  if (j.contains("q0")) j.at("q0").get_to(c.q0);
  if (j.contains("naive_window")) j.at("naive_window").get_to(c.naive_window);
  if (j.contains("aci_gamma")) j.at("aci_gamma").get_to(c.aci_gamma);
  if (j.contains("cal_size")) j.at("cal_size").get_to(c.cal_size);
  if (j.contains("base_seed")) j.at("base_seed").get_to(c.base_seed);
  if (j.contains("n_reps")) j.at("n_reps").get_to(c.n_reps);
  if (j.contains("seeds")) j.at("seeds").get_to(c.seeds);
}

inline ControllerConfig controller_config(const ExperimentConfig& c) {
  ControllerConfig cc;
  cc.alpha = c.alpha;
  cc.delta = c.delta;
  cc.grid = ThresholdGrid::uniform(c.m);
  cc.burn_in = c.burn_in;
  if (c.budget == "equal_halved")
    cc.budget_scheme = BudgetScheme::EqualHalved;
  else if (c.budget == "equal")
    cc.budget_scheme = BudgetScheme::Equal;
  else
    throw std::invalid_argument("unknown budget scheme: " + c.budget);
  if (c.fixed_lambda >= 0.0) cc.fixed_lambda = c.fixed_lambda;
  return cc;
}

// Replication seed for one RNG component; explicit seed lists replace
// the (base_seed, rep) derivation.
inline std::uint64_t rep_seed(const ExperimentConfig& c, std::size_t rep,
                              std::uint64_t component) {
  if (!c.seeds.empty()) {
    if (rep >= c.seeds.size())
      throw std::out_of_range("rep index beyond explicit seed list");
    return sub_seed(c.seeds[rep], 0, component);
  }
  return sub_seed(c.base_seed, rep, component);
}

inline Stream make_stream(const ExperimentConfig& c, std::size_t rep) {
  Stream s;
  if (c.stream.kind == "stationary") {
    s = gen_stationary(StationarySpec{c.stream.tau, c.alpha, c.stream.T},
                       rep_seed(c, rep, 0));
  } else if (c.stream.kind == "monotone") {
    s = gen_monotone(c.stream.tau0, c.stream.tau_max, c.stream.ramp_rounds,
                     c.stream.T, rep_seed(c, rep, 0));
  } else {
    throw std::invalid_argument("unknown stream kind: " + c.stream.kind);
  }
  if (c.stream.bias != 0.0) s = apply_bias(std::move(s), c.stream.bias);
  if (c.stream.flip_p != 0.0)
    s = apply_flip(std::move(s), c.stream.flip_p, rep_seed(c, rep, 2));
  if (!c.stream.ordering.empty())
    s = apply_ordering(std::move(s), ordering_from_name(c.stream.ordering),
                       rep_seed(c, rep, 3));
  return s;
}

// Analytic oracle for the generated stream, when one applies. Orderings
// permute rounds, so the per-round oracle survives only for stationary
// streams (constant frontier); label flips are evaluated against the
// clean verifier's oracle.
inline std::optional<OracleSpec> make_oracle(const ExperimentConfig& c) {
  if (c.stream.kind == "stationary")
    return stationary_oracle(StationarySpec{c.stream.tau, c.alpha, c.stream.T});
  if (c.stream.kind == "monotone" && c.stream.ordering.empty())
    return monotone_oracle(c.stream.tau0, c.stream.tau_max, c.stream.ramp_rounds,
                           c.stream.T);
  return std::nullopt;
}

inline RunSummary run_one(const ExperimentConfig& c, std::size_t rep) {
  const Stream stream = make_stream(c, rep);
  const ControllerConfig cc = controller_config(c);
  const auto oracle = make_oracle(c);
  const OracleSpec* op = oracle ? &*oracle : nullptr;
  const std::vector<std::optional<std::size_t>> no_certs;

  if (c.method == "csa") {
    RunResult r = run_stream(cc, stream);
    return summarize(r.trace, cc, r.controller.first_cert_round(), op, r.verifier_calls);
  }
  if (c.method == "csa_epoch") {
    const EpochSchedule sched = c.epoch_length == 0
                                    ? EpochSchedule::single()
                                    : EpochSchedule::fixed_length(c.epoch_length, c.stream.T);
    EpochRunResult r = run_stream_epoch(cc, sched, stream);
    // Earliest global certification per threshold across all epochs.
    std::vector<std::optional<std::size_t>> first_cert(c.m, std::nullopt);
    for (const auto& ep : r.epochs)
      for (std::size_t i = 0; i < ep.first_cert_round.size(); ++i)
        if (ep.first_cert_round[i] &&
            (!first_cert[i] || *ep.first_cert_round[i] < *first_cert[i]))
          first_cert[i] = ep.first_cert_round[i];
    return summarize(r.trace, cc, first_cert, op, stream.size());
  }
  if (c.method == "csa_sparse") {
    SparseRunResult r = run_stream_sparse(cc, SparsePolicy::constant(c.pi), stream,
                                          rep_seed(c, rep, 1));
    return summarize(r.trace, cc, r.controller.first_cert_round(), op, r.verifier_calls);
  }
  if (c.method == "always_act") {
    AlwaysAct p;
    return summarize(run_baseline(p, stream), cc, no_certs, op, stream.size());
  }
  if (c.method == "fixed_threshold") {
    FixedThreshold p(c.q0);
    return summarize(run_baseline(p, stream), cc, no_certs, op, stream.size());
  }
  if (c.method == "naive_tuning") {
    NaiveTuning p(cc.grid, c.alpha,
                  c.naive_window == 0 ? std::numeric_limits<std::size_t>::max()
                                      : c.naive_window);
    return summarize(run_baseline(p, stream), cc, no_certs, op, stream.size());
  }
  if (c.method == "aci") {
    Aci p(c.alpha, c.aci_gamma);
    return summarize(run_baseline(p, stream), cc, no_certs, op, stream.size());
  }
  if (c.method == "offline_calibrated") {
    // The calibration set comes from the same generator under an
    // independent sub-seed, so it never overlaps the eval stream.
    std::mt19937_64 rng(rep_seed(c, rep, 4));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::pair<double, bool>> pairs(c.cal_size);
    for (auto& pr : pairs) {
      const double x = unif(rng);
      pr = {x, x < c.stream.tau};
    }
    OfflineCalibrated p(pairs, c.delta, cc.grid, c.alpha);
    return summarize(run_baseline(p, stream), cc, no_certs, op, stream.size());
  }
  throw std::invalid_argument("unknown method: " + c.method);
}

struct ResultBundle {
  ExperimentConfig config;
  std::vector<RunSummary> summaries;  // indexed by replication
  Aggregate agg;
  std::string config_hash;
  std::vector<std::uint64_t> seed_list;
};

inline std::string config_hash(const ExperimentConfig& c) {
  const std::string dump = nlohmann::json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

// Run all replications of one condition; results are identical for any
// worker count because replication rep always writes slot rep.
inline ResultBundle run_experiment(const ExperimentConfig& c, std::size_t threads = 1) {
  const std::size_t n = c.seeds.empty() ? c.n_reps : c.seeds.size();
  if (n == 0) throw std::invalid_argument("run_experiment: no replications requested");
  ResultBundle bundle;
  bundle.config = c;
  bundle.summaries.resize(n);
  bundle.config_hash = config_hash(c);
  if (c.seeds.empty())
    for (std::size_t r = 0; r < n; ++r)
      bundle.seed_list.push_back(sub_seed(c.base_seed, r, 0));
  else
    bundle.seed_list = c.seeds;

  if (threads <= 1) {
    for (std::size_t r = 0; r < n; ++r) bundle.summaries[r] = run_one(c, r);
  } else {
    std::vector<std::thread> pool;
    std::mutex err_mutex;
    std::string first_error;
    for (std::size_t w = 0; w < std::min(threads, n); ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < n; r += std::min(threads, n)) {
          try {
            bundle.summaries[r] = run_one(c, r);
          } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lk(err_mutex);
            if (first_error.empty()) first_error = e.what();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (!first_error.empty()) throw std::runtime_error(first_error);
  }
  bundle.agg = aggregate(bundle.summaries);
  return bundle;
}

// ---------------------------------------------------------------------
// Presets

inline std::vector<ExperimentConfig> preset(const std::string& name) {
  // Shared desk-scale defaults: stationary tau=0.5, alpha=0.30,
  // delta=0.05, m=20, T=3000, burn-in 500, 50 replications.
  ExperimentConfig base;
  base.name = name;
  std::vector<ExperimentConfig> out;

  if (name == "ablation_grid") {
    for (std::size_t m : {10u, 25u, 50u, 100u}) {
      ExperimentConfig c = base;
      c.m = m;
      c.param_key = "m";
      c.label = std::to_string(m);
      out.push_back(c);
    }
  } else if (name == "ablation_lambda") {
    ExperimentConfig adaptive = base;
    adaptive.param_key = "lambda";
    adaptive.label = "adaptive";
    out.push_back(adaptive);
    for (double lam : {0.01, 0.05, 0.10, 0.25, 0.50}) {
      ExperimentConfig c = base;
      c.param_key = "lambda";
      c.fixed_lambda = lam;
      std::ostringstream os;
      os << lam;
      c.label = os.str();
      out.push_back(c);
    }
  } else if (name == "stress_bias") {
    for (double b : {-0.15, -0.10, -0.05, 0.0, 0.05, 0.10, 0.15}) {
      ExperimentConfig c = base;
      c.param_key = "b";
      c.stream.bias = b;
      std::ostringstream os;
      os << b;
      c.label = os.str();
      out.push_back(c);
    }
  } else if (name == "stress_noise") {
    for (double p : {0.0, 0.02, 0.05, 0.10, 0.15, 0.20}) {
      ExperimentConfig c = base;
      c.param_key = "p";
      c.stream.flip_p = p;
      std::ostringstream os;
      os << p;
      c.label = os.str();
      out.push_back(c);
    }
  } else if (name == "sparse_sweep") {
    for (double pi : {1.0, 0.5, 0.2, 0.1}) {
      ExperimentConfig c = base;
      c.method = "csa_sparse";
      c.param_key = "pi";
      c.pi = pi;
      c.stream.T = 30000;  // longer horizon so low-pi runs still certify
      std::ostringstream os;
      os << pi;
      c.label = os.str();
      out.push_back(c);
    }
  } else if (name == "shift_orderings") {
    for (const char* method : {"csa", "always_act", "aci", "naive_tuning"}) {
      for (const char* ord : {"iid", "easy_hard", "quartile_rev", "window_outrun"}) {
        ExperimentConfig c = base;
        c.method = method;
        c.stream.ordering = ord;
        c.n_reps = 10;
        c.param_key = "cell";
        c.label = std::string(method) + "/" + ord;
        out.push_back(c);
      }
    }
  } else if (name == "epoch_demo") {
    ExperimentConfig c = base;
    c.method = "csa_epoch";
    c.stream.kind = "monotone";
    c.epoch_length = 750;
    c.param_key = "epoch_length";
    c.label = "750";
    out.push_back(c);
  } else {
    throw std::invalid_argument(
        "unknown preset: " + name +
        " (known: ablation_grid, ablation_lambda, stress_bias, stress_noise, "
        "sparse_sweep, shift_orderings, epoch_demo)");
  }
  return out;
}

inline std::vector<std::string> preset_names() {
  return {"ablation_grid", "ablation_lambda", "stress_bias", "stress_noise",
          "sparse_sweep",  "shift_orderings", "epoch_demo"};
}

// ---------------------------------------------------------------------
// Emission

inline nlohmann::json bundle_json(const ResultBundle& b) {
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t r = 0; r < b.summaries.size(); ++r) {
    const RunSummary& s = b.summaries[r];
    nlohmann::json first_cert = nlohmann::json::array();
    for (const auto& f : s.first_cert_round)
      first_cert.push_back(f ? nlohmann::json(*f) : nlohmann::json(nullptr));
    runs.push_back({{"rep", r},
                    {"final_risk", s.final_risk},
                    {"N_T", s.N_T},
                    {"AR", s.AR},
                    {"PathV_strict", s.PathV_strict},
                    {"PathV_slack", s.PathV_slack},
                    {"MaxR", s.MaxR},
                    {"FCR_events", s.FCR_events},
                    {"Gap_T", s.Gap_T ? nlohmann::json(*s.Gap_T) : nlohmann::json(nullptr)},
                    {"certified_count", s.certified_count},
                    {"verifier_calls", s.verifier_calls},
                    {"first_cert_round", first_cert}});
  }
  return {{"config", b.config},
          {"provenance",
           {{"config_hash", b.config_hash},
            {"seeds", b.seed_list},
            {"version", kVersion},
            {"slack_bound", "alpha + sqrt(ln(1/delta)/max(N_t,1))"}}},
          {"runs", runs},
          {"aggregate",
           {{"n_reps", b.agg.n_reps},
            {"risk_mean", b.agg.risk_mean},
            {"risk_max", b.agg.risk_max},
            {"risk_ci_half", b.agg.risk_ci_half},
            {"ar_mean", b.agg.ar_mean},
            {"maxr_max", b.agg.maxr_max},
            {"pathv_strict_frac", b.agg.pathv_strict_frac},
            {"pathv_slack_frac", b.agg.pathv_slack_frac},
            {"certified_mean", b.agg.certified_mean},
            {"fcr_total", b.agg.fcr_total},
            {"delay_mean", b.agg.delay_mean ? nlohmann::json(*b.agg.delay_mean)
                                            : nlohmann::json(nullptr)},
            {"verifier_calls_mean", b.agg.verifier_calls_mean}}}};
}

inline void emit_summary_json(const std::vector<ResultBundle>& bundles, std::ostream& os) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : bundles) j.push_back(bundle_json(b));
  os << j.dump(2) << '\n';
}

// One row per condition; the first column carries the preset's varied
// parameter.
inline void emit_table_csv(const std::vector<ResultBundle>& bundles, std::ostream& os) {
  if (bundles.empty()) throw std::invalid_argument("emit_table_csv: no bundles");
  os << bundles.front().config.param_key << ",risk_mean,risk_max,ar_mean\n";
  for (const auto& b : bundles)
    os << b.config.label << ',' << b.agg.risk_mean << ',' << b.agg.risk_max << ','
       << b.agg.ar_mean << '\n';
}

// Per-round running risk and action rate for one replication, for
// plotting.
inline void emit_trajectory_csv(const ExperimentConfig& c, std::size_t rep,
                                std::ostream& os) {
  const Stream stream = make_stream(c, rep);
  const ControllerConfig cc = controller_config(c);
  Trace trace;
  if (c.method == "csa") {
    trace = run_stream(cc, stream).trace;
  } else if (c.method == "csa_epoch") {
    const EpochSchedule sched = c.epoch_length == 0
                                    ? EpochSchedule::single()
                                    : EpochSchedule::fixed_length(c.epoch_length, c.stream.T);
    trace = run_stream_epoch(cc, sched, stream).trace;
  } else if (c.method == "csa_sparse") {
    trace = run_stream_sparse(cc, SparsePolicy::constant(c.pi), stream,
                              rep_seed(c, rep, 1)).trace;
  } else {
    throw std::invalid_argument("trajectory emission supports csa methods only");
  }
  os << "t,score,acted,pass,running_risk,running_ar\n";
  std::size_t releases = 0, fails = 0, t = 0;
  for (const auto& r : trace) {
    ++t;
    if (r.acted) {
      ++releases;
      if (!r.verifier_pass) ++fails;
    }
    const double risk = releases == 0 ? 0.0 : static_cast<double>(fails) /
                                                  static_cast<double>(releases);
    os << r.t << ',' << r.score << ',' << (r.acted ? 1 : 0) << ','
       << (r.verifier_pass ? 1 : 0) << ',' << risk << ','
       << static_cast<double>(releases) / static_cast<double>(t) << '\n';
  }
}

}  // namespace csa
