#pragma once
// Trace metrics: selective risk, action rate, pathwise violations,
// max running risk, false certifications against the analytic oracle,
// and the utility gap. All functions are pure over recorded traces.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "csa/controller.hpp"
#include "csa/streams.hpp"

namespace csa {

struct RunSummary {
  double final_risk = 0.0;
  std::size_t N_T = 0;          // release count
  double AR = 0.0;              // releases / T
  bool PathV_strict = false;
  bool PathV_slack = false;
  double MaxR = 0.0;            // max running risk once N_t >= burn-in
  std::size_t FCR_events = 0;   // unsafe-at-certification-time counts
  std::optional<double> Gap_T;  // oracle streams only
  std::vector<std::optional<std::size_t>> first_cert_round;
  std::size_t certified_count = 0;
  std::size_t verifier_calls = 0;
};

// Failure fraction among released rounds; 0 when nothing was released.
inline std::pair<double, std::size_t> selective_risk(const Trace& trace) {
  std::size_t releases = 0, fails = 0;
  for (const auto& r : trace) {
    if (!r.acted) continue;
    ++releases;
    if (!r.verifier_pass) ++fails;
  }
  const double risk = releases == 0 ? 0.0 : static_cast<double>(fails) /
                                                static_cast<double>(releases);
  return {risk, releases};
}

enum class PathVMode { Strict, Slack };

// Slack-adjusted running-risk bound alpha + sqrt(ln(1/delta)/N_t).
inline double slack_bound(double alpha, double delta, std::size_t n_t) {
  const std::size_t n = std::max<std::size_t>(n_t, 1);
  return alpha + std::sqrt(std::log(1.0 / delta) / static_cast<double>(n));
}

// True iff the running selective risk crosses the bound at any point
// after burn-in (counted in accepted rounds, not wall-clock rounds).
inline bool pathwise_violation(const Trace& trace, double alpha, std::size_t burn_in,
                               PathVMode mode, double delta = 0.05) {
  std::size_t releases = 0, fails = 0;
  for (const auto& r : trace) {
    if (!r.acted) continue;
    ++releases;
    if (!r.verifier_pass) ++fails;
    if (releases < burn_in) continue;
    const double running = static_cast<double>(fails) / static_cast<double>(releases);
    const double bound = mode == PathVMode::Strict ? alpha : slack_bound(alpha, delta, releases);
    if (running > bound) return true;
  }
  return false;
}

// Max running selective risk over post-burn-in prefixes; 0 if the
// release count never reaches the burn-in.
inline double max_running_risk(const Trace& trace, std::size_t burn_in) {
  std::size_t releases = 0, fails = 0;
  double max_r = 0.0;
  for (const auto& r : trace) {
    if (!r.acted) continue;
    ++releases;
    if (!r.verifier_pass) ++fails;
    if (releases < burn_in) continue;
    max_r = std::max(max_r, static_cast<double>(fails) / static_cast<double>(releases));
  }
  return max_r;
}

// Certifications of cutoffs that were analytically unsafe (r(q) > alpha)
// at their certification round.
inline std::size_t false_cert_count(
    const std::vector<std::optional<std::size_t>>& first_cert,
    const ThresholdGrid& grid, const OracleSpec& oracle, double alpha) {
  std::size_t events = 0;
  for (std::size_t i = 0; i < first_cert.size(); ++i) {
    if (!first_cert[i]) continue;
    if (oracle.r(grid[i], *first_cert[i]) > alpha) ++events;
  }
  return events;
}

// Gap_T: rounds the per-round oracle frontier would have released minus
// rounds actually released.
inline double utility_gap(const Trace& trace, const OracleSpec& oracle, double alpha) {
  double oracle_releases = 0.0, releases = 0.0;
  for (const auto& r : trace) {
    if (r.score <= oracle.q_star(r.t, alpha)) oracle_releases += 1.0;
    if (r.acted) releases += 1.0;
  }
  return oracle_releases - releases;
}

// Mean first-certification delay (in rounds) over certified thresholds.
inline std::optional<double> mean_cert_delay(
    const std::vector<std::optional<std::size_t>>& first_cert) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& f : first_cert) {
    if (!f) continue;
    sum += static_cast<double>(*f);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline RunSummary summarize(const Trace& trace, const ControllerConfig& config,
                            const std::vector<std::optional<std::size_t>>& first_cert,
                            const OracleSpec* oracle = nullptr,
                            std::size_t verifier_calls = 0) {
  RunSummary s;
  std::tie(s.final_risk, s.N_T) = selective_risk(trace);
  s.AR = trace.empty() ? 0.0
                       : static_cast<double>(s.N_T) / static_cast<double>(trace.size());
  s.PathV_strict = pathwise_violation(trace, config.alpha, config.burn_in,
                                      PathVMode::Strict, config.delta);
  s.PathV_slack = pathwise_violation(trace, config.alpha, config.burn_in,
                                     PathVMode::Slack, config.delta);
  s.MaxR = max_running_risk(trace, config.burn_in);
  s.first_cert_round = first_cert;
  for (const auto& f : first_cert) s.certified_count += f.has_value() ? 1 : 0;
  if (oracle) {
    s.FCR_events = false_cert_count(first_cert, config.grid, *oracle, config.alpha);
    s.Gap_T = utility_gap(trace, *oracle, config.alpha);
  }
  s.verifier_calls = verifier_calls;
  return s;
}

// Aggregate rows for one experimental condition.
struct Aggregate {
  std::size_t n_reps = 0;
  double risk_mean = 0.0;
  double risk_max = 0.0;
  double risk_ci_half = 0.0;  // 1.96 * sd / sqrt(n)
  double ar_mean = 0.0;
  double maxr_max = 0.0;
  double pathv_strict_frac = 0.0;
  double pathv_slack_frac = 0.0;
  double certified_mean = 0.0;
  std::size_t fcr_total = 0;
  std::optional<double> delay_mean;  // over reps with >= 1 certification
  double verifier_calls_mean = 0.0;
};

inline Aggregate aggregate(const std::vector<RunSummary>& summaries) {
  if (summaries.empty()) throw std::invalid_argument("aggregate: empty summary list");
  Aggregate a;
  a.n_reps = summaries.size();
  const double n = static_cast<double>(a.n_reps);
  double risk_sq = 0.0, delay_sum = 0.0;
  std::size_t delay_n = 0;
  for (const auto& s : summaries) {
    a.risk_mean += s.final_risk;
    risk_sq += s.final_risk * s.final_risk;
    a.risk_max = std::max(a.risk_max, s.final_risk);
    a.ar_mean += s.AR;
    a.maxr_max = std::max(a.maxr_max, s.MaxR);
    a.pathv_strict_frac += s.PathV_strict ? 1.0 : 0.0;
    a.pathv_slack_frac += s.PathV_slack ? 1.0 : 0.0;
    a.certified_mean += static_cast<double>(s.certified_count);
    a.fcr_total += s.FCR_events;
    a.verifier_calls_mean += static_cast<double>(s.verifier_calls);
    if (auto d = mean_cert_delay(s.first_cert_round)) {
      delay_sum += *d;
      ++delay_n;
    }
  }
  a.risk_mean /= n;
  a.ar_mean /= n;
  a.pathv_strict_frac /= n;
  a.pathv_slack_frac /= n;
  a.certified_mean /= n;
  a.verifier_calls_mean /= n;
  if (a.n_reps > 1) {
    const double var = std::max(0.0, (risk_sq - n * a.risk_mean * a.risk_mean) / (n - 1.0));
    a.risk_ci_half = 1.96 * std::sqrt(var / n);
  }
  if (delay_n > 0) a.delay_mean = delay_sum / static_cast<double>(delay_n);
  return a;
}

}  // namespace csa
