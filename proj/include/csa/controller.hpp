#pragma once
// Single-epoch selective-acting controller: per-round act/abstain via the
// maximum certified threshold, verifier feedback fanned out to every open
// threshold's e-process.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "csa/eprocess.hpp"
#include "csa/streams.hpp"

namespace csa {

enum class BudgetScheme {
  EqualHalved,  // delta / (2m)
  Equal,        // delta / m
};

struct ControllerConfig {
  double alpha = 0.3;
  double delta = 0.05;
  ThresholdGrid grid = ThresholdGrid::uniform(20);
  BudgetScheme budget_scheme = BudgetScheme::EqualHalved;
  std::size_t burn_in = 500;  // accepted rounds excluded from PathV/MaxR
  // Explicit per-threshold budget; overrides budget_scheme when set.
  std::optional<double> delta_q_override;
  // Constant bet instead of the adaptive plug-in; must lie in
  // [0, 1/(2(1-alpha))].
  std::optional<double> fixed_lambda;

  double delta_q() const {
    if (delta_q_override) return *delta_q_override;
    const double m = static_cast<double>(grid.size());
    return budget_scheme == BudgetScheme::EqualHalved ? delta / (2.0 * m)
                                                      : delta / m;
  }
};

// Per-round trace entry. deployed_q is the cutoff in force when the
// decision was taken (before this round's e-process updates).
struct RoundRecord {
  std::size_t t = 0;
  double score = 0.0;
  std::optional<double> deployed_q;
  bool acted = false;
  bool verifier_pass = false;
  std::optional<bool> coin;  // sparse mode only
};

using Trace = std::vector<RoundRecord>;

class Controller {
 public:
  explicit Controller(ControllerConfig config)
      : config_(std::move(config)),
        states_(config_.grid.size()),
        first_cert_(config_.grid.size(), std::nullopt) {}

  const ControllerConfig& config() const { return config_; }
  const std::vector<ThresholdState>& states() const { return states_; }
  std::optional<std::size_t> deployed_index() const { return deployed_; }
  std::optional<double> deployed_cutoff() const {
    if (!deployed_) return std::nullopt;
    return config_.grid[*deployed_];
  }
  // Round at which each threshold first certified (within the current
  // epoch for the epoch variant).
  const std::vector<std::optional<std::size_t>>& first_cert_round() const {
    return first_cert_;
  }
  std::size_t certified_count() const {
    std::size_t c = 0;
    for (const auto& s : states_) c += s.certified ? 1 : 0;
    return c;
  }
  std::size_t rounds_seen() const { return rounds_; }

  // Act iff a certified threshold is deployed and the score clears it
  // (ties open). Pure: no state change.
  std::pair<bool, std::optional<double>> decide(double score) const {
    const auto q = deployed_cutoff();
    return {q.has_value() && score <= *q, q};
  }

  // Fan the verifier outcome out to every threshold with q >= score,
  // then recompute the deployment as the maximum certified cutoff.
  void observe(double score, bool verifier_pass) {
    ++rounds_;
    const double x = increment(true, verifier_pass, config_.alpha);
    const double dq = config_.delta_q();
    const std::size_t m = config_.grid.size();
    for (std::size_t i = config_.grid.first_open(score); i < m; ++i) {
      ThresholdState& st = states_[i];
      const double lambda = config_.fixed_lambda
                                ? *config_.fixed_lambda
                                : adaptive_bet(st.sum_x, st.n, config_.alpha);
      st = eprocess_update(st, lambda, x);
      if (!st.certified && certify_check(st, dq)) {
        st.certified = true;
        first_cert_[i] = rounds_;
        if (!deployed_ || i > *deployed_) deployed_ = i;
      }
    }
  }

  // Full single-epoch reset: fresh e-processes, certifications revoked.
  void reset() {
    for (auto& s : states_) s = ThresholdState{};
    for (auto& f : first_cert_) f = std::nullopt;
    deployed_.reset();
  }

 protected:
  ControllerConfig config_;
  std::vector<ThresholdState> states_;
  std::vector<std::optional<std::size_t>> first_cert_;
  std::optional<std::size_t> deployed_;
  std::size_t rounds_ = 0;
};

struct RunResult {
  Trace trace;
  Controller controller;
  std::size_t verifier_calls = 0;
};

// Drive one controller over a recorded stream. The decision uses the
// deployment in force before the round's updates; the verifier outcome is
// consumed on every round.
inline RunResult run_stream(const ControllerConfig& config, const Stream& stream) {
  RunResult out{Trace{}, Controller(config), 0};
  out.trace.reserve(stream.size());
  for (const Round& r : stream) {
    auto [acted, q] = out.controller.decide(r.score);
    out.trace.push_back(RoundRecord{r.t, r.score, q, acted, r.pass, std::nullopt});
    out.controller.observe(r.score, r.pass);
    ++out.verifier_calls;
  }
  return out;
}

}  // namespace csa
