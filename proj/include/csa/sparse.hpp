#pragma once
// Sparse-verifier variant: the verifier is queried on a predictable
// Bernoulli(pi_t) coin; queried rounds contribute importance-weighted
// increments x/pi_t and the bet clip tightens to pi_min/(1-alpha).

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>

#include "csa/controller.hpp"

namespace csa {

struct SparsePolicy {
  // Query probability as a function of the 1-based round index; must stay
  // >= pi_min and be decided before the coin is flipped.
  std::function<double(std::size_t)> pi = [](std::size_t) { return 1.0; };
  double pi_min = 1.0;

  static SparsePolicy constant(double p) {
    if (!(p > 0.0 && p <= 1.0))
      throw std::invalid_argument("SparsePolicy: pi must be in (0,1]");
    SparsePolicy sp;
    sp.pi = [p](std::size_t) { return p; };
    sp.pi_min = p;
    return sp;
  }
};

// Importance-weighted increment: 0 on unqueried rounds, x/pi_t otherwise.
inline double sparse_increment(bool coin, double pi_t, double x) {
  if (!(pi_t > 0.0 && pi_t <= 1.0))
    throw std::invalid_argument("sparse_increment: pi_t must be in (0,1]");
  return coin ? x / pi_t : 0.0;
}

// Tightened clip for the sparse bet. The cap is pulled strictly inside
// the admissible interval so the update factor stays positive even when
// pi_t == pi_min exactly.
inline double sparse_bet_clip(double raw_lambda, double pi_min, double alpha) {
  const double cap = std::nextafter(pi_min / (1.0 - alpha), 0.0);
  if (raw_lambda < 0.0) return 0.0;
  return std::min(raw_lambda, cap);
}

// Running-mean plug-in over the weighted increments. The divisor is the
// squared range of the weighted increment, (1-alpha)/pi_min, so the bet
// shrinks with pi and the expected certification delay inflates by
// ~1/pi; at pi = 1 this is the dense adaptive bet.
inline double sparse_adaptive_bet(double sum_x, std::size_t n, double alpha,
                                  double pi_min) {
  if (n == 0) return 0.0;
  const double mean = sum_x / static_cast<double>(n);
  const double range = (1.0 - alpha) / pi_min;
  return sparse_bet_clip(-mean / (range * range), pi_min, alpha);
}

class SparseController {
 public:
  SparseController(ControllerConfig config, SparsePolicy policy)
      : config_(std::move(config)),
        policy_(std::move(policy)),
        states_(config_.grid.size()),
        first_cert_(config_.grid.size(), std::nullopt) {}

  std::optional<double> deployed_cutoff() const {
    if (!deployed_) return std::nullopt;
    return config_.grid[*deployed_];
  }
  const std::vector<ThresholdState>& states() const { return states_; }
  const std::vector<std::optional<std::size_t>>& first_cert_round() const {
    return first_cert_;
  }
  std::size_t certified_count() const {
    std::size_t c = 0;
    for (const auto& s : states_) c += s.certified ? 1 : 0;
    return c;
  }

  std::pair<bool, std::optional<double>> decide(double score) const {
    const auto q = deployed_cutoff();
    return {q.has_value() && score <= *q, q};
  }

  // Unqueried rounds leave every e-process untouched; queried rounds
  // apply the weighted increment with the tightened clip. The adaptive
  // plug-in runs on the running mean of the weighted increments.
  void observe(double score, bool verifier_pass, bool coin, double pi_t) {
    ++rounds_;
    if (!coin) return;
    const double x = sparse_increment(true, pi_t, increment(true, verifier_pass, config_.alpha));
    const double dq = config_.delta_q();
    const std::size_t m = config_.grid.size();
    for (std::size_t i = config_.grid.first_open(score); i < m; ++i) {
      ThresholdState& st = states_[i];
      const double lambda =
          sparse_adaptive_bet(st.sum_x, st.n, config_.alpha, policy_.pi_min);
      st = eprocess_update(st, lambda, x);
      if (!st.certified && certify_check(st, dq)) {
        st.certified = true;
        first_cert_[i] = rounds_;
        if (!deployed_ || i > *deployed_) deployed_ = i;
      }
    }
  }

 private:
  ControllerConfig config_;
  SparsePolicy policy_;
  std::vector<ThresholdState> states_;
  std::vector<std::optional<std::size_t>> first_cert_;
  std::optional<std::size_t> deployed_;
  std::size_t rounds_ = 0;
};

struct SparseRunResult {
  Trace trace;
  SparseController controller;
  std::size_t verifier_calls = 0;
};

// The coin RNG is independent of the stream generator so that varying pi
// keeps the data sequence fixed (paired comparisons across pi).
inline SparseRunResult run_stream_sparse(const ControllerConfig& config,
                                         const SparsePolicy& policy,
                                         const Stream& stream,
                                         std::uint64_t coin_seed) {
  SparseRunResult out{Trace{}, SparseController(config, policy), 0};
  out.trace.reserve(stream.size());
  std::mt19937_64 coin_rng(coin_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const Round& r : stream) {
    const double pi_t = policy.pi(r.t);
    const bool coin = unif(coin_rng) < pi_t;
    auto [acted, q] = out.controller.decide(r.score);
    out.trace.push_back(RoundRecord{r.t, r.score, q, acted, r.pass, coin});
    if (coin) ++out.verifier_calls;
    out.controller.observe(r.score, r.pass, coin, pi_t);
  }
  return out;
}

}  // namespace csa
