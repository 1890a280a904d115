#pragma once
// Per-threshold e-process arithmetic: excess-risk increments, adaptive
// plug-in bets, log-space Ville updates, and certification tests.
//
// All e-values live in natural-log space; exp() is taken only for
// reporting. The bet clip keeps every multiplicative factor in
// [1/2, 1 + alpha/(2(1-alpha))], so the log update is always finite.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace csa {

// Sorted grid of candidate score cutoffs, all in the open unit interval.
class ThresholdGrid {
 public:
  explicit ThresholdGrid(std::vector<double> thresholds)
      : thresholds_(std::move(thresholds)) {
    if (thresholds_.empty())
      throw std::invalid_argument("ThresholdGrid: need at least one cutoff");
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
      if (!(thresholds_[i] > 0.0 && thresholds_[i] < 1.0))
        throw std::invalid_argument("ThresholdGrid: cutoffs must lie in (0,1)");
      if (i > 0 && !(thresholds_[i] > thresholds_[i - 1]))
        throw std::invalid_argument("ThresholdGrid: cutoffs must be strictly increasing");
    }
  }

  // Evenly spaced synthetic grid q_i = i/(m+1), i = 1..m.
  static ThresholdGrid uniform(std::size_t m) {
    std::vector<double> q(m);
    for (std::size_t i = 0; i < m; ++i)
      q[i] = static_cast<double>(i + 1) / static_cast<double>(m + 1);
    return ThresholdGrid(std::move(q));
  }

  std::size_t size() const { return thresholds_.size(); }
  double operator[](std::size_t i) const { return thresholds_[i]; }
  const std::vector<double>& values() const { return thresholds_; }

  // Index of the smallest cutoff >= score (gate open at ties), or size()
  // if every cutoff is below the score.
  std::size_t first_open(double score) const {
    return static_cast<std::size_t>(
        std::lower_bound(thresholds_.begin(), thresholds_.end(), score) -
        thresholds_.begin());
  }

 private:
  std::vector<double> thresholds_;
};

// Accumulator for one threshold's e-process. E_0 = 1, i.e. log_e = 0.
struct ThresholdState {
  double log_e = 0.0;   // ln E_t(q)
  double sum_x = 0.0;   // running sum of increments since epoch start
  std::size_t n = 0;    // update count since epoch start
  bool certified = false;

  bool operator==(const ThresholdState&) const = default;
};

// Excess-risk increment for one round at an open gate:
//   acted && fail -> 1 - alpha, acted && pass -> -alpha, gate closed -> 0.
inline double increment(bool acted, bool verifier_pass, double alpha) {
  if (!acted) return 0.0;
  return (verifier_pass ? 0.0 : 1.0) - alpha;
}

// Upper clip of the bet in the dense (full-verification) setting.
inline double bet_cap(double alpha) { return 1.0 / (2.0 * (1.0 - alpha)); }

// Running-mean plug-in bet. Zero before the first update, then the
// negative running mean scaled by (1-alpha)^-2 and clipped to
// [0, 1/(2(1-alpha))].
inline double adaptive_bet(double sum_x, std::size_t n, double alpha) {
  if (n == 0) return 0.0;
  const double mean = sum_x / static_cast<double>(n);
  const double raw = -mean / ((1.0 - alpha) * (1.0 - alpha));
  return std::clamp(raw, 0.0, bet_cap(alpha));
}

// One multiplicative e-process step in log space:
//   log_e += ln(1 - lambda * x),  sum_x += x,  n += 1.
// The caller must supply a bet inside the clip range; a nonpositive
// factor signals a contract violation and is rejected.
inline ThresholdState eprocess_update(ThresholdState state, double lambda, double x) {
  const double factor = 1.0 - lambda * x;
  if (!(factor > 0.0))
    throw std::domain_error("eprocess_update: bet outside clip range (factor <= 0)");
  state.log_e += std::log(factor);
  state.sum_x += x;
  state.n += 1;
  return state;
}

// Certification test: E_t(q) >= 1/delta_q, evaluated in log space with
// an inclusive boundary.
inline bool certify_check(const ThresholdState& state, double delta_q) {
  return state.log_e >= std::log(1.0 / delta_q);
}

}  // namespace csa
