#pragma once
// Comparison policies sharing the controller's decide/observe round
// protocol: Always-Act, Fixed-Threshold, Naive-Tuning, ACI, and an
// offline Clopper-Pearson calibrated threshold.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "csa/controller.hpp"

namespace csa {

struct AlwaysAct {
  std::pair<bool, std::optional<double>> decide(double) const { return {true, 1.0}; }
  void observe(double, bool) {}
};

struct FixedThreshold {
  double q0;
  explicit FixedThreshold(double q) : q0(q) {}
  std::pair<bool, std::optional<double>> decide(double score) const {
    return {score <= q0, q0};
  }
  void observe(double, bool) {}
};

// Pick the largest grid cutoff whose empirical failure rate among the
// last W released rounds at-or-below the cutoff is <= alpha. No
// confidence correction; empty history starts at the most permissive
// cutoff.
class NaiveTuning {
 public:
  NaiveTuning(ThresholdGrid grid, double alpha,
              std::size_t window = std::numeric_limits<std::size_t>::max())
      : grid_(std::move(grid)), alpha_(alpha), window_(window) {}

  std::pair<bool, std::optional<double>> decide(double score) const {
    const auto q = current_cutoff();
    return {q.has_value() && score <= *q, q};
  }

  void observe(double score, bool verifier_pass) {
    const auto q = current_cutoff();
    if (!q || score > *q) return;  // history holds released rounds only
    history_.push_back({score, verifier_pass});
    if (history_.size() > window_) history_.pop_front();
  }

  std::optional<double> current_cutoff() const {
    for (std::size_t i = grid_.size(); i-- > 0;) {
      std::size_t n = 0, fails = 0;
      for (const auto& [s, pass] : history_)
        if (s <= grid_[i]) {
          ++n;
          if (!pass) ++fails;
        }
      if (n == 0 || static_cast<double>(fails) <= alpha_ * static_cast<double>(n))
        return grid_[i];
    }
    return std::nullopt;
  }

 private:
  ThresholdGrid grid_;
  double alpha_;
  std::size_t window_;
  std::deque<std::pair<double, bool>> history_;
};

// Online quantile tracking: alpha_{t+1} = alpha_t + gamma * (alpha -
// err_t), acting iff the score is at or below the empirical
// (1-alpha_t)-quantile of the recent score window. err_t is the
// released-and-failed indicator.
class Aci {
 public:
  Aci(double alpha, double gamma, std::size_t window = 500)
      : alpha_target_(alpha), alpha_t_(alpha), gamma_(gamma), window_(window) {}

  double alpha_t() const { return alpha_t_; }

  std::pair<bool, std::optional<double>> decide(double score) const {
    const double q = cutoff(score);
    return {score <= q, q};
  }

  void observe(double score, bool verifier_pass) {
    const bool acted = score <= cutoff(score);
    const double err = acted && !verifier_pass ? 1.0 : 0.0;
    alpha_t_ += gamma_ * (alpha_target_ - err);
    scores_.push_back(score);
    if (scores_.size() > window_) scores_.pop_front();
  }

 private:
  // Empirical (1-alpha_t)-quantile (nearest rank) of the window; before
  // any history arrives, act unconditionally.
  double cutoff(double) const {
    if (scores_.empty()) return 1.0;
    const double level = std::clamp(1.0 - alpha_t_, 0.0, 1.0);
    std::vector<double> xs(scores_.begin(), scores_.end());
    std::sort(xs.begin(), xs.end());
    std::size_t rank =
        static_cast<std::size_t>(std::ceil(level * static_cast<double>(xs.size())));
    if (rank < 1) rank = 1;
    if (rank > xs.size()) rank = xs.size();
    return xs[rank - 1];
  }

  double alpha_target_;
  double alpha_t_;
  double gamma_;
  std::size_t window_;
  std::deque<double> scores_;
};

namespace detail {

// Regularized incomplete beta I_x(a, b) via the standard continued
// fraction (Lentz's method).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

inline double betainc(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// One-sided Clopper-Pearson upper bound at level delta for k failures
// in n trials: the p with P(Bin(n,p) <= k) = delta, i.e. the (1-delta)
// quantile of Beta(k+1, n-k).
inline double clopper_pearson_upper(std::size_t k, std::size_t n, double delta) {
  if (n == 0) throw std::invalid_argument("clopper_pearson_upper: n must be positive");
  if (k > n) throw std::invalid_argument("clopper_pearson_upper: k > n");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("clopper_pearson_upper: delta outside (0,1)");
  if (k == n) return 1.0;
  const double a = static_cast<double>(k) + 1.0;
  const double b = static_cast<double>(n - k);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::betainc(a, b, mid) < 1.0 - delta)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Largest grid cutoff whose Clopper-Pearson upper bound on the failure
// rate among calibration items at-or-below it is <= alpha; nullopt
// (refuse) if none qualifies.
inline std::optional<double> offline_calibrated_cutoff(
    const std::vector<std::pair<double, bool>>& cal_pairs, double delta,
    const ThresholdGrid& grid, double alpha) {
  for (std::size_t i = grid.size(); i-- > 0;) {
    std::size_t n = 0, fails = 0;
    for (const auto& [s, pass] : cal_pairs)
      if (s <= grid[i]) {
        ++n;
        if (!pass) ++fails;
      }
    if (n == 0) continue;
    if (clopper_pearson_upper(fails, n, delta) <= alpha) return grid[i];
  }
  return std::nullopt;
}

// Constant-cutoff policy holding an offline-calibrated threshold; a
// refused calibration abstains on every round.
struct OfflineCalibrated {
  std::optional<double> cutoff;

  OfflineCalibrated(const std::vector<std::pair<double, bool>>& cal_pairs,
                    double delta, const ThresholdGrid& grid, double alpha)
      : cutoff(offline_calibrated_cutoff(cal_pairs, delta, grid, alpha)) {}

  std::pair<bool, std::optional<double>> decide(double score) const {
    return {cutoff.has_value() && score <= *cutoff, cutoff};
  }
  void observe(double, bool) {}
};

// Drive any policy with the controller's round protocol over a stream.
template <typename Policy>
Trace run_baseline(Policy& policy, const Stream& stream) {
  Trace trace;
  trace.reserve(stream.size());
  for (const Round& r : stream) {
    auto [acted, q] = policy.decide(r.score);
    trace.push_back(RoundRecord{r.t, r.score, q, acted, r.pass, std::nullopt});
    policy.observe(r.score, r.pass);
  }
  return trace;
}

}  // namespace csa
