#pragma once
// Isotonic score calibration (pool-adjacent-violators) and threshold-grid
// construction from calibrated score samples.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "csa/eprocess.hpp"

namespace csa {

// Monotone step fit: left-constant between knots so calibrated values at
// grid points match block means exactly.
struct IsotonicModel {
  std::vector<double> breakpoints;  // sorted raw-score knots
  std::vector<double> values;       // nondecreasing block means in [0,1]

  double predict(double score) const {
    if (breakpoints.empty()) throw std::logic_error("IsotonicModel: empty model");
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), score);
    if (it == breakpoints.begin()) return values.front();
    return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
  }
};

// Least-squares monotone regression of failure indicators on scores.
inline IsotonicModel fit_isotonic(std::vector<std::pair<double, double>> pairs) {
  if (pairs.empty()) throw std::invalid_argument("fit_isotonic: need at least one pair");
  for (const auto& [s, y] : pairs)
    if (!(s >= 0.0 && s <= 1.0))
      throw std::invalid_argument("fit_isotonic: scores must lie in [0,1]");
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  // Block merging: pool adjacent violators, carrying (sum, count, left
  // knot) per block.
  struct Block {
    double sum;
    std::size_t count;
    double knot;
  };
  std::vector<Block> blocks;
  blocks.reserve(pairs.size());
  for (const auto& [s, y] : pairs) {
    blocks.push_back({y, 1, s});
    while (blocks.size() >= 2) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum * static_cast<double>(b.count) <= b.sum * static_cast<double>(a.count))
        break;
      Block merged{a.sum + b.sum, a.count + b.count, a.knot};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }

  IsotonicModel model;
  model.breakpoints.reserve(blocks.size());
  model.values.reserve(blocks.size());
  for (const Block& b : blocks) {
    model.breakpoints.push_back(b.knot);
    model.values.push_back(b.sum / static_cast<double>(b.count));
  }
  return model;
}

// Nearest-rank (type-1) quantile of a sample.
inline double quantile_type1(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile_type1: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_type1: q outside [0,1]");
  std::sort(xs.begin(), xs.end());
  const double h = q * static_cast<double>(xs.size());
  std::size_t rank = static_cast<std::size_t>(std::ceil(h));
  if (rank < 1) rank = 1;
  if (rank > xs.size()) rank = xs.size();
  return xs[rank - 1];
}

// m cutoffs geometrically spaced between the lo_q / hi_q sample
// quantiles, deduplicated. Falls back to linear spacing on the same
// endpoints if dedup collapses the grid below m.
inline ThresholdGrid build_grid(const std::vector<double>& calibrated_scores,
                                std::size_t m, double lo_q = 0.02, double hi_q = 0.98) {
  if (m < 2) throw std::invalid_argument("build_grid: m must be >= 2");
  if (calibrated_scores.empty()) throw std::invalid_argument("build_grid: empty sample");

  double lo = quantile_type1(calibrated_scores, lo_q);
  const double hi = quantile_type1(calibrated_scores, hi_q);
  if (lo <= 0.0) {
    // Geometric spacing needs a positive left endpoint; use the smallest
    // positive score observed instead.
    double smallest = 2.0;
    for (double s : calibrated_scores)
      if (s > 0.0 && s < smallest) smallest = s;
    if (smallest > 1.0)
      throw std::invalid_argument("build_grid: no positive scores for the lower endpoint");
    lo = smallest;
  }
  if (!(hi > lo))
    throw std::invalid_argument("build_grid: degenerate quantile endpoints");
  if (!(hi < 1.0) || !(lo < 1.0))
    throw std::invalid_argument("build_grid: endpoints must lie in (0,1)");

  auto spaced = [&](bool geometric) {
    std::vector<double> q(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double f = static_cast<double>(i) / static_cast<double>(m - 1);
      q[i] = geometric ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
    }
    q.front() = lo;
    q.back() = hi;
    std::sort(q.begin(), q.end());
    q.erase(std::unique(q.begin(), q.end()), q.end());
    return q;
  };

  std::vector<double> q = spaced(true);
  if (q.size() < m) q = spaced(false);
  return ThresholdGrid(std::move(q));
}

// Serialization shares the replay files' line format:
//   "knot=<x> value=<y>" per block.
inline void write_isotonic(const IsotonicModel& model, std::ostream& os) {
  os.precision(17);
  for (std::size_t i = 0; i < model.breakpoints.size(); ++i)
    os << "knot=" << model.breakpoints[i] << " value=" << model.values[i] << '\n';
}

inline IsotonicModel read_isotonic(std::istream& is) {
  IsotonicModel model;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    double knot = 0.0, value = 0.0;
    std::istringstream ls(line);
    std::string tok;
    bool have_knot = false, have_value = false;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("isotonic parse error at line " + std::to_string(lineno));
      const std::string key = tok.substr(0, eq);
      try {
        if (key == "knot") {
          knot = std::stod(tok.substr(eq + 1));
          have_knot = true;
        } else if (key == "value") {
          value = std::stod(tok.substr(eq + 1));
          have_value = true;
        } else {
          throw std::runtime_error("unknown field");
        }
      } catch (const std::exception&) {
        throw std::runtime_error("isotonic parse error at line " + std::to_string(lineno));
      }
    }
    if (!have_knot || !have_value)
      throw std::runtime_error("isotonic parse error at line " + std::to_string(lineno));
    model.breakpoints.push_back(knot);
    model.values.push_back(value);
  }
  for (std::size_t i = 1; i < model.values.size(); ++i)
    if (model.values[i] < model.values[i - 1] ||
        model.breakpoints[i] <= model.breakpoints[i - 1])
      throw std::runtime_error("isotonic validation error: model not monotone");
  return model;
}

}  // namespace csa
