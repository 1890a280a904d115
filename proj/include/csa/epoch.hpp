#pragma once
// Multi-epoch controller: deterministic restart schedule with
// epoch-counting budgets delta_{j,q} = 6*delta / (pi^2 * m * j^2).
// A restart wipes every threshold state and revokes all certifications.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "csa/controller.hpp"

namespace csa {

// Restart schedule: either explicit boundaries (tau_1 = 1 < tau_2 < ...)
// or a fixed epoch length.
struct EpochSchedule {
  std::vector<std::size_t> boundaries{1};

  static EpochSchedule fixed_length(std::size_t rounds_per_epoch, std::size_t T) {
    if (rounds_per_epoch == 0)
      throw std::invalid_argument("EpochSchedule: epoch length must be positive");
    EpochSchedule s;
    for (std::size_t b = 1; b <= T; b += rounds_per_epoch) s.boundaries.push_back(b);
    s.boundaries.erase(s.boundaries.begin());      // rebuild from tau_1 = 1
    s.boundaries.insert(s.boundaries.begin(), 1);
    // Dedup the leading 1 produced when rounds_per_epoch divides into 1.
    std::vector<std::size_t> clean;
    for (std::size_t b : s.boundaries)
      if (clean.empty() || b > clean.back()) clean.push_back(b);
    s.boundaries = std::move(clean);
    s.validate();
    return s;
  }

  static EpochSchedule single() { return EpochSchedule{}; }

  void validate() const {
    if (boundaries.empty() || boundaries.front() != 1)
      throw std::invalid_argument("EpochSchedule: first boundary must be round 1");
    for (std::size_t i = 1; i < boundaries.size(); ++i)
      if (boundaries[i] <= boundaries[i - 1])
        throw std::invalid_argument("EpochSchedule: boundaries must be strictly increasing");
  }
};

// Per-epoch per-threshold budget; the double sum over j >= 1 and the m
// grid points telescopes to exactly delta.
inline double epoch_budget(std::size_t j, std::size_t m, double delta) {
  if (j < 1 || m < 1) throw std::invalid_argument("epoch_budget: j and m must be >= 1");
  const double pi = std::numbers::pi;
  return 6.0 * delta / (pi * pi * static_cast<double>(m) *
                        static_cast<double>(j) * static_cast<double>(j));
}

struct EpochSummary {
  std::size_t epoch = 0;            // 1-based
  std::size_t start_round = 0;
  std::size_t end_round = 0;
  std::size_t certified_count = 0;  // at epoch end
  std::vector<std::optional<std::size_t>> first_cert_round;  // global rounds
};

struct EpochRunResult {
  Trace trace;
  std::vector<EpochSummary> epochs;
};

// Multi-epoch run: at each boundary the controller resets before the
// round executes and the budget advances to delta_{j,q}.
inline EpochRunResult run_stream_epoch(const ControllerConfig& base,
                                       const EpochSchedule& schedule,
                                       const Stream& stream) {
  schedule.validate();
  const std::size_t m = base.grid.size();

  EpochRunResult out;
  out.trace.reserve(stream.size());

  ControllerConfig cfg = base;
  std::size_t epoch = 0;
  std::size_t next_boundary_idx = 0;
  std::size_t epoch_start_t = 1;
  Controller controller(cfg);

  auto close_epoch = [&](std::size_t end_round) {
    EpochSummary es;
    es.epoch = epoch;
    es.start_round = epoch_start_t;
    es.end_round = end_round;
    es.certified_count = controller.certified_count();
    es.first_cert_round = controller.first_cert_round();
    for (auto& f : es.first_cert_round)
      if (f) *f += epoch_start_t - 1;  // local -> global round index
    out.epochs.push_back(std::move(es));
  };

  for (std::size_t i = 0; i < stream.size(); ++i) {
    const std::size_t t = i + 1;
    if (next_boundary_idx < schedule.boundaries.size() &&
        t == schedule.boundaries[next_boundary_idx]) {
      if (epoch > 0) close_epoch(t - 1);
      ++epoch;
      ++next_boundary_idx;
      epoch_start_t = t;
      cfg.delta_q_override = epoch_budget(epoch, m, base.delta);
      controller = Controller(cfg);
    }
    const Round& r = stream[i];
    auto [acted, q] = controller.decide(r.score);
    out.trace.push_back(RoundRecord{r.t, r.score, q, acted, r.pass, std::nullopt});
    controller.observe(r.score, r.pass);
  }
  if (epoch > 0) close_epoch(stream.size());
  return out;
}

}  // namespace csa
