#pragma once
// Synthetic stream generation with analytic oracles, stress transforms,
// and line-delimited replay files.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "csa/rng.hpp"

namespace csa {

// One stream round: the score is produced before the verifier outcome is
// revealed (predictability).
struct Round {
  std::size_t t = 0;      // 1-based round index
  double score = 0.0;     // surrogate risk score in [0,1]
  bool pass = false;      // ground-truth verifier outcome

  bool operator==(const Round&) const = default;
};

using Stream = std::vector<Round>;

// Analytic oracle attached to a synthetic generator: conditional failure
// rate r(q,t), the largest safe cutoff q*(t), and safe-side margins.
struct OracleSpec {
  // Conditional failure rate among released rounds at cutoff q, round t.
  double (*r_fn)(double q, double tau) = nullptr;
  std::vector<double> tau_at;   // per-round verifier cutoff (size T)

  double tau(std::size_t t) const {
    return tau_at[std::min(t, tau_at.size()) - 1];
  }
  double r(double q, std::size_t t) const { return r_fn(q, tau(t)); }
  double q_star(std::size_t t, double alpha) const {
    return tau(t) / (1.0 - alpha);
  }
  // Unconditional safe-side margin -E[X(q)] = P(s<=q) * (alpha - r(q)).
  double margin(double q, std::size_t t, double alpha) const {
    const double tq = tau(t);
    if (q <= tq) return q * alpha;
    return tq - q * (1.0 - alpha);
  }
};

namespace detail {
inline double stationary_r(double q, double tau) {
  return q <= tau ? 0.0 : (q - tau) / q;
}
}  // namespace detail

struct StationarySpec {
  double tau = 0.5;     // verifier cutoff: pass iff score < tau
  double alpha = 0.3;   // budget, used only for oracle computations
  std::size_t T = 3000;
};

// Uniform scores, deterministic verifier pass iff score < tau.
inline Stream gen_stationary(const StationarySpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Stream s(spec.T);
  for (std::size_t t = 0; t < spec.T; ++t) {
    const double x = unif(rng);
    s[t] = Round{t + 1, x, x < spec.tau};
  }
  return s;
}

inline OracleSpec stationary_oracle(const StationarySpec& spec) {
  OracleSpec o;
  o.r_fn = &detail::stationary_r;
  o.tau_at.assign(spec.T, spec.tau);
  return o;
}

// Verifier cutoff ramps linearly from tau0 to tau_max over ramp_rounds,
// then stays constant; the oracle frontier tau_t/(1-alpha) is
// nondecreasing.
inline Stream gen_monotone(double tau0, double tau_max, std::size_t ramp_rounds,
                           std::size_t T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Stream s(T);
  for (std::size_t t = 0; t < T; ++t) {
    double tau = tau_max;
    if (ramp_rounds > 0 && t < ramp_rounds)
      tau = tau0 + (tau_max - tau0) * static_cast<double>(t) /
                       static_cast<double>(ramp_rounds);
    const double x = unif(rng);
    s[t] = Round{t + 1, x, x < tau};
  }
  return s;
}

inline OracleSpec monotone_oracle(double tau0, double tau_max,
                                  std::size_t ramp_rounds, std::size_t T) {
  OracleSpec o;
  o.r_fn = &detail::stationary_r;
  o.tau_at.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    double tau = tau_max;
    if (ramp_rounds > 0 && t < ramp_rounds)
      tau = tau0 + (tau_max - tau0) * static_cast<double>(t) /
                       static_cast<double>(ramp_rounds);
    o.tau_at[t] = tau;
  }
  return o;
}

// Constant score bias, clipped to [0.01, 0.99]. Verifier outcomes are
// untouched; only the surrogate the controller sees is shifted.
inline Stream apply_bias(Stream s, double b) {
  if (b == 0.0) return s;
  for (auto& r : s) r.score = std::clamp(r.score + b, 0.01, 0.99);
  return s;
}

// Independent symmetric label noise: each verifier outcome is flipped
// with probability p.
inline Stream apply_flip(Stream s, double p, std::uint64_t seed) {
  if (p < 0.0 || p > 0.5) throw std::invalid_argument("apply_flip: p must be in [0, 0.5]");
  if (p == 0.0) return s;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& r : s)
    if (unif(rng) < p) r.pass = !r.pass;
  return s;
}

enum class Ordering { Iid, EasyHard, QuartileRev, WindowOutrun };

inline Ordering ordering_from_name(const std::string& name) {
  if (name == "iid") return Ordering::Iid;
  if (name == "easy_hard") return Ordering::EasyHard;
  if (name == "quartile_rev") return Ordering::QuartileRev;
  if (name == "window_outrun") return Ordering::WindowOutrun;
  throw std::invalid_argument("unknown ordering: " + name);
}

// Deterministic adversarial re-orderings of a finite round set. Round
// indices are renumbered 1..T after permuting so traces stay monotone.
inline Stream apply_ordering(Stream s, Ordering kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = s.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  auto by_score = [&](std::size_t a, std::size_t b) {
    return s[a].score < s[b].score;
  };

  switch (kind) {
    case Ordering::Iid:
      std::shuffle(perm.begin(), perm.end(), rng);
      break;
    case Ordering::EasyHard:
      // Hardest-first: the whole failing tail arrives before any
      // threshold has evidence, which is the adversarial case for
      // methods without an anytime test.
      std::stable_sort(perm.begin(), perm.end(),
                       [&](std::size_t a, std::size_t b) { return s[a].score > s[b].score; });
      break;
    case Ordering::QuartileRev: {
      // Quartiles by score, emitted hardest-first, shuffled within each.
      std::stable_sort(perm.begin(), perm.end(), by_score);
      std::vector<std::size_t> out;
      out.reserve(n);
      for (int qi = 3; qi >= 0; --qi) {
        const std::size_t lo = n * static_cast<std::size_t>(qi) / 4;
        const std::size_t hi = n * static_cast<std::size_t>(qi + 1) / 4;
        std::vector<std::size_t> block(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                                       perm.begin() + static_cast<std::ptrdiff_t>(hi));
        std::shuffle(block.begin(), block.end(), rng);
        out.insert(out.end(), block.begin(), block.end());
      }
      perm = std::move(out);
      break;
    }
    case Ordering::WindowOutrun: {
      // Alternating low-score / high-score windows of width 100.
      std::stable_sort(perm.begin(), perm.end(), by_score);
      constexpr std::size_t kWindow = 100;
      std::vector<std::size_t> out;
      out.reserve(n);
      std::size_t lo = 0, hi = n;
      bool take_low = true;
      while (lo < hi) {
        const std::size_t w = std::min(kWindow, hi - lo);
        if (take_low) {
          out.insert(out.end(), perm.begin() + static_cast<std::ptrdiff_t>(lo),
                     perm.begin() + static_cast<std::ptrdiff_t>(lo + w));
          lo += w;
        } else {
          out.insert(out.end(), perm.begin() + static_cast<std::ptrdiff_t>(hi - w),
                     perm.begin() + static_cast<std::ptrdiff_t>(hi));
          hi -= w;
        }
        take_low = !take_low;
      }
      perm = std::move(out);
      break;
    }
  }

  Stream out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = s[perm[i]];
    out[i].t = i + 1;
  }
  return out;
}

// ---------------------------------------------------------------------
// Replay files: one record per line, "t=<n> score=<x> pass=<0|1>"
// with an optional trailing "features=<text>". UTF-8, line-delimited.

struct ReplayRecord {
  std::size_t t;
  double score;
  bool pass;
  std::string features;  // opaque, preserved on round-trip
};

inline void write_replay(const std::vector<ReplayRecord>& records, std::ostream& os) {
  os.precision(17);
  for (const auto& r : records) {
    os << "t=" << r.t << " score=" << r.score << " pass=" << (r.pass ? 1 : 0);
    if (!r.features.empty()) os << " features=" << r.features;
    os << '\n';
  }
}

inline void write_replay(const std::vector<ReplayRecord>& records, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_replay: cannot open " + path);
  write_replay(records, f);
}

inline std::vector<ReplayRecord> read_replay(std::istream& is) {
  std::vector<ReplayRecord> out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t prev_t = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    ReplayRecord rec{};
    bool have_t = false, have_score = false, have_pass = false;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("replay parse error at line " + std::to_string(lineno));
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      try {
        if (key == "t") {
          rec.t = std::stoull(val);
          have_t = true;
        } else if (key == "score") {
          rec.score = std::stod(val);
          have_score = true;
        } else if (key == "pass") {
          if (val != "0" && val != "1")
            throw std::runtime_error("bad pass value");
          rec.pass = (val == "1");
          have_pass = true;
        } else if (key == "features") {
          rec.features = val;
        } else {
          throw std::runtime_error("unknown field " + key);
        }
      } catch (const std::exception&) {
        throw std::runtime_error("replay parse error at line " + std::to_string(lineno));
      }
    }
    if (!have_t || !have_score || !have_pass)
      throw std::runtime_error("replay parse error at line " + std::to_string(lineno) +
                               ": missing required field");
    if (!(rec.score >= 0.0 && rec.score <= 1.0))
      throw std::runtime_error("replay range error at line " + std::to_string(lineno) +
                               ": score outside [0,1]");
    if (rec.t <= prev_t)
      throw std::runtime_error("replay validation error at line " + std::to_string(lineno) +
                               ": round index not strictly increasing");
    prev_t = rec.t;
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<ReplayRecord> read_replay(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_replay: cannot open " + path);
  return read_replay(f);
}

inline Stream stream_from_replay(const std::vector<ReplayRecord>& records) {
  Stream s(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    s[i] = Round{records[i].t, records[i].score, records[i].pass};
  return s;
}

inline std::vector<ReplayRecord> replay_from_stream(const Stream& s) {
  std::vector<ReplayRecord> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    out[i] = ReplayRecord{s[i].t, s[i].score, s[i].pass, {}};
  return out;
}

}  // namespace csa
