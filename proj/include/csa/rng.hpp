#pragma once
// Seed derivation for parallel replications. Sub-seeds come from a
// splitmix64 hash of (base seed, stream index), so adding replications
// or varying one component never perturbs the others.

#include <cstdint>

namespace csa {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent sub-seed for a named component of a replication.
// component 0 = stream data, 1 = verifier-query coins, 2 = label flips,
// 3 = orderings, 4 = calibration sets.
inline std::uint64_t sub_seed(std::uint64_t base, std::uint64_t replication,
                              std::uint64_t component = 0) {
  const std::uint64_t mixed = splitmix64(base ^ (component * 0x5851f42d4c957f2dULL));
  return splitmix64(mixed + replication);
}

}  // namespace csa
