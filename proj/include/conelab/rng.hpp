#pragma once

// Counter-based random numbers: the k-th draw of stream s under seed S is a
// pure function of (S, s, k), so results do not depend on how work is split
// across threads.

#include <cmath>
#include <cstdint>

#include "conelab/types.hpp"

namespace conelab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t bits(std::uint64_t k) const { return splitmix64(key_ ^ splitmix64(k)); }
  // uniform on (0, 1)
  double uniform(std::uint64_t k) const { return (static_cast<double>(bits(k) >> 11) + 0.5) * 0x1.0p-53; }
  // standard normal (Box-Muller on draws 2k, 2k+1)
  double normal(std::uint64_t k) const {
    const double u = uniform(2 * k), v = uniform(2 * k + 1);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * kPi * v);
  }

 private:
  std::uint64_t key_;
};

}  // namespace conelab
