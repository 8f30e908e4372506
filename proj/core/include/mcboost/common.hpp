#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcboost {

using Vector = std::vector<double>;

// Caller violated a documented precondition or supplied malformed input.
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

// An iterative numeric routine exhausted its budget without converging.
class NumericFailure : public std::runtime_error {
 public:
  explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

// Mixed absolute/relative tolerance: tol * (1 + scale). Target values across
// the supported datasets differ by orders of magnitude, so bare absolute
// tolerances are not usable.
inline double tol_at_scale(double tol, double scale) { return tol * (1.0 + std::abs(scale)); }

inline void require_finite(std::span<const double> values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ContractViolation(what + ": non-finite entry at index " + std::to_string(i));
    }
  }
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

// Deterministic uniform double in [0,1) from a 64-bit engine draw. We avoid
// std::uniform_real_distribution because its output is not pinned down by the
// standard; run artifacts must be reproducible from the seed alone.
template <typename Engine>
double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

template <typename Engine>
double uniform_in(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

// Box-Muller on deterministic uniforms, same rationale as uniform01.
template <typename Engine>
double normal01(Engine& eng) {
  double u1 = uniform01(eng);
  while (u1 <= 0.0) u1 = uniform01(eng);
  const double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
}

// SplitMix64, used to derive independent per-task seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mcboost
