#pragma once

#include <cstdint>
#include <random>
#include <utility>

namespace gapmort {

/// Seeded generator with a fixed, platform-independent output sequence:
/// std::mt19937_64 for raw bits, uniforms built from the top 53 bits.
/// Sampling algorithms on top of it are implemented here rather than via
/// std::*_distribution, whose outputs are implementation-defined.
class Rng {
public:
  static constexpr const char *kAlgorithm = "mt19937_64/splitmix64-substreams/v1";

  explicit Rng(std::uint64_t seed) : engine_{seed} {}

  /// Independent stream for (seed, stream index), e.g. one per grid cell.
  static Rng substream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t bits() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Standard normal by the polar method.
  double normal();

  std::mt19937_64 &engine() noexcept { return engine_; }

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Poisson variate: sequential inversion for mean < 30, Hormann's
/// transformed rejection (PTRS) otherwise.
long long sample_poisson(Rng &rng, double mean);

/// (X1 + X3, X2 + X3) from three independent Poisson draws.
std::pair<long long, long long> sample_bivariate_poisson(Rng &rng, double lambda1,
                                                         double lambda2,
                                                         double lambda3);

/// X1 - X2 from two independent Poisson draws.
long long sample_skellam(Rng &rng, double lambda1, double lambda2);

} // namespace gapmort
