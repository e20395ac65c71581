#include "gapmort/random.hpp"

#include <cmath>

#include "gapmort/design.hpp"
#include "gapmort/dist.hpp"

namespace gapmort {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng Rng::substream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

namespace {

long long poisson_inversion(Rng &rng, double mean) {
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  long long k = 0;
  while (u > cdf && k < 1000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

long long poisson_ptrs(Rng &rng, double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) {
      return static_cast<long long>(kd);
    }
    if (kd < 0.0 || (us < 0.013 && v > us)) {
      continue;
    }
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + kd * loglam - std::lgamma(kd + 1.0)) {
      return static_cast<long long>(kd);
    }
  }
}

} // namespace

long long sample_poisson(Rng &rng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw DomainError("Poisson mean must be finite and non-negative, got " +
                      format_double(mean));
  }
  if (mean == 0.0) {
    return 0;
  }
  return mean < 30.0 ? poisson_inversion(rng, mean) : poisson_ptrs(rng, mean);
}

std::pair<long long, long long> sample_bivariate_poisson(Rng &rng, double lambda1,
                                                         double lambda2,
                                                         double lambda3) {
  const auto x1 = sample_poisson(rng, lambda1);
  const auto x2 = sample_poisson(rng, lambda2);
  const auto x3 = sample_poisson(rng, lambda3);
  return {x1 + x3, x2 + x3};
}

long long sample_skellam(Rng &rng, double lambda1, double lambda2) {
  const auto x1 = sample_poisson(rng, lambda1);
  const auto x2 = sample_poisson(rng, lambda2);
  return x1 - x2;
}

} // namespace gapmort
