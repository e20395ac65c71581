#include "gapmort/dist.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gapmort/design.hpp"

namespace gapmort {

namespace {

void require_positive(double lambda, const char *name) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError(std::string(name) + " must be positive and finite, got " +
                      format_double(lambda));
  }
}

void require_count(long long k, const char *name) {
  if (k < 0) {
    throw DomainError(std::string(name) + " must be non-negative, got " +
                      std::to_string(k));
  }
}

double log_factorial(long long k) {
  return std::lgamma(static_cast<double>(k) + 1.0);
}

} // namespace

double log_poisson_pmf(long long k, double lambda) {
  require_count(k, "Poisson count");
  require_positive(lambda, "Poisson rate");
  const double kd = static_cast<double>(k);
  return -lambda + (k == 0 ? 0.0 : kd * std::log(lambda)) - log_factorial(k);
}

double log_skellam_pmf(long long z, double lambda1, double lambda2) {
  require_positive(lambda1, "Skellam rate lambda1");
  require_positive(lambda2, "Skellam rate lambda2");
  // -l1 - l2 + log I(v) = -(sqrt l1 - sqrt l2)^2 + (log I(v) - v)
  const double r1 = std::sqrt(lambda1);
  const double r2 = std::sqrt(lambda2);
  const double v = 2.0 * r1 * r2;
  const double d = r1 - r2;
  return -d * d + 0.5 * static_cast<double>(z) * (std::log(lambda1) - std::log(lambda2)) +
         log_bessel_i_scaled(z < 0 ? -z : z, v);
}

BpInnerSum bp_inner_sum(long long x, long long y, double lambda1,
                        double lambda2, double lambda3) {
  require_count(x, "bivariate Poisson x");
  require_count(y, "bivariate Poisson y");
  require_positive(lambda1, "bivariate Poisson lambda1");
  require_positive(lambda2, "bivariate Poisson lambda2");
  if (!(lambda3 >= 0.0) || !std::isfinite(lambda3)) {
    throw DomainError("bivariate Poisson lambda3 must be non-negative, got " +
                      format_double(lambda3));
  }
  const long long m = x < y ? x : y;
  if (lambda3 == 0.0 || m == 0) {
    return {0.0, 0.0, 1};
  }
  // Terms t_k are log-concave in k; accumulate in log space with a running
  // maximum and stop once past the mode and negligible.
  // grouped so that swapping (x, lambda1) with (y, lambda2) is exact
  const double log_c = std::log(lambda3) - (std::log(lambda1) + std::log(lambda2));
  const double xd = static_cast<double>(x);
  const double yd = static_cast<double>(y);
  double log_t = 0.0;
  double log_max = 0.0;
  double sum = 1.0;      // sum of t_k / exp(log_max)
  double weighted = 0.0; // sum of k t_k / exp(log_max)
  int terms = 1;
  for (long long k = 0; k < m; ++k) {
    const double kd = static_cast<double>(k);
    const double step = std::log((xd - kd) * (yd - kd) / (kd + 1.0)) + log_c;
    log_t += step;
    ++terms;
    if (log_t > log_max) {
      const double rescale = std::exp(log_max - log_t);
      sum = sum * rescale + 1.0;
      weighted = weighted * rescale + (kd + 1.0);
      log_max = log_t;
    } else {
      const double w = std::exp(log_t - log_max);
      sum += w;
      weighted += (kd + 1.0) * w;
      if (step < 0.0 && log_t < log_max - 45.0) {
        break;
      }
    }
  }
  return {log_max + std::log(sum), weighted / sum, terms};
}

double log_bivariate_poisson_pmf(long long x, long long y, double lambda1,
                                 double lambda2, double lambda3) {
  const auto inner = bp_inner_sum(x, y, lambda1, lambda2, lambda3);
  if (lambda3 == 0.0) {
    return log_poisson_pmf(x, lambda1) + log_poisson_pmf(y, lambda2);
  }
  const double xd = static_cast<double>(x);
  const double yd = static_cast<double>(y);
  const double part_x = (x == 0 ? 0.0 : xd * std::log(lambda1)) - log_factorial(x);
  const double part_y = (y == 0 ? 0.0 : yd * std::log(lambda2)) - log_factorial(y);
  return -((lambda1 + lambda2) + lambda3) + (part_x + part_y) + inner.log_sum;
}

double bp_conditional_mean_x3(long long x, long long y, double lambda1,
                              double lambda2, double lambda3) {
  return bp_inner_sum(x, y, lambda1, lambda2, lambda3).mean_common;
}

} // namespace gapmort
