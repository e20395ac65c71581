#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library kernels.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_50;

/// log I_n(v) from the ascending series summed term by term in 50 digits.
inline double log_bessel_i(long long n, double v_in) {
  const Big v = v_in;
  const Big q = v * v / 4;
  Big term = 1;
  for (long long j = 1; j <= n; ++j) {
    term *= (v / 2) / j;
  }
  Big sum = term;
  for (long long k = 1; k < 10000000; ++k) {
    term *= q / (Big(k) * Big(k + n));
    sum += term;
    if (k > v_in && term < sum * Big("1e-45")) {
      return static_cast<double>(log(sum));
    }
  }
  throw std::runtime_error("Bessel oracle did not converge");
}

inline Big poisson_pmf(long long k, const Big &lambda) {
  if (k < 0) {
    return 0;
  }
  Big p = exp(-lambda);
  for (long long j = 1; j <= k; ++j) {
    p *= lambda / j;
  }
  return p;
}

inline double log_poisson_pmf(long long k, double lambda) {
  return static_cast<double>(log(poisson_pmf(k, Big(lambda))));
}

/// Terms P(X1 = x - k) P(X2 = y - k) P(X3 = k), k = 0..min(x, y), of the
/// trivariate representation, generated exactly in 50 digits.
inline std::vector<Big> bp_terms(long long x, long long y, double l1, double l2, double l3) {
  const Big b1 = l1, b2 = l2, b3 = l3;
  const Big lead = -(b1 + b2 + b3) + x * log(b1) + y * log(b2) -
                   boost::math::lgamma(Big(x + 1)) - boost::math::lgamma(Big(y + 1));
  std::vector<Big> terms{exp(lead)};
  for (long long k = 0; k < std::min(x, y); ++k) {
    terms.push_back(terms.back() * Big(x - k) / b1 * Big(y - k) / b2 * b3 / Big(k + 1));
  }
  return terms;
}

inline double bp_log_pmf(long long x, long long y, double l1, double l2, double l3) {
  Big sum = 0;
  for (const auto &t : bp_terms(x, y, l1, l2, l3)) {
    sum += t;
  }
  return static_cast<double>(log(sum));
}

/// Posterior mean of the common component given (x, y), by enumeration.
inline double bp_posterior_mean(long long x, long long y, double l1, double l2, double l3) {
  Big num = 0, den = 0;
  const auto terms = bp_terms(x, y, l1, l2, l3);
  for (std::size_t k = 0; k < terms.size(); ++k) {
    num += terms[k] * static_cast<long long>(k);
    den += terms[k];
  }
  return static_cast<double>(num / den);
}

/// Maximum-likelihood surface of an additive log-link Poisson model with
/// age and year factors: row total x column total / grand total.
inline std::vector<double> independence_mle(const std::vector<double> &y, std::size_t rows,
                                            std::size_t cols) {
  std::vector<double> r(rows, 0.0), c(cols, 0.0);
  double n = 0.0;
  for (std::size_t a = 0; a < rows; ++a) {
    for (std::size_t t = 0; t < cols; ++t) {
      r[a] += y[a * cols + t];
      c[t] += y[a * cols + t];
      n += y[a * cols + t];
    }
  }
  std::vector<double> out(rows * cols);
  for (std::size_t a = 0; a < rows; ++a) {
    for (std::size_t t = 0; t < cols; ++t) {
      out[a * cols + t] = r[a] * c[t] / n;
    }
  }
  return out;
}

} // namespace oracle
