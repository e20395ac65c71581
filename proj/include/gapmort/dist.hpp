#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace gapmort {

class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Tolerances shared by the kernels.
struct NumericConfig {
  /// Series and asymptotic sums stop once a term falls below this fraction
  /// of the running sum.
  double sum_rel_tol = 1e-17;
  int bessel_max_terms = 200000;
};

inline constexpr NumericConfig kDefaultNumerics{};

struct BesselResult {
  double log_value = 0.0;
  bool converged = false;
  int terms_used = 0;
};

/// Which expansion log_bessel_i used; exposed for tests at regime borders.
enum class BesselRegime { Zero, Series, LargeArgument, UniformAsymptotic };

BesselRegime bessel_regime(long long n, double v);

/// log I_n(v) for integer n >= 0 and v >= 0.
///
/// Ascending series (log-scaled) while its dominant term index is small;
/// the large-argument (Hankel) expansion when n^2 <= v/4; otherwise the
/// uniform (Debye) expansion in n, which is only selected for n >= 30.
BesselResult log_bessel_i(long long n, double v,
                          const NumericConfig &cfg = kDefaultNumerics);

double log_poisson_pmf(long long k, double lambda);

/// log f(z; l1, l2) of the difference of independent Poisson(l1), Poisson(l2).
double log_skellam_pmf(long long z, double lambda1, double lambda2);

/// log I_n(v) - v, free of the cancellation in log I_n(v) - v for large v.
double log_bessel_i_scaled(long long n, double v);

/// I'_n(v) / I_n(v) from the recurrence I'_n = (I_{n-1} + I_{n+1}) / 2.
double bessel_log_derivative(long long n, double v);
/// I'_n(v) / I_n(v) - 1, accurate when the ratio is close to one.
double bessel_log_derivative_excess(long long n, double v);
/// (v / 2) (I'_n(v) / I_n(v) - 1), finite even when v is tiny next to n.
double half_v_bessel_log_derivative_excess(long long n, double v);

/// Inner sum of the bivariate Poisson pmf,
/// S = sum_k C(x,k) C(y,k) k! (l3 / (l1 l2))^k, and the posterior mean of
/// the common component, sum_k k t_k / S.
struct BpInnerSum {
  double log_sum = 0.0;
  double mean_common = 0.0;
  int terms_used = 0;
};

BpInnerSum bp_inner_sum(long long x, long long y, double lambda1,
                        double lambda2, double lambda3);

double log_bivariate_poisson_pmf(long long x, long long y, double lambda1,
                                 double lambda2, double lambda3);

/// E[X3 | X = x, Y = y] for (X, Y) = (X1 + X3, X2 + X3).
double bp_conditional_mean_x3(long long x, long long y, double lambda1,
                              double lambda2, double lambda3);

inline double poisson_pmf(long long k, double lambda) {
  return std::exp(log_poisson_pmf(k, lambda));
}
inline double skellam_pmf(long long z, double l1, double l2) {
  return std::exp(log_skellam_pmf(z, l1, l2));
}
inline double bivariate_poisson_pmf(long long x, long long y, double l1,
                                    double l2, double l3) {
  return std::exp(log_bivariate_poisson_pmf(x, y, l1, l2, l3));
}

} // namespace gapmort
