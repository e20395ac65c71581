#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "gapmort/dist.hpp"

namespace gapmort {

namespace {

constexpr double kSeriesPeakLimit = 500.0;
constexpr long long kMinDebyeOrder = 30;
constexpr int kDebyeTerms = 14;

/// Index of the largest ascending-series term.
double series_peak(double n, double v) {
  return 0.5 * (std::sqrt(n * n + v * v) - n);
}

/// Coefficients of the Debye polynomials u_k(p), k = 0..kDebyeTerms-1,
/// generated by u_{k+1} = p^2 (1 - p^2) u_k' / 2 + (1/8) int_0^p (1 - 5t^2) u_k.
const std::vector<std::vector<double>> &debye_polynomials() {
  static const auto polys = [] {
    std::vector<std::vector<double>> u(kDebyeTerms);
    u[0] = {1.0};
    for (int k = 0; k + 1 < kDebyeTerms; ++k) {
      const auto &c = u[k];
      std::vector<double> next(c.size() + 3, 0.0);
      for (std::size_t j = 0; j < c.size(); ++j) {
        const double cj = c[j];
        const double jd = static_cast<double>(j);
        next[j + 1] += 0.5 * jd * cj;
        next[j + 3] -= 0.5 * jd * cj;
        next[j + 1] += cj / (8.0 * (jd + 1.0));
        next[j + 3] -= 5.0 * cj / (8.0 * (jd + 3.0));
      }
      u[k + 1] = std::move(next);
    }
    return u;
  }();
  return polys;
}

double eval_poly(const std::vector<double> &c, double p) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    acc = acc * p + *it;
  }
  return acc;
}

/// log I_n(v) = big + small, where `big` is the closed-form prefactor of the
/// expansion and `small` the log of its sum. Splitting lets neighbouring
/// orders be differenced without cancelling the large prefactor.
struct Parts {
  double big = 0.0;
  double small = 0.0;
  bool converged = false;
  int terms = 0;
};

Parts series(long long n, double v, const NumericConfig &cfg) {
  const double nd = static_cast<double>(n);
  const double q = 0.25 * v * v;
  const double peak = series_peak(nd, v);
  const double big = (n == 0 ? 0.0 : nd * std::log(0.5 * v)) - std::lgamma(nd + 1.0);
  double log_scale = 0.0;
  double term = 1.0;
  double sum = 1.0;
  int k = 0;
  bool converged = false;
  while (k < cfg.bessel_max_terms) {
    const double kd = static_cast<double>(k);
    term *= q / ((kd + 1.0) * (nd + kd + 1.0));
    sum += term;
    ++k;
    if (sum > 1e280) {
      sum *= 1e-280;
      term *= 1e-280;
      log_scale += 280.0 * std::numbers::ln10;
    }
    if (kd + 1.0 > peak && term <= cfg.sum_rel_tol * sum) {
      converged = true;
      break;
    }
  }
  return {big, log_scale + std::log(sum), converged, k + 1};
}

Parts hankel(long long n, double v, const NumericConfig &cfg) {
  const double mu = 4.0 * static_cast<double>(n) * static_cast<double>(n);
  double term = 1.0;
  double sum = 1.0;
  double prev_abs = 1.0;
  int k = 0;
  bool converged = false;
  while (k < cfg.bessel_max_terms) {
    const double kd = static_cast<double>(k) + 1.0;
    const double odd = 2.0 * kd - 1.0;
    term *= -(mu - odd * odd) / (8.0 * kd * v);
    ++k;
    const double a = std::abs(term);
    if (a > prev_abs) {
      // asymptotic series started to diverge; accept if already negligible
      converged = prev_abs <= 1e-15 * std::abs(sum);
      break;
    }
    sum += term;
    prev_abs = a;
    if (a <= cfg.sum_rel_tol * std::abs(sum) || term == 0.0) {
      converged = true;
      break;
    }
  }
  return {v - 0.5 * std::log(2.0 * std::numbers::pi * v), std::log(sum), converged,
          k + 1};
}

Parts debye(long long n, double v, const NumericConfig &cfg) {
  const double nd = static_cast<double>(n);
  const double z = v / nd;
  const double root = std::sqrt(1.0 + z * z);
  const double p = 1.0 / root;
  const double eta = root + std::log(z / (1.0 + root));
  const auto &u = debye_polynomials();
  double sum = 1.0;
  double scale = 1.0;
  bool converged = false;
  int k = 1;
  for (; k < kDebyeTerms; ++k) {
    scale /= nd;
    const double term = eval_poly(u[k], p) * scale;
    sum += term;
    if (std::abs(term) <= cfg.sum_rel_tol * std::abs(sum)) {
      converged = true;
      ++k;
      break;
    }
  }
  if (!converged) {
    // the last retained term bounds the truncation error of the expansion
    converged = std::abs(eval_poly(u[kDebyeTerms - 1], p) * scale) <= 1e-15;
  }
  return {nd * eta - 0.5 * std::log(2.0 * std::numbers::pi * nd) - 0.5 * std::log(root),
          std::log(sum), converged, k};
}

Parts parts(BesselRegime regime, long long n, double v, const NumericConfig &cfg) {
  switch (regime) {
  case BesselRegime::Series:
    return series(n, v, cfg);
  case BesselRegime::LargeArgument:
    return hankel(n, v, cfg);
  case BesselRegime::UniformAsymptotic:
    return debye(n, v, cfg);
  case BesselRegime::Zero:
    break;
  }
  return {n == 0 ? 0.0 : -std::numeric_limits<double>::infinity(), 0.0, true, 0};
}

/// big(hi) - big(lo) for hi = lo + 1 inside one regime.
double big_step(BesselRegime regime, long long lo, double v) {
  const double nd = static_cast<double>(lo);
  const double hd = nd + 1.0;
  switch (regime) {
  case BesselRegime::Series:
    return std::log(v / (2.0 * hd));
  case BesselRegime::LargeArgument:
    return 0.0;
  case BesselRegime::UniformAsymptotic: {
    const double s_lo = std::hypot(nd, v);
    const double s_hi = std::hypot(hd, v);
    const double ds = (2.0 * nd + 1.0) / (s_lo + s_hi);
    return ds + std::log(v / (hd + s_hi)) - nd * std::log1p((1.0 + ds) / (nd + s_lo)) -
           0.5 * std::log1p(ds / s_lo);
  }
  case BesselRegime::Zero:
    break;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// log I_m(v) - log I_n(v) for |m - n| = 1.
double log_neighbour_ratio(long long n, long long m, double v) {
  const auto rn = bessel_regime(n, v);
  const auto rm = bessel_regime(m, v);
  const auto pn = parts(rn, n, v, kDefaultNumerics);
  const auto pm = parts(rm, m, v, kDefaultNumerics);
  if (rn != rm || rn == BesselRegime::Zero) {
    return (pm.big + pm.small) - (pn.big + pn.small);
  }
  const double step = big_step(rn, std::min(n, m), v);
  return (m > n ? step : -step) + (pm.small - pn.small);
}

} // namespace

BesselRegime bessel_regime(long long n, double v) {
  if (v == 0.0) {
    return BesselRegime::Zero;
  }
  const double nd = static_cast<double>(n);
  if (v <= 50.0 || series_peak(nd, v) <= kSeriesPeakLimit) {
    return BesselRegime::Series;
  }
  if (4.0 * nd * nd <= v) {
    return BesselRegime::LargeArgument;
  }
  if (n < kMinDebyeOrder) {
    return BesselRegime::Series;
  }
  return BesselRegime::UniformAsymptotic;
}

BesselResult log_bessel_i(long long n, double v, const NumericConfig &cfg) {
  if (n < 0) {
    throw DomainError("Bessel order must be non-negative, got " + std::to_string(n));
  }
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError("Bessel argument must be finite and non-negative");
  }
  const auto p = parts(bessel_regime(n, v), n, v, cfg);
  return {p.big + p.small, p.converged, p.terms};
}

double log_bessel_i_scaled(long long n, double v) {
  if (n < 0) {
    throw DomainError("Bessel order must be non-negative, got " + std::to_string(n));
  }
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError("Bessel argument must be finite and non-negative");
  }
  const auto regime = bessel_regime(n, v);
  const auto p = parts(regime, n, v, kDefaultNumerics);
  switch (regime) {
  case BesselRegime::LargeArgument:
    return -0.5 * std::log(2.0 * std::numbers::pi * v) + p.small;
  case BesselRegime::UniformAsymptotic: {
    // n eta - v = (s - v) + n log(v / (n + s)) with s = hypot(n, v)
    const double nd = static_cast<double>(n);
    const double s = std::hypot(nd, v);
    return nd * nd / (s + v) + nd * std::log(v / (nd + s)) -
           0.5 * std::log(2.0 * std::numbers::pi * nd) - 0.5 * std::log(s / nd) + p.small;
  }
  default:
    return p.big + p.small - v;
  }
}

double bessel_log_derivative_excess(long long n, double v) {
  n = n < 0 ? -n : n;
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError("Bessel log-derivative needs a finite positive argument");
  }
  return 0.5 * (std::expm1(log_neighbour_ratio(n, n == 0 ? 1 : n - 1, v)) +
                std::expm1(log_neighbour_ratio(n, n + 1, v)));
}

double half_v_bessel_log_derivative_excess(long long n, double v) {
  n = n < 0 ? -n : n;
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError("Bessel log-derivative needs a finite positive argument");
  }
  const double down = log_neighbour_ratio(n, n == 0 ? 1 : n - 1, v);
  const double up = log_neighbour_ratio(n, n + 1, v);
  if (down < 1.0) {
    return 0.25 * v * (std::expm1(down) + std::expm1(up));
  }
  // v much smaller than n: the ratios are huge and only their product with
  // v is representable
  const double log_v = std::log(v);
  return 0.25 * (std::exp(log_v + down) + std::exp(log_v + up)) - 0.5 * v;
}

double bessel_log_derivative(long long n, double v) {
  return 1.0 + bessel_log_derivative_excess(n, v);
}

} // namespace gapmort
