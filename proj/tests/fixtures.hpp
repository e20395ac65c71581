#pragma once

// Panel builders shared by the test suites.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gapmort/design.hpp"
#include "gapmort/fit.hpp"
#include "gapmort/panel.hpp"
#include "gapmort/sim.hpp"

namespace fixture {

inline std::vector<int> years_from(int first, std::size_t n) {
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = first + static_cast<int>(i);
  }
  return out;
}

inline gapmort::MortalityPanel make_panel(std::size_t n_ages, std::size_t n_years,
                                          const std::vector<long long> &a,
                                          const std::vector<long long> &b) {
  gapmort::MortalityPanel p;
  p.ages = gapmort::five_year_age_labels(n_ages);
  p.years = years_from(2000, n_years);
  p.counts_a = gapmort::CountGrid(n_ages, n_years);
  p.counts_b = gapmort::CountGrid(n_ages, n_years);
  p.counts_a.values() = a;
  p.counts_b.values() = b;
  return p;
}

inline gapmort::GapPanel make_gap(std::size_t n_ages, std::size_t n_years,
                                  const std::vector<long long> &g) {
  gapmort::GapPanel p;
  p.ages = gapmort::five_year_age_labels(n_ages);
  p.years = years_from(2000, n_years);
  p.gaps = gapmort::CountGrid(n_ages, n_years);
  p.gaps.values() = g;
  return p;
}

/// Block with intercept log(level), age effects age_step * a and period
/// effects drift * t.
inline gapmort::AgePeriodParams linear_block(std::size_t n_ages, std::size_t n_years,
                                             double level, double age_step, double drift) {
  gapmort::AgePeriodParams p(n_ages, n_years, std::log(level));
  for (std::size_t a = 1; a < n_ages; ++a) {
    p.age_effects[a - 1] = age_step * static_cast<double>(a);
  }
  for (std::size_t t = 1; t < n_years; ++t) {
    p.period_effects[t - 1] = drift * static_cast<double>(t);
  }
  return p;
}

inline gapmort::SimSpec make_spec(gapmort::ModelFamily family, std::size_t n_ages,
                                  std::size_t n_years, gapmort::AgePeriodParams first,
                                  gapmort::AgePeriodParams second, double common,
                                  std::uint64_t seed) {
  gapmort::SimSpec s;
  s.family = family;
  s.ages = gapmort::five_year_age_labels(n_ages);
  s.years = years_from(2000, n_years);
  s.series = {std::move(first), std::move(second)};
  s.common_rate = common;
  s.seed = seed;
  return s;
}

/// Bivariate panel used for common-rate recovery: 5 x 20, independent rates
/// falling from about 950 to 16 across ages, common rate 50.
inline gapmort::SimSpec recovery_spec(std::uint64_t seed) {
  auto a = linear_block(5, 20, 950.0, 0.0, -0.005);
  auto b = linear_block(5, 20, 900.0, 0.0, 0.003);
  const double steps[] = {-1.0, -2.0, -3.0, -4.5};
  for (std::size_t i = 0; i < 4; ++i) {
    a.age_effects[i] = 0.9 * steps[i];
    b.age_effects[i] = steps[i];
  }
  return make_spec(gapmort::ModelFamily::BivariatePoisson, 5, 20, a, b, 50.0, seed);
}

/// Counts set to the rounded intensities of two log-linear surfaces, so
/// the data carry no noise beyond rounding.
struct Noiseless {
  gapmort::AgePeriodParams first;
  gapmort::AgePeriodParams second;
  gapmort::RealGrid gap; // first - second before rounding
  gapmort::MortalityPanel panel;
};

inline Noiseless noiseless(std::size_t n_ages, std::size_t n_years, double level) {
  Noiseless n{linear_block(n_ages, n_years, level, -0.2, 0.03),
              linear_block(n_ages, n_years, 0.6 * level, -0.1, -0.02),
              gapmort::RealGrid(n_ages, n_years),
              {}};
  const auto a = gapmort::intensity_surface(n.first, n_ages, n_years);
  const auto b = gapmort::intensity_surface(n.second, n_ages, n_years);
  std::vector<long long> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca.push_back(std::llround(a.values()[i]));
    cb.push_back(std::llround(b.values()[i]));
    n.gap.values()[i] = a.values()[i] - b.values()[i];
  }
  n.panel = make_panel(n_ages, n_years, ca, cb);
  return n;
}

/// Gap panel holding the rounded expected gap.
inline gapmort::GapPanel rounded_gap(const Noiseless &n) {
  auto g = gapmort::to_gap(n.panel);
  for (std::size_t i = 0; i < g.gaps.size(); ++i) {
    g.gaps.values()[i] = std::llround(n.gap.values()[i]);
  }
  return g;
}

/// Intercepts in [0.5, 3], effects in [-0.5, 0.5].
inline gapmort::ParamVector random_theta(std::mt19937_64 &gen,
                                         const gapmort::ParamLayout &layout) {
  std::uniform_real_distribution<double> intercept(0.5, 3.0);
  std::uniform_real_distribution<double> effect(-0.5, 0.5);
  gapmort::ParamVector theta(static_cast<Eigen::Index>(layout.size()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    theta[i] = effect(gen);
  }
  for (std::size_t b = 0; b < layout.n_blocks; ++b) {
    theta[static_cast<Eigen::Index>(layout.block_offset(b))] = intercept(gen);
  }
  if (layout.n_extras > 0) {
    theta[static_cast<Eigen::Index>(layout.extras_offset())] = intercept(gen) - 1.0;
  }
  return theta;
}

/// Largest |central difference - analytic| over the components, relative
/// to max(1, largest central difference); step 1e-5.
template <typename F>
double gradient_mismatch(F &&objective, const gapmort::ParamVector &theta,
                         const gapmort::ParamVector &analytic) {
  constexpr double h = 1e-5;
  double worst = 0.0;
  double scale = 1.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    gapmort::ParamVector up = theta, down = theta;
    up[i] += h;
    down[i] -= h;
    const double fd = (objective(up) - objective(down)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - analytic[i]));
    scale = std::max(scale, std::abs(fd));
  }
  return worst / scale;
}

/// max |x - y| / max |y|
inline double relative_sup_error(const gapmort::RealGrid &x, const gapmort::RealGrid &y) {
  double err = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    err = std::max(err, std::abs(x.values()[i] - y.values()[i]));
    scale = std::max(scale, std::abs(y.values()[i]));
  }
  return err / scale;
}

inline double rmse(const gapmort::RealGrid &x, const gapmort::RealGrid &y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.values()[i] - y.values()[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(x.size()));
}

} // namespace fixture
