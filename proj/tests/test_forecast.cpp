#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "fixtures.hpp"
#include "gapmort/fit.hpp"
#include "gapmort/forecast.hpp"

using namespace gapmort;

namespace {

PeriodSeries series_of(std::initializer_list<double> a, std::initializer_list<double> b) {
  PeriodSeries s;
  s.values.resize(2, static_cast<Eigen::Index>(a.size()));
  Eigen::Index j = 0;
  for (double v : a) s.values(0, j++) = v;
  j = 0;
  for (double v : b) s.values(1, j++) = v;
  s.years = fixture::years_from(1990, a.size());
  return s;
}

FitResult two_block_fit(std::size_t na, std::size_t nt) {
  FitResult f;
  f.model = ModelFamily::DoublePoisson;
  f.ages = five_year_age_labels(na);
  f.years = fixture::years_from(2000, nt);
  f.blocks = {fixture::linear_block(na, nt, 40.0, -0.2, 0.03),
              fixture::linear_block(na, nt, 25.0, 0.1, -0.02)};
  refresh_fitted_surfaces(f);
  return f;
}

} // namespace

TEST_CASE("period series carries the reference year as zero") {
  auto fit = two_block_fit(2, 3);
  fit.blocks[0].period_effects = {0.1, 0.2};
  fit.blocks[1].period_effects = {-0.3, 0.4};
  const auto s = extract_period_series(fit);
  CHECK(s.values.cols() == 3);
  CHECK(s.values(0, 0) == 0.0);
  CHECK(s.values(0, 1) == 0.1);
  CHECK(s.values(0, 2) == 0.2);
  CHECK(s.values(1, 0) == 0.0);
  CHECK(s.values(1, 1) == -0.3);
  CHECK(s.values(1, 2) == 0.4);
  CHECK(s.years == fit.years);
  CHECK(s.labels[0] == "A");

  auto shifted = fit;
  shifted.blocks[0].intercept += 3.0;
  shifted.blocks[1].intercept -= 1.0;
  CHECK(extract_period_series(shifted).values == s.values);

  auto skellam = fit;
  skellam.model = ModelFamily::Skellam;
  const auto labels = extract_period_series(skellam).labels;
  CHECK(labels[0] == "C");
  CHECK(labels[1] == "D");

  FitResult empty;
  CHECK_THROWS_AS(extract_period_series(empty), std::invalid_argument);
}

TEST_CASE("random walk estimates on crafted series") {
  SUBCASE("linear rows") {
    const auto m = fit_rwd(series_of({0.0, 0.5, 1.0, 1.5, 2.0}, {0.0, -0.25, -0.5, -0.75, -1.0}));
    CHECK(m.drift(0) == 0.5);
    CHECK(m.drift(1) == -0.25);
    CHECK(m.noise_cov.isZero(0.0));
    CHECK(m.origin(0) == 2.0);
    CHECK(m.origin(1) == -1.0);
    CHECK(m.origin_year == 1994);

    const auto tenths = fit_rwd(series_of({0.0, 0.5, 1.0, 1.5}, {0.0, -0.2, -0.4, -0.6}));
    CHECK(tenths.drift(1) == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(tenths.noise_cov.cwiseAbs().maxCoeff() < 1e-30);
  }
  SUBCASE("constant rows") {
    const auto m = fit_rwd(series_of({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}));
    CHECK(m.drift.isZero(0.0));
    CHECK(m.noise_cov.isZero(0.0));
  }
  SUBCASE("hand-computed drift and covariance") {
    // first differences (1, 2, 1) and (-1, 1, -2)
    const auto m = fit_rwd(series_of({0.0, 1.0, 3.0, 4.0}, {0.0, -1.0, 0.0, -2.0}));
    CHECK(m.drift(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(m.drift(1) == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));
    CHECK(m.noise_cov(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(m.noise_cov(1, 1) == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
    CHECK(m.noise_cov(0, 1) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(m.noise_cov(1, 0) == m.noise_cov(0, 1));
  }
  CHECK_THROWS_AS(fit_rwd(series_of({0.0, 1.0}, {0.0, 2.0})), std::invalid_argument);
  CHECK_THROWS_AS(fit_rwd(series_of({0.0, 1.0, NAN}, {0.0, 2.0, 1.0})), std::invalid_argument);
}

TEST_CASE("random walk estimates on a long simulated walk") {
  const Eigen::Vector2d drift(0.02, -0.015);
  Eigen::Matrix2d cov;
  cov << 0.0100, 0.0108, 0.0108, 0.0225;
  const Eigen::Matrix2d chol = cov.llt().matrixL();
  constexpr int T = 200;
  std::mt19937_64 gen(2015);
  std::normal_distribution<double> normal;
  PeriodSeries s;
  s.years = fixture::years_from(1800, T);
  s.values = Eigen::Matrix2Xd::Zero(2, T);
  for (int t = 1; t < T; ++t) {
    const Eigen::Vector2d e(normal(gen), normal(gen));
    s.values.col(t) = s.values.col(t - 1) + drift + chol * e;
  }
  const auto m = fit_rwd(s);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(m.drift(i) - drift(i)) < 4.0 * std::sqrt(cov(i, i) / T));
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(m.noise_cov(i, j) - cov(i, j)) < 0.2 * std::abs(cov(i, j)));
    }
  }
  CHECK(m.noise_cov(0, 1) == m.noise_cov(1, 0));
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(m.noise_cov);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("period forecasts are affine in the horizon") {
  RwdModel m;
  m.origin = Eigen::Vector2d(1.0, 2.0);
  m.drift = Eigen::Vector2d(0.5, -1.0);
  const auto two = forecast_period(m, 2);
  CHECK(two(0, 0) == 1.5);
  CHECK(two(1, 0) == 1.0);
  CHECK(two(0, 1) == 2.0);
  CHECK(two(1, 1) == 0.0);

  m.drift = Eigen::Vector2d(0.013, -0.031);
  const auto long_run = forecast_period(m, 25);
  for (Eigen::Index j = 1; j < long_run.cols(); ++j) {
    const Eigen::Vector2d step = long_run.col(j) - long_run.col(j - 1);
    CHECK(step(0) == doctest::Approx(m.drift(0)).epsilon(1e-12));
    CHECK(step(1) == doctest::Approx(m.drift(1)).epsilon(1e-12));
  }
  // forecasting h1 then h2 from there equals forecasting h1 + h2
  auto relaunched = m;
  relaunched.origin = forecast_period(m, 7).col(6);
  const auto composed = forecast_period(relaunched, 5).col(4);
  CHECK((composed - forecast_period(m, 12).col(11)).cwiseAbs().maxCoeff() < 1e-14);

  m.drift.setZero();
  const auto flat = forecast_period(m, 4);
  for (Eigen::Index j = 0; j < 4; ++j) {
    CHECK(flat.col(j) == m.origin);
  }
  CHECK_THROWS_AS(forecast_period(m, 0), std::invalid_argument);
}

TEST_CASE("reconstruction at the origin reproduces the last fitted year") {
  const auto fit = two_block_fit(4, 6);
  const auto series = extract_period_series(fit);
  const auto last = reconstruct_gap(fit, series.values.rightCols(1));
  for (std::size_t a = 0; a < 4; ++a) {
    CHECK(last(a, 0) == fit.fitted_gap(a, 5));
  }

  auto rwd = fit_rwd(series);
  rwd.drift.setZero();
  const auto fc = forecast_gap(fit, rwd, 1);
  for (std::size_t a = 0; a < 4; ++a) {
    CHECK(fc.gap_forecast(a, 0) == fit.fitted_gap(a, 5));
  }
  CHECK(fc.horizon_years == std::vector<int>{2006});
  CHECK(fc.fit_first_year == 2000);
  CHECK(fc.fit_last_year == 2005);
  CHECK(fc.model == ModelFamily::DoublePoisson);
}

TEST_CASE("intercept-only fit with a log 2 drift doubles the first intensity") {
  const auto fit = fit_double_poisson(fixture::make_panel(1, 1, {7}, {4}));
  RwdModel rwd;
  rwd.drift = Eigen::Vector2d(std::log(2.0), 0.0);
  rwd.origin_year = 2000;
  const auto fc = forecast_gap(fit, rwd, 1);
  CHECK(fc.gap_forecast(0, 0) == doctest::Approx(14.0 - 4.0).epsilon(1e-14));
}

TEST_CASE("forecasts use only intercepts, age effects, origin and drift") {
  const auto fit = two_block_fit(3, 8);
  const auto rwd = fit_rwd(extract_period_series(fit));
  auto perturbed = fit;
  for (std::size_t t = 0; t + 1 < perturbed.blocks[0].period_effects.size(); ++t) {
    perturbed.blocks[0].period_effects[t] += 0.37 * static_cast<double>(t + 1);
    perturbed.blocks[1].period_effects[t] -= 0.11;
  }
  const auto a = forecast_gap(fit, rwd, 10);
  const auto b = forecast_gap(perturbed, rwd, 10);
  CHECK(a.gap_forecast == b.gap_forecast);

  auto wrong = rwd;
  wrong.origin_year = 1999;
  CHECK_THROWS_AS(forecast_gap(fit, wrong, 3), std::invalid_argument);
}

TEST_CASE("exactly linear period effects are forecast without error") {
  constexpr std::size_t A = 4, T = 20, H = 15;
  const auto full_a = fixture::linear_block(A, T + H, 6e11, -0.3, -0.01);
  const auto full_b = fixture::linear_block(A, T + H, 2e11, -0.45, 0.01);
  const auto truth_a = intensity_surface(full_a, A, T + H);
  const auto truth_b = intensity_surface(full_b, A, T + H);
  std::vector<long long> ca, cb;
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t t = 0; t < T; ++t) {
      ca.push_back(std::llround(truth_a(a, t)));
      cb.push_back(std::llround(truth_b(a, t)));
    }
  }
  const auto fit = fit_double_poisson(fixture::make_panel(A, T, ca, cb));
  const auto fc = forecast_gap(fit, fit_rwd(extract_period_series(fit)), static_cast<int>(H));
  double worst = 0.0;
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t h = 0; h < H; ++h) {
      const double truth = truth_a(a, T + h) - truth_b(a, T + h);
      worst = std::max(worst, std::abs(fc.gap_forecast(a, h) - truth) / std::abs(truth));
    }
  }
  CHECK(worst < 1e-8);
}
