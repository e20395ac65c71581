#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gapmort/fit.hpp"

namespace gapmort {

/// Period effects of the two blocks of a fit, one row per block, with the
/// reference year included as a leading zero.
struct PeriodSeries {
  std::vector<int> years;
  std::array<std::string, 2> labels{"A", "B"};
  Eigen::Matrix2Xd values;
};

/// Bivariate random walk with drift fitted to a PeriodSeries.
struct RwdModel {
  Eigen::Vector2d drift = Eigen::Vector2d::Zero();
  Eigen::Matrix2d noise_cov = Eigen::Matrix2d::Zero();
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  int origin_year = 0;
  std::array<std::string, 2> labels{"A", "B"};
};

struct ForecastResult {
  ModelFamily model = ModelFamily::Skellam;
  /// Estimation window of the fit the forecast was built from.
  int fit_first_year = 0;
  int fit_last_year = 0;
  std::vector<std::string> ages;
  std::vector<int> horizon_years;
  RealGrid gap_forecast; // ages x horizons
  Eigen::Matrix2Xd period_forecast;
  RwdModel rwd;
};

PeriodSeries extract_period_series(const FitResult &fit);

/// Drift is the mean first difference; the covariance uses denominator T - 2.
/// Needs at least three years.
RwdModel fit_rwd(const PeriodSeries &series);

/// Column j - 1 holds origin + drift * j for j = 1..h.
Eigen::Matrix2Xd forecast_period(const RwdModel &model, int h);

/// Gap surface obtained by combining the fit's intercepts and age effects
/// with the given period-effect columns.
RealGrid reconstruct_gap(const FitResult &fit, const Eigen::Matrix2Xd &period);

ForecastResult forecast_gap(const FitResult &fit, const RwdModel &rwd, int h);

} // namespace gapmort
