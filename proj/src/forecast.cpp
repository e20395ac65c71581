#include "gapmort/forecast.hpp"

#include <cmath>
#include <stdexcept>

namespace gapmort {

PeriodSeries extract_period_series(const FitResult &fit) {
  if (fit.blocks.size() < 2) {
    throw std::invalid_argument("fit has fewer than two parameter blocks");
  }
  PeriodSeries s;
  s.years = fit.years;
  s.labels = fit.block_names();
  const auto nt = fit.years.size();
  s.values.resize(2, static_cast<Eigen::Index>(nt));
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t t = 0; t < nt; ++t) {
      s.values(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(t)) =
          fit.blocks[b].period_effect(t);
    }
  }
  return s;
}

RwdModel fit_rwd(const PeriodSeries &series) {
  const auto nt = series.values.cols();
  if (nt < 3) {
    throw std::invalid_argument("random walk needs at least 3 years, got " +
                                std::to_string(nt));
  }
  if (!series.values.allFinite()) {
    throw std::invalid_argument("period series has non-finite values");
  }
  const Eigen::Matrix2Xd diffs =
      series.values.rightCols(nt - 1) - series.values.leftCols(nt - 1);
  RwdModel m;
  m.labels = series.labels;
  m.drift = diffs.rowwise().mean();
  const Eigen::Matrix2Xd centered = diffs.colwise() - m.drift;
  m.noise_cov = centered * centered.transpose() / static_cast<double>(nt - 2);
  m.noise_cov(1, 0) = m.noise_cov(0, 1);
  m.origin = series.values.col(nt - 1);
  m.origin_year = series.years.empty() ? 0 : series.years.back();
  return m;
}

Eigen::Matrix2Xd forecast_period(const RwdModel &model, int h) {
  if (h < 1) {
    throw std::invalid_argument("forecast horizon must be at least 1");
  }
  Eigen::Matrix2Xd out(2, h);
  for (int j = 1; j <= h; ++j) {
    out.col(j - 1) = model.origin + model.drift * static_cast<double>(j);
  }
  return out;
}

RealGrid reconstruct_gap(const FitResult &fit, const Eigen::Matrix2Xd &period) {
  if (fit.blocks.size() < 2) {
    throw std::invalid_argument("fit has fewer than two parameter blocks");
  }
  const auto na = fit.ages.size();
  const auto nh = static_cast<std::size_t>(period.cols());
  RealGrid gap(na, nh);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t j = 0; j < nh; ++j) {
      double lam[2];
      for (std::size_t b = 0; b < 2; ++b) {
        const auto &p = fit.blocks[b];
        const double eta = p.intercept + p.age_effect(a) +
                           period(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
        if (!(eta <= kMaxLinearPredictor)) {
          throw OverflowError("forecast linear predictor " + format_double(eta) +
                              " overflows at age " + fit.ages[a]);
        }
        lam[b] = std::exp(eta);
      }
      gap(a, j) = lam[0] - lam[1];
    }
  }
  return gap;
}

ForecastResult forecast_gap(const FitResult &fit, const RwdModel &rwd, int h) {
  if (!fit.years.empty() && rwd.origin_year != fit.years.back()) {
    throw std::invalid_argument("random walk origin year " +
                                std::to_string(rwd.origin_year) +
                                " does not match the fit's last year " +
                                std::to_string(fit.years.back()));
  }
  ForecastResult r;
  r.model = fit.model;
  r.fit_first_year = fit.years.front();
  r.fit_last_year = fit.years.back();
  r.ages = fit.ages;
  r.rwd = rwd;
  r.period_forecast = forecast_period(rwd, h);
  for (int j = 1; j <= h; ++j) {
    r.horizon_years.push_back(rwd.origin_year + j);
  }
  r.gap_forecast = reconstruct_gap(fit, r.period_forecast);
  return r;
}

} // namespace gapmort
