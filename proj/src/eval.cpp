#include "gapmort/eval.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

namespace gapmort {

InformationCriteria information_criteria(double log_lik, int p, int n) {
  if (p < 0 || n < 0) {
    throw std::invalid_argument("parameter and observation counts must be non-negative");
  }
  InformationCriteria ic;
  const double pd = p;
  ic.aic = 2.0 * pd - 2.0 * log_lik;
  if (n > p + 1) {
    ic.aicc = ic.aic + (2.0 * pd * pd + 2.0 * pd) / static_cast<double>(n - p - 1);
  }
  ic.bic = (p == 0 ? 0.0 : pd * std::log(static_cast<double>(n))) - 2.0 * log_lik;
  return ic;
}

ErrorMetrics error_metrics(std::span<const double> actual,
                           std::span<const double> predicted, double mape_min_abs) {
  if (actual.size() != predicted.size()) {
    throw std::invalid_argument("actual and predicted values are not aligned");
  }
  ErrorMetrics m;
  m.cells = static_cast<int>(actual.size());
  if (actual.empty()) {
    throw std::invalid_argument("no cells to score");
  }
  double sq = 0.0, ab = 0.0, pct = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = predicted[i] - actual[i];
    sq += e * e;
    ab += std::abs(e);
    if (std::abs(actual[i]) >= mape_min_abs && actual[i] != 0.0) {
      pct += std::abs(e) / std::abs(actual[i]);
      ++used;
    } else {
      ++m.excluded;
    }
  }
  const double n = static_cast<double>(actual.size());
  m.rmse = std::sqrt(sq / n);
  m.mae = ab / n;
  if (used > 0) {
    m.mape = 100.0 * pct / static_cast<double>(used);
  }
  return m;
}

ErrorMetrics error_metrics(const RealGrid &actual, const RealGrid &predicted,
                           double mape_min_abs) {
  if (!actual.same_shape(predicted)) {
    throw std::invalid_argument("actual and predicted grids differ in shape");
  }
  return error_metrics(std::span<const double>(actual.values()),
                       std::span<const double>(predicted.values()), mape_min_abs);
}

std::string stars(Significance s) {
  switch (s) {
  case Significance::Level5:
    return "*";
  case Significance::Level1:
    return "**";
  case Significance::Level01:
    return "***";
  case Significance::None:
    break;
  }
  return "";
}

Significance significance_for(double p_value) {
  if (!(p_value < 0.05)) {
    return Significance::None;
  }
  if (p_value < 0.001) {
    return Significance::Level01;
  }
  return p_value < 0.01 ? Significance::Level1 : Significance::Level5;
}

DmResult dm_test(std::span<const double> errors_1, std::span<const double> errors_2) {
  if (errors_1.size() != errors_2.size()) {
    throw std::invalid_argument("error series differ in length");
  }
  if (errors_1.size() < 2) {
    throw std::invalid_argument("DM test needs at least two observations");
  }
  const std::size_t n = errors_1.size();
  std::vector<double> d(n);
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    d[t] = errors_1[t] * errors_1[t] - errors_2[t] * errors_2[t];
    sum += d[t];
  }
  DmResult r;
  r.n = static_cast<int>(n);
  const double nd = static_cast<double>(n);
  r.mean_differential = sum / nd;
  double ss = 0.0;
  for (double v : d) {
    ss += (v - r.mean_differential) * (v - r.mean_differential);
  }
  const double s = ss / (nd - 1.0);
  if (s == 0.0) {
    r.degenerate = true;
    r.p_value = std::numeric_limits<double>::quiet_NaN();
    if (r.mean_differential == 0.0) {
      r.statistic = std::numeric_limits<double>::quiet_NaN();
      r.note = "degenerate: identical losses";
    } else {
      r.statistic = std::copysign(std::numeric_limits<double>::infinity(),
                                  r.mean_differential);
      r.note = r.mean_differential > 0.0
                   ? "degenerate: constant loss differential (first model worse)"
                   : "degenerate: constant loss differential (first model better)";
    }
    return r;
  }
  r.statistic = r.mean_differential / std::sqrt(s / nd);
  r.p_value = std::erfc(std::abs(r.statistic) / std::numbers::sqrt2);
  r.significance = significance_for(r.p_value);
  return r;
}

std::vector<AgeGroup> five_year_age_groups(const std::vector<std::string> &ages) {
  std::map<int, AgeGroup> keyed;
  for (const auto &label : ages) {
    const int key = age_lower_bound(label) / 5 * 5;
    keyed[key].ages.push_back(label);
  }
  std::vector<AgeGroup> out;
  for (auto &[key, g] : keyed) {
    if (g.ages.size() == 1) {
      g.label = g.ages.front();
    } else if (g.ages.back().ends_with('+')) {
      g.label = std::to_string(key) + "+";
    } else {
      g.label = std::to_string(key) + "-" + std::to_string(key + 4);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<DmResult> dm_by_age_group(const GapPanel &actual,
                                      const RealGrid &forecast_1,
                                      const RealGrid &forecast_2,
                                      const std::vector<AgeGroup> &groups,
                                      std::vector<std::string> *notes) {
  const auto na = actual.n_ages();
  const auto nt = actual.n_years();
  if (forecast_1.rows() != na || forecast_1.cols() != nt || !forecast_1.same_shape(forecast_2)) {
    throw std::invalid_argument("forecast grids do not match the holdout panel");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t a = 0; a < na; ++a) {
    index[actual.ages[a]] = a;
  }
  std::vector<DmResult> out;
  for (const auto &g : groups) {
    std::vector<std::size_t> rows;
    for (const auto &label : g.ages) {
      if (auto it = index.find(label); it != index.end()) {
        rows.push_back(it->second);
      }
    }
    if (rows.empty()) {
      if (notes) {
        notes->push_back("age group " + g.label + " has no ages in the panel; skipped");
      }
      continue;
    }
    std::vector<double> e1(nt, 0.0);
    std::vector<double> e2(nt, 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
      double obs = 0.0, f1 = 0.0, f2 = 0.0;
      for (auto a : rows) {
        obs += static_cast<double>(actual.gaps(a, t));
        f1 += forecast_1(a, t);
        f2 += forecast_2(a, t);
      }
      e1[t] = f1 - obs;
      e2[t] = f2 - obs;
    }
    auto r = dm_test(e1, e2);
    r.age_group = g.label;
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

void check_power_means(const ErrorMetrics &m, const char *what) {
  if (m.rmse < m.mae * (1.0 - 1e-12)) {
    throw std::logic_error(std::string(what) + " RMSE below MAE");
  }
}

} // namespace

EvalReport evaluate(const FitResult &fit, const GapPanel &in_sample,
                    const ForecastResult *forecast, const GapPanel *holdout,
                    double mape_min_abs) {
  if (in_sample.ages != fit.ages || in_sample.years != fit.years) {
    throw std::invalid_argument("in-sample gap panel does not match the fit window");
  }
  EvalReport r;
  r.model = fit.model;
  r.log_lik = fit.log_lik;
  r.n_params = fit.n_params;
  r.criteria = information_criteria(fit.log_lik, fit.n_params, fit.n_obs);
  r.in_sample = error_metrics(grid_cast<double>(in_sample.gaps), fit.fitted_gap, mape_min_abs);
  check_power_means(r.in_sample, "in-sample");
  r.cells_used = r.in_sample.cells;
  r.mape_excluded_cells = r.in_sample.excluded;
  if (forecast != nullptr || holdout != nullptr) {
    if (forecast == nullptr || holdout == nullptr) {
      throw std::invalid_argument("out-of-sample scoring needs both a forecast and holdout data");
    }
    if (holdout->ages != forecast->ages || holdout->years != forecast->horizon_years) {
      throw std::invalid_argument("forecast horizon does not match the holdout panel");
    }
    r.out_of_sample = error_metrics(grid_cast<double>(holdout->gaps),
                                    forecast->gap_forecast, mape_min_abs);
    check_power_means(*r.out_of_sample, "out-of-sample");
    r.cells_used += r.out_of_sample->cells;
    r.mape_excluded_cells += r.out_of_sample->excluded;
  }
  return r;
}

} // namespace gapmort
