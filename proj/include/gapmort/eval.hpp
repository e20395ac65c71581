#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gapmort/fit.hpp"
#include "gapmort/forecast.hpp"
#include "gapmort/panel.hpp"

namespace gapmort {

struct InformationCriteria {
  double aic = 0.0;
  /// Absent when n <= p + 1.
  std::optional<double> aicc;
  double bic = 0.0;
};

InformationCriteria information_criteria(double log_lik, int p, int n);

struct ErrorMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  /// Percent; absent when every cell was excluded.
  std::optional<double> mape;
  int cells = 0;
  /// Cells left out of MAPE because |actual| < mape_min_abs.
  int excluded = 0;
};

inline constexpr double kDefaultMapeMinAbs = 1.0;

ErrorMetrics error_metrics(std::span<const double> actual,
                           std::span<const double> predicted,
                           double mape_min_abs = kDefaultMapeMinAbs);
ErrorMetrics error_metrics(const RealGrid &actual, const RealGrid &predicted,
                           double mape_min_abs = kDefaultMapeMinAbs);

enum class Significance { None, Level5, Level1, Level01 };

/// "", "*", "**", "***".
std::string stars(Significance s);
Significance significance_for(double p_value);

struct DmResult {
  std::string age_group;
  /// d-bar / sqrt(s / N); +-inf when the loss differential is constant and
  /// nonzero, NaN when the losses are identical.
  double statistic = 0.0;
  double p_value = 1.0;
  int n = 0;
  Significance significance = Significance::None;
  double mean_differential = 0.0;
  bool degenerate = false;
  std::string note;
};

/// Diebold-Mariano test on squared-error loss, d_t = e1_t^2 - e2_t^2.
DmResult dm_test(std::span<const double> errors_1, std::span<const double> errors_2);

struct AgeGroup {
  std::string label;
  std::vector<std::string> ages;
};

/// Five-year groups keyed on the lower bound of each age label.
std::vector<AgeGroup> five_year_age_groups(const std::vector<std::string> &ages);

/// Per-group DM tests on holdout errors of two gap forecasts. Ages of a
/// group are summed per year before errors are taken. Groups without ages
/// in the panel are skipped and reported in `notes`.
std::vector<DmResult> dm_by_age_group(const GapPanel &actual,
                                      const RealGrid &forecast_1,
                                      const RealGrid &forecast_2,
                                      const std::vector<AgeGroup> &groups,
                                      std::vector<std::string> *notes = nullptr);

struct EvalReport {
  ModelFamily model = ModelFamily::Skellam;
  double log_lik = 0.0;
  int n_params = 0;
  InformationCriteria criteria;
  ErrorMetrics in_sample;
  std::optional<ErrorMetrics> out_of_sample;
  int cells_used = 0;
  int mape_excluded_cells = 0;
};

/// Scores a fit on its own window and, when given, a forecast on the
/// holdout gaps. Throws std::logic_error if RMSE < MAE on either part.
EvalReport evaluate(const FitResult &fit, const GapPanel &in_sample,
                    const ForecastResult *forecast = nullptr,
                    const GapPanel *holdout = nullptr,
                    double mape_min_abs = kDefaultMapeMinAbs);

} // namespace gapmort
