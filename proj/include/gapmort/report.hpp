#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gapmort/eval.hpp"

namespace gapmort {

/// Column order of the criteria table: in-sample BIC, AIC, AICc, RMSE, MAE,
/// MAPE, then out-of-sample RMSE, MAE, MAPE.
inline constexpr const char *kCriteriaColumns[] = {"BIC",  "AIC",      "AICc",
                                                   "RMSE", "MAE",      "MAPE",
                                                   "RMSE", "MAE",      "MAPE"};

/// The nine criteria of a report in table order; missing values are NaN.
std::vector<double> criteria_values(const EvalReport &r);

/// Rank annotation per model and column: 1 for the smallest value, 2 for the
/// next, 0 otherwise. Ties share a rank.
std::vector<std::vector<int>> criteria_ranks(const std::vector<EvalReport> &reports);

/// One machine-readable row per model.
void write_eval_rows(std::ostream &out, const std::vector<EvalReport> &reports);

/// Aligned table with "(1st)"/"(2nd)" markers standing in for bold/underline.
void render_eval_table(std::ostream &out, const std::vector<EvalReport> &reports,
                       const std::string &title);

struct DmComparison {
  std::string label; // e.g. "Skellam vs Double Poisson"
  std::vector<DmResult> results;
};

void write_dm_rows(std::ostream &out, const std::vector<DmComparison> &comparisons);

/// Age groups down, comparisons across; statistics carry "*", "**", "***"
/// for two-sided significance at 5%, 1% and 0.1%.
void render_dm_table(std::ostream &out, const std::vector<DmComparison> &comparisons,
                     const std::string &title);

/// Statistic with its stars, or "degenerate" / "identical".
std::string format_dm_cell(const DmResult &r);

} // namespace gapmort
