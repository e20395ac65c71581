#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gapmort/fit.hpp"
#include "gapmort/panel.hpp"

namespace gapmort::cli {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

/// Invalid command-line input or configuration.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// "1961:2000" -> {1961, 2000}.
std::pair<int, int> parse_window(const std::string &text);
/// "skellam,dp,bp" in any order; duplicates rejected.
std::vector<ModelFamily> parse_models(const std::string &text);

struct ExperimentConfig {
  std::filesystem::path data;
  PanelSchema schema;
  std::pair<int, int> baseline{1961, 2000};
  std::pair<int, int> holdout{2001, 2015};
  /// Lowest age group included; all ages when unset.
  std::optional<std::string> age_min;
  std::vector<ModelFamily> models{ModelFamily::Skellam, ModelFamily::DoublePoisson,
                                  ModelFamily::BivariatePoisson};
  double mape_min_abs = 1.0;
  OptimSettings optim;
  std::filesystem::path out = "results";

  /// Baseline must end before the holdout starts; throws UsageError.
  void validate() const;
  /// Both windows must lie inside the panel's years; throws UsageError.
  void validate_against(const MortalityPanel &panel) const;
};

std::filesystem::path fit_path(const ExperimentConfig &cfg, ModelFamily m);
std::filesystem::path forecast_path(const ExperimentConfig &cfg, ModelFamily m);

/// Fits every requested model on the baseline window and writes one fit file
/// per model. Returns kExitNotConverged if any model failed to converge.
int cmd_fit(const ExperimentConfig &cfg, std::ostream &log);
/// Random-walk forecasts of each fit over the holdout window.
int cmd_forecast(const ExperimentConfig &cfg, std::ostream &log);
/// Criteria tables and Diebold-Mariano tables from the fit and forecast files.
int cmd_evaluate(const ExperimentConfig &cfg, std::ostream &log);
/// Heatmap and observed-versus-fitted rows for plotting.
int cmd_plot_data(const ExperimentConfig &cfg, std::ostream &log);
/// fit, forecast, evaluate and plot-data in sequence.
int cmd_run(const ExperimentConfig &cfg, std::ostream &log);

/// Writes a simulated panel in the schema's CSV layout.
int cmd_simulate(const std::filesystem::path &spec_path, std::optional<std::uint64_t> seed,
                 const std::filesystem::path &out_csv, const PanelSchema &schema,
                 std::ostream &log);

/// Default estimation windows of the experiment grid.
std::vector<std::pair<int, int>> default_grid_baselines();

/// Runs every baseline x age-range configuration into its own subdirectory
/// of cfg.out and collects all tables into grid_tables.txt.
int cmd_grid(const ExperimentConfig &cfg, const std::vector<std::pair<int, int>> &baselines,
             const std::vector<std::optional<std::string>> &age_ranges, std::ostream &log);

} // namespace gapmort::cli
