#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gapmort/commands.hpp"

namespace {

using gapmort::cli::ExperimentConfig;

struct Options {
  std::string data;
  std::string schema;
  std::string baseline = "1961:2000";
  std::string holdout = "2001:2015";
  std::string age_min;
  std::string models = "skellam,dp,bp";
  std::string out = "results";
  double mape_min_abs = 1.0;
  int max_iterations = 2000;
  double gradient_tolerance = 1e-6;
};

void add_experiment_flags(CLI::App *cmd, Options &o, bool needs_windows = true) {
  cmd->add_option("--data", o.data, "panel CSV in long format")->required();
  cmd->add_option("--schema", o.schema,
                  "column mapping, e.g. age=Age,year=Year,population=Cause,count=Deaths");
  if (needs_windows) {
    cmd->add_option("--baseline", o.baseline, "estimation window START:END");
  }
  cmd->add_option("--holdout", o.holdout, "holdout window START:END");
  cmd->add_option("--age-min", o.age_min, "lowest age group to include (label)");
  cmd->add_option("--models", o.models, "comma-separated subset of skellam,dp,bp");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--mape-min-abs", o.mape_min_abs,
                  "cells with |observed gap| below this are left out of MAPE");
  cmd->add_option("--max-iterations", o.max_iterations, "quasi-Newton iteration cap");
  cmd->add_option("--gradient-tolerance", o.gradient_tolerance,
                  "quasi-Newton gradient sup-norm tolerance");
}

ExperimentConfig make_config(const Options &o) {
  ExperimentConfig cfg;
  cfg.data = o.data;
  if (!o.schema.empty()) {
    cfg.schema = gapmort::PanelSchema::parse(o.schema);
  }
  cfg.baseline = gapmort::cli::parse_window(o.baseline);
  cfg.holdout = gapmort::cli::parse_window(o.holdout);
  if (!o.age_min.empty()) {
    cfg.age_min = o.age_min;
  }
  cfg.models = gapmort::cli::parse_models(o.models);
  cfg.mape_min_abs = o.mape_min_abs;
  cfg.optim.max_iterations = o.max_iterations;
  cfg.optim.gradient_tolerance = o.gradient_tolerance;
  cfg.out = o.out;
  cfg.validate();
  return cfg;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Age-period models for death-count gaps between two populations"};
  app.require_subcommand(1);

  Options o;
  auto *fit = app.add_subcommand("fit", "fit the requested models on the baseline window");
  auto *forecast = app.add_subcommand("forecast", "forecast the holdout window from saved fits");
  auto *evaluate = app.add_subcommand("evaluate", "criteria and Diebold-Mariano tables");
  auto *plot = app.add_subcommand("plot-data", "heatmap and fitted-gap rows for plotting");
  auto *run = app.add_subcommand("run", "fit, forecast, evaluate and plot-data in one go");
  for (auto *cmd : {fit, forecast, evaluate, plot, run}) {
    add_experiment_flags(cmd, o);
  }

  auto *grid = app.add_subcommand("grid", "all baseline x age-range configurations");
  add_experiment_flags(grid, o, false);
  std::string grid_age = "40";
  grid->add_option("--grid-age-min", grid_age,
                   "age label of the restricted age range (the other range is all ages)");

  std::string spec_path;
  std::string sim_out = "panel.csv";
  std::string sim_schema;
  long long seed = -1;
  auto *simulate = app.add_subcommand("simulate", "generate a synthetic panel from a spec file");
  simulate->add_option("--spec", spec_path, "simulation spec file")->required();
  simulate->add_option("--seed", seed, "override the spec's seed");
  simulate->add_option("--out", sim_out, "output CSV path");
  simulate->add_option("--schema", sim_schema, "column names for the output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == static_cast<int>(CLI::ExitCodes::Success) ? gapmort::cli::kExitOk
                                                              : gapmort::cli::kExitError;
  }

  try {
    if (simulate->parsed()) {
      const auto schema = sim_schema.empty() ? gapmort::PanelSchema{}
                                             : gapmort::PanelSchema::parse(sim_schema);
      std::optional<std::uint64_t> s;
      if (seed >= 0) {
        s = static_cast<std::uint64_t>(seed);
      }
      return gapmort::cli::cmd_simulate(spec_path, s, sim_out, schema, std::cout);
    }
    if (grid->parsed()) {
      o.baseline = "1961:2000";
      auto cfg = make_config(o);
      return gapmort::cli::cmd_grid(cfg, gapmort::cli::default_grid_baselines(),
                                    {std::nullopt, grid_age}, std::cout);
    }
    const auto cfg = make_config(o);
    if (fit->parsed()) {
      return gapmort::cli::cmd_fit(cfg, std::cout);
    }
    if (forecast->parsed()) {
      return gapmort::cli::cmd_forecast(cfg, std::cout);
    }
    if (evaluate->parsed()) {
      return gapmort::cli::cmd_evaluate(cfg, std::cout);
    }
    if (plot->parsed()) {
      return gapmort::cli::cmd_plot_data(cfg, std::cout);
    }
    return gapmort::cli::cmd_run(cfg, std::cout);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return gapmort::cli::kExitError;
  }
}
