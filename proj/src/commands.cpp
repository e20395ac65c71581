#include "gapmort/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "gapmort/eval.hpp"
#include "gapmort/forecast.hpp"
#include "gapmort/report.hpp"
#include "gapmort/serialize.hpp"
#include "gapmort/sim.hpp"

namespace gapmort::cli {

std::pair<int, int> parse_window(const std::string &text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw UsageError("window '" + text + "' must look like START:END");
  }
  try {
    std::size_t u1 = 0, u2 = 0;
    const auto a = text.substr(0, colon);
    const auto b = text.substr(colon + 1);
    const int first = std::stoi(a, &u1);
    const int last = std::stoi(b, &u2);
    if (u1 != a.size() || u2 != b.size()) {
      throw std::invalid_argument("trailing characters");
    }
    if (first > last) {
      throw UsageError("window '" + text + "' is reversed");
    }
    return {first, last};
  } catch (const UsageError &) {
    throw;
  } catch (const std::exception &) {
    throw UsageError("window '" + text + "' must look like START:END");
  }
}

std::vector<ModelFamily> parse_models(const std::string &text) {
  std::vector<ModelFamily> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = csv::trim(tok);
    if (tok.empty()) {
      continue;
    }
    ModelFamily m;
    try {
      m = parse_model(tok);
    } catch (const std::invalid_argument &e) {
      throw UsageError(e.what());
    }
    if (std::find(out.begin(), out.end(), m) != out.end()) {
      throw UsageError("model '" + tok + "' listed twice");
    }
    out.push_back(m);
  }
  if (out.empty()) {
    throw UsageError("no models requested");
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (baseline.first > baseline.second || holdout.first > holdout.second) {
    throw UsageError("baseline and holdout windows must be START:END with START <= END");
  }
  if (holdout.first <= baseline.second) {
    throw UsageError("holdout " + std::to_string(holdout.first) + ":" +
                     std::to_string(holdout.second) + " overlaps or precedes baseline " +
                     std::to_string(baseline.first) + ":" + std::to_string(baseline.second));
  }
  if (baseline.second - baseline.first + 1 < 3) {
    throw UsageError("baseline needs at least 3 years for the random walk");
  }
  if (models.empty()) {
    throw UsageError("no models requested");
  }
  if (!(mape_min_abs >= 0.0)) {
    throw UsageError("mape-min-abs must be non-negative");
  }
}

void ExperimentConfig::validate_against(const MortalityPanel &panel) const {
  validate();
  const int lo = panel.years.front();
  const int hi = panel.years.back();
  auto inside = [&](std::pair<int, int> w) { return w.first >= lo && w.second <= hi; };
  if (!inside(baseline) || !inside(holdout)) {
    throw UsageError("windows must lie within the data years " + std::to_string(lo) + ":" +
                     std::to_string(hi));
  }
}

std::filesystem::path fit_path(const ExperimentConfig &cfg, ModelFamily m) {
  return cfg.out / ("fit_" + model_id(m) + ".txt");
}

std::filesystem::path forecast_path(const ExperimentConfig &cfg, ModelFamily m) {
  return cfg.out / ("forecast_" + model_id(m) + ".txt");
}

namespace {

MortalityPanel load_checked(const ExperimentConfig &cfg) {
  cfg.validate();
  auto panel = load_panel(cfg.data, cfg.schema);
  cfg.validate_against(panel);
  return panel;
}

std::ofstream open_output(const std::filesystem::path &path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

std::string window_text(std::pair<int, int> w) {
  return std::to_string(w.first) + "-" + std::to_string(w.second);
}

std::string config_title(const ExperimentConfig &cfg) {
  return "Estimation " + window_text(cfg.baseline) + ", holdout " + window_text(cfg.holdout) +
         ", ages " + (cfg.age_min ? *cfg.age_min + " and over" : std::string("all"));
}

FitResult load_fit_checked(const ExperimentConfig &cfg, ModelFamily m,
                           const MortalityPanel &window) {
  const auto path = fit_path(cfg, m);
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("missing fit file " + path.string() + " (run 'fit' first)");
  }
  auto fit = load_fit(path);
  if (fit.model != m || fit.years != window.years || fit.ages != window.ages) {
    throw std::runtime_error("fit file " + path.string() +
                             " was produced for a different model or window");
  }
  return fit;
}

ForecastResult load_forecast_checked(const ExperimentConfig &cfg, ModelFamily m,
                                     const MortalityPanel &holdout) {
  const auto path = forecast_path(cfg, m);
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("missing forecast file " + path.string() +
                             " (run 'forecast' first)");
  }
  auto fc = load_forecast(path);
  if (fc.model != m || fc.fit_first_year != cfg.baseline.first ||
      fc.fit_last_year != cfg.baseline.second || fc.horizon_years != holdout.years ||
      fc.ages != holdout.ages) {
    throw std::runtime_error("forecast file " + path.string() +
                             " does not match the fit window and holdout");
  }
  return fc;
}

} // namespace

int cmd_fit(const ExperimentConfig &cfg, std::ostream &log) {
  const auto panel = load_checked(cfg);
  const auto window = subset(panel, cfg.age_min, cfg.baseline);
  int status = kExitOk;
  for (auto m : cfg.models) {
    FitResult fit;
    switch (m) {
    case ModelFamily::DoublePoisson:
      fit = fit_double_poisson(window, cfg.optim);
      break;
    case ModelFamily::BivariatePoisson:
      fit = fit_bivariate_poisson(window, cfg.optim);
      break;
    case ModelFamily::Skellam:
      fit = fit_skellam(to_gap(window), cfg.optim);
      break;
    }
    save_fit(fit_path(cfg, m), fit);
    log << "fit " << model_id(m) << ": log_lik " << format_double(fit.log_lik)
        << ", iterations " << fit.iterations << (fit.converged ? "" : ", NOT converged")
        << '\n';
    for (const auto &note : fit.notes) {
      log << "  note: " << note << '\n';
    }
    if (!fit.converged) {
      status = kExitNotConverged;
    }
  }
  return status;
}

int cmd_forecast(const ExperimentConfig &cfg, std::ostream &log) {
  const auto panel = load_checked(cfg);
  const auto window = subset(panel, cfg.age_min, cfg.baseline);
  const int h = cfg.holdout.second - cfg.baseline.second;
  const int skip = cfg.holdout.first - cfg.baseline.second - 1;
  for (auto m : cfg.models) {
    const auto fit = load_fit_checked(cfg, m, window);
    const auto rwd = fit_rwd(extract_period_series(fit));
    auto fc = forecast_gap(fit, rwd, h);
    if (skip > 0) {
      const auto keep = static_cast<std::size_t>(h - skip);
      RealGrid g(fc.ages.size(), keep);
      for (std::size_t a = 0; a < fc.ages.size(); ++a) {
        for (std::size_t j = 0; j < keep; ++j) {
          g(a, j) = fc.gap_forecast(a, j + static_cast<std::size_t>(skip));
        }
      }
      fc.gap_forecast = std::move(g);
      fc.period_forecast = Eigen::Matrix2Xd(fc.period_forecast.rightCols(static_cast<Eigen::Index>(keep)));
      fc.horizon_years.erase(fc.horizon_years.begin(), fc.horizon_years.begin() + skip);
    }
    save_forecast(forecast_path(cfg, m), fc);
    log << "forecast " << model_id(m) << ": drift (" << format_double(rwd.drift[0]) << ", "
        << format_double(rwd.drift[1]) << "), horizon " << fc.horizon_years.front() << "-"
        << fc.horizon_years.back() << '\n';
  }
  return kExitOk;
}

int cmd_evaluate(const ExperimentConfig &cfg, std::ostream &log) {
  const auto panel = load_checked(cfg);
  const auto window = subset(panel, cfg.age_min, cfg.baseline);
  const auto holdout = subset(panel, cfg.age_min, cfg.holdout);
  const auto gap_in = to_gap(window);
  const auto gap_out = to_gap(holdout);

  std::vector<EvalReport> reports;
  std::vector<ForecastResult> forecasts;
  for (auto m : cfg.models) {
    const auto fit = load_fit_checked(cfg, m, window);
    forecasts.push_back(load_forecast_checked(cfg, m, holdout));
    reports.push_back(evaluate(fit, gap_in, &forecasts.back(), &gap_out, cfg.mape_min_abs));
  }

  std::vector<DmComparison> comparisons;
  const auto groups = five_year_age_groups(holdout.ages);
  auto find = [&](ModelFamily m) -> const ForecastResult * {
    for (std::size_t i = 0; i < cfg.models.size(); ++i) {
      if (cfg.models[i] == m) {
        return &forecasts[i];
      }
    }
    return nullptr;
  };
  std::vector<std::string> notes;
  if (const auto *sk = find(ModelFamily::Skellam)) {
    for (auto other : {ModelFamily::DoublePoisson, ModelFamily::BivariatePoisson}) {
      if (const auto *fo = find(other)) {
        comparisons.push_back({"Skellam vs " + model_name(other),
                               dm_by_age_group(gap_out, sk->gap_forecast, fo->gap_forecast,
                                               groups, &notes)});
      }
    }
  }

  const auto title = config_title(cfg);
  {
    auto out = open_output(cfg.out / "eval_rows.csv");
    write_eval_rows(out, reports);
  }
  {
    auto out = open_output(cfg.out / "eval_table.txt");
    render_eval_table(out, reports, title);
  }
  render_eval_table(log, reports, title);
  if (!comparisons.empty()) {
    {
      auto out = open_output(cfg.out / "dm_rows.csv");
      write_dm_rows(out, comparisons);
    }
    auto out = open_output(cfg.out / "dm_table.txt");
    render_dm_table(out, comparisons, "Diebold-Mariano statistics, " + title);
    log << '\n';
    render_dm_table(log, comparisons, "Diebold-Mariano statistics, " + title);
  }
  for (const auto &n : notes) {
    log << "note: " << n << '\n';
  }
  return kExitOk;
}

int cmd_plot_data(const ExperimentConfig &cfg, std::ostream &log) {
  const auto panel = load_checked(cfg);
  const auto window = subset(panel, cfg.age_min, cfg.baseline);
  const auto holdout = subset(panel, cfg.age_min, cfg.holdout);
  const auto gap_in = to_gap(window);
  const auto gap_out = to_gap(holdout);
  auto heat = open_output(cfg.out / "plot_heatmap.csv");
  auto scatter = open_output(cfg.out / "plot_fit.csv");
  heat << "model,age,year,rmse\n";
  scatter << "model,age,year,observed_gap,fitted_gap,phase\n";
  std::size_t heat_rows = 0;
  for (auto m : cfg.models) {
    const auto fit = load_fit_checked(cfg, m, window);
    const auto fc = load_forecast_checked(cfg, m, holdout);
    const auto id = model_id(m);
    for (std::size_t a = 0; a < holdout.ages.size(); ++a) {
      for (std::size_t t = 0; t < holdout.years.size(); ++t) {
        const double e = fc.gap_forecast(a, t) - static_cast<double>(gap_out.gaps(a, t));
        heat << id << ',' << holdout.ages[a] << ',' << holdout.years[t] << ','
             << format_double(std::sqrt(e * e)) << '\n';
        ++heat_rows;
      }
    }
    for (std::size_t a = 0; a < window.ages.size(); ++a) {
      for (std::size_t t = 0; t < window.years.size(); ++t) {
        scatter << id << ',' << window.ages[a] << ',' << window.years[t] << ','
                << gap_in.gaps(a, t) << ',' << format_double(fit.fitted_gap(a, t)) << ",in\n";
      }
      for (std::size_t t = 0; t < holdout.years.size(); ++t) {
        scatter << id << ',' << holdout.ages[a] << ',' << holdout.years[t] << ','
                << gap_out.gaps(a, t) << ',' << format_double(fc.gap_forecast(a, t))
                << ",out\n";
      }
    }
  }
  log << "plot data: " << heat_rows << " heatmap rows\n";
  return kExitOk;
}

int cmd_run(const ExperimentConfig &cfg, std::ostream &log) {
  const int fit_status = cmd_fit(cfg, log);
  cmd_forecast(cfg, log);
  cmd_evaluate(cfg, log);
  cmd_plot_data(cfg, log);
  return fit_status;
}

int cmd_simulate(const std::filesystem::path &spec_path, std::optional<std::uint64_t> seed,
                 const std::filesystem::path &out_csv, const PanelSchema &schema,
                 std::ostream &log) {
  auto spec = SimSpec::load(spec_path);
  if (seed) {
    spec.seed = *seed;
  }
  const auto panel = simulate_panel(spec);
  if (out_csv.has_parent_path()) {
    std::filesystem::create_directories(out_csv.parent_path());
  }
  std::ofstream out(out_csv);
  if (!out) {
    throw std::runtime_error("cannot write " + out_csv.string());
  }
  write_panel(out, panel, schema);
  log << "simulated " << panel.n_ages() << " ages x " << panel.n_years() << " years ("
      << model_name(spec.family) << ", seed " << spec.seed << ") to " << out_csv.string()
      << '\n';
  return kExitOk;
}

std::vector<std::pair<int, int>> default_grid_baselines() {
  return {{1961, 2000}, {1971, 2000}, {1981, 2000}};
}

int cmd_grid(const ExperimentConfig &cfg, const std::vector<std::pair<int, int>> &baselines,
             const std::vector<std::optional<std::string>> &age_ranges, std::ostream &log) {
  int status = kExitOk;
  std::ostringstream tables;
  for (const auto &ages : age_ranges) {
    for (const auto &b : baselines) {
      ExperimentConfig sub = cfg;
      sub.baseline = b;
      sub.age_min = ages;
      sub.out = cfg.out / (window_text(b) + "_" + (ages ? "from_" + *ages : "all_ages"));
      log << "== " << config_title(sub) << '\n';
      status = std::max(status, cmd_run(sub, log));
      for (const auto *name : {"eval_table.txt", "dm_table.txt"}) {
        std::ifstream in(sub.out / name);
        if (in) {
          tables << in.rdbuf() << '\n';
        }
      }
      log << '\n';
    }
  }
  auto out = open_output(cfg.out / "grid_tables.txt");
  out << tables.str();
  return status;
}

} // namespace gapmort::cli
