#include "gapmort/serialize.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "gapmort/panel.hpp"

namespace gapmort {

namespace {

constexpr const char *kFitMagic = "# gapmort fit v1";
constexpr const char *kForecastMagic = "# gapmort forecast v1";

std::string join(const std::vector<std::string> &items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) {
      out.push_back(sep);
    }
    out += items[i];
  }
  return out;
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) {
    out.push_back(tok);
  }
  return out;
}

std::string quote(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') {
      out.push_back('"');
    }
    out.push_back(c);
  }
  return out + "\"";
}

std::string num(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  return format_double(x);
}

double parse_num(const std::string &s) {
  if (s == "nan") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (s == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (s == "-inf") {
    return -std::numeric_limits<double>::infinity();
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    throw FormatError("not a number: '" + s + "'");
  }
  if (used != s.size()) {
    throw FormatError("not a number: '" + s + "'");
  }
  return v;
}

int parse_int(const std::string &s) {
  const double v = parse_num(s);
  if (v != std::floor(v)) {
    throw FormatError("not an integer: '" + s + "'");
  }
  return static_cast<int>(v);
}

ModelFamily parse_model_field(const std::string &s) {
  try {
    return parse_model(s);
  } catch (const std::invalid_argument &e) {
    throw FormatError(e.what());
  }
}

std::vector<int> parse_years(const std::string &s) {
  std::vector<int> out;
  for (const auto &tok : split(s, ';')) {
    out.push_back(parse_int(tok));
  }
  return out;
}

std::string join_years(const std::vector<int> &years) {
  std::vector<std::string> s;
  for (int y : years) {
    s.push_back(std::to_string(y));
  }
  return join(s, ';');
}

/// Artifact file split into named sections of CSV rows.
struct Sections {
  std::map<std::string, std::vector<std::vector<std::string>>> rows;
  std::map<std::string, std::multimap<std::string, std::string>> keys;

  const std::vector<std::vector<std::string>> &table(const std::string &name) const {
    auto it = rows.find(name);
    if (it == rows.end()) {
      throw FormatError("missing section [" + name + "]");
    }
    return it->second;
  }

  std::string value(const std::string &section, const std::string &key) const {
    auto s = keys.find(section);
    if (s == keys.end()) {
      throw FormatError("missing section [" + section + "]");
    }
    auto it = s->second.find(key);
    if (it == s->second.end()) {
      throw FormatError("missing key '" + key + "' in [" + section + "]");
    }
    return it->second;
  }

  std::vector<std::string> values(const std::string &section, const std::string &key) const {
    std::vector<std::string> out;
    auto s = keys.find(section);
    if (s != keys.end()) {
      auto [lo, hi] = s->second.equal_range(key);
      for (auto it = lo; it != hi; ++it) {
        out.push_back(it->second);
      }
    }
    return out;
  }
};

Sections read_sections(std::istream &in, const char *magic) {
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != magic) {
    throw FormatError(std::string("expected header '") + magic + "'");
  }
  Sections s;
  std::string current;
  bool header_pending = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[' && line.back() == ']') {
      current = line.substr(1, line.size() - 2);
      s.rows[current];
      s.keys[current];
      header_pending = true;
      continue;
    }
    if (current.empty()) {
      throw FormatError("content before the first section");
    }
    auto fields = csv::split_line(line);
    if (header_pending) {
      header_pending = false;
      // tables start with a column header; key-value sections do not
      if (fields.size() >= 2 && (fields[0] == "block" || fields[0] == "iteration" ||
                                 fields[0] == "age" || fields[0] == "year")) {
        continue;
      }
    }
    if (fields.size() == 2) {
      s.keys[current].emplace(fields[0], fields[1]);
    }
    s.rows[current].push_back(std::move(fields));
  }
  return s;
}

RealGrid read_cells(const std::vector<std::vector<std::string>> &rows,
                    const std::vector<std::string> &ages, const std::vector<int> &years,
                    const std::string &what) {
  std::map<std::string, std::size_t> ai;
  for (std::size_t a = 0; a < ages.size(); ++a) {
    ai[ages[a]] = a;
  }
  std::map<int, std::size_t> ti;
  for (std::size_t t = 0; t < years.size(); ++t) {
    ti[years[t]] = t;
  }
  RealGrid g(ages.size(), years.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto &r : rows) {
    if (r.size() != 3) {
      throw FormatError("[" + what + "] rows need age,year,value");
    }
    auto a = ai.find(r[0]);
    auto t = ti.find(parse_int(r[1]));
    if (a == ai.end() || t == ti.end()) {
      throw FormatError("[" + what + "] cell (" + r[0] + ", " + r[1] + ") outside the grid");
    }
    g(a->second, t->second) = parse_num(r[2]);
  }
  for (double v : g.values()) {
    if (std::isnan(v)) {
      throw FormatError("[" + what + "] is missing cells");
    }
  }
  return g;
}

void write_cells(std::ostream &out, const RealGrid &g, const std::vector<std::string> &ages,
                 const std::vector<int> &years) {
  out << "age,year,value\n";
  for (std::size_t a = 0; a < ages.size(); ++a) {
    for (std::size_t t = 0; t < years.size(); ++t) {
      out << quote(ages[a]) << ',' << years[t] << ',' << num(g(a, t)) << '\n';
    }
  }
}

} // namespace

void write_fit(std::ostream &out, const FitResult &fit) {
  out << kFitMagic << "\n[fit]\n";
  out << "model," << model_id(fit.model) << '\n';
  out << "ages," << quote(join(fit.ages, ';')) << '\n';
  out << "years," << join_years(fit.years) << '\n';
  out << "n_obs," << fit.n_obs << '\n';
  out << "n_params," << fit.n_params << '\n';
  out << "log_lik," << num(fit.log_lik) << '\n';
  if (fit.log_common_rate) {
    out << "log_common_rate," << num(*fit.log_common_rate) << '\n';
  }
  out << "converged," << (fit.converged ? "true" : "false") << '\n';
  out << "iterations," << fit.iterations << '\n';
  for (const auto &n : fit.notes) {
    out << "note," << quote(n) << '\n';
  }
  out << "\n[params]\nblock,label,value\n";
  const auto names = fit.block_names();
  for (std::size_t b = 0; b < fit.blocks.size(); ++b) {
    for (const auto &r : param_rows(fit.blocks[b], names.at(b), fit.ages, fit.years)) {
      out << r.block << ',' << quote(r.label) << ',' << num(r.value) << '\n';
    }
  }
  out << "\n[trace]\niteration,log_lik\n";
  for (std::size_t i = 0; i < fit.trace.size(); ++i) {
    out << i << ',' << num(fit.trace[i]) << '\n';
  }
  out << "\n[fitted_gap]\n";
  write_cells(out, fit.fitted_gap, fit.ages, fit.years);
}

FitResult read_fit(std::istream &in) {
  const auto s = read_sections(in, kFitMagic);
  FitResult fit;
  fit.model = parse_model_field(s.value("fit", "model"));
  fit.ages = split(s.value("fit", "ages"), ';');
  fit.years = parse_years(s.value("fit", "years"));
  fit.n_obs = parse_int(s.value("fit", "n_obs"));
  fit.n_params = parse_int(s.value("fit", "n_params"));
  fit.log_lik = parse_num(s.value("fit", "log_lik"));
  if (auto v = s.values("fit", "log_common_rate"); !v.empty()) {
    fit.log_common_rate = parse_num(v.front());
  }
  fit.converged = s.value("fit", "converged") == "true";
  fit.iterations = parse_int(s.value("fit", "iterations"));
  fit.notes = s.values("fit", "note");

  std::vector<ParamRow> rows;
  for (const auto &r : s.table("params")) {
    if (r.size() != 3) {
      throw FormatError("[params] rows need block,label,value");
    }
    rows.push_back({r[0], r[1], parse_num(r[2])});
  }
  for (const auto &name : fit.block_names()) {
    fit.blocks.push_back(params_from_rows(rows, name, fit.ages, fit.years));
  }
  for (const auto &r : s.table("trace")) {
    if (r.size() != 2) {
      throw FormatError("[trace] rows need iteration,log_lik");
    }
    fit.trace.push_back(parse_num(r[1]));
  }
  refresh_fitted_surfaces(fit);
  const auto stored = read_cells(s.table("fitted_gap"), fit.ages, fit.years, "fitted_gap");
  for (std::size_t i = 0; i < stored.size(); ++i) {
    const double a = stored.values()[i];
    const double b = fit.fitted_gap.values()[i];
    if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(b))) {
      throw FormatError("[fitted_gap] disagrees with the stored parameters");
    }
  }
  return fit;
}

void write_forecast(std::ostream &out, const ForecastResult &fc) {
  out << kForecastMagic << "\n[forecast]\n";
  out << "model," << model_id(fc.model) << '\n';
  out << "fit_first_year," << fc.fit_first_year << '\n';
  out << "fit_last_year," << fc.fit_last_year << '\n';
  out << "ages," << quote(join(fc.ages, ';')) << '\n';
  out << "horizon_years," << join_years(fc.horizon_years) << '\n';
  const auto &m = fc.rwd;
  out << "\n[rwd]\n";
  out << "labels," << m.labels[0] << ';' << m.labels[1] << '\n';
  out << "origin_year," << m.origin_year << '\n';
  out << "drift_1," << num(m.drift[0]) << "\ndrift_2," << num(m.drift[1]) << '\n';
  out << "cov_11," << num(m.noise_cov(0, 0)) << "\ncov_12," << num(m.noise_cov(0, 1))
      << "\ncov_22," << num(m.noise_cov(1, 1)) << '\n';
  out << "origin_1," << num(m.origin[0]) << "\norigin_2," << num(m.origin[1]) << '\n';
  out << "\n[period_forecast]\nyear," << m.labels[0] << ',' << m.labels[1] << '\n';
  for (std::size_t j = 0; j < fc.horizon_years.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    out << fc.horizon_years[j] << ',' << num(fc.period_forecast(0, c)) << ','
        << num(fc.period_forecast(1, c)) << '\n';
  }
  out << "\n[gap_forecast]\n";
  write_cells(out, fc.gap_forecast, fc.ages, fc.horizon_years);
}

ForecastResult read_forecast(std::istream &in) {
  const auto s = read_sections(in, kForecastMagic);
  ForecastResult fc;
  fc.model = parse_model_field(s.value("forecast", "model"));
  fc.fit_first_year = parse_int(s.value("forecast", "fit_first_year"));
  fc.fit_last_year = parse_int(s.value("forecast", "fit_last_year"));
  fc.ages = split(s.value("forecast", "ages"), ';');
  fc.horizon_years = parse_years(s.value("forecast", "horizon_years"));
  auto &m = fc.rwd;
  const auto labels = split(s.value("rwd", "labels"), ';');
  if (labels.size() != 2) {
    throw FormatError("[rwd] labels need two names");
  }
  m.labels = {labels[0], labels[1]};
  m.origin_year = parse_int(s.value("rwd", "origin_year"));
  m.drift = {parse_num(s.value("rwd", "drift_1")), parse_num(s.value("rwd", "drift_2"))};
  m.noise_cov(0, 0) = parse_num(s.value("rwd", "cov_11"));
  m.noise_cov(0, 1) = m.noise_cov(1, 0) = parse_num(s.value("rwd", "cov_12"));
  m.noise_cov(1, 1) = parse_num(s.value("rwd", "cov_22"));
  m.origin = {parse_num(s.value("rwd", "origin_1")), parse_num(s.value("rwd", "origin_2"))};
  const auto &pf = s.table("period_forecast");
  if (pf.size() != fc.horizon_years.size()) {
    throw FormatError("[period_forecast] length does not match the horizon");
  }
  fc.period_forecast.resize(2, static_cast<Eigen::Index>(pf.size()));
  for (std::size_t j = 0; j < pf.size(); ++j) {
    if (pf[j].size() != 3 || parse_int(pf[j][0]) != fc.horizon_years[j]) {
      throw FormatError("[period_forecast] rows out of order");
    }
    fc.period_forecast(0, static_cast<Eigen::Index>(j)) = parse_num(pf[j][1]);
    fc.period_forecast(1, static_cast<Eigen::Index>(j)) = parse_num(pf[j][2]);
  }
  fc.gap_forecast = read_cells(s.table("gap_forecast"), fc.ages, fc.horizon_years,
                               "gap_forecast");
  return fc;
}

namespace {

std::ofstream open_out(const std::filesystem::path &path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return in;
}

} // namespace

void save_fit(const std::filesystem::path &path, const FitResult &fit) {
  auto out = open_out(path);
  write_fit(out, fit);
}

FitResult load_fit(const std::filesystem::path &path) {
  auto in = open_in(path);
  return read_fit(in);
}

void save_forecast(const std::filesystem::path &path, const ForecastResult &fc) {
  auto out = open_out(path);
  write_forecast(out, fc);
}

ForecastResult load_forecast(const std::filesystem::path &path) {
  auto in = open_in(path);
  return read_forecast(in);
}

} // namespace gapmort
