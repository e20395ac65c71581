#include "gapmort/sim.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "gapmort/random.hpp"

namespace gapmort {

std::vector<std::string> five_year_age_labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = 5 * i;
    out.push_back(i + 1 == n && n > 1 ? std::to_string(lo) + "+"
                                      : std::to_string(lo) + "-" + std::to_string(lo + 4));
  }
  return out;
}

void SimSpec::validate() const {
  if (ages.empty() || years.empty()) {
    throw std::invalid_argument("simulation needs at least one age and one year");
  }
  for (const auto &s : series) {
    if (s.n_ages() != ages.size() || s.n_years() != years.size()) {
      throw std::invalid_argument("generator parameters do not match the simulation grid");
    }
    if (!s.all_finite()) {
      throw std::invalid_argument("generator parameters must be finite");
    }
  }
  if (!(common_rate >= 0.0) || !std::isfinite(common_rate)) {
    throw std::invalid_argument("common rate must be finite and non-negative");
  }
  if (common_surface) {
    if (common_surface->n_ages() != ages.size() ||
        common_surface->n_years() != years.size() || !common_surface->all_finite()) {
      throw std::invalid_argument("common surface does not match the simulation grid");
    }
  }
  if (family != ModelFamily::BivariatePoisson && (common_rate > 0.0 || common_surface)) {
    throw std::invalid_argument("a common component needs the bivariate family");
  }
}

SimSurfaces sim_surfaces(const SimSpec &spec) {
  spec.validate();
  const auto na = spec.ages.size();
  const auto nt = spec.years.size();
  SimSurfaces s{intensity_surface(spec.series[0], na, nt),
                intensity_surface(spec.series[1], na, nt), RealGrid(na, nt)};
  if (spec.family == ModelFamily::BivariatePoisson) {
    if (spec.common_surface) {
      s.common = intensity_surface(*spec.common_surface, na, nt);
    } else {
      s.common = RealGrid(na, nt, spec.common_rate);
    }
  }
  return s;
}

RealGrid expected_gap(const SimSpec &spec) {
  const auto s = sim_surfaces(spec);
  RealGrid g(s.first.rows(), s.first.cols());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.values()[i] = s.first.values()[i] - s.second.values()[i];
  }
  return g;
}

MortalityPanel simulate_panel(const SimSpec &spec) {
  const auto s = sim_surfaces(spec);
  const auto na = spec.ages.size();
  const auto nt = spec.years.size();
  MortalityPanel p;
  p.ages = spec.ages;
  p.years = spec.years;
  p.labels = spec.labels;
  p.counts_a = CountGrid(na, nt);
  p.counts_b = CountGrid(na, nt);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t t = 0; t < nt; ++t) {
      auto rng = Rng::substream(spec.seed, a * nt + t);
      const auto [x, y] =
          sample_bivariate_poisson(rng, s.first(a, t), s.second(a, t), s.common(a, t));
      p.counts_a(a, t) = x;
      p.counts_b(a, t) = y;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Spec files

namespace {

std::vector<double> parse_list(const std::string &value, std::size_t n,
                               const std::string &key) {
  std::vector<double> out;
  const auto colon = value.find(':');
  if (colon != std::string::npos) {
    const auto kind = csv::trim(value.substr(0, colon));
    std::vector<double> coef;
    std::stringstream ss(value.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      coef.push_back(std::stod(tok));
    }
    if (kind == "linear" && coef.size() == 1) {
      for (std::size_t k = 1; k <= n; ++k) {
        out.push_back(coef[0] * static_cast<double>(k));
      }
      return out;
    }
    if (kind == "quadratic" && coef.size() == 2) {
      for (std::size_t k = 1; k <= n; ++k) {
        const double kd = static_cast<double>(k);
        out.push_back(coef[0] * kd + coef[1] * kd * kd);
      }
      return out;
    }
    throw std::invalid_argument("bad shorthand '" + value + "' for " + key +
                                " (expected linear:SLOPE or quadratic:B1,B2)");
  }
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!csv::trim(tok).empty()) {
      out.push_back(std::stod(tok));
    }
  }
  if (out.size() != n) {
    throw std::invalid_argument(key + " has " + std::to_string(out.size()) +
                                " values, expected " + std::to_string(n));
  }
  return out;
}

ModelFamily parse_family(const std::string &v) { return parse_model(v); }

} // namespace

SimSpec SimSpec::parse(std::istream &in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = csv::trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("simulation spec line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    kv[csv::trim(line.substr(0, eq))] = csv::trim(line.substr(eq + 1));
  }
  auto take = [&kv](const std::string &key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) {
      return std::nullopt;
    }
    auto v = it->second;
    kv.erase(it);
    return v;
  };
  auto require = [&](const std::string &key) {
    auto v = take(key);
    if (!v) {
      throw std::invalid_argument("simulation spec is missing '" + key + "'");
    }
    return *v;
  };

  SimSpec spec;
  if (auto v = take("family")) {
    spec.family = parse_family(*v);
  }
  if (auto v = take("seed")) {
    spec.seed = std::stoull(*v);
  }
  const auto n_ages = static_cast<std::size_t>(std::stoul(require("ages")));
  const auto n_years = static_cast<std::size_t>(std::stoul(require("years")));
  const int first_year = std::stoi(require("first_year"));
  if (n_ages == 0 || n_years == 0) {
    throw std::invalid_argument("simulation grid must be non-empty");
  }
  spec.ages = five_year_age_labels(n_ages);
  for (std::size_t t = 0; t < n_years; ++t) {
    spec.years.push_back(first_year + static_cast<int>(t));
  }
  if (auto v = take("labels")) {
    const auto parts = csv::split_line(*v);
    if (parts.size() != 2) {
      throw std::invalid_argument("labels needs two names");
    }
    spec.labels = {csv::trim(parts[0]), csv::trim(parts[1])};
  }
  auto read_block = [&](const std::string &prefix) {
    AgePeriodParams p(n_ages, n_years, std::stod(require(prefix + ".intercept")));
    if (auto v = take(prefix + ".age"); v && n_ages > 1) {
      p.age_effects = parse_list(*v, n_ages - 1, prefix + ".age");
    }
    if (auto v = take(prefix + ".period"); v && n_years > 1) {
      p.period_effects = parse_list(*v, n_years - 1, prefix + ".period");
    }
    return p;
  };
  spec.series[0] = read_block("first");
  spec.series[1] = read_block("second");
  if (auto v = take("common.rate")) {
    spec.common_rate = std::stod(*v);
  }
  if (kv.count("common.intercept")) {
    spec.common_surface = read_block("common");
  }
  if (!kv.empty()) {
    throw std::invalid_argument("unknown simulation spec key '" + kv.begin()->first + "'");
  }
  spec.validate();
  return spec;
}

SimSpec SimSpec::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open simulation spec " + path.string());
  }
  return parse(in);
}

// ---------------------------------------------------------------------------
// Oracles

namespace {

long double poisson_term(long long k, long double lambda) {
  if (k < 0) {
    return 0.0L;
  }
  if (lambda == 0.0L) {
    return k == 0 ? 1.0L : 0.0L;
  }
  const long double kd = static_cast<long double>(k);
  return std::exp(kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0L));
}

void check_rate(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("oracle rates must be finite and non-negative");
  }
}

} // namespace

double convolution_oracle_skellam(long long z, double lambda1, double lambda2,
                                  long long k_max) {
  check_rate(lambda1);
  check_rate(lambda2);
  const long double l1 = lambda1;
  const long double l2 = lambda2;
  const long long k0 = z < 0 ? -z : 0;
  if (k_max <= k0) {
    throw std::runtime_error("truncation k_max does not reach the support of z");
  }
  // Each omitted term is at most P(X2 = k), so the tail is bounded by
  // P(X2 >= k_max) <= p(k_max) (k_max + 1) / (k_max + 1 - lambda2).
  const long double kd = static_cast<long double>(k_max);
  const long double tail = kd + 1.0L > l2 ? poisson_term(k_max, l2) * (kd + 1.0L) /
                                                (kd + 1.0L - l2)
                                          : 1.0L;
  if (!(tail < 1e-14L)) {
    throw std::runtime_error("convolution truncation at k_max = " + std::to_string(k_max) +
                             " leaves a tail bound above 1e-14");
  }
  long double sum = 0.0L;
  for (long long k = k0; k < k_max; ++k) {
    sum += poisson_term(k + z, l1) * poisson_term(k, l2);
  }
  return static_cast<double>(sum);
}

double enumeration_oracle_bp(long long x, long long y, double lambda1, double lambda2,
                             double lambda3) {
  check_rate(lambda1);
  check_rate(lambda2);
  check_rate(lambda3);
  if (x < 0 || y < 0) {
    return 0.0;
  }
  long double sum = 0.0L;
  for (long long k = 0; k <= std::min(x, y); ++k) {
    sum += poisson_term(x - k, lambda1) * poisson_term(y - k, lambda2) *
           poisson_term(k, lambda3);
  }
  return static_cast<double>(sum);
}

} // namespace gapmort
