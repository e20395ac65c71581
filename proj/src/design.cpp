#include "gapmort/design.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>

namespace gapmort {

bool AgePeriodParams::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::isfinite(intercept) &&
         std::all_of(age_effects.begin(), age_effects.end(), finite) &&
         std::all_of(period_effects.begin(), period_effects.end(), finite);
}

std::size_t block_size(std::size_t n_ages, std::size_t n_years) {
  if (n_ages == 0 || n_years == 0) {
    throw std::invalid_argument("age-period block needs at least one age and one year");
  }
  return 1 + (n_ages - 1) + (n_years - 1);
}

double linear_predictor(const AgePeriodParams &params, std::size_t age_index,
                        std::size_t year_index) {
  if (age_index >= params.n_ages() || year_index >= params.n_years()) {
    throw std::out_of_range("cell (" + std::to_string(age_index) + ", " +
                            std::to_string(year_index) +
                            ") outside the parameter grid");
  }
  return params.intercept + params.age_effect(age_index) +
         params.period_effect(year_index);
}

RealGrid intensity_surface(const AgePeriodParams &params, std::size_t n_ages,
                           std::size_t n_years) {
  if (n_ages != params.n_ages() || n_years != params.n_years()) {
    throw std::invalid_argument("intensity surface dimensions do not match parameters");
  }
  RealGrid out(n_ages, n_years);
  for (std::size_t a = 0; a < n_ages; ++a) {
    for (std::size_t t = 0; t < n_years; ++t) {
      const double eta = params.intercept + params.age_effect(a) + params.period_effect(t);
      if (!(eta <= kMaxLinearPredictor)) {
        throw OverflowError("linear predictor " + format_double(eta) +
                            " at cell (" + std::to_string(a) + ", " +
                            std::to_string(t) + ") overflows exp");
      }
      out(a, t) = std::exp(eta);
    }
  }
  return out;
}

ParamVector pack(std::span<const AgePeriodParams> blocks,
                 std::span<const double> extras) {
  std::size_t n = extras.size();
  for (const auto &b : blocks) {
    n += b.n_params();
  }
  ParamVector theta(static_cast<Eigen::Index>(n));
  Eigen::Index i = 0;
  for (const auto &b : blocks) {
    theta[i++] = b.intercept;
    for (double v : b.age_effects) {
      theta[i++] = v;
    }
    for (double v : b.period_effects) {
      theta[i++] = v;
    }
  }
  for (double v : extras) {
    theta[i++] = v;
  }
  return theta;
}

Unpacked unpack(const ParamVector &theta, const ParamLayout &layout) {
  if (static_cast<std::size_t>(theta.size()) != layout.size()) {
    throw std::invalid_argument("parameter vector has length " +
                                std::to_string(theta.size()) + ", layout expects " +
                                std::to_string(layout.size()));
  }
  Unpacked out;
  Eigen::Index i = 0;
  for (std::size_t b = 0; b < layout.n_blocks; ++b) {
    AgePeriodParams p(layout.n_ages, layout.n_years);
    p.intercept = theta[i++];
    for (auto &v : p.age_effects) {
      v = theta[i++];
    }
    for (auto &v : p.period_effects) {
      v = theta[i++];
    }
    out.blocks.push_back(std::move(p));
  }
  for (std::size_t e = 0; e < layout.n_extras; ++e) {
    out.extras.push_back(theta[i++]);
  }
  return out;
}

std::vector<ParamRow> param_rows(const AgePeriodParams &params,
                                 const std::string &block,
                                 std::span<const std::string> ages,
                                 std::span<const int> years) {
  if (ages.size() != params.n_ages() || years.size() != params.n_years()) {
    throw std::invalid_argument("labels do not match parameter dimensions");
  }
  std::vector<ParamRow> rows;
  rows.push_back({block, "intercept", params.intercept});
  for (std::size_t a = 1; a < ages.size(); ++a) {
    rows.push_back({block, "age:" + ages[a], params.age_effects[a - 1]});
  }
  for (std::size_t t = 1; t < years.size(); ++t) {
    rows.push_back({block, "year:" + std::to_string(years[t]),
                    params.period_effects[t - 1]});
  }
  return rows;
}

AgePeriodParams params_from_rows(std::span<const ParamRow> rows,
                                 const std::string &block,
                                 std::span<const std::string> ages,
                                 std::span<const int> years) {
  std::map<std::string, double> values;
  for (const auto &r : rows) {
    if (r.block == block) {
      values[r.label] = r.value;
    }
  }
  auto get = [&](const std::string &label) {
    auto it = values.find(label);
    if (it == values.end()) {
      throw std::invalid_argument("parameter block " + block + " lacks '" +
                                  label + "'");
    }
    return it->second;
  };
  AgePeriodParams p(ages.size(), years.size());
  p.intercept = get("intercept");
  for (std::size_t a = 1; a < ages.size(); ++a) {
    p.age_effects[a - 1] = get("age:" + ages[a]);
  }
  for (std::size_t t = 1; t < years.size(); ++t) {
    p.period_effects[t - 1] = get("year:" + std::to_string(years[t]));
  }
  return p;
}

void write_param_rows(std::ostream &out, std::span<const ParamRow> rows) {
  out << "block,label,value\n";
  for (const auto &r : rows) {
    out << r.block << ',' << r.label << ',' << format_double(r.value) << '\n';
  }
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) {
    return "nan";
  }
  return std::string(buf, ptr);
}

} // namespace gapmort
