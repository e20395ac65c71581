#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gapmort/grid.hpp"

namespace gapmort {

/// Largest linear predictor accepted before exponentiation.
inline constexpr double kMaxLinearPredictor = 700.0;

class OverflowError : public std::overflow_error {
public:
  using std::overflow_error::overflow_error;
};

/// Log-scale additive age-period parameters under corner coding: the first
/// age group and the first year carry an implicit zero effect.
struct AgePeriodParams {
  double intercept = 0.0;
  std::vector<double> age_effects;    // size n_ages - 1
  std::vector<double> period_effects; // size n_years - 1

  AgePeriodParams() = default;
  AgePeriodParams(std::size_t n_ages, std::size_t n_years,
                  double intercept_value = 0.0)
      : intercept{intercept_value}, age_effects(n_ages - 1, 0.0),
        period_effects(n_years - 1, 0.0) {}

  std::size_t n_ages() const noexcept { return age_effects.size() + 1; }
  std::size_t n_years() const noexcept { return period_effects.size() + 1; }
  std::size_t n_params() const noexcept {
    return 1 + age_effects.size() + period_effects.size();
  }

  double age_effect(std::size_t a) const {
    return a == 0 ? 0.0 : age_effects.at(a - 1);
  }
  double period_effect(std::size_t t) const {
    return t == 0 ? 0.0 : period_effects.at(t - 1);
  }

  bool all_finite() const;

  friend bool operator==(const AgePeriodParams &,
                         const AgePeriodParams &) = default;
};

/// 1 + (ages - 1) + (years - 1).
std::size_t block_size(std::size_t n_ages, std::size_t n_years);

double linear_predictor(const AgePeriodParams &params, std::size_t age_index,
                        std::size_t year_index);

/// exp(linear predictor) on every cell; throws OverflowError naming the
/// first cell whose predictor exceeds kMaxLinearPredictor.
RealGrid intensity_surface(const AgePeriodParams &params, std::size_t n_ages,
                           std::size_t n_years);

/// Flat parameter vector layout: for each block
/// [intercept, age effects..., period effects...], then the extras.
struct ParamLayout {
  std::size_t n_ages = 0;
  std::size_t n_years = 0;
  std::size_t n_blocks = 0;
  std::size_t n_extras = 0;

  std::size_t block_length() const { return block_size(n_ages, n_years); }
  std::size_t size() const { return n_blocks * block_length() + n_extras; }
  std::size_t block_offset(std::size_t b) const { return b * block_length(); }
  std::size_t extras_offset() const { return n_blocks * block_length(); }
};

using ParamVector = Eigen::VectorXd;

ParamVector pack(std::span<const AgePeriodParams> blocks,
                 std::span<const double> extras = {});

struct Unpacked {
  std::vector<AgePeriodParams> blocks;
  std::vector<double> extras;
};

Unpacked unpack(const ParamVector &theta, const ParamLayout &layout);

/// Tidy parameter table rows "block,label,value".
struct ParamRow {
  std::string block;
  std::string label;
  double value = 0.0;
};

std::vector<ParamRow> param_rows(const AgePeriodParams &params,
                                 const std::string &block,
                                 std::span<const std::string> ages,
                                 std::span<const int> years);

/// Rebuilds a block from its rows; every non-reference label must be present.
AgePeriodParams params_from_rows(std::span<const ParamRow> rows,
                                 const std::string &block,
                                 std::span<const std::string> ages,
                                 std::span<const int> years);

void write_param_rows(std::ostream &out, std::span<const ParamRow> rows);

/// Full-precision decimal rendering that round-trips through strtod.
std::string format_double(double x);

} // namespace gapmort
