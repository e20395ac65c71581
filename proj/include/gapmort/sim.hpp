#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gapmort/design.hpp"
#include "gapmort/fit.hpp"
#include "gapmort/panel.hpp"

namespace gapmort {

/// Generator for a synthetic two-population panel.
///
/// `series` holds the log-linear surfaces of the two independent Poisson
/// components. For the bivariate family a common component is added to both
/// populations, either with the constant rate `common_rate` or, when
/// `common_surface` is set, with an age-period surface of its own.
struct SimSpec {
  ModelFamily family = ModelFamily::BivariatePoisson;
  std::vector<std::string> ages;
  std::vector<int> years;
  std::array<AgePeriodParams, 2> series;
  double common_rate = 0.0;
  std::optional<AgePeriodParams> common_surface;
  std::uint64_t seed = 1;
  std::array<std::string, 2> labels{"A", "B"};

  void validate() const;

  /// Reads "key = value" lines; see data/synthetic_spec.cfg for the keys.
  static SimSpec parse(std::istream &in);
  static SimSpec load(const std::filesystem::path &path);
};

/// Labels "0-4", "5-9", ..., with the last group open ("80+").
std::vector<std::string> five_year_age_labels(std::size_t n);

struct SimSurfaces {
  RealGrid first;  // rate of the first independent component
  RealGrid second; // rate of the second independent component
  RealGrid common; // zero unless the family is bivariate
};

SimSurfaces sim_surfaces(const SimSpec &spec);

/// Expected gap first - second, which all three families share.
RealGrid expected_gap(const SimSpec &spec);

/// Cellwise draws; cell (a, t) uses its own substream of the seed so the
/// result does not depend on evaluation order.
MortalityPanel simulate_panel(const SimSpec &spec);

/// P(X1 - X2 = z) by direct summation of Poisson products over k < k_max.
/// Throws std::runtime_error when the omitted tail may exceed 1e-14.
double convolution_oracle_skellam(long long z, double lambda1, double lambda2,
                                  long long k_max);

/// P(X1 + X3 = x, X2 + X3 = y) by enumerating the common component.
double enumeration_oracle_bp(long long x, long long y, double lambda1,
                             double lambda2, double lambda3);

} // namespace gapmort
