#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gapmort/design.hpp"
#include "gapmort/optim.hpp"
#include "gapmort/panel.hpp"

namespace gapmort {

enum class ModelFamily { DoublePoisson, BivariatePoisson, Skellam };

/// Short identifiers used on the command line and in files: dp, bp, skellam.
std::string model_id(ModelFamily m);
/// Display names: "Double Poisson", "Bivariate Poisson", "Skellam".
std::string model_name(ModelFamily m);
ModelFamily parse_model(const std::string &id);

/// Raised when an objective or gradient cannot be evaluated at a cell.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when EM produces a log-likelihood decrease beyond rounding.
class EmMonotonicityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct OptimSettings {
  /// Quasi-Newton iteration cap and gradient sup-norm tolerance.
  int max_iterations = 2000;
  double gradient_tolerance = 1e-6;
  LineSearchSettings line_search;

  /// EM stops when |l_new - l_old| / |l_old| falls below this.
  double em_rel_tolerance = 1e-8;
  int em_max_iterations = 5000;
  /// Floor for the initial common-shock rate of the bivariate model.
  double em_initial_floor = 1e-4;
  /// Hold the bivariate common rate fixed instead of estimating it.
  std::optional<double> fixed_common_rate;

  /// Newton iterations for each Poisson block (double Poisson fit and every
  /// bivariate M-step).
  int newton_max_iterations = 200;
  /// Effect assigned to an age row or year column whose counts are all zero.
  double effect_floor = -30.0;

  BfgsSettings bfgs() const { return {max_iterations, gradient_tolerance, line_search}; }
};

/// Estimated model on one age-period window.
struct FitResult {
  ModelFamily model = ModelFamily::Skellam;
  std::vector<std::string> ages;
  std::vector<int> years;
  /// [A, B] for the Poisson families, [C, D] for Skellam.
  std::vector<AgePeriodParams> blocks;
  /// log of the bivariate common rate; -inf when it collapsed to zero.
  std::optional<double> log_common_rate;
  double log_lik = 0.0;
  int n_params = 0;
  int n_obs = 0;
  RealGrid fitted_gap;
  std::optional<std::array<RealGrid, 2>> fitted_intensities;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
  std::vector<std::string> notes;

  std::array<std::string, 2> block_names() const;
  double common_rate() const;
};

/// Number of free parameters for a family on an A x T grid.
int parameter_count(ModelFamily m, std::size_t n_ages, std::size_t n_years);

/// Poisson log-link age-period fit of one (possibly fractional) response grid
/// by damped Newton iterations.
struct PoissonBlockFit {
  AgePeriodParams params;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> notes;
};

PoissonBlockFit fit_poisson_block(const RealGrid &response,
                                  const AgePeriodParams &init,
                                  const OptimSettings &settings);

FitResult fit_double_poisson(const MortalityPanel &panel,
                             const OptimSettings &settings = {});
FitResult fit_bivariate_poisson(const MortalityPanel &panel,
                                const OptimSettings &settings = {});
FitResult fit_skellam(const GapPanel &gap, const OptimSettings &settings = {},
                      const std::optional<ParamVector> &init = std::nullopt);

/// Default Skellam starting point: age-period Poisson fits of the positive
/// and negative parts of the gap, each shifted by sqrt(mean |gap|) + 1/2.
ParamVector skellam_initial_params(const GapPanel &gap);

/// Layout of the flat parameter vector for a family.
ParamLayout model_layout(ModelFamily m, std::size_t n_ages, std::size_t n_years);

/// Objective used by the estimators: minus the full log-likelihood
/// (including the log-factorial constants of the Poisson families).
double negative_log_likelihood(ModelFamily m, const MortalityPanel &panel,
                               const ParamVector &theta);
ParamVector gradient(ModelFamily m, const MortalityPanel &panel,
                     const ParamVector &theta);

double skellam_negative_log_likelihood(const GapPanel &gap, const ParamVector &theta);
ParamVector skellam_gradient(const GapPanel &gap, const ParamVector &theta);

/// Recomputes fitted intensities and the fitted gap from the parameters.
void refresh_fitted_surfaces(FitResult &fit);

} // namespace gapmort
