#include "gapmort/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "gapmort/dist.hpp"

namespace gapmort {

std::string model_id(ModelFamily m) {
  switch (m) {
  case ModelFamily::DoublePoisson:
    return "dp";
  case ModelFamily::BivariatePoisson:
    return "bp";
  case ModelFamily::Skellam:
    return "skellam";
  }
  return "?";
}

std::string model_name(ModelFamily m) {
  switch (m) {
  case ModelFamily::DoublePoisson:
    return "Double Poisson";
  case ModelFamily::BivariatePoisson:
    return "Bivariate Poisson";
  case ModelFamily::Skellam:
    return "Skellam";
  }
  return "?";
}

ModelFamily parse_model(const std::string &id) {
  std::string s;
  for (char c : id) {
    if (c != ' ' && c != '_' && c != '-') {
      s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (s == "dp" || s == "doublepoisson") {
    return ModelFamily::DoublePoisson;
  }
  if (s == "bp" || s == "bivariatepoisson") {
    return ModelFamily::BivariatePoisson;
  }
  if (s == "skellam" || s == "sk") {
    return ModelFamily::Skellam;
  }
  throw std::invalid_argument("unknown model '" + id + "' (expected skellam, dp or bp)");
}

std::array<std::string, 2> FitResult::block_names() const {
  if (model == ModelFamily::Skellam) {
    return {"C", "D"};
  }
  return {"A", "B"};
}

double FitResult::common_rate() const {
  return log_common_rate ? std::exp(*log_common_rate) : 0.0;
}

int parameter_count(ModelFamily m, std::size_t n_ages, std::size_t n_years) {
  const int block = static_cast<int>(block_size(n_ages, n_years));
  return m == ModelFamily::BivariatePoisson ? 2 * block + 1 : 2 * block;
}

ParamLayout model_layout(ModelFamily m, std::size_t n_ages, std::size_t n_years) {
  return {n_ages, n_years, 2,
          static_cast<std::size_t>(m == ModelFamily::BivariatePoisson ? 1 : 0)};
}

void refresh_fitted_surfaces(FitResult &fit) {
  const auto na = fit.ages.size();
  const auto nt = fit.years.size();
  std::array<RealGrid, 2> lam{intensity_surface(fit.blocks.at(0), na, nt),
                              intensity_surface(fit.blocks.at(1), na, nt)};
  fit.fitted_gap = RealGrid(na, nt);
  for (std::size_t i = 0; i < fit.fitted_gap.size(); ++i) {
    fit.fitted_gap.values()[i] = lam[0].values()[i] - lam[1].values()[i];
  }
  fit.fitted_intensities = std::move(lam);
}

// ---------------------------------------------------------------------------
// Poisson block

namespace {

std::string cell_label(const std::vector<std::string> &ages,
                       const std::vector<int> &years, std::size_t a, std::size_t t) {
  return "(age " + ages[a] + ", year " + std::to_string(years[t]) + ")";
}

} // namespace

PoissonBlockFit fit_poisson_block(const RealGrid &response,
                                  const AgePeriodParams &init,
                                  const OptimSettings &settings) {
  const std::size_t na = response.rows();
  const std::size_t nt = response.cols();
  if (init.n_ages() != na || init.n_years() != nt) {
    throw std::invalid_argument("initial parameters do not match the response grid");
  }
  std::vector<double> row_sum(na, 0.0);
  std::vector<double> col_sum(nt, 0.0);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t t = 0; t < nt; ++t) {
      const double y = response(a, t);
      if (y < 0.0 || !std::isfinite(y)) {
        throw std::invalid_argument("Poisson response must be finite and non-negative");
      }
      row_sum[a] += y;
      col_sum[t] += y;
    }
  }
  PoissonBlockFit out;
  const double total = std::accumulate(row_sum.begin(), row_sum.end(), 0.0);
  if (total == 0.0) {
    out.params = AgePeriodParams(na, nt, settings.effect_floor);
    out.converged = true;
    out.notes.push_back("all-zero response: intercept capped at the floor");
    return out;
  }

  // Internal corner coding uses the first row and column with positive mass
  // as reference; zero rows and columns are held at the floor.
  const std::size_t ref_a = static_cast<std::size_t>(
      std::find_if(row_sum.begin(), row_sum.end(), [](double s) { return s > 0.0; }) -
      row_sum.begin());
  const std::size_t ref_t = static_cast<std::size_t>(
      std::find_if(col_sum.begin(), col_sum.end(), [](double s) { return s > 0.0; }) -
      col_sum.begin());

  std::vector<double> alpha(na, 0.0);
  std::vector<double> beta(nt, 0.0);
  double mu = init.intercept + init.age_effect(ref_a) + init.period_effect(ref_t);
  std::vector<int> row_idx(na, -1);
  std::vector<int> col_idx(nt, -1);
  int p = 1;
  for (std::size_t a = 0; a < na; ++a) {
    if (row_sum[a] == 0.0) {
      alpha[a] = settings.effect_floor;
      out.notes.push_back("boundary: age row index " + std::to_string(a) +
                          " has zero mass; effect capped at floor");
    } else if (a != ref_a) {
      alpha[a] = init.age_effect(a) - init.age_effect(ref_a);
      row_idx[a] = p++;
    }
  }
  for (std::size_t t = 0; t < nt; ++t) {
    if (col_sum[t] == 0.0) {
      beta[t] = settings.effect_floor;
      out.notes.push_back("boundary: year column index " + std::to_string(t) +
                          " has zero mass; effect capped at floor");
    } else if (t != ref_t) {
      beta[t] = init.period_effect(t) - init.period_effect(ref_t);
      col_idx[t] = p++;
    }
  }

  auto objective = [&](double m, const std::vector<double> &al,
                       const std::vector<double> &be) {
    double ll = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t t = 0; t < nt; ++t) {
        const double eta = m + al[a] + be[t];
        ll += response(a, t) * eta - std::exp(eta);
      }
    }
    return ll;
  };

  Eigen::VectorXd grad(p);
  Eigen::VectorXd mass(p);
  Eigen::MatrixXd hess(p, p);
  double ll = objective(mu, alpha, beta);
  bool polished = false;
  // Score components below the rounding level of their own sums count as
  // zero; with very large counts that level exceeds the absolute tolerance.
  auto score_small = [&] {
    for (Eigen::Index i = 0; i < p; ++i) {
      const double floor = 64.0 * std::numeric_limits<double>::epsilon() * mass[i];
      if (std::abs(grad[i]) >= std::max(settings.gradient_tolerance, floor)) {
        return false;
      }
    }
    return true;
  };
  for (out.iterations = 0; out.iterations < settings.newton_max_iterations;
       ++out.iterations) {
    grad.setZero();
    mass.setZero();
    hess.setZero();
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t t = 0; t < nt; ++t) {
        const double lam = std::exp(mu + alpha[a] + beta[t]);
        const double resid = response(a, t) - lam;
        const int idx[3] = {0, row_idx[a], col_idx[t]};
        for (int i : idx) {
          if (i < 0) {
            continue;
          }
          grad[i] += resid;
          mass[i] += std::abs(response(a, t)) + lam;
          for (int j : idx) {
            if (j >= 0) {
              hess(i, j) += lam;
            }
          }
        }
      }
    }
    if (score_small()) {
      // one more Newton step takes the quadratically converging iterate to
      // working precision
      if (polished) {
        out.converged = true;
        break;
      }
      polished = true;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd delta = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !delta.allFinite() || grad.dot(delta) <= 0.0) {
      delta = grad / std::max(1.0, hess.diagonal().maxCoeff());
    }
    double step = 1.0;
    bool moved = false;
    for (int half = 0; half < 60; ++half, step *= 0.5) {
      double m2 = mu + step * delta[0];
      auto al2 = alpha;
      auto be2 = beta;
      for (std::size_t a = 0; a < na; ++a) {
        if (row_idx[a] >= 0) {
          al2[a] += step * delta[row_idx[a]];
        }
      }
      for (std::size_t t = 0; t < nt; ++t) {
        if (col_idx[t] >= 0) {
          be2[t] += step * delta[col_idx[t]];
        }
      }
      const double ll2 = objective(m2, al2, be2);
      // the polishing step is taken in full: its gain is below what the
      // objective can resolve
      if (std::isfinite(ll2) && (ll2 >= ll || (polished && step == 1.0))) {
        moved = ll2 > ll || step == 1.0;
        mu = m2;
        alpha = std::move(al2);
        beta = std::move(be2);
        ll = ll2;
        break;
      }
    }
    if (!moved) {
      // no representable ascent left: the iterate is optimal to working precision
      // predicted Newton increase below the rounding level of the objective
      out.converged = 0.5 * grad.dot(delta) <= 1e-12 * std::max(1.0, std::abs(ll)) ||
                      score_small();
      if (!out.converged) {
        out.notes.push_back("Newton iterations stalled before the gradient tolerance");
      }
      break;
    }
  }

  out.params = AgePeriodParams(na, nt);
  out.params.intercept = mu + alpha[0] + beta[0];
  for (std::size_t a = 1; a < na; ++a) {
    out.params.age_effects[a - 1] = alpha[a] - alpha[0];
  }
  for (std::size_t t = 1; t < nt; ++t) {
    out.params.period_effects[t - 1] = beta[t] - beta[0];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Likelihoods

namespace {

struct PanelView {
  const CountGrid *a = nullptr;
  const CountGrid *b = nullptr;
  const std::vector<std::string> *ages = nullptr;
  const std::vector<int> *years = nullptr;
};

void check_layout(const ParamVector &theta, const ParamLayout &layout) {
  if (static_cast<std::size_t>(theta.size()) != layout.size()) {
    throw std::invalid_argument("parameter vector length " +
                                std::to_string(theta.size()) + " does not match layout " +
                                std::to_string(layout.size()));
  }
  if (!theta.allFinite()) {
    throw std::invalid_argument("parameter vector has non-finite entries");
  }
}

void accumulate_block(Eigen::Ref<Eigen::VectorXd> g, std::size_t n_ages,
                      std::size_t a, std::size_t t, double value) {
  g[0] += value;
  if (a > 0) {
    g[static_cast<Eigen::Index>(a)] += value;
  }
  if (t > 0) {
    g[static_cast<Eigen::Index>(n_ages - 1 + t)] += value;
  }
}

struct SkellamCell {
  double log_lik;
  double d_eta_c;
  double d_eta_d;
};

SkellamCell skellam_cell(long long z, double eta_c, double eta_d, bool want_grad,
                         const GapPanel &gap, std::size_t a, std::size_t t) {
  if (eta_c > kMaxLinearPredictor || eta_d > kMaxLinearPredictor) {
    throw OverflowError("Skellam intensity overflows at " +
                        cell_label(gap.ages, gap.years, a, t));
  }
  // Written around sqrt(lambda) so that the large terms -lambda_C - lambda_D
  // and log I(v) ~ v cancel analytically rather than in floating point.
  const double rc = std::exp(0.5 * eta_c);
  const double rd = std::exp(0.5 * eta_d);
  const double v = 2.0 * rc * rd;
  const double diff = rc - rd;
  const long long n = z < 0 ? -z : z;
  const double zd = static_cast<double>(z);
  SkellamCell cell{0.0, 0.0, 0.0};
  if (v > 0.0) {
    cell.log_lik = -diff * diff + 0.5 * zd * (eta_c - eta_d) + log_bessel_i_scaled(n, v);
  } else {
    cell.log_lik = -rc * rc - rd * rd + 0.5 * zd * (eta_c - eta_d) +
                   log_bessel_i(n, v).log_value;
  }
  if (cell.log_lik == -std::numeric_limits<double>::infinity()) {
    // v underflowed with a nonzero gap: a legitimate zero likelihood
    return cell;
  }
  if (want_grad) {
    if (v > 0.0) {
      // -lambda_C + (v / 2) R = -rc (rc - rd) + (v / 2) (R - 1)
      const double excess = half_v_bessel_log_derivative_excess(n, v);
      cell.d_eta_c = -rc * diff + 0.5 * zd + excess;
      cell.d_eta_d = rd * diff - 0.5 * zd + excess;
    } else {
      // (v / 2) I'_n / I_n tends to n / 2 as v underflows
      cell.d_eta_c = -rc * rc + 0.5 * zd + 0.5 * static_cast<double>(n);
      cell.d_eta_d = -rd * rd - 0.5 * zd + 0.5 * static_cast<double>(n);
    }
  }
  if (!std::isfinite(cell.log_lik) || !std::isfinite(cell.d_eta_c) ||
      !std::isfinite(cell.d_eta_d)) {
    throw NumericalError("Skellam likelihood not finite at " +
                         cell_label(gap.ages, gap.years, a, t) + " with gap " +
                         std::to_string(z) + " and Bessel argument v = " +
                         format_double(v));
  }
  return cell;
}

double skellam_objective(const GapPanel &gap, const ParamVector &theta,
                         ParamVector *grad) {
  const auto na = gap.n_ages();
  const auto nt = gap.n_years();
  const auto layout = model_layout(ModelFamily::Skellam, na, nt);
  check_layout(theta, layout);
  const auto p = unpack(theta, layout);
  const auto bl = static_cast<Eigen::Index>(layout.block_length());
  if (grad) {
    grad->setZero(theta.size());
  }
  double ll = 0.0;
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t t = 0; t < nt; ++t) {
      const double eta_c = p.blocks[0].intercept + p.blocks[0].age_effect(a) +
                           p.blocks[0].period_effect(t);
      const double eta_d = p.blocks[1].intercept + p.blocks[1].age_effect(a) +
                           p.blocks[1].period_effect(t);
      const auto cell = skellam_cell(gap.gaps(a, t), eta_c, eta_d, grad != nullptr,
                                     gap, a, t);
      ll += cell.log_lik;
      if (ll == -std::numeric_limits<double>::infinity()) {
        if (grad) {
          grad->setConstant(std::numeric_limits<double>::quiet_NaN());
        }
        return std::numeric_limits<double>::infinity();
      }
      if (grad) {
        accumulate_block(grad->segment(0, bl), na, a, t, -cell.d_eta_c);
        accumulate_block(grad->segment(bl, bl), na, a, t, -cell.d_eta_d);
      }
    }
  }
  return -ll;
}

double poisson_family_objective(ModelFamily m, const MortalityPanel &panel,
                                const ParamVector &theta, ParamVector *grad) {
  const auto na = panel.n_ages();
  const auto nt = panel.n_years();
  const auto layout = model_layout(m, na, nt);
  check_layout(theta, layout);
  const auto p = unpack(theta, layout);
  const auto lam_a = intensity_surface(p.blocks[0], na, nt);
  const auto lam_b = intensity_surface(p.blocks[1], na, nt);
  double lam_c = 0.0;
  if (m == ModelFamily::BivariatePoisson) {
    if (p.extras[0] > kMaxLinearPredictor) {
      throw OverflowError("common rate overflows");
    }
    lam_c = std::exp(p.extras[0]);
  }
  const auto bl = static_cast<Eigen::Index>(layout.block_length());
  if (grad) {
    grad->setZero(theta.size());
  }
  double ll = 0.0;
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t t = 0; t < nt; ++t) {
      const auto x = panel.counts_a(a, t);
      const auto y = panel.counts_b(a, t);
      double s = 0.0;
      if (m == ModelFamily::DoublePoisson) {
        ll += log_poisson_pmf(x, lam_a(a, t)) + log_poisson_pmf(y, lam_b(a, t));
      } else {
        const auto inner = bp_inner_sum(x, y, lam_a(a, t), lam_b(a, t), lam_c);
        s = inner.mean_common;
        ll += log_bivariate_poisson_pmf(x, y, lam_a(a, t), lam_b(a, t), lam_c);
      }
      if (grad) {
        const double xd = static_cast<double>(x);
        const double yd = static_cast<double>(y);
        accumulate_block(grad->segment(0, bl), na, a, t, -(xd - s - lam_a(a, t)));
        accumulate_block(grad->segment(bl, bl), na, a, t, -(yd - s - lam_b(a, t)));
        if (m == ModelFamily::BivariatePoisson) {
          (*grad)[2 * bl] -= s - lam_c;
        }
      }
    }
  }
  return -ll;
}

} // namespace

double skellam_negative_log_likelihood(const GapPanel &gap, const ParamVector &theta) {
  return skellam_objective(gap, theta, nullptr);
}

ParamVector skellam_gradient(const GapPanel &gap, const ParamVector &theta) {
  ParamVector g;
  skellam_objective(gap, theta, &g);
  return g;
}

double negative_log_likelihood(ModelFamily m, const MortalityPanel &panel,
                               const ParamVector &theta) {
  if (m == ModelFamily::Skellam) {
    return skellam_objective(to_gap(panel), theta, nullptr);
  }
  return poisson_family_objective(m, panel, theta, nullptr);
}

ParamVector gradient(ModelFamily m, const MortalityPanel &panel,
                     const ParamVector &theta) {
  ParamVector g;
  if (m == ModelFamily::Skellam) {
    skellam_objective(to_gap(panel), theta, &g);
  } else {
    poisson_family_objective(m, panel, theta, &g);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Estimators

namespace {

FitResult make_result(ModelFamily m, const std::vector<std::string> &ages,
                      const std::vector<int> &years) {
  FitResult r;
  r.model = m;
  r.ages = ages;
  r.years = years;
  r.n_params = parameter_count(m, ages.size(), years.size());
  r.n_obs = static_cast<int>(ages.size() * years.size());
  return r;
}

AgePeriodParams flat_start(const RealGrid &response) {
  double total = 0.0;
  for (double v : response.values()) {
    total += v;
  }
  const double mean = total / static_cast<double>(response.size());
  return AgePeriodParams(response.rows(), response.cols(),
                         mean > 0.0 ? std::log(mean) : 0.0);
}

double double_poisson_log_lik(const MortalityPanel &panel, const RealGrid &lam_a,
                              const RealGrid &lam_b) {
  double ll = 0.0;
  for (std::size_t a = 0; a < panel.n_ages(); ++a) {
    for (std::size_t t = 0; t < panel.n_years(); ++t) {
      ll += log_poisson_pmf(panel.counts_a(a, t), lam_a(a, t)) +
            log_poisson_pmf(panel.counts_b(a, t), lam_b(a, t));
    }
  }
  return ll;
}

} // namespace

FitResult fit_double_poisson(const MortalityPanel &panel, const OptimSettings &settings) {
  panel.validate();
  auto result = make_result(ModelFamily::DoublePoisson, panel.ages, panel.years);
  const std::array<const CountGrid *, 2> counts{&panel.counts_a, &panel.counts_b};
  result.converged = true;
  for (std::size_t s = 0; s < 2; ++s) {
    const auto response = grid_cast<double>(*counts[s]);
    auto block = fit_poisson_block(response, flat_start(response), settings);
    for (const auto &note : block.notes) {
      result.notes.push_back(panel.labels[s] + ": " + note);
    }
    result.converged = result.converged && block.converged;
    result.iterations = std::max(result.iterations, block.iterations);
    result.blocks.push_back(std::move(block.params));
  }
  refresh_fitted_surfaces(result);
  result.log_lik = double_poisson_log_lik(panel, (*result.fitted_intensities)[0],
                                          (*result.fitted_intensities)[1]);
  result.trace = {result.log_lik};
  return result;
}

namespace {

struct EStep {
  double log_lik = 0.0;
  RealGrid common; // E[X3 | x, y] per cell
};

EStep bp_expectation(const MortalityPanel &panel, const RealGrid &lam_a,
                     const RealGrid &lam_b, double lam_c) {
  EStep e{0.0, RealGrid(panel.n_ages(), panel.n_years())};
  for (std::size_t a = 0; a < panel.n_ages(); ++a) {
    for (std::size_t t = 0; t < panel.n_years(); ++t) {
      const auto x = panel.counts_a(a, t);
      const auto y = panel.counts_b(a, t);
      const auto inner = bp_inner_sum(x, y, lam_a(a, t), lam_b(a, t), lam_c);
      const double xd = static_cast<double>(x);
      const double yd = static_cast<double>(y);
      e.common(a, t) = inner.mean_common;
      if (lam_c == 0.0) {
        e.log_lik += log_poisson_pmf(x, lam_a(a, t)) + log_poisson_pmf(y, lam_b(a, t));
        continue;
      }
      const double part_x = (x == 0 ? 0.0 : xd * std::log(lam_a(a, t))) - std::lgamma(xd + 1.0);
      const double part_y = (y == 0 ? 0.0 : yd * std::log(lam_b(a, t))) - std::lgamma(yd + 1.0);
      e.log_lik += -((lam_a(a, t) + lam_b(a, t)) + lam_c) + (part_x + part_y) + inner.log_sum;
    }
  }
  return e;
}

void mark_degenerate(FitResult &r, const FitResult &dp, const std::string &why) {
  r.blocks = dp.blocks;
  r.log_common_rate = -std::numeric_limits<double>::infinity();
  r.log_lik = dp.log_lik;
  r.fitted_gap = dp.fitted_gap;
  r.fitted_intensities = dp.fitted_intensities;
  r.notes.push_back("degenerated to double Poisson: " + why);
}


struct EmRun {
  AgePeriodParams block_a;
  AgePeriodParams block_b;
  RealGrid lam_a;
  RealGrid lam_b;
  double lam_c = 0.0;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
  bool collapsed = false;
};

EmRun run_em(const MortalityPanel &panel, const FitResult &dp, double lam_c,
             const OptimSettings &settings) {
  const auto na = panel.n_ages();
  const auto nt = panel.n_years();
  const std::size_t cells = na * nt;
  EmRun run{dp.blocks[0], dp.blocks[1], (*dp.fitted_intensities)[0],
            (*dp.fitted_intensities)[1], lam_c, {}, 0, false, false};
  double prev = -std::numeric_limits<double>::infinity();
  for (; run.iterations <= settings.em_max_iterations; ++run.iterations) {
    const auto e = bp_expectation(panel, run.lam_a, run.lam_b, run.lam_c);
    run.trace.push_back(e.log_lik);
    if (run.iterations > 0) {
      const double slack = 1e-10 + 1e-13 * std::abs(prev);
      if (e.log_lik < prev - slack) {
        throw EmMonotonicityError("EM log-likelihood decreased from " + format_double(prev) +
                                  " to " + format_double(e.log_lik) + " at iteration " +
                                  std::to_string(run.iterations));
      }
      if (std::abs(e.log_lik - prev) <= settings.em_rel_tolerance * std::abs(prev)) {
        run.converged = true;
        break;
      }
    }
    if (run.iterations == settings.em_max_iterations) {
      break;
    }
    prev = e.log_lik;

    RealGrid resp_a(na, nt);
    RealGrid resp_b(na, nt);
    double total_common = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      const double s = e.common.values()[i];
      resp_a.values()[i] = std::max(0.0, static_cast<double>(panel.counts_a.values()[i]) - s);
      resp_b.values()[i] = std::max(0.0, static_cast<double>(panel.counts_b.values()[i]) - s);
      total_common += s;
    }
    run.block_a = fit_poisson_block(resp_a, run.block_a, settings).params;
    run.block_b = fit_poisson_block(resp_b, run.block_b, settings).params;
    run.lam_a = intensity_surface(run.block_a, na, nt);
    run.lam_b = intensity_surface(run.block_b, na, nt);
    if (!settings.fixed_common_rate) {
      run.lam_c = total_common / static_cast<double>(cells);
      if (run.lam_c < 1e-12) {
        run.collapsed = true;
        break;
      }
    }
  }
  return run;
}

} // namespace

FitResult fit_bivariate_poisson(const MortalityPanel &panel,
                                const OptimSettings &settings) {
  const auto dp = fit_double_poisson(panel, settings);
  auto result = make_result(ModelFamily::BivariatePoisson, panel.ages, panel.years);
  result.notes = dp.notes;
  const auto &lam_a0 = (*dp.fitted_intensities)[0];
  const auto &lam_b0 = (*dp.fitted_intensities)[1];
  const std::size_t cells = lam_a0.size();

  std::vector<double> starts;
  if (settings.fixed_common_rate) {
    const double lam_c = *settings.fixed_common_rate;
    if (!(lam_c >= 0.0) || !std::isfinite(lam_c)) {
      throw std::invalid_argument("fixed common rate must be finite and non-negative");
    }
    if (lam_c == 0.0) {
      mark_degenerate(result, dp, "common rate fixed at zero");
      result.log_lik = bp_expectation(panel, lam_a0, lam_b0, 0.0).log_lik;
      result.converged = dp.converged;
      result.trace = {result.log_lik};
      return result;
    }
    starts.push_back(lam_c);
  } else {
    // Directional derivative of the log-likelihood in the common rate at the
    // double Poisson solution. A negative value makes the boundary a KKT point.
    double score = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      const double x = static_cast<double>(panel.counts_a.values()[i]);
      const double y = static_cast<double>(panel.counts_b.values()[i]);
      const double term = x * y / (lam_a0.values()[i] * lam_b0.values()[i]);
      score += term - 1.0;
      scale += term + 1.0;
    }
    if (score < -1e-10 * scale) {
      mark_degenerate(result, dp, "no positive dependence at the boundary");
      result.converged = dp.converged;
      result.trace = {result.log_lik};
      return result;
    }
    std::vector<double> ra(cells);
    std::vector<double> rb(cells);
    double min_rate = std::numeric_limits<double>::infinity();
    double ceiling = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cells; ++i) {
      const auto x = panel.counts_a.values()[i];
      const auto y = panel.counts_b.values()[i];
      ra[i] = static_cast<double>(x) - lam_a0.values()[i];
      rb[i] = static_cast<double>(y) - lam_b0.values()[i];
      min_rate = std::min({min_rate, lam_a0.values()[i], lam_b0.values()[i]});
      ceiling = std::min(ceiling, static_cast<double>(std::min(x, y)));
    }
    const double n = static_cast<double>(cells);
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      sab += (ra[i] - ma) * (rb[i] - mb);
      saa += (ra[i] - ma) * (ra[i] - ma);
      sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    const double rho = (saa > 0.0 && sbb > 0.0) ? sab / std::sqrt(saa * sbb) : 0.0;
    const double proxy = 0.9 * min_rate * rho;
    starts.push_back(std::max(settings.em_initial_floor, proxy));
    // With no usable residual correlation the floored start sits where the
    // likelihood is flat in the common rate; add a start inside the ceiling.
    if (proxy <= settings.em_initial_floor && 0.5 * ceiling > settings.em_initial_floor) {
      starts.push_back(0.5 * ceiling);
    }
  }

  std::optional<EmRun> best;
  for (double start : starts) {
    auto run = run_em(panel, dp, start, settings);
    if (!best || run.trace.back() > best->trace.back()) {
      best = std::move(run);
    }
  }
  auto &run = *best;
  result.iterations = run.iterations;
  result.trace = run.trace;
  if (run.collapsed || (!settings.fixed_common_rate && dp.log_lik >= run.trace.back())) {
    mark_degenerate(result, dp, run.collapsed ? "common rate reached zero"
                                              : "boundary likelihood not improved");
    result.converged = dp.converged;
    return result;
  }
  result.converged = run.converged;
  result.blocks = {std::move(run.block_a), std::move(run.block_b)};
  result.log_common_rate = std::log(run.lam_c);
  result.log_lik = run.trace.back();
  result.fitted_gap = RealGrid(run.lam_a.rows(), run.lam_a.cols());
  for (std::size_t i = 0; i < cells; ++i) {
    result.fitted_gap.values()[i] = run.lam_a.values()[i] - run.lam_b.values()[i];
  }
  result.fitted_intensities = std::array<RealGrid, 2>{std::move(run.lam_a),
                                                      std::move(run.lam_b)};
  if (!result.converged) {
    result.notes.push_back("EM iteration limit reached");
  }
  return result;
}

ParamVector skellam_initial_params(const GapPanel &gap) {
  const auto na = gap.n_ages();
  const auto nt = gap.n_years();
  double mean_abs = 0.0;
  for (auto g : gap.gaps.values()) {
    mean_abs += std::abs(static_cast<double>(g));
  }
  mean_abs /= static_cast<double>(gap.gaps.size());
  // Both parts share an offset of about one standard deviation of a typical
  // gap, which keeps the Bessel argument away from zero at the start.
  const double offset = std::sqrt(mean_abs) + 0.5;
  RealGrid pos(na, nt);
  RealGrid neg(na, nt);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const double g = static_cast<double>(gap.gaps.values()[i]);
    pos.values()[i] = std::max(g, 0.0) + offset;
    neg.values()[i] = std::max(-g, 0.0) + offset;
  }
  const AgePeriodParams flat(na, nt);
  const std::array<AgePeriodParams, 2> blocks{fit_poisson_block(pos, flat, {}).params,
                                              fit_poisson_block(neg, flat, {}).params};
  return pack(blocks);
}

FitResult fit_skellam(const GapPanel &gap, const OptimSettings &settings,
                      const std::optional<ParamVector> &init) {
  if (gap.gaps.rows() != gap.n_ages() || gap.gaps.cols() != gap.n_years() ||
      gap.gaps.empty()) {
    throw std::invalid_argument("gap panel is incomplete");
  }
  const auto layout = model_layout(ModelFamily::Skellam, gap.n_ages(), gap.n_years());
  if (init && static_cast<std::size_t>(init->size()) != layout.size()) {
    throw std::invalid_argument("initial Skellam parameters have the wrong length");
  }

  // Fit in a canonical orientation, first non-zero gap positive, so that
  // negating the panel swaps the two blocks exactly.
  const auto first = std::find_if(gap.gaps.values().begin(), gap.gaps.values().end(),
                                  [](long long g) { return g != 0; });
  if (first != gap.gaps.values().end() && *first < 0) {
    auto flipped = gap;
    for (auto &g : flipped.gaps.values()) {
      g = -g;
    }
    std::optional<ParamVector> flipped_init;
    if (init) {
      const auto half = static_cast<Eigen::Index>(layout.block_length());
      flipped_init = ParamVector(init->size());
      *flipped_init << init->tail(half), init->head(half);
    }
    auto r = fit_skellam(flipped, settings, flipped_init);
    std::swap(r.blocks[0], r.blocks[1]);
    refresh_fitted_surfaces(r);
    return r;
  }

  auto result = make_result(ModelFamily::Skellam, gap.ages, gap.years);
  const ParamVector theta0 = init ? *init : skellam_initial_params(gap);
  const Objective objective = [&gap](const Eigen::VectorXd &x, Eigen::VectorXd *g) {
    try {
      return skellam_objective(gap, x, g);
    } catch (const OverflowError &) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const bool all_zero = std::all_of(gap.gaps.values().begin(), gap.gaps.values().end(),
                                    [](long long g) { return g == 0; });
  BfgsResult opt;
  if (all_zero) {
    // Flat along lambda_C - lambda_D: optimize a shared block so the fit
    // stays on the symmetric ridge instead of drifting off it by rounding.
    const auto half = static_cast<Eigen::Index>(layout.block_length());
    const Objective ridge = [&](const Eigen::VectorXd &x, Eigen::VectorXd *g) {
      Eigen::VectorXd full(2 * half);
      full << x, x;
      Eigen::VectorXd g_full;
      const double f = objective(full, g ? &g_full : nullptr);
      if (g && std::isfinite(f)) {
        *g = g_full.head(half) + g_full.tail(half);
      }
      return f;
    };
    opt = minimize_bfgs(ridge, 0.5 * (theta0.head(half) + theta0.tail(half)), settings.bfgs());
    Eigen::VectorXd full(2 * half);
    full << opt.x, opt.x;
    opt.x = full;
  } else {
    opt = minimize_bfgs(objective, theta0, settings.bfgs());
  }
  result.blocks = unpack(opt.x, layout).blocks;
  result.log_lik = -opt.value;
  result.iterations = opt.iterations;
  result.converged = opt.converged;
  for (double f : opt.trace) {
    result.trace.push_back(-f);
  }
  if (!opt.converged) {
    result.notes.push_back("quasi-Newton: " + opt.message);
  }
  if (all_zero) {
    result.notes.push_back("weakly identified: all-zero gap panel");
  }
  refresh_fitted_surfaces(result);
  return result;
}

} // namespace gapmort
