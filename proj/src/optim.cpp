#include "gapmort/optim.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace gapmort {

namespace {

double sup_norm(const Eigen::VectorXd &v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

bool in_rounding_zone(double f_new, double f_old) {
  return std::abs(f_new - f_old) <= 1e-13 * std::max(1.0, std::abs(f_old));
}

} // namespace

BfgsResult minimize_bfgs(const Objective &f, Eigen::VectorXd x0,
                         const BfgsSettings &settings) {
  const auto n = x0.size();
  BfgsResult r;
  r.x = std::move(x0);
  r.gradient = Eigen::VectorXd::Zero(n);
  r.value = f(r.x, &r.gradient);
  r.evaluations = 1;
  r.trace.push_back(r.value);
  if (!std::isfinite(r.value)) {
    r.message = "objective not finite at the starting point";
    return r;
  }

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool h_is_identity = true;
  double identity_scale = 1.0;
  Eigen::VectorXd x_new(n);
  Eigen::VectorXd g_new(n);

  for (r.iterations = 0; r.iterations < settings.max_iterations; ++r.iterations) {
    if (sup_norm(r.gradient) < settings.gradient_tolerance) {
      r.converged = true;
      r.message = "gradient tolerance reached";
      return r;
    }
    Eigen::VectorXd d = -(h * r.gradient);
    double slope = r.gradient.dot(d);
    if (!(slope < 0.0)) {
      h = Eigen::MatrixXd::Identity(n, n) * identity_scale;
      h_is_identity = true;
      d = -(h * r.gradient);
      slope = r.gradient.dot(d);
    }

    const auto &ls = settings.line_search;
    double step = 1.0;
    bool accepted = false;
    double f_new = 0.0;
    bool measurable = true;
    for (int b = 0; b <= ls.max_backtracks; ++b, step *= ls.shrink) {
      x_new = r.x + step * d;
      f_new = f(x_new, nullptr);
      ++r.evaluations;
      if (!std::isfinite(f_new)) {
        continue;
      }
      if (f_new <= r.value + ls.sufficient_decrease * step * slope) {
        // a predicted decrease below the resolution of f passes the test
        // without any actual decrease
        measurable = f_new < r.value;
        f_new = f(x_new, &g_new);
        ++r.evaluations;
        accepted = true;
        break;
      }
      if (in_rounding_zone(f_new, r.value)) {
        // no measurable decrease left; take the step if it improves stationarity
        f(x_new, &g_new);
        ++r.evaluations;
        if (sup_norm(g_new) < sup_norm(r.gradient)) {
          accepted = true;
          measurable = false;
          break;
        }
      }
    }
    if (!accepted) {
      if (!h_is_identity) {
        h = Eigen::MatrixXd::Identity(n, n) * identity_scale;
        h_is_identity = true;
        continue;
      }
      r.message = "line search failed to find a decrease";
      return r;
    }

    const Eigen::VectorXd s = x_new - r.x;
    const Eigen::VectorXd y = g_new - r.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (h_is_identity) {
        h = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
      }
      identity_scale = sy / y.squaredNorm();
      const Eigen::VectorXd hy = h * y;
      const double yhy = y.dot(hy);
      h += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
           (hy * s.transpose() + s * hy.transpose()) / sy;
      h_is_identity = false;
    } else if (!measurable && !h_is_identity) {
      // a step below the objective's resolution that yields no curvature
      // either: the approximation has stalled, so restart from the latest scale
      h = Eigen::MatrixXd::Identity(n, n) * identity_scale;
      h_is_identity = true;
    } else if (!measurable && s.isZero(0.0)) {
      if (identity_scale == 1.0) {
        r.message = "no representable step along the gradient";
        break;
      }
      // the curvature-based scale can be far too small along the gradient;
      // let the line search find the step length from a unit start instead
      identity_scale = 1.0;
      h = Eigen::MatrixXd::Identity(n, n);
    }
    r.x = x_new;
    r.value = f_new;
    r.gradient = g_new;
    r.trace.push_back(r.value);
  }
  r.converged = sup_norm(r.gradient) < settings.gradient_tolerance;
  if (r.converged) {
    r.message = "gradient tolerance reached";
  } else if (r.message.empty()) {
    r.message = "iteration limit reached";
  }
  return r;
}

} // namespace gapmort
