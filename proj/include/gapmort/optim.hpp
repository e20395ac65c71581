#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gapmort {

struct LineSearchSettings {
  double sufficient_decrease = 1e-4; // Armijo constant
  double shrink = 0.5;
  int max_backtracks = 60;
};

struct BfgsSettings {
  int max_iterations = 2000;
  /// Stop once the sup-norm of the gradient drops below this.
  double gradient_tolerance = 1e-6;
  LineSearchSettings line_search;
};

/// Objective returning f(x); when `grad` is non-null it also fills the
/// gradient. Returning +inf marks x as infeasible for the line search.
using Objective = std::function<double(const Eigen::VectorXd &x, Eigen::VectorXd *grad)>;

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
  std::vector<double> trace; // objective after each accepted step
};

/// Minimizes `f` with BFGS inverse-Hessian updates and a backtracking
/// line search. Never throws for non-convergence; the best point found is
/// returned with converged = false.
BfgsResult minimize_bfgs(const Objective &f, Eigen::VectorXd x0,
                         const BfgsSettings &settings = {});

} // namespace gapmort
