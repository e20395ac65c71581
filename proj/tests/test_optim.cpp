#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "gapmort/optim.hpp"

using namespace gapmort;

namespace {

double rosenbrock(const Eigen::VectorXd &x, Eigen::VectorXd *g) {
  const double a = 1.0 - x[0];
  const double b = x[1] - x[0] * x[0];
  if (g) {
    g->resize(2);
    (*g)[0] = -2.0 * a - 400.0 * x[0] * b;
    (*g)[1] = 200.0 * b;
  }
  return a * a + 100.0 * b * b;
}

} // namespace

TEST_CASE("quadratic converges to the exact minimizer") {
  Eigen::MatrixXd q(3, 3);
  q << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  Eigen::VectorXd c(3);
  c << 1, -2, 0.5;
  const Objective f = [&](const Eigen::VectorXd &x, Eigen::VectorXd *g) {
    if (g) {
      *g = q * x - c;
    }
    return 0.5 * x.dot(q * x) - c.dot(x);
  };
  const auto r = minimize_bfgs(f, Eigen::VectorXd::Zero(3));
  CHECK(r.converged);
  const Eigen::VectorXd exact = q.ldlt().solve(c);
  CHECK((r.x - exact).cwiseAbs().maxCoeff() < 1e-6);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i] <= r.trace[i - 1]);
  }
}

TEST_CASE("Rosenbrock") {
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const auto r = minimize_bfgs(rosenbrock, x0);
  CHECK(r.converged);
  CHECK(std::abs(r.x[0] - 1.0) < 1e-5);
  CHECK(std::abs(r.x[1] - 1.0) < 1e-5);
  CHECK(r.gradient.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("iteration cap returns best so far without converging") {
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  BfgsSettings s;
  s.max_iterations = 5;
  const auto r = minimize_bfgs(rosenbrock, x0, s);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 5);
  CHECK(r.value < rosenbrock(x0, nullptr));
}

TEST_CASE("infeasible trial points are backtracked") {
  // f = x - log(x) on x > 0, +inf elsewhere; a unit step from x = 0.05 leaves the domain
  const Objective f = [](const Eigen::VectorXd &x, Eigen::VectorXd *g) {
    if (!(x[0] > 0.0)) {
      return std::numeric_limits<double>::infinity();
    }
    if (g) {
      g->resize(1);
      (*g)[0] = 1.0 - 1.0 / x[0];
    }
    return x[0] - std::log(x[0]);
  };
  Eigen::VectorXd x0(1);
  x0 << 5.0;
  const auto r = minimize_bfgs(f, x0);
  CHECK(r.converged);
  CHECK(std::abs(r.x[0] - 1.0) < 1e-6);
}

TEST_CASE("start at the optimum and non-finite start") {
  Eigen::VectorXd x0(2);
  x0 << 1.0, 1.0;
  const auto r = minimize_bfgs(rosenbrock, x0);
  CHECK(r.converged);
  CHECK(r.iterations == 0);

  const Objective bad = [](const Eigen::VectorXd &, Eigen::VectorXd *g) {
    if (g) {
      g->setZero(1);
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  const auto b = minimize_bfgs(bad, Eigen::VectorXd::Zero(1));
  CHECK_FALSE(b.converged);
  CHECK_FALSE(b.message.empty());
}
