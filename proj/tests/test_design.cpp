#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "gapmort/design.hpp"

using namespace gapmort;

TEST_CASE("linear predictor under corner coding") {
  AgePeriodParams p(2, 3, 1.0);
  p.age_effects[0] = 0.5;
  p.period_effects[1] = -0.2;
  CHECK(linear_predictor(p, 0, 0) == 1.0);
  CHECK(linear_predictor(p, 1, 2) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(linear_predictor(p, 1, 0) == 1.5);
  CHECK_THROWS_AS(linear_predictor(p, 2, 0), std::out_of_range);
  CHECK_THROWS_AS(linear_predictor(p, 0, 3), std::out_of_range);

  const AgePeriodParams zero(4, 5);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t t = 0; t < 5; ++t) {
      CHECK(linear_predictor(zero, a, t) == 0.0);
    }
  }
}

TEST_CASE("intensity surfaces") {
  for (double v : intensity_surface(AgePeriodParams(3, 4), 3, 4).values()) {
    CHECK(v == 1.0);
  }
  for (double v : intensity_surface(AgePeriodParams(3, 4, std::log(100.0)), 3, 4).values()) {
    CHECK(v == doctest::Approx(100.0).epsilon(1e-14));
  }
  AgePeriodParams p(3, 3, 0.3);
  p.age_effects = {0.1, -0.4};
  p.period_effects = {0.25, 0.05};
  const double age[3] = {0.0, 0.1, -0.4};
  const double per[3] = {0.0, 0.25, 0.05};
  const auto g = intensity_surface(p, 3, 3);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(g(a, t) == doctest::Approx(std::exp(0.3 + age[a] + per[t])).epsilon(1e-15));
    }
  }
  CHECK_THROWS_AS(intensity_surface(p, 3, 4), std::invalid_argument);
}

TEST_CASE("overflow guard names the cell") {
  AgePeriodParams p(2, 2, 600.0);
  p.age_effects[0] = 50.0;
  p.period_effects[0] = 60.0;
  try {
    intensity_surface(p, 2, 2);
    FAIL("expected overflow");
  } catch (const OverflowError &e) {
    CHECK(std::string(e.what()).find("(1, 1)") != std::string::npos);
  }
}

TEST_CASE("pack and unpack") {
  const AgePeriodParams single(2, 3);
  CHECK(pack(std::span(&single, 1)).size() == 4);
  CHECK(block_size(2, 3) == 4);

  std::mt19937_64 gen(7);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t na = 1 + rep % 5, nt = 1 + rep % 7;
    std::array<AgePeriodParams, 2> blocks{AgePeriodParams(na, nt, n01(gen)),
                                          AgePeriodParams(na, nt, n01(gen))};
    for (auto &b : blocks) {
      for (auto &v : b.age_effects) {
        v = n01(gen);
      }
      for (auto &v : b.period_effects) {
        v = n01(gen);
      }
    }
    const double extra = n01(gen);
    const ParamLayout layout{na, nt, 2, 1};
    const auto theta = pack(blocks, std::span(&extra, 1));
    CHECK(static_cast<std::size_t>(theta.size()) == 2 * (1 + (na - 1) + (nt - 1)) + 1);
    const auto back = unpack(theta, layout);
    CHECK(back.blocks[0] == blocks[0]);
    CHECK(back.blocks[1] == blocks[1]);
    CHECK(back.extras.at(0) == extra);
    CHECK_THROWS_AS(unpack(ParamVector::Zero(theta.size() + 1), layout),
                    std::invalid_argument);
  }
}

TEST_CASE("parameter map is injective on a small grid") {
  const std::size_t na = 3, nt = 4;
  AgePeriodParams p(na, nt, 0.2);
  p.age_effects = {0.3, -0.1};
  p.period_effects = {0.05, 0.1, -0.2};
  const ParamLayout layout{na, nt, 1, 0};
  const auto theta = pack(std::span(&p, 1));
  const double h = 1e-6;
  Eigen::MatrixXd jac(na * nt, theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    ParamVector up = theta, dn = theta;
    up[j] += h;
    dn[j] -= h;
    const auto gu = intensity_surface(unpack(up, layout).blocks[0], na, nt);
    const auto gd = intensity_surface(unpack(dn, layout).blocks[0], na, nt);
    for (std::size_t i = 0; i < na * nt; ++i) {
      jac(static_cast<Eigen::Index>(i), j) = (gu.values()[i] - gd.values()[i]) / (2 * h);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
  CHECK(lu.rank() == theta.size());

  // shifting the intercept against the age effects moves non-reference ages
  AgePeriodParams shifted = p;
  shifted.intercept += 0.5;
  for (auto &v : shifted.age_effects) {
    v -= 0.5;
  }
  CHECK(linear_predictor(shifted, 1, 1) == doctest::Approx(linear_predictor(p, 1, 1)));
  CHECK(linear_predictor(shifted, 0, 1) != doctest::Approx(linear_predictor(p, 0, 1)));
}

TEST_CASE("parameter rows round trip") {
  AgePeriodParams p(3, 3, 1.25);
  p.age_effects = {0.1, 1.0 / 3.0};
  p.period_effects = {-2.5e-7, 7.0};
  const std::vector<std::string> ages{"0-4", "5-9", "10+"};
  const std::vector<int> years{2000, 2001, 2002};
  const auto rows = param_rows(p, "A", ages, years);
  REQUIRE(rows.size() == 5);
  CHECK(rows[1].label == "age:5-9");
  CHECK(rows[4].label == "year:2002");
  std::ostringstream out;
  write_param_rows(out, rows);
  CHECK(out.str().rfind("block,label,value\n", 0) == 0);
  CHECK(params_from_rows(rows, "A", ages, years) == p);
  CHECK_THROWS(params_from_rows(rows, "B", ages, years));
}

TEST_CASE("format_double round trips") {
  for (double x : {0.1, 1.0 / 3.0, -1e-300, 6.02214076e23, 123456789.0}) {
    CHECK(std::stod(format_double(x)) == x);
  }
}
