#include "helpers.hpp"
#include "kgan/errors.hpp"
#include "kgan/scenario.hpp"

#include <doctest.h>

#include <cmath>

using namespace kgan;
using kgan::test::masses;

namespace {
const char* kFig2 = R"({
  "kernel": {"family": "rbf", "width": 1.0},
  "real": {"points": [[0.0]], "weights": [1.0]},
  "generated": {"points": [[0.0]], "weights": [0.8]},
  "hyper": {"eta_d": 0.01, "eta_g": 0.01, "lambda": 1.0}
})";
}

TEST_CASE("parse the reference scenario") {
  const Scenario s = parse_scenario(kFig2);
  CHECK(s.dim() == 1);
  CHECK(s.hyper.mu() == doctest::Approx(1.0));
  const auto part = partition_isolated(s);
  CHECK(delta_i(s, part, 0) == doctest::Approx(0.2));
}

TEST_CASE("scenario round trip") {
  const Scenario s = parse_scenario(kFig2);
  const Scenario t = parse_scenario(scenario_to_json(s));
  CHECK(t.sigma() == s.sigma());
  CHECK(t.real.points == s.real.points);
  CHECK(t.generated.weights == s.generated.weights);
  CHECK(t.hyper.eta_g() == s.hyper.eta_g());
}

TEST_CASE("config errors name the field") {
  std::string bad = kFig2;
  bad.replace(bad.find("[0.8]"), 5, "[0.0]");
  try {
    parse_scenario(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "generated.weights");
  }

  std::string missing = kFig2;
  missing.replace(missing.find("\"lambda\": 1.0"), 13, "\"lam\": 1.0");
  try {
    parse_scenario(missing);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "hyper.lambda");
  }

  try {
    parse_scenario("{\n  \"kernel\": {\n  oops\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("dimension mismatch") {
  std::string bad = kFig2;
  bad.replace(bad.find("[[0.0]], \"weights\": [0.8]"), 7, "[[0,1]]");
  CHECK_THROWS_AS(parse_scenario(bad), DimensionError);
}

TEST_CASE("isolated partition") {
  SUBCASE("far apart") {
    Scenario s(KernelSpec(1.0, 1), masses({{0.0}, {20.0}}, {1.0, 1.0}), masses({{0.9}, {19.1}}, {0.8, 0.8}),
               Hyperparams(0.01, 0.01, 1.0));
    const auto p = partition_isolated(s);
    CHECK(p.separation_ok);
    CHECK(p.assignment == std::vector<int>{0, 1});
    CHECK(p.kernel_floor == doctest::Approx(std::exp(-0.5 * 18.2 * 18.2)));
  }
  SUBCASE("single true point") {
    const auto p = partition_isolated(kgan::test::pair_1d(0.5));
    CHECK(p.separation_ok);
    CHECK(p.kernel_floor == 0.0);
  }
  SUBCASE("too close") {
    Scenario s(KernelSpec(1.0, 1), masses({{0.0}, {1.0}}, {1.0, 1.0}), masses({{0.0}}, {0.8}),
               Hyperparams(0.01, 0.01, 1.0));
    const auto p = partition_isolated(s, 1e-6);
    CHECK_FALSE(p.separation_ok);
    CHECK(p.kernel_floor == doctest::Approx(std::exp(-0.5)));
  }
}

TEST_CASE("mass gap") {
  Scenario two(KernelSpec(1.0, 1), masses({{0.0}}, {1.0}), masses({{0.1}, {-0.1}}, {0.5, 0.5}),
               Hyperparams(0.01, 0.01, 1.0));
  CHECK(delta_i(two, partition_isolated(two), 0) == doctest::Approx(0.0));
  Scenario neg(KernelSpec(1.0, 1), masses({{0.0}}, {0.5}), masses({{0.0}}, {0.8}), Hyperparams(0.01, 0.01, 1.0));
  CHECK(delta_i(neg, partition_isolated(neg), 0) == doctest::Approx(-0.3));
}

TEST_CASE("partition properties") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Scenario s = kgan::test::random_scenario(rng, 2, 3, 7);
    const auto p = partition_isolated(s);
    double gap = 0.0;
    for (int r = 0; r < p.regions(); ++r) gap += delta_i(s, p, r);
    CHECK(gap == doctest::Approx(s.real.total_mass() - s.generated.total_mass()));

    // Reverse the generated points; the assignment must follow.
    PointMasses rev = s.generated;
    rev.points = s.generated.points.colwise().reverse();
    rev.weights = s.generated.weights.reverse();
    const Scenario sr(s.kernel, s.real, rev, s.hyper);
    const auto pr = partition_isolated(sr);
    const int n = s.generated.size();
    for (int j = 0; j < n; ++j) CHECK(pr.assignment[n - 1 - j] == p.assignment[j]);
  }
}
