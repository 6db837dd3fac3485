#include "helpers.hpp"
#include "kgan/dynamics.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace kgan;
using kgan::test::masses;
using kgan::test::pair_1d;

namespace {

Scenario two_regions(double gap) {
  return Scenario(KernelSpec(1.0, 2), masses({{0.0, 0.0}, {gap, 0.0}}, {1.0, 1.0}),
                  masses({{0.4, -0.2}, {gap + 0.3, 0.5}, {gap - 0.4, 0.1}}, {0.8, 0.4, 0.4}),
                  Hyperparams(0.01, 0.01, 1.0));
}

double max_local_vs_full(const Scenario& s, long T) {
  Simulator full(s, Engine::explicit_gda), local(s, Engine::local);
  double worst = 0.0;
  for (long t = 0; t < T; ++t) {
    full.step();
    local.step();
    worst = std::max(worst, (full.points() - local.points()).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("first explicit step from f = 0") {
  const Scenario s = pair_1d(0.3);
  const auto [f1, X1] = step_explicit(DiscriminatorState(1), s.generated.points, s);
  CHECK(X1 == s.generated.points);
  Vector zero = Vector::Zero(1), x = Vector::Constant(1, 0.3);
  CHECK(f1.coef_at(zero) == doctest::Approx(0.01));
  CHECK(f1.coef_at(x) == doctest::Approx(-0.008));
  CHECK(f1.size() == 2);
}

TEST_CASE("two steps move the generated point toward the true point") {
  const Scenario s = pair_1d(0.3);
  auto [f1, X1] = step_explicit(DiscriminatorState(1), s.generated.points, s);
  auto [f2, X2] = step_explicit(f1, X1, s);
  CHECK(X2(0, 0) < 0.3);
  CHECK(X2(0, 0) > 0.0);
}

TEST_CASE("optimal discriminator") {
  const Scenario s = pair_1d(0.0);
  const DiscriminatorState f = optimal_discriminator(s);
  CHECK(f.size() == 1);
  CHECK(f.coef_at(Vector::Zero(1)) == doctest::Approx(0.2));
  CHECK(f.hessian(s.kernel, Vector::Zero(1))(0, 0) == doctest::Approx(-0.2));

  Scenario bal(KernelSpec(1.0, 1), masses({{0.0}}, {1.0}), masses({{0.0}}, {1.0}), Hyperparams(0.01, 0.01, 1.0));
  CHECK(optimal_discriminator(bal).empty());

  Scenario wide = s.with_width(2.0).with_hyper(Hyperparams(0.01, 0.01, 0.5));
  CHECK(optimal_discriminator(wide).hessian(wide.kernel, Vector::Zero(1))(0, 0) == doctest::Approx(-0.2 / (0.5 * 4.0)));
}

TEST_CASE("loss") {
  const Scenario s = pair_1d(0.7);
  CHECK(loss_eval(DiscriminatorState(1), s.generated.points, s) == 0.0);

  // Generated point far enough that f vanishes there.
  const Scenario far = pair_1d(100.0);
  DiscriminatorState f(1);
  f.add_term(Vector::Zero(1), 1.0);
  CHECK(loss_eval(f, far.generated.points, far) == doctest::Approx(0.5));

  // f* maximizes the concave loss, and its value is ||mu_r - mu_g||^2 / (2 lambda).
  const DiscriminatorState fs = optimal_discriminator(s);
  const double best = loss_eval(fs, s.generated.points, s);
  CHECK(best == doctest::Approx(0.5 * fs.norm_sq(s.kernel) * s.hyper.lambda()));
  CHECK(best >= 0.0);
  for (const auto& [c, w] : fs.terms()) {
    for (double eps : {1e-3, -1e-3}) {
      DiscriminatorState g = fs;
      g.add_term(c, eps);
      CHECK(loss_eval(g, s.generated.points, s) < best);
    }
  }
}

TEST_CASE("equilibrium residual") {
  CHECK(equilibrium_residual(pair_1d(0.0).generated.points, pair_1d(0.0)) == 0.0);
  Scenario bal(KernelSpec(1.0, 1), masses({{0.0}}, {1.0}), masses({{0.0}}, {1.0}), Hyperparams(0.01, 0.01, 1.0));
  CHECK(equilibrium_residual(bal.generated.points, bal) == 0.0);

  Scenario off(KernelSpec(1.0, 2), masses({{0.0, 0.0}}, {1.0}), masses({{0.5, 0.0}}, {0.8}),
               Hyperparams(0.01, 0.01, 1.0));
  // grad_1 K(x~, 0) p - grad_1 K(x~, x~) p~ = -0.5 exp(-1/8) in the first coordinate.
  CHECK(equilibrium_residual(off.generated.points, off) == doctest::Approx(0.5 * std::exp(-0.125)));
}

TEST_CASE("eliminated generator update") {
  const Scenario s = pair_1d(0.3);
  std::vector<Matrix> hist{s.generated.points};
  CHECK(step_eliminated(hist, s) == s.generated.points);

  SUBCASE("matches the explicit engine") {
    std::mt19937_64 rng(9);
    const Scenario r = kgan::test::random_scenario(rng, 2, 2, 4);
    DiscriminatorState f(2);
    Matrix X = r.generated.points;
    std::vector<Matrix> h{X};
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      step_explicit_inplace(f, X, r, t);
      h.push_back(step_eliminated(h, r));
      worst = std::max(worst, (h.back() - X).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-10);
  }

  SUBCASE("memory collapses when lambda eta_d = 1") {
    const Scenario c = pair_1d(0.3, 1.0, 0.5, 2.0);
    Matrix a(1, 1), b(1, 1), x1(1, 1), x2(1, 1);
    a << 0.9;
    b << -3.0;
    x1 << 0.25;
    x2 << 0.2;
    // Only the iterate before the current one enters the sum.
    const Matrix r1 = step_eliminated({a, x1, x2}, c);
    const Matrix r2 = step_eliminated({b, x1, x2}, c);
    CHECK(r1 == r2);
    CHECK(step_eliminated({a, b, x2}, c) != r1);
  }
}

TEST_CASE("engines agree") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Scenario s = kgan::test::random_scenario(rng, 1 + trial % 3, 2, 5);
    Simulator a(s, Engine::explicit_gda), b(s, Engine::eliminated);
    double worst = 0.0;
    for (int t = 0; t < 300; ++t) {
      a.step();
      b.step();
      worst = std::max(worst, (a.points() - b.points()).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-10);
    // Reassembled discriminators agree as functions.
    const DiscriminatorState fa = a.discriminator(), fb = b.discriminator();
    const Vector x = s.real.point(0);
    CHECK(fa.value(s.kernel, x) == doctest::Approx(fb.value(s.kernel, x)).epsilon(1e-9));
  }
}

TEST_CASE("local engine") {
  SUBCASE("single region is the full step") {
    const Scenario s = pair_1d(0.4);
    const auto part = partition_isolated(s);
    DiscriminatorState f(1);
    Matrix X = s.generated.points;
    for (int t = 0; t < 20; ++t) {
      auto [fl, Xl] = step_local(f, X, 0, s, part);
      step_explicit_inplace(f, X, s, t);
      CHECK(Xl == X);
      CHECK(fl.value(s.kernel, Vector::Zero(1)) == f.value(s.kernel, Vector::Zero(1)));
    }
  }
  SUBCASE("separated regions match, close regions do not") {
    CHECK(max_local_vs_full(two_regions(20.0), 1000) < 1e-8);
    CHECK(max_local_vs_full(two_regions(2.0), 1000) > 1e-3);
  }
  SUBCASE("error is monotone in the kernel floor") {
    double prev_err = 0.0, prev_floor = 0.0;
    for (double gap : {8.0, 5.0, 3.5}) {
      const Scenario s = two_regions(gap);
      const double floor = partition_isolated(s).kernel_floor;
      const double err = max_local_vs_full(s, 500);
      CHECK(floor > prev_floor);
      CHECK(err > prev_err);
      // C T kernel_floor with a measured C of order one.
      CHECK(err <= 1.0 * 500 * floor);
      prev_err = err;
      prev_floor = floor;
    }
  }
}

TEST_CASE("fixed point") {
  // The far region's kernel tail moves each point by ~1e-30, so centers stop
  // being bitwise equal and coefficients split between near-duplicate
  // centers; the drift is measured on f itself at probe points.
  Scenario s(KernelSpec(0.8, 2), masses({{0.0, 0.0}, {9.0, 1.0}}, {1.0, 0.7}),
             masses({{0.0, 0.0}, {9.0, 1.0}, {9.0, 1.0}}, {0.8, 0.3, 0.3}), Hyperparams(0.02, 0.01, 1.0));
  const DiscriminatorState fs = optimal_discriminator(s);
  std::vector<Vector> probes;
  for (int i = 0; i < 2; ++i)
    for (double dx : {-0.8, 0.0, 0.8})
      for (double dy : {-0.8, 0.0, 0.8}) probes.push_back(s.real.point(i) + Eigen::Vector2d(dx, dy));
  Simulator sim(s, Engine::explicit_gda, fs);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Matrix before = sim.points();
    const DiscriminatorState fb = sim.discriminator();
    sim.step();
    worst = std::max(worst, (sim.points() - before).cwiseAbs().maxCoeff());
    const DiscriminatorState fa = sim.discriminator();
    for (const Vector& z : probes) worst = std::max(worst, std::abs(fa.value(s.kernel, z) - fb.value(s.kernel, z)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("translation equivariance") {
  std::mt19937_64 rng(4);
  const Scenario s = kgan::test::random_scenario(rng, 2, 2, 3);
  Eigen::RowVector2d shift(3.25, -1.5);
  PointMasses r = s.real, g = s.generated;
  r.points.rowwise() += shift;
  g.points.rowwise() += shift;
  const Scenario t(s.kernel, r, g, s.hyper);
  const auto a = simulate(s, 200, Engine::explicit_gda, 50);
  const auto b = simulate(t, 200, Engine::explicit_gda, 50);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    Matrix moved = a.steps[k].points;
    moved.rowwise() += shift;
    CHECK((moved - b.steps[k].points).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(a.steps[k].loss == doctest::Approx(b.steps[k].loss).epsilon(1e-9));
  }
}

TEST_CASE("simulate") {
  SUBCASE("records and converges") {
    Scenario s = pair_1d(1e-3);
    const auto rec = simulate(s, 20000, Engine::explicit_gda, 1000);
    CHECK(rec.steps.size() == 21);
    CHECK(rec.steps.front().t == 0);
    CHECK(rec.steps.back().t == 20000);
    CHECK(rec.steps.back().max_dist < 1e-6 * rec.steps.front().max_dist);
    CHECK_FALSE(rec.diverged);
  }
  SUBCASE("one step from f = 0 leaves the points") {
    const auto rec = simulate(pair_1d(0.3), 1, Engine::eliminated);
    CHECK(rec.steps.back().points(0, 0) == 0.3);
  }
  SUBCASE("above the bound diverges") {
    try {
      simulate(pair_1d(1e-3, 1.0, 3.0), 5000, Engine::explicit_gda);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.partial().diverged);
      CHECK(e.step() > 0);
      CHECK(!e.partial().steps.empty());
    }
  }
  SUBCASE("csv") {
    const auto rec = simulate(pair_1d(0.3), 3, Engine::explicit_gda);
    std::ostringstream os;
    write_trajectory_csv(rec, os);
    const std::string csv = os.str();
    CHECK(csv.rfind("t,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  }
}
