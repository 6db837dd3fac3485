#include "helpers.hpp"
#include "kgan/errors.hpp"
#include "kgan/experiments.hpp"
#include "kgan/spectrum.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace kgan;
using kgan::test::masses;

namespace {

LocalLinearization ref(double sigma = 1.0, double lambda = 1.0, double eta = 0.01) {
  return make_linearization(Hyperparams(eta, eta, lambda), sigma, 1.0, 0.8, 1, 1);
}

LocalLinearization two_gen() { return make_linearization(Hyperparams(0.01, 0.01, 1.0), 1.0, 1.0, 0.4, 2, 1); }

const NuValue* find(const std::vector<NuValue>& nus, NuLabel l) {
  for (const auto& n : nus)
    if (n.label == l) return &n;
  return nullptr;
}

}  // namespace

TEST_CASE("linearization coefficients") {
  const auto lin = ref();
  CHECK(lin.a == doctest::Approx(1.0));
  CHECK(lin.b == doctest::Approx(0.16));
  CHECK(lin.c == doctest::Approx(0.8));
  CHECK(lin.m == doctest::Approx(0.58));
  CHECK(lin.complex_pair());

  Scenario bal(KernelSpec(1.0, 1), masses({{0.0}}, {1.0}), masses({{0.0}}, {1.0}), Hyperparams(0.01, 0.01, 1.0));
  const auto l0 = linearize(bal, partition_isolated(bal), 0);
  CHECK(l0.b == 0.0);
  CHECK(l0.m == doctest::Approx(0.5));

  Scenario mixed(KernelSpec(1.0, 1), masses({{0.0}}, {1.0}), masses({{0.0}, {0.0}}, {0.5, 0.3}),
                 Hyperparams(0.01, 0.01, 1.0));
  CHECK_THROWS_AS(linearize(mixed, partition_isolated(mixed), 0), HypothesisError);
}

TEST_CASE("closed-form eigenvalues") {
  auto nus = eigenvalues(ref());
  CHECK(nus.size() == 3);
  CHECK(find(nus, NuLabel::a)->value.real() == doctest::Approx(1.0));
  CHECK(find(nus, NuLabel::a)->multiplicity == kAmbient);
  CHECK(find(nus, NuLabel::b) == nullptr);
  const Complex cp = find(nus, NuLabel::c_plus)->value;
  CHECK(cp.real() == doctest::Approx(0.58));
  CHECK(std::abs(cp.imag()) == doctest::Approx(0.68088).epsilon(1e-5));

  const auto bal = make_linearization(Hyperparams(0.01, 0.01, 1.0), 1.0, 1.0, 1.0, 1, 1);
  nus = eigenvalues(bal);
  CHECK(find(nus, NuLabel::c_minus)->value.real() == doctest::Approx(0.5));
  CHECK(std::abs(find(nus, NuLabel::c_minus)->value.imag()) == doctest::Approx(0.86603).epsilon(1e-5));

  const auto lin2 = make_linearization(Hyperparams(0.01, 0.01, 1.0), 1.0, 1.0, 0.4, 2, 2);
  nus = eigenvalues(lin2);
  CHECK(find(nus, NuLabel::b)->value.real() == doctest::Approx(0.08));
  CHECK(find(nus, NuLabel::b)->multiplicity == 2);
  CHECK(find(nus, NuLabel::c_plus)->multiplicity == 2);
  CHECK(find(nus, NuLabel::c_plus)->value.real() == doctest::Approx(0.54));
  CHECK(std::abs(find(nus, NuLabel::c_plus)->value.imag()) == doctest::Approx(0.32924).epsilon(1e-5));
}

TEST_CASE("spectral radius and dominance") {
  auto r = rho_set(ref(), 0.01);
  CHECK(r.rho_a == doctest::Approx(0.99));
  CHECK(r.rho_c == doctest::Approx(0.9942233).epsilon(1e-7));
  CHECK(r.rho_max == doctest::Approx(0.9942233).epsilon(1e-7));
  CHECK(r.dominant == Dominance::C);
  CHECK(r.complex_pair);
  CHECK(r.stable);

  r = rho_set(two_gen(), 0.01);
  REQUIRE(r.rho_b.has_value());
  CHECK(*r.rho_b == doctest::Approx(0.9992));
  CHECK(r.rho_max == doctest::Approx(0.9992));
  CHECK(r.dominant == Dominance::B);
  CHECK(r.rho_c == doctest::Approx(0.994606).epsilon(1e-6));

  // eta_d a = 1 with the pair switched off.
  LocalLinearization deg = ref();
  deg.b = deg.c = 0.0;
  deg.m = 0.5 * deg.a;
  CHECK(rho_set(deg, 1.0).rho_a == 0.0);
}

TEST_CASE("stability bound") {
  auto sb = stability_iff(ref());
  CHECK(sb.bound == doctest::Approx(1.45));
  CHECK(sb.binding == "(a+b)/c");
  CHECK_FALSE(sb.stable_for(1.45));
  CHECK(sb.stable_for(1.4499));
  CHECK(rho_set(ref(), 1.45).rho_max == doctest::Approx(1.0));

  sb = stability_iff(two_gen());
  CHECK(sb.bound == doctest::Approx(2.0));

  LocalLinearization bal = make_linearization(Hyperparams(0.01, 0.01, 1.0), 1.0, 1.0, 1.0, 1, 1);
  CHECK_THROWS_AS(stability_iff(bal), HypothesisError);
}

TEST_CASE("printed bound is necessary, exact bound is the equivalence") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> lg(-2.0, 1.0), frac(0.05, 0.95), u01(0.0, 1.0);
  int complex_draws = 0, real_draws = 0;
  for (int t = 0; t < 5000; ++t) {
    const double lambda = std::pow(10.0, lg(rng)), sigma = std::pow(10.0, lg(rng));
    const double pt = frac(rng);
    const int n = 1 + t % 3;
    const double mu = std::pow(10.0, lg(rng) / 2);
    const auto lin0 = make_linearization(Hyperparams(1.0, mu, lambda), sigma, 1.0, pt / n, n, 1);
    const auto sb = stability_iff(lin0);
    const double eta = 2.5 * sb.bound * u01(rng);
    const auto lin = make_linearization(Hyperparams(eta, mu * eta, lambda), sigma, 1.0, pt / n, n, 1);
    const bool stable = rho_set(lin, eta).rho_max < 1.0;
    if (eta == sb.exact_bound) continue;
    CHECK(stable == sb.exact_stable_for(eta));
    if (stable) CHECK(sb.stable_for(eta));
    if (lin.complex_pair()) {
      ++complex_draws;
      CHECK(stable == sb.stable_for(eta));
    } else {
      ++real_draws;
    }
  }
  CHECK(complex_draws > 100);
  CHECK(real_draws > 100);
}

TEST_CASE("printed bound misses the real-pair flip") {
  const auto lin = ref(0.05, 1.0, 0.2);
  const auto sb = stability_iff(lin);
  CHECK(sb.bound == doctest::Approx(0.203125));
  CHECK(sb.stable_for(0.2));
  CHECK_FALSE(sb.exact_stable_for(0.2));
  const auto r = rho_set(lin, 0.2);
  CHECK(r.rho_max == doctest::Approx(10.926).epsilon(1e-3));
}

TEST_CASE("sufficient condition") {
  CHECK(sufficient_stability(Hyperparams(0.01, 0.01, 1.0), 1.0));
  CHECK_FALSE(sufficient_stability(Hyperparams(0.01, 0.25, 1.0), 0.5));
  CHECK_FALSE(sufficient_stability(Hyperparams(0.01, 0.01, 0.01), 0.1));

  // Sufficient implies the printed bound, and actual stability.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> lg(-3.0, 1.0), u(0.0, 1.0);
  int hits = 0;
  for (int t = 0; t < 20000; ++t) {
    const double p = 0.05 + 0.9 * u(rng);
    const double pt = (1.0 / p) * u(rng);
    if (!(pt < p) || pt * p >= 1.0) continue;
    const double lambda = std::pow(10.0, lg(rng)), sigma = std::pow(10.0, lg(rng) / 2);
    const double eta_d = 2.0 / lambda * u(rng), eta_g = lambda * sigma * sigma * u(rng);
    const Hyperparams h(eta_d, eta_g, lambda);
    if (!sufficient_stability(h, sigma)) continue;
    ++hits;
    const auto lin = make_linearization(h, sigma, p, pt, 1, 1);
    CHECK(stability_iff(lin).stable_for(eta_d));
    CHECK(rho_set(lin, eta_d).rho_max < 1.0);
  }
  CHECK(hits > 1000);
}

TEST_CASE("phase classification") {
  auto ph = classify_phase(ref(), 0.01);
  CHECK(ph.label == PhaseLabel::c_dominant);
  CHECK(ph.complex);

  const auto narrow = ref(0.05);
  CHECK(narrow.b == doctest::Approx(64.0));
  CHECK(narrow.c == doctest::Approx(320.0));
  ph = classify_phase(narrow, 0.01);
  CHECK(ph.label == PhaseLabel::a_dominant);
  CHECK_FALSE(ph.complex);
  CHECK(rho_set(narrow, 0.01).rho_point == doctest::Approx(0.9463).epsilon(1e-4));

  CHECK(classify_phase(ref(1.0, 1.0, 3.0), 3.0).label == PhaseLabel::divergent);
  CHECK(phase_name(PhaseLabel::b_dominant) == "B_DOMINANT");
}

TEST_CASE("saturation") {
  CHECK(saturation(ref(0.05), 0.01));
  CHECK_FALSE(saturation(ref(1.0), 0.01));
  // a = b exactly at sigma = 0.4 / lambda.
  const auto edge = ref(0.4);
  CHECK(edge.b == doctest::Approx(edge.a));
  LocalLinearization exact = edge;
  exact.b = exact.a;
  exact.m = 0.5 * (exact.a + exact.b);
  CHECK_FALSE(saturation(exact, 0.01));
}

TEST_CASE("saturated rates do not depend on sigma") {
  // Checked where a also dominates; see the printed complex-branch
  // condition below.
  int checked = 0;
  for (double lambda : make_log_axis(1e-2, 1e1, 40)) {
    for (double sigma : make_log_axis(1e-2, 1e1, 40)) {
      const auto lin = ref(sigma, lambda);
      const auto r = rho_set(lin, 0.01);
      if (!saturation(lin, 0.01) || r.dominant != Dominance::A || !r.stable) continue;
      const auto lo = rho_set(ref(0.9 * sigma, lambda), 0.01), hi = rho_set(ref(1.1 * sigma, lambda), 0.01);
      if (lo.dominant != Dominance::A || hi.dominant != Dominance::A) continue;
      ++checked;
      CHECK(lo.rho_max == doctest::Approx(r.rho_max).epsilon(1e-14));
      CHECK(hi.rho_max == doctest::Approx(r.rho_max).epsilon(1e-14));
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("printed saturation conditions flag C-dominant cells") {
  // Real branch: the negative root 1 - eta_d (m + sqrt(m^2 - c)) is ignored,
  // so it also flags cells beyond the flip. Complex branch: a handful of
  // cells where |rho_c| edges above rho_a.
  int flagged = 0, real_c = 0, real_c_divergent = 0, complex_c = 0;
  for (double lambda : make_log_axis(1e-2, 1e1, 100)) {
    for (double sigma : make_log_axis(1e-2, 1e1, 100)) {
      const auto lin = ref(sigma, lambda);
      if (!saturation(lin, 0.01)) continue;
      ++flagged;
      const auto r = rho_set(lin, 0.01);
      if (r.dominant != Dominance::C) continue;
      if (lin.complex_pair()) {
        ++complex_c;
      } else {
        ++real_c;
        real_c_divergent += !r.stable;
      }
    }
  }
  CHECK(flagged == 6760);
  CHECK(real_c == 2345);
  CHECK(real_c_divergent == 2342);
  CHECK(complex_c == 33);
}

TEST_CASE("monotone sanity along sigma") {
  // Constant on the sub-range where a dominates, changing just outside it.
  const double lambda = 1.0;
  const auto axis = make_log_axis(1e-2, 1e1, 200);
  std::vector<double> rm;
  std::vector<bool> sat;
  for (double s : axis) {
    const auto lin = ref(s, lambda);
    const auto r = rho_set(lin, 0.01);
    rm.push_back(r.rho_max);
    sat.push_back(saturation(lin, 0.01) && r.dominant == Dominance::A);
  }
  int last = -1;
  for (int i = 0; i < static_cast<int>(axis.size()); ++i)
    if (sat[i]) {
      CHECK(rm[i] == doctest::Approx(1.0 - 0.01 * lambda).epsilon(1e-14));
      last = i;
    }
  REQUIRE(last > 0);
  REQUIRE(last + 1 < static_cast<int>(axis.size()));
  CHECK(std::abs(rm[last + 1] - rm[last]) > 1e-9);
}

TEST_CASE("small learning rate approximation") {
  auto rep = small_lr_report(ref(), 0.01);
  CHECK(rep.approx_rate == doctest::Approx(0.9968));
  const auto bal = make_linearization(Hyperparams(0.01, 0.01, 1.0), 1.0, 1.0, 1.0, 1, 1);
  CHECK(small_lr_report(bal, 0.01).approx_rate == doctest::Approx(1.0));

  rep = small_lr_report(ref(0.7, 1.5, 1e-4), 1e-4);
  CHECK(std::abs(rep.exact_sq_a - rep.approx_sq_a) < 1e-6);
  CHECK(std::abs(rep.exact_sq_b - rep.approx_sq_b) < 1e-6);
  CHECK(std::abs(rep.exact_sq_c - rep.approx_sq_c) < 1e-6);
}

TEST_CASE("oscillation range") {
  OscillationParams q;
  q.delta = 0.0;
  auto g = oscillation_gamma_range(q);
  CHECK_FALSE(g.empty);
  CHECK(g.lo == doctest::Approx(0.25));
  CHECK(std::isinf(g.hi));
  CHECK(g.sigma_hi() == doctest::Approx(2.0));

  q.p_tilde = 0.8;
  q.delta = 0.2;
  g = oscillation_gamma_range(q);
  CHECK(g.lo == doctest::Approx(0.3483006).epsilon(1e-6));
  CHECK(g.hi == doctest::Approx(112.15).epsilon(1e-4));
  CHECK(g.sigma_lo() == doctest::Approx(0.09442).epsilon(1e-4));
  CHECK(g.sigma_hi() == doctest::Approx(1.6944).epsilon(1e-4));
  CHECK(g.contains(1.0));
  CHECK(ref().complex_pair());

  const auto [lo, hi] = oscillation_roots_closed_form(q);
  CHECK(lo == doctest::Approx(g.lo).epsilon(1e-12));
  CHECK(hi == doctest::Approx(g.hi).epsilon(1e-12));

  // Agrees with the sign of m^2 - c away from the edges.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> lg(-2.5, 2.5);
  for (int t = 0; t < 2000; ++t) {
    const double gamma = std::pow(10.0, lg(rng));
    if (std::abs(std::log(gamma / g.lo)) < 1e-9 || std::abs(std::log(gamma / g.hi)) < 1e-9) continue;
    CHECK(g.contains(gamma) == ref(1.0 / std::sqrt(gamma)).complex_pair());
  }
}

TEST_CASE("spectrum json") {
  const auto lin = ref();
  const std::string js = spectrum_report_json(lin, rho_set(lin, 0.01), stability_iff(lin));
  CHECK(js.find("\"rho_max\"") != std::string::npos);
  CHECK(js.find("\"bound\"") != std::string::npos);
}
