#include "kgan/spectrum.hpp"

#include "kgan/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace kgan {

LocalLinearization make_linearization(const Hyperparams& hyper, double sigma, double p_i, double p_tilde,
                                      int n_gen, int dim) {
  if (n_gen < 1) throw HypothesisError("linearization needs at least one generated point in the region");
  if (!(sigma > 0.0)) throw ConfigError("kernel width must be positive", "kernel.width");
  LocalLinearization lin;
  lin.hyper = hyper;
  lin.sigma = sigma;
  lin.p_i = p_i;
  lin.p_tilde = p_tilde;
  lin.n_gen = n_gen;
  lin.dim = dim;
  lin.delta = p_i - n_gen * p_tilde;
  const double lambda = hyper.lambda();
  const double mu = hyper.mu();
  const double s2 = sigma * sigma;
  lin.a = lambda;
  lin.b = mu * p_tilde * lin.delta / (lambda * s2);
  lin.c = mu * p_tilde * p_i / s2;
  lin.m = 0.5 * (lin.a + lin.b);
  return lin;
}

LocalLinearization linearize(const Scenario& s, const NeighborhoodPartition& part, int region) {
  if (region < 0 || region >= part.regions()) {
    throw Error("region " + std::to_string(region) + " does not exist");
  }
  const auto& mem = part.members[region];
  if (mem.empty()) throw HypothesisError("region " + std::to_string(region) + " has no generated points");
  const double w0 = s.generated.weights(mem.front());
  for (int j : mem) {
    if (std::abs(s.generated.weights(j) - w0) > 1e-12) {
      throw HypothesisError("generated weights in region " + std::to_string(region) +
                            " are not equal; the closed-form spectrum requires equal weights");
    }
  }
  return make_linearization(s.hyper, s.sigma(), s.real.weights(region), w0, static_cast<int>(mem.size()),
                            s.dim());
}

std::string_view nu_label_name(NuLabel l) noexcept {
  switch (l) {
    case NuLabel::a:
      return "a";
    case NuLabel::b:
      return "b";
    case NuLabel::c_plus:
      return "c+";
    case NuLabel::c_minus:
      return "c-";
  }
  return "?";
}

std::vector<NuValue> eigenvalues(const LocalLinearization& lin) {
  std::vector<NuValue> out;
  out.push_back({NuLabel::a, Complex(lin.a, 0.0), kAmbient});
  if (lin.n_gen > 1) out.push_back({NuLabel::b, Complex(lin.b, 0.0), (lin.n_gen - 1) * lin.dim});
  const Complex root = std::sqrt(Complex(lin.m * lin.m - lin.c, 0.0));
  out.push_back({NuLabel::c_plus, lin.m + root, lin.dim});
  out.push_back({NuLabel::c_minus, lin.m - root, lin.dim});
  return out;
}

std::string_view dominance_name(Dominance d) noexcept {
  switch (d) {
    case Dominance::A:
      return "A";
    case Dominance::B:
      return "B";
    case Dominance::C:
      return "C";
  }
  return "?";
}

SpectrumReport rho_set(const LocalLinearization& lin, double eta_d) {
  if (!(eta_d > 0.0)) throw ConfigError("eta_d must be positive", "hyper.eta_d");
  SpectrumReport r;
  r.eta_d = eta_d;
  r.nus = eigenvalues(lin);
  r.complex_pair = lin.complex_pair();
  r.rho_c = 0.0;
  for (const NuValue& nu : r.nus) {
    const Complex rho = 1.0 - eta_d * nu.value;
    r.rhos.push_back(rho);
    const double mag = std::abs(rho);
    r.rho_max = std::max(r.rho_max, mag);
    switch (nu.label) {
      case NuLabel::a:
        r.rho_a = mag;
        break;
      case NuLabel::b:
        r.rho_b = mag;
        break;
      case NuLabel::c_plus:
      case NuLabel::c_minus:
        r.rho_c = std::max(r.rho_c, mag);
        break;
    }
  }
  r.rho_point = std::max(r.rho_c, r.rho_b.value_or(0.0));
  if (lin.n_gen > 1) r.rho_point = std::max(r.rho_point, r.rho_a);

  const double tie = 1e-12 * std::max(1.0, r.rho_max);
  if (r.rho_max - r.rho_a <= tie) r.dominant_ties.push_back(Dominance::A);
  if (r.rho_b && r.rho_max - *r.rho_b <= tie) r.dominant_ties.push_back(Dominance::B);
  if (r.rho_max - r.rho_c <= tie) r.dominant_ties.push_back(Dominance::C);
  r.dominant = r.dominant_ties.front();
  r.stable = r.rho_max < 1.0;
  return r;
}

StabilityBound stability_iff(const LocalLinearization& lin) {
  if (!(lin.a > 0.0)) throw HypothesisError("stability bound needs lambda > 0");
  if (!(lin.delta > 0.0)) {
    throw HypothesisError("stability bound needs a positive mass gap (Delta = " + std::to_string(lin.delta) + ")");
  }
  StabilityBound sb;
  auto take = [](double& best, std::string& name, double v, const char* label) {
    if (v < best) {
      best = v;
      name = label;
    }
  };
  sb.bound = 2.0 / lin.a;
  sb.binding = "2/a";
  if (lin.n_gen > 1) take(sb.bound, sb.binding, 2.0 / lin.b, "2/b");
  take(sb.bound, sb.binding, (lin.a + lin.b) / lin.c, "(a+b)/c");

  sb.exact_bound = 2.0 / lin.a;
  sb.exact_binding = "2/a";
  if (lin.n_gen > 1) take(sb.exact_bound, sb.exact_binding, 2.0 / lin.b, "2/b");
  const double disc = lin.m * lin.m - lin.c;
  if (disc > 0.0) {
    take(sb.exact_bound, sb.exact_binding, 2.0 / (lin.m + std::sqrt(disc)), "2/(m+sqrt(m^2-c))");
  } else {
    take(sb.exact_bound, sb.exact_binding, (lin.a + lin.b) / lin.c, "(a+b)/c");
  }
  return sb;
}

bool sufficient_stability(const Hyperparams& h, double sigma) {
  return h.eta_d() < 2.0 / h.lambda() && h.eta_g() < h.lambda() * sigma * sigma;
}

bool sufficient_stability(const Scenario& s) { return sufficient_stability(s.hyper, s.sigma()); }

std::string_view phase_name(PhaseLabel p) noexcept {
  switch (p) {
    case PhaseLabel::divergent:
      return "DIVERGENT";
    case PhaseLabel::a_dominant:
      return "A_DOMINANT";
    case PhaseLabel::b_dominant:
      return "B_DOMINANT";
    case PhaseLabel::c_dominant:
      return "C_DOMINANT";
  }
  return "?";
}

Phase classify_phase(const LocalLinearization& lin, double eta_d) {
  const SpectrumReport r = rho_set(lin, eta_d);
  Phase ph{PhaseLabel::divergent, r.complex_pair};
  if (!r.stable) return ph;
  switch (r.dominant) {
    case Dominance::A:
      ph.label = PhaseLabel::a_dominant;
      break;
    case Dominance::B:
      ph.label = PhaseLabel::b_dominant;
      break;
    case Dominance::C:
      ph.label = PhaseLabel::c_dominant;
      break;
  }
  return ph;
}

bool saturation(const LocalLinearization& lin, double eta_d) {
  const double disc = lin.m * lin.m - lin.c;
  if (disc > 0.0) return lin.a < std::min(lin.b, lin.m - std::sqrt(disc));
  if (disc < 0.0) return lin.a < std::min(lin.b, 2.0 * lin.m - eta_d * lin.c);
  return false;
}

SmallLrReport small_lr_report(const LocalLinearization& lin, double eta_d) {
  SmallLrReport r;
  r.approx_sq_a = 1.0 - 2.0 * eta_d * lin.a;
  r.approx_sq_b = 1.0 - 2.0 * eta_d * lin.b;
  r.approx_sq_c = 1.0 - eta_d * (lin.a + lin.b);
  r.approx_rate = 1.0 - 2.0 * eta_d * std::min(lin.a, lin.b);
  r.exact_sq_a = (1.0 - eta_d * lin.a) * (1.0 - eta_d * lin.a);
  r.exact_sq_b = (1.0 - eta_d * lin.b) * (1.0 - eta_d * lin.b);
  const Complex root = std::sqrt(Complex(lin.m * lin.m - lin.c, 0.0));
  r.exact_sq_c = std::max(std::norm(1.0 - eta_d * (lin.m + root)), std::norm(1.0 - eta_d * (lin.m - root)));
  return r;
}

GammaRange oscillation_gamma_range(const OscillationParams& q) {
  if (!(q.lambda > 0.0 && q.mu > 0.0 && q.p_tilde > 0.0 && q.p > 0.0)) {
    throw HypothesisError("oscillation range needs lambda, mu, p~, p > 0");
  }
  GammaRange g;
  const double B = q.mu * q.p_tilde * q.delta / q.lambda;
  const double C = q.mu * q.p_tilde * q.p;
  const double L2 = q.lambda * q.lambda;
  if (q.delta == 0.0) {
    g.empty = false;
    g.lo = L2 / (4.0 * C);
    g.hi = std::numeric_limits<double>::infinity();
    return g;
  }
  // B^2 g^2 + (2 lambda B - 4C) g + lambda^2 < 0.
  const double qa = B * B;
  const double qb = 2.0 * q.lambda * B - 4.0 * C;
  const double disc = qb * qb - 4.0 * qa * L2;
  if (!(disc > 0.0)) {
    g.diagnostic = q.delta > q.p ? "Delta exceeds p: m^2 - c has no sign change in gamma"
                                 : "m^2 - c does not change sign in gamma";
    return g;
  }
  const double sq = std::sqrt(disc);
  // Stable root pair: the product of the roots is lambda^2 / B^2.
  const double r1 = qb < 0.0 ? (-qb + sq) / (2.0 * qa) : (-qb - sq) / (2.0 * qa);
  const double r2 = L2 / (qa * r1);
  g.lo = std::min(r1, r2);
  g.hi = std::max(r1, r2);
  if (!(g.hi > 0.0)) {
    g.diagnostic = "no positive gamma yields a complex pair";
    return g;
  }
  g.lo = std::max(g.lo, 0.0);
  g.empty = false;
  return g;
}

std::pair<double, double> oscillation_roots_closed_form(const OscillationParams& q) {
  if (q.delta == 0.0) throw HypothesisError("closed-form roots need Delta != 0");
  if (q.delta > q.p) throw HypothesisError("closed-form roots need Delta <= p");
  const double scale = q.lambda * q.lambda / (q.delta * q.delta * q.p_tilde * q.mu);
  const double root = 2.0 * q.p * std::sqrt(1.0 - q.delta / q.p);
  return {scale * (2.0 * q.p - q.delta - root), scale * (2.0 * q.p - q.delta + root)};
}

std::string spectrum_report_json(const LocalLinearization& lin, const SpectrumReport& r,
                                 const std::optional<StabilityBound>& bound) {
  using nlohmann::json;
  json nu_re = json::array(), nu_im = json::array(), labels = json::array(), mult = json::array();
  json rho_re = json::array(), rho_im = json::array();
  for (std::size_t k = 0; k < r.nus.size(); ++k) {
    nu_re.push_back(r.nus[k].value.real());
    nu_im.push_back(r.nus[k].value.imag());
    labels.push_back(std::string(nu_label_name(r.nus[k].label)));
    if (r.nus[k].multiplicity == kAmbient) {
      mult.push_back("ambient");
    } else {
      mult.push_back(r.nus[k].multiplicity);
    }
    rho_re.push_back(r.rhos[k].real());
    rho_im.push_back(r.rhos[k].imag());
  }
  json ties = json::array();
  for (Dominance d : r.dominant_ties) ties.push_back(std::string(dominance_name(d)));
  json doc{{"coefficients",
            {{"a", lin.a}, {"b", lin.b}, {"c", lin.c}, {"m", lin.m}, {"delta", lin.delta}, {"n_gen", lin.n_gen},
             {"dim", lin.dim}, {"sigma", lin.sigma}, {"mu", lin.hyper.mu()}}},
           {"eta_d", r.eta_d},
           {"nu_label", labels},
           {"nu_multiplicity", mult},
           {"nu_re", nu_re},
           {"nu_im", nu_im},
           {"rho_re", rho_re},
           {"rho_im", rho_im},
           {"rho_max", r.rho_max},
           {"rho_point", r.rho_point},
           {"dominant", std::string(dominance_name(r.dominant))},
           {"dominant_ties", ties},
           {"complex_pair", r.complex_pair},
           {"stable", r.stable},
           {"saturated", saturation(lin, r.eta_d)}};
  if (bound) {
    doc["bound"] = bound->bound;
    doc["bound_binding"] = bound->binding;
    doc["exact_bound"] = bound->exact_bound;
    doc["exact_bound_binding"] = bound->exact_binding;
  }
  return doc.dump(2) + "\n";
}

}  // namespace kgan
