#include "kgan/experiments.hpp"

#include "kgan/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace kgan {

std::vector<double> make_log_axis(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo)) throw ConfigError("axis needs 0 < lo < hi", "axis");
  if (n < 2) throw ConfigError("axis needs at least 2 points", "axis");
  std::vector<double> ax(n);
  const double l0 = std::log(lo), l1 = std::log(hi);
  for (int i = 0; i < n; ++i) ax[i] = std::exp(l0 + (l1 - l0) * i / (n - 1));
  ax.front() = lo;
  ax.back() = hi;
  return ax;
}

void SweepGrid::validate() const {
  auto check = [](const std::vector<double>& ax, const char* name) {
    if (ax.size() < 2) throw ConfigError(std::string(name) + " axis needs at least 2 entries", name);
    for (std::size_t i = 0; i < ax.size(); ++i) {
      if (!(ax[i] > 0.0)) throw ConfigError(std::string(name) + " axis entries must be positive", name);
      if (i > 0 && !(ax[i] > ax[i - 1])) {
        throw ConfigError(std::string(name) + " axis must be strictly increasing", name);
      }
    }
  };
  check(sigma_axis, "sigma");
  check(lambda_axis, "lambda");
}

namespace {

struct RegionTemplate {
  double p = 0.0;
  double p_tilde = 0.0;
  int n_gen = 0;
  int dim = 1;
};

RegionTemplate single_region(const Scenario& s) {
  if (s.real.size() != 1) throw HypothesisError("the template must have a single true point");
  const NeighborhoodPartition part = partition_isolated(s);
  const LocalLinearization lin = linearize(s, part, 0);
  return {lin.p_i, lin.p_tilde, lin.n_gen, s.dim()};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<PhaseCell> run_phase_diagram(const SweepGrid& grid) {
  grid.validate();
  const RegionTemplate rt = single_region(grid.fixed);
  const double eta_d = grid.fixed.hyper.eta_d();
  const double eta_g = grid.fixed.hyper.eta_g();
  std::vector<PhaseCell> cells;
  cells.reserve(grid.sigma_axis.size() * grid.lambda_axis.size());
  for (double lambda : grid.lambda_axis) {
    for (double sigma : grid.sigma_axis) {
      PhaseCell cell;
      cell.sigma = sigma;
      cell.lambda = lambda;
      try {
        const LocalLinearization lin =
            make_linearization(Hyperparams(eta_d, eta_g, lambda), sigma, rt.p, rt.p_tilde, rt.n_gen, rt.dim);
        const SpectrumReport r = rho_set(lin, eta_d);
        cell.rho_max = r.rho_max;
        cell.phase = classify_phase(lin, eta_d);
        cell.complex_pair = r.complex_pair;
        cell.saturated = saturation(lin, eta_d);
      } catch (const Error& e) {
        cell.note = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::string phase_cells_csv(const std::vector<PhaseCell>& cells) {
  std::ostringstream os;
  os << "sigma,lambda,rho_max,rho_max_sq,phase,complex_pair,saturated,note\n";
  for (const PhaseCell& c : cells) {
    os << fmt(c.sigma) << "," << fmt(c.lambda) << "," << fmt(c.rho_max) << "," << fmt(c.rho_max * c.rho_max) << ","
       << phase_name(c.phase.label) << "," << (c.complex_pair ? 1 : 0) << "," << (c.saturated ? 1 : 0) << ",";
    std::string note = c.note;
    std::replace(note.begin(), note.end(), ',', ';');
    std::replace(note.begin(), note.end(), '\n', ' ');
    os << note << "\n";
  }
  return os.str();
}

Matrix offset_points(const Scenario& s, double offset, std::uint64_t seed) {
  const NeighborhoodPartition part = partition_isolated(s);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix X(s.generated.size(), s.dim());
  for (int j = 0; j < s.generated.size(); ++j) {
    Vector u(s.dim());
    do {
      for (int k = 0; k < s.dim(); ++k) u(k) = gauss(rng);
    } while (u.norm() < 1e-12);
    u.normalize();
    X.row(j) = s.real.points.row(part.assignment[j]) + (offset * s.sigma()) * u.transpose();
  }
  return X;
}

double fit_contraction(const std::vector<double>& dist, long from, long to, double quarter_period, int* used) {
  constexpr double kFloor = 1e-290;
  to = std::min<long>(to, static_cast<long>(dist.size()));
  std::vector<std::pair<double, double>> pts;  // (t, log d)
  if (quarter_period > 0.0) {
    long last = -1;
    for (long t = std::max<long>(from, 1); t + 1 < to; ++t) {
      const double v = dist[t];
      if (!(v > kFloor) || v < dist[t - 1] || v < dist[t + 1]) continue;
      if (last >= 0 && static_cast<double>(t - last) < quarter_period) {
        if (v > std::exp(pts.back().second)) {
          pts.back() = {static_cast<double>(t), std::log(v)};
          last = t;
        }
        continue;
      }
      pts.emplace_back(static_cast<double>(t), std::log(v));
      last = t;
    }
  } else {
    for (long t = from; t < to; ++t) {
      if (dist[t] > kFloor) pts.emplace_back(static_cast<double>(t), std::log(dist[t]));
    }
  }
  if (used) *used = static_cast<int>(pts.size());
  if (pts.size() < 2) throw NumericalError("rate fit needs at least two usable samples");
  double st = 0.0, sy = 0.0;
  for (const auto& [t, y] : pts) {
    st += t;
    sy += y;
  }
  const double n = static_cast<double>(pts.size());
  const double mt = st / n, my = sy / n;
  double num = 0.0, den = 0.0;
  for (const auto& [t, y] : pts) {
    num += (t - mt) * (y - my);
    den += (t - mt) * (t - mt);
  }
  return std::exp(num / den);
}

RateReport run_rate_validation(const Scenario& s, double offset, long T, std::uint64_t seed) {
  if (T < 10) throw ConfigError("rate validation needs at least 10 steps", "steps");
  if (s.real.size() != 1) throw HypothesisError("rate validation needs a single true point");
  Matrix eq(s.generated.size(), s.dim());
  for (int j = 0; j < s.generated.size(); ++j) eq.row(j) = s.real.points.row(0);
  const Scenario se = s.with_generated_points(eq);
  const LocalLinearization lin = linearize(se, partition_isolated(se), 0);
  const StabilityBound sb = stability_iff(lin);
  if (!sb.stable_for(s.hyper.eta_d())) {
    throw HypothesisError("eta_d = " + fmt(s.hyper.eta_d()) + " is outside the stability bound " + fmt(sb.bound));
  }
  const SpectrumReport spec = rho_set(lin, s.hyper.eta_d());

  RateReport rep;
  rep.rho_max_theory = spec.rho_max;
  rep.rho_point_theory = spec.rho_point;
  rep.steps = T;
  rep.dominant = std::string(dominance_name(spec.dominant));

  if (offset == 0.0) {
    rep.fit_kind = "skipped";
    rep.note = "offset 0 starts at the equilibrium; distances are identically 0";
    rep.dists.assign(T + 1, 0.0);
    return rep;
  }

  Simulator sim(s.with_generated_points(offset_points(se, offset, seed)), Engine::explicit_gda);
  rep.dists.reserve(T + 1);
  rep.dists.push_back(sim.max_dist());
  for (long t = 0; t < T; ++t) {
    sim.step();
    rep.dists.push_back(sim.max_dist());
  }
  rep.initial_dist = rep.dists.front();
  rep.final_dist = rep.dists.back();

  // The slowest mode that moves the points sets the envelope; it oscillates
  // when it belongs to a complex pair.
  const bool pair_dominant = std::abs(spec.rho_point - spec.rho_c) <= 1e-12 * spec.rho_point;
  double quarter = 0.0;
  if (pair_dominant && spec.complex_pair) {
    double angle = 0.0;
    for (std::size_t k = 0; k < spec.nus.size(); ++k) {
      if (spec.nus[k].label == NuLabel::c_plus) angle = std::abs(std::arg(spec.rhos[k]));
    }
    if (angle > 0.0) quarter = 0.25 * (2.0 * std::numbers::pi / angle);
  }
  const long from = T - (8 * T) / 10;
  try {
    rep.r_fit = fit_contraction(rep.dists, from, T + 1, quarter, &rep.samples);
    rep.fit_kind = quarter > 0.0 ? "envelope" : "log-linear";
  } catch (const NumericalError&) {
    if (quarter > 0.0) {
      rep.r_fit = fit_contraction(rep.dists, from, T + 1, 0.0, &rep.samples);
      rep.fit_kind = "log-linear";
      rep.note = "too few envelope peaks; fell back to the raw distance fit";
    } else {
      throw;
    }
  }
  rep.abs_err = std::abs(rep.r_fit - rep.rho_max_theory);
  rep.abs_err_point = std::abs(rep.r_fit - rep.rho_point_theory);
  return rep;
}

BisectionProbe probe_stability(const Scenario& s, double eta_d, const BisectionOptions& opt) {
  BisectionProbe pr;
  pr.eta_d = eta_d;
  const Scenario sp = s.with_hyper(s.hyper.with_eta_d_fixed_ratio(eta_d));
  Matrix eq(s.generated.size(), s.dim());
  for (int j = 0; j < s.generated.size(); ++j) eq.row(j) = s.real.points.row(0);
  Simulator sim(sp.with_generated_points(offset_points(sp.with_generated_points(eq), opt.offset, opt.seed)),
                Engine::explicit_gda);
  const double d0 = sim.max_dist();
  try {
    for (long t = 0; t < opt.T; ++t) {
      sim.step();
      if (sim.max_dist() > opt.escape * d0) {
        pr.steps = t + 1;
        pr.reason = "distance exceeded " + fmt(opt.escape) + "x its initial value";
        return pr;
      }
    }
  } catch (const DivergenceError& e) {
    pr.steps = e.step();
    pr.reason = e.what();
    return pr;
  }
  pr.stable = true;
  pr.steps = opt.T;
  pr.reason = "bounded";
  return pr;
}

BisectionReport run_stability_bisection(const Scenario& s, const BisectionOptions& opt) {
  if (s.real.size() != 1) throw HypothesisError("stability bisection needs a single true point");
  Matrix eq(s.generated.size(), s.dim());
  for (int j = 0; j < s.generated.size(); ++j) eq.row(j) = s.real.points.row(0);
  const Scenario se = s.with_generated_points(eq);
  const LocalLinearization lin = linearize(se, partition_isolated(se), 0);
  const StabilityBound sb = stability_iff(lin);

  BisectionReport rep;
  rep.bound = sb.bound;
  rep.binding = sb.binding;
  rep.exact_bound = sb.exact_bound;
  rep.exact_binding = sb.exact_binding;
  rep.mu = s.hyper.mu();

  auto probe = [&](double eta) {
    rep.probes.push_back(probe_stability(s, eta, opt));
    return rep.probes.back().stable;
  };

  double lo = 0.5 * std::min(sb.bound, sb.exact_bound);
  for (int i = 0; i < 20 && !probe(lo); ++i) lo *= 0.5;
  if (!rep.probes.back().stable) throw NumericalError("no stable step size found below the theory bound");
  double hi = 1.5 * std::max(sb.bound, sb.exact_bound);
  for (int i = 0; i < 20 && probe(hi); ++i) {
    lo = hi;
    hi *= 1.5;
  }
  if (rep.probes.back().stable) throw NumericalError("no unstable step size found above the theory bound");

  while ((hi - lo) > opt.rel_tol * lo) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  rep.critical_eta = 0.5 * (lo + hi);
  rep.rel_err = std::abs(rep.critical_eta - rep.bound) / rep.bound;
  rep.rel_err_exact = std::abs(rep.critical_eta - rep.exact_bound) / rep.exact_bound;
  return rep;
}

std::string rate_report_json(const RateReport& r) {
  nlohmann::json doc{{"r_fit", r.r_fit},
                     {"rho_max_theory", r.rho_max_theory},
                     {"rho_point_theory", r.rho_point_theory},
                     {"abs_err", r.abs_err},
                     {"abs_err_point", r.abs_err_point},
                     {"fit_kind", r.fit_kind},
                     {"dominant", r.dominant},
                     {"steps", r.steps},
                     {"samples", r.samples},
                     {"initial_dist", r.initial_dist},
                     {"final_dist", r.final_dist},
                     {"note", r.note}};
  return doc.dump(2) + "\n";
}

std::string bisection_report_json(const BisectionReport& r) {
  nlohmann::json probes = nlohmann::json::array();
  for (const BisectionProbe& p : r.probes) {
    probes.push_back({{"eta_d", p.eta_d}, {"stable", p.stable}, {"steps", p.steps}, {"reason", p.reason}});
  }
  nlohmann::json doc{{"critical_eta", r.critical_eta},
                     {"bound", r.bound},
                     {"bound_binding", r.binding},
                     {"exact_bound", r.exact_bound},
                     {"exact_bound_binding", r.exact_binding},
                     {"rel_err", r.rel_err},
                     {"rel_err_exact", r.rel_err_exact},
                     {"mu", r.mu},
                     {"probes", probes}};
  return doc.dump(2) + "\n";
}

}  // namespace kgan
