#include "kgan/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace kgan {

Engine parse_engine(std::string_view name) {
  if (name == "explicit") return Engine::explicit_gda;
  if (name == "eliminated") return Engine::eliminated;
  if (name == "local") return Engine::local;
  throw ConfigError("unknown engine `" + std::string(name) + "` (expected explicit, eliminated or local)",
                    "mode");
}

std::string_view engine_name(Engine e) noexcept {
  switch (e) {
    case Engine::explicit_gda:
      return "explicit";
    case Engine::eliminated:
      return "eliminated";
    case Engine::local:
      return "local";
  }
  return "unknown";
}

namespace {

// Raw problem data for one GDA step; the local engine passes sub-blocks.
struct StepData {
  const KernelSpec& kernel;
  const Matrix& real;
  const Vector& real_w;
  const Vector& gen_w;
  const Hyperparams& hyper;
};

void check_state(const Matrix& X, const KernelSpec& k, const Matrix& real, long t) {
  const double limit = kDivergenceWidths * k.width();
  for (Eigen::Index j = 0; j < X.rows(); ++j) {
    if (!X.row(j).allFinite()) {
      throw DivergenceError("simulation diverged at step " + std::to_string(t) +
                                ": non-finite generated point " + std::to_string(j),
                            t);
    }
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < real.rows(); ++i) best = std::min(best, (X.row(j) - real.row(i)).norm());
    if (best > limit) {
      throw DivergenceError("simulation diverged at step " + std::to_string(t) + ": generated point " +
                                std::to_string(j) + " is " + std::to_string(best / k.width()) +
                                " widths from every true point",
                            t);
    }
  }
}

void gda_step(DiscriminatorState& f, Matrix& X, const StepData& d, long t) {
  const int dim = d.kernel.dim();
  const Eigen::Index ng = X.rows();
  const double eta_d = d.hyper.eta_d();
  const double eta_g = d.hyper.eta_g();

  // Row-major copy so each point is contiguous.
  std::vector<double> pt(dim), grad(static_cast<std::size_t>(ng) * dim);
  for (Eigen::Index j = 0; j < ng; ++j) {
    for (int k = 0; k < dim; ++k) pt[k] = X(j, k);
    double v = 0.0;
    f.value_and_gradient(d.kernel, pt.data(), v, grad.data() + j * dim);
  }

  f.scale(1.0 - d.hyper.lambda() * eta_d);
  for (Eigen::Index i = 0; i < d.real.rows(); ++i) {
    for (int k = 0; k < dim; ++k) pt[k] = d.real(i, k);
    f.add_term(pt.data(), eta_d * d.real_w(i));
  }
  for (Eigen::Index j = 0; j < ng; ++j) {
    for (int k = 0; k < dim; ++k) pt[k] = X(j, k);
    f.add_term(pt.data(), -eta_d * d.gen_w(j));
  }
  f.prune();

  for (Eigen::Index j = 0; j < ng; ++j) {
    const double s = eta_g * d.gen_w(j);
    for (int k = 0; k < dim; ++k) X(j, k) += s * grad[j * dim + k];
  }
  check_state(X, d.kernel, d.real, t + 1);
}

StepData full_data(const Scenario& s) {
  return StepData{s.kernel, s.real.points, s.real.weights, s.generated.weights, s.hyper};
}

void require_points(const Matrix& X, const Scenario& s) {
  if (X.rows() != s.generated.size() || X.cols() != s.dim()) {
    throw DimensionError("generated point matrix is " + std::to_string(X.rows()) + "x" +
                         std::to_string(X.cols()) + ", expected " + std::to_string(s.generated.size()) +
                         "x" + std::to_string(s.dim()));
  }
}

}  // namespace

void step_explicit_inplace(DiscriminatorState& f, Matrix& Xt, const Scenario& s, long t) {
  require_points(Xt, s);
  if (f.dim() != s.dim()) throw DimensionError("discriminator dimension does not match the scenario");
  gda_step(f, Xt, full_data(s), t);
}

std::pair<DiscriminatorState, Matrix> step_explicit(const DiscriminatorState& f, const Matrix& Xt,
                                                    const Scenario& s) {
  DiscriminatorState f2 = f;
  Matrix X2 = Xt;
  step_explicit_inplace(f2, X2, s);
  return {std::move(f2), std::move(X2)};
}

Matrix step_eliminated(const std::vector<Matrix>& history, const Scenario& s) {
  if (history.empty()) throw Error("step_eliminated: history must contain at least X^0");
  for (const Matrix& X : history) require_points(X, s);
  const Matrix& Xt = history.back();
  const long t = static_cast<long>(history.size()) - 1;
  const double w = 1.0 - s.hyper.lambda() * s.hyper.eta_d();
  const double c = s.hyper.eta_d() * s.hyper.eta_g();

  Matrix next = Xt;
  for (int j = 0; j < s.generated.size(); ++j) {
    const Vector xj = Xt.row(j).transpose();
    Vector acc = Vector::Zero(s.dim());
    double weight = 1.0;  // w^(t-1-r), r running down from t-1
    for (long r = t - 1; r >= 0; --r) {
      Vector term = Vector::Zero(s.dim());
      for (int i = 0; i < s.real.size(); ++i) term += s.real.weights(i) * grad1(s.kernel, xj, s.real.point(i));
      for (int k = 0; k < s.generated.size(); ++k) {
        term -= s.generated.weights(k) * grad1(s.kernel, xj, history[r].row(k).transpose());
      }
      acc += weight * term;
      weight *= w;
    }
    next.row(j) += (c * s.generated.weights(j)) * acc.transpose();
  }
  check_state(next, s.kernel, s.real.points, t + 1);
  return next;
}

Scenario region_scenario(const Scenario& s, const NeighborhoodPartition& part, int region) {
  if (region < 0 || region >= part.regions()) throw Error("region " + std::to_string(region) + " does not exist");
  const auto& mem = part.members[region];
  if (mem.empty()) throw Error("region " + std::to_string(region) + " has no generated points");
  PointMasses real{s.real.points.row(region), s.real.weights.segment(region, 1)};
  PointMasses gen;
  gen.points.resize(static_cast<Eigen::Index>(mem.size()), s.dim());
  gen.weights.resize(static_cast<Eigen::Index>(mem.size()));
  for (std::size_t q = 0; q < mem.size(); ++q) {
    gen.points.row(q) = s.generated.points.row(mem[q]);
    gen.weights(q) = s.generated.weights(mem[q]);
  }
  return Scenario(s.kernel, std::move(real), std::move(gen), s.hyper);
}

std::pair<DiscriminatorState, Matrix> step_local(const DiscriminatorState& f_i, const Matrix& Xt_i,
                                                 int region, const Scenario& s,
                                                 const NeighborhoodPartition& part) {
  if (region < 0 || region >= part.regions()) throw Error("region " + std::to_string(region) + " does not exist");
  const auto& mem = part.members[region];
  if (Xt_i.rows() != static_cast<Eigen::Index>(mem.size()) || Xt_i.cols() != s.dim()) {
    throw DimensionError("local step: point block does not match region " + std::to_string(region));
  }
  Matrix real = s.real.points.row(region);
  Vector real_w = s.real.weights.segment(region, 1);
  Vector gen_w(static_cast<Eigen::Index>(mem.size()));
  for (std::size_t q = 0; q < mem.size(); ++q) gen_w(q) = s.generated.weights(mem[q]);
  DiscriminatorState f2 = f_i;
  Matrix X2 = Xt_i;
  gda_step(f2, X2, StepData{s.kernel, real, real_w, gen_w, s.hyper}, 0);
  return {std::move(f2), std::move(X2)};
}

double equilibrium_residual(const Matrix& Xt, const Scenario& s) {
  require_points(Xt, s);
  double worst = 0.0;
  for (int j = 0; j < s.generated.size(); ++j) {
    const Vector xj = Xt.row(j).transpose();
    Vector r = Vector::Zero(s.dim());
    for (int i = 0; i < s.real.size(); ++i) r += s.real.weights(i) * grad1(s.kernel, xj, s.real.point(i));
    for (int k = 0; k < s.generated.size(); ++k) {
      r -= s.generated.weights(k) * grad1(s.kernel, xj, Xt.row(k).transpose());
    }
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

double loss_eval(const DiscriminatorState& f, const Matrix& Xt, const Scenario& s) {
  require_points(Xt, s);
  double v = 0.0;
  for (int i = 0; i < s.real.size(); ++i) v += s.real.weights(i) * f.value(s.kernel, s.real.point(i));
  for (int j = 0; j < s.generated.size(); ++j) {
    v -= s.generated.weights(j) * f.value(s.kernel, Xt.row(j).transpose());
  }
  return v - 0.5 * s.hyper.lambda() * f.norm_sq(s.kernel);
}

DiscriminatorState optimal_discriminator(const Scenario& s) {
  DiscriminatorState f(s.dim());
  const double inv = 1.0 / s.hyper.lambda();
  for (int i = 0; i < s.real.size(); ++i) f.add_term(s.real.point(i), inv * s.real.weights(i));
  for (int j = 0; j < s.generated.size(); ++j) {
    f.add_term(s.generated.point(j), -inv * s.generated.weights(j));
  }
  f.prune();
  return f;
}

double max_dist_to_assigned(const Matrix& Xt, const Scenario& s, const NeighborhoodPartition& part) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < Xt.rows(); ++j) {
    worst = std::max(worst, (Xt.row(j) - s.real.points.row(part.assignment[j])).norm());
  }
  return worst;
}

// History of generated iterates weighted by p~_j w^(t-1-r), plus the scalar
// drift accumulator S_t = sum_{r<t} w^(t-1-r). Oldest entries sit at the
// front and are dropped once their contribution to f falls below kPruneTol.
struct Simulator::Eliminated {
  double S = 0.0;
  std::vector<std::vector<double>> cols;
  std::vector<double> coefs;
  std::size_t head = 0;
  std::vector<std::vector<double>> real_cols;
  std::vector<double> real_coefs;

  static simd::CenterView view(const std::vector<std::vector<double>>& c, const std::vector<double>& w,
                               std::size_t from, std::vector<const double*>& ptrs) {
    ptrs.resize(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) ptrs[k] = c[k].data() + from;
    simd::CenterView v;
    v.count = w.size() - from;
    v.dim = static_cast<int>(c.size());
    v.cols = ptrs.data();
    v.coefs = w.data() + from;
    return v;
  }
};

Simulator::Simulator(const Scenario& s, Engine engine, std::optional<DiscriminatorState> f0)
    : s_(s), engine_(engine), part_(partition_isolated(s)), X_(s.generated.points), f_(s.dim()) {
  if (f0) {
    if (engine != Engine::explicit_gda) {
      throw Error("a non-zero initial discriminator is only supported by the explicit engine");
    }
    if (f0->dim() != s.dim()) throw DimensionError("initial discriminator dimension does not match the scenario");
    f_ = std::move(*f0);
  }
  if (engine == Engine::eliminated) {
    elim_ = std::make_unique<Eliminated>();
    elim_->cols.assign(s.dim(), {});
    elim_->real_cols.assign(s.dim(), {});
    for (int i = 0; i < s.real.size(); ++i) {
      for (int k = 0; k < s.dim(); ++k) elim_->real_cols[k].push_back(s.real.points(i, k));
      elim_->real_coefs.push_back(s.real.weights(i));
    }
  } else if (engine == Engine::local) {
    local_f_.assign(part_.regions(), DiscriminatorState(s.dim()));
  }
  check_state(X_, s_.kernel, s_.real.points, 0);
}

Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;

void Simulator::step() {
  switch (engine_) {
    case Engine::explicit_gda:
      gda_step(f_, X_, full_data(s_), t_);
      break;
    case Engine::local: {
      for (int r = 0; r < part_.regions(); ++r) {
        const auto& mem = part_.members[r];
        Matrix real = s_.real.points.row(r);
        Vector real_w = s_.real.weights.segment(r, 1);
        Matrix Xr(static_cast<Eigen::Index>(mem.size()), s_.dim());
        Vector gen_w(static_cast<Eigen::Index>(mem.size()));
        for (std::size_t q = 0; q < mem.size(); ++q) {
          Xr.row(q) = X_.row(mem[q]);
          gen_w(q) = s_.generated.weights(mem[q]);
        }
        gda_step(local_f_[r], Xr, StepData{s_.kernel, real, real_w, gen_w, s_.hyper}, t_);
        for (std::size_t q = 0; q < mem.size(); ++q) X_.row(mem[q]) = Xr.row(q);
      }
      break;
    }
    case Engine::eliminated: {
      Eliminated& e = *elim_;
      const int dim = s_.dim();
      const double g = s_.kernel.curvature();
      const double c = s_.hyper.eta_d() * s_.hyper.eta_g();
      const double w = 1.0 - s_.hyper.lambda() * s_.hyper.eta_d();
      std::vector<const double*> rp, hp;
      const simd::CenterView rv = e.view(e.real_cols, e.real_coefs, 0, rp);
      const simd::CenterView hv = e.view(e.cols, e.coefs, e.head, hp);
      std::vector<double> pt(dim), drift(dim), diff(dim);
      Matrix next = X_;
      for (int j = 0; j < s_.generated.size(); ++j) {
        for (int k = 0; k < dim; ++k) pt[k] = X_(j, k);
        double v = 0.0;
        simd::rbf_sum(rv, pt, -0.5 * g, v, drift);
        simd::rbf_sum(hv, pt, -0.5 * g, v, diff);
        const double scale = c * s_.generated.weights(j) * g;
        for (int k = 0; k < dim; ++k) next(j, k) += scale * (e.S * drift[k] - diff[k]);
      }
      for (std::size_t i = e.head; i < e.coefs.size(); ++i) e.coefs[i] *= w;
      for (int j = 0; j < s_.generated.size(); ++j) {
        for (int k = 0; k < dim; ++k) e.cols[k].push_back(X_(j, k));
        e.coefs.push_back(s_.generated.weights(j));
      }
      e.S = w * e.S + 1.0;
      const double eta_d = s_.hyper.eta_d();
      while (e.head < e.coefs.size() && std::abs(eta_d * e.coefs[e.head]) < kPruneTol) ++e.head;
      if (e.head > 1024 && 2 * e.head > e.coefs.size()) {
        for (auto& col : e.cols) col.erase(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(e.head));
        e.coefs.erase(e.coefs.begin(), e.coefs.begin() + static_cast<std::ptrdiff_t>(e.head));
        e.head = 0;
      }
      X_ = std::move(next);
      check_state(X_, s_.kernel, s_.real.points, t_ + 1);
      break;
    }
  }
  ++t_;
}

DiscriminatorState Simulator::discriminator() const {
  switch (engine_) {
    case Engine::explicit_gda:
      return f_;
    case Engine::local: {
      DiscriminatorState f(s_.dim());
      for (const auto& fr : local_f_) {
        for (const auto& [c, w] : fr.terms()) f.add_term(c, w);
      }
      f.prune();
      return f;
    }
    case Engine::eliminated: {
      const Eliminated& e = *elim_;
      const double eta_d = s_.hyper.eta_d();
      DiscriminatorState f(s_.dim());
      for (int i = 0; i < s_.real.size(); ++i) f.add_term(s_.real.point(i), eta_d * e.S * s_.real.weights(i));
      std::vector<double> c(s_.dim());
      for (std::size_t i = e.head; i < e.coefs.size(); ++i) {
        for (int k = 0; k < s_.dim(); ++k) c[k] = e.cols[k][i];
        f.add_term(c.data(), -eta_d * e.coefs[i]);
      }
      f.prune();
      return f;
    }
  }
  return f_;
}

TrajectoryStep Simulator::snapshot() const {
  TrajectoryStep st;
  st.t = t_;
  st.points = X_;
  const DiscriminatorState f = discriminator();
  st.disc_norm_sq = f.norm_sq(s_.kernel);
  double v = 0.0;
  for (int i = 0; i < s_.real.size(); ++i) v += s_.real.weights(i) * f.value(s_.kernel, s_.real.point(i));
  for (int j = 0; j < s_.generated.size(); ++j) {
    v -= s_.generated.weights(j) * f.value(s_.kernel, X_.row(j).transpose());
  }
  st.loss = v - 0.5 * s_.hyper.lambda() * st.disc_norm_sq;
  st.max_dist = max_dist();
  return st;
}

TrajectoryRecord simulate(const Scenario& s, long T, Engine engine, long record_every) {
  if (T < 1) throw ConfigError("number of steps must be at least 1", "steps");
  if (record_every < 1) throw ConfigError("record stride must be at least 1", "record_every");
  TrajectoryRecord rec;
  Simulator sim(s, engine);
  rec.steps.push_back(sim.snapshot());
  try {
    for (long t = 1; t <= T; ++t) {
      sim.step();
      if (t % record_every == 0 || t == T) rec.steps.push_back(sim.snapshot());
    }
  } catch (const DivergenceError& e) {
    rec.diverged = true;
    rec.diverged_at = e.step();
    throw DivergenceError(e.what(), e.step(), std::move(rec));
  }
  return rec;
}

void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& out) {
  if (rec.steps.empty()) return;
  const Matrix& X0 = rec.steps.front().points;
  out << "t,loss,disc_norm_sq,max_dist";
  for (Eigen::Index j = 0; j < X0.rows(); ++j) {
    for (Eigen::Index k = 0; k < X0.cols(); ++k) out << ",x_" << (j + 1) << "_" << (k + 1);
  }
  out << "\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (const TrajectoryStep& st : rec.steps) {
    out << st.t << ",";
    num(st.loss);
    out << ",";
    num(st.disc_norm_sq);
    out << ",";
    num(st.max_dist);
    for (Eigen::Index j = 0; j < st.points.rows(); ++j) {
      for (Eigen::Index k = 0; k < st.points.cols(); ++k) {
        out << ",";
        num(st.points(j, k));
      }
    }
    out << "\n";
  }
}

}  // namespace kgan
