#include "kgan/jacobian_oracle.hpp"

#include "kgan/errors.hpp"

#include <json.hpp>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kgan {

Vector FiniteState::flatten() const {
  const Eigen::Index D = theta.size();
  Vector z(D + points.size());
  z.head(D) = theta;
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    for (Eigen::Index k = 0; k < points.cols(); ++k) z(D + j * points.cols() + k) = points(j, k);
  }
  return z;
}

FiniteState FiniteState::unflatten(const VectorRef& z, int D, int n_gen, int d) {
  if (z.size() != D + static_cast<Eigen::Index>(n_gen) * d) {
    throw DimensionError("flattened state has length " + std::to_string(z.size()) + ", expected " +
                         std::to_string(D + n_gen * d));
  }
  FiniteState st;
  st.theta = z.head(D);
  st.points.resize(n_gen, d);
  for (int j = 0; j < n_gen; ++j) {
    for (int k = 0; k < d; ++k) st.points(j, k) = z(D + j * d + k);
  }
  return st;
}

UpdateMap::UpdateMap(const Scenario& s, const FeatureMap& fm)
    : s_(s), fm_(fm), real_sum_(Vector::Zero(fm.D)), n_gen_(s.generated.size()), d_(s.dim()) {
  if (fm.d != s.dim()) throw DimensionError("feature map dimension does not match the scenario");
  for (int i = 0; i < s.real.size(); ++i) real_sum_ += s.real.weights(i) * fm.features(s.real.point(i));
}

Vector UpdateMap::apply(const VectorRef& z) const {
  if (z.size() != state_dim()) {
    throw DimensionError("state has length " + std::to_string(z.size()) + ", expected " +
                         std::to_string(state_dim()));
  }
  const int D = fm_.D;
  const double eta_d = s_.hyper.eta_d();
  const double eta_g = s_.hyper.eta_g();
  const auto theta = z.head(D);

  Vector out(z.size());
  Vector ascent = real_sum_;
  Vector xj(d_);
  for (int j = 0; j < n_gen_; ++j) {
    for (int k = 0; k < d_; ++k) xj(k) = z(D + j * d_ + k);
    const Vector phase = fm_.freqs * xj + fm_.phases;
    const Vector cosv = fm_.scale * phase.array().cos().matrix();
    const Vector sinv = -fm_.scale * phase.array().sin().matrix();
    ascent -= s_.generated.weights(j) * cosv;
    const Vector grad = fm_.freqs.transpose() * theta.cwiseProduct(sinv);
    const double step = eta_g * s_.generated.weights(j);
    for (int k = 0; k < d_; ++k) out(D + j * d_ + k) = xj(k) + step * grad(k);
  }
  out.head(D) = (1.0 - s_.hyper.lambda() * eta_d) * theta + eta_d * ascent;
  return out;
}

FiniteState UpdateMap::operator()(const FiniteState& z) const {
  return FiniteState::unflatten(apply(z.flatten()), fm_.D, n_gen_, d_);
}

FiniteState update_map(const FiniteState& z, const Scenario& s, const FeatureMap& fm) {
  return UpdateMap(s, fm)(z);
}

FiniteState optimal_finite_state(const Scenario& s, const FeatureMap& fm) {
  FiniteState z;
  z.theta = Vector::Zero(fm.D);
  for (int i = 0; i < s.real.size(); ++i) z.theta += s.real.weights(i) * fm.features(s.real.point(i));
  for (int j = 0; j < s.generated.size(); ++j) z.theta -= s.generated.weights(j) * fm.features(s.generated.point(j));
  z.theta /= s.hyper.lambda();
  z.points = s.generated.points;
  return z;
}

Matrix numerical_jacobian(const FiniteState& z0, const Scenario& s, const FeatureMap& fm, double h) {
  const UpdateMap phi(s, fm);
  const Vector z = z0.flatten();
  if (h <= 0.0) h = 1e-5 * std::max(1.0, z.cwiseAbs().maxCoeff());
  const Eigen::Index n = z.size();
  Matrix J(n, n);
  Vector zp = z, zm = z;
  for (Eigen::Index k = 0; k < n; ++k) {
    zp(k) = z(k) + h;
    zm(k) = z(k) - h;
    J.col(k) = (phi.apply(zp) - phi.apply(zm)) / (2.0 * h);
    zp(k) = z(k);
    zm(k) = z(k);
  }
  return J;
}

std::vector<Complex> eigs(const Matrix& M) {
  if (M.rows() != M.cols()) throw DimensionError("eigs: matrix must be square");
  if (!M.allFinite()) throw NumericalError("eigs: matrix has non-finite entries");
  const lapack_int n = static_cast<lapack_int>(M.rows());
  if (n == 0) return {};
  Matrix A = M;
  std::vector<double> wr(n), wi(n);
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, A.data(), n, wr.data(), wi.data(), nullptr,
                                        n, nullptr, n);
  if (info > 0) {
    throw NumericalError("eigs: QR iteration failed to converge; eigenvalues " + std::to_string(info + 1) +
                         ".." + std::to_string(n) + " are unavailable");
  }
  if (info < 0) throw NumericalError("eigs: invalid argument " + std::to_string(-info) + " to dgeev");
  std::vector<Complex> out(n);
  for (lapack_int i = 0; i < n; ++i) out[i] = Complex(wr[i], wi[i]);
  return out;
}

Scenario equilibrium_scenario(int n_gen, int d, double p, double p_tilde, double sigma, const Hyperparams& h) {
  PointMasses real{Matrix::Zero(1, d), Vector::Constant(1, p)};
  PointMasses gen{Matrix::Zero(n_gen, d), Vector::Constant(n_gen, p_tilde)};
  return Scenario(KernelSpec(sigma, d), std::move(real), std::move(gen), h);
}

TheoremReport verify_theorem(const Scenario& s, int D, double h, std::uint64_t seed, FeatureSampling sampling) {
  if (s.real.size() != 1) throw HypothesisError("verify_theorem needs a single true point");
  // Prop. 1 equilibrium: every generated point on the true point.
  Matrix eq(s.generated.size(), s.dim());
  for (int j = 0; j < s.generated.size(); ++j) eq.row(j) = s.real.points.row(0);
  const Scenario se = s.with_generated_points(eq);
  const NeighborhoodPartition part = partition_isolated(se);
  const LocalLinearization lin = linearize(se, part, 0);

  const FeatureMap fm = build_features(se.kernel, D, seed, sampling);
  const FiniteState zs = optimal_finite_state(se, fm);
  const Vector zflat = zs.flatten();

  TheoremReport rep;
  rep.D = D;
  rep.seed = seed;
  rep.h = h > 0.0 ? h : 1e-5 * std::max(1.0, zflat.cwiseAbs().maxCoeff());
  rep.state_dim = static_cast<int>(zflat.size());
  rep.fixed_point_residual = (UpdateMap(se, fm).apply(zflat) - zflat).cwiseAbs().maxCoeff();

  const Matrix J = numerical_jacobian(zs, se, fm, rep.h);
  const std::vector<Complex> rho = eigs(J);
  const double eta_d = se.hyper.eta_d();
  std::vector<Complex> nu(rho.size());
  for (std::size_t k = 0; k < rho.size(); ++k) nu[k] = (1.0 - rho[k]) / eta_d;

  const std::vector<NuValue> theory = eigenvalues(lin);
  auto window = [](const Complex& th) { return kMatchWindow * std::max(std::abs(th), 1e-12); };
  for (const NuValue& th : theory) {
    NuMatch m{th, Complex(), std::numeric_limits<double>::infinity(), 0};
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& v : nu) {
      const double dist = std::abs(v - th.value);
      if (dist < best) {
        best = dist;
        m.numeric = v;
      }
      if (dist <= window(th.value)) ++m.count;
    }
    m.rel_err = best / std::max(std::abs(th.value), 1e-12);
    rep.max_rel_err = std::max(rep.max_rel_err, m.rel_err);
    rep.matches.push_back(m);
  }
  for (const Complex& v : nu) {
    if (std::abs(v - lin.a) <= kAmbientWindow * std::abs(lin.a)) ++rep.ambient_count;
    bool near = false;
    for (const NuValue& th : theory) near = near || std::abs(v - th.value) <= window(th.value);
    if (!near) {
      ++rep.unmatched;
      rep.unmatched_values.push_back(v);
    }
  }
  return rep;
}

std::string theorem_report_json(const TheoremReport& r) {
  using nlohmann::json;
  json theory = json::array(), numeric = json::array(), rel = json::array();
  for (const NuMatch& m : r.matches) {
    json mult = m.theory.multiplicity == kAmbient ? json("ambient") : json(m.theory.multiplicity);
    theory.push_back({{"label", std::string(nu_label_name(m.theory.label))},
                      {"re", m.theory.value.real()},
                      {"im", m.theory.value.imag()},
                      {"multiplicity", mult}});
    numeric.push_back({{"re", m.numeric.real()}, {"im", m.numeric.imag()}, {"count", m.count}});
    rel.push_back(m.rel_err);
  }
  json unmatched = json::array();
  for (const Complex& v : r.unmatched_values) unmatched.push_back({v.real(), v.imag()});
  json doc{{"nu_theory", theory},          {"nu_numeric", numeric},
           {"rel_err", rel},               {"max_rel_err", r.max_rel_err},
           {"ambient_count", r.ambient_count}, {"unmatched", r.unmatched},
           {"unmatched_values", unmatched}, {"D", r.D},
           {"seed", r.seed},               {"h", r.h},
           {"state_dim", r.state_dim},     {"fixed_point_residual", r.fixed_point_residual}};
  return doc.dump(2) + "\n";
}

namespace {

Complex ipow(Complex base, int e) {
  Complex r(1.0, 0.0);
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace

CharPolyReport verify_char_poly(const LocalLinearization& lin, int d, const std::vector<Complex>& samples) {
  const int N = lin.n_gen;
  if (d < 1) throw DimensionError("verify_char_poly: dimension must be at least 1");
  if (N * d > 50) throw ConfigError("verify_char_poly: n_gen * d must not exceed 50", "n_gen");
  const int n = N * d;
  const double mu = lin.hyper.mu();
  const double s2 = lin.sigma * lin.sigma;
  const double lambda = lin.a;

  Eigen::MatrixXcd Q = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(n, n);
  const double qscale = mu * lin.delta / (lambda * s2);
  for (int j = 0; j < N; ++j) {
    for (int k = 0; k < d; ++k) Q(j * d + k, j * d + k) = qscale * lin.p_tilde;
    for (int l = 0; l < N; ++l) {
      for (int k = 0; k < d; ++k) R(j * d + k, l * d + k) = mu * lin.p_tilde * lin.p_tilde / s2;
    }
  }
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);

  CharPolyReport rep;
  for (const Complex& s : samples) {
    const Complex f1 = (s + lambda) * (s + lin.b);
    const Complex f2 = s * s + (lin.a + lin.b) * s + lin.c;
    if (std::abs(s + lambda) < 1e-10 || std::abs(s + lin.b) < 1e-10 || std::abs(f2) < 1e-10) {
      ++rep.skipped;
      rep.notes.push_back("sample (" + std::to_string(s.real()) + ", " + std::to_string(s.imag()) +
                          ") is at a root; skipped");
      continue;
    }
    const Eigen::MatrixXcd M = (s + lambda) * (s * I + Q) + R;
    const Complex det = Eigen::PartialPivLU<Eigen::MatrixXcd>(M).determinant();
    const Complex closed = ipow(f1, (N - 1) * d) * ipow(f2, d);
    rep.max_rel_err = std::max(rep.max_rel_err, std::abs(det - closed) / std::abs(closed));
    ++rep.evaluated;
  }
  return rep;
}

}  // namespace kgan
