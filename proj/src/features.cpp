#include "kgan/errors.hpp"
#include "kgan/jacobian_oracle.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace kgan {

namespace {

int nth_prime(int n) {
  int count = 0;
  for (int c = 2;; ++c) {
    bool prime = true;
    for (int q = 2; q * q <= c; ++q) {
      if (c % q == 0) {
        prime = false;
        break;
      }
    }
    if (prime && count++ == n) return c;
  }
}

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

void require(const FeatureMap& fm, Eigen::Index n) {
  if (n != fm.d) {
    throw DimensionError("feature map of dimension " + std::to_string(fm.d) + " evaluated at a point of dimension " +
                         std::to_string(n));
  }
}

}  // namespace

FeatureMap build_features(const KernelSpec& k, int D, std::uint64_t seed, FeatureSampling sampling) {
  if (D < 1) throw ConfigError("feature dimension must be at least 1", "D");
  FeatureMap fm;
  fm.D = D;
  fm.d = k.dim();
  fm.seed = seed;
  fm.sampling = sampling;
  fm.scale = std::sqrt(2.0 / D);
  fm.freqs.resize(D, fm.d);
  fm.phases.resize(D);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double inv_sigma = 1.0 / k.width();
  constexpr double two_pi = 2.0 * std::numbers::pi;

  if (sampling == FeatureSampling::iid) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int r = 0; r < D; ++r) {
      for (int c = 0; c < fm.d; ++c) fm.freqs(r, c) = gauss(rng) * inv_sigma;
      fm.phases(r) = two_pi * unif(rng);
    }
    return fm;
  }

  // Halton sequence with a random Cranley-Patterson shift, mapped through the
  // normal quantile.
  const boost::math::normal_distribution<double> normal;
  std::vector<double> shift(fm.d);
  for (double& s : shift) s = unif(rng);
  std::vector<int> bases(fm.d);
  for (int c = 0; c < fm.d; ++c) bases[c] = nth_prime(c);

  const int groups = (D + 1) / 2;
  for (int g = 0; g < groups; ++g) {
    const double phase = two_pi * unif(rng);
    Eigen::RowVectorXd w(fm.d);
    for (int c = 0; c < fm.d; ++c) {
      double u = radical_inverse(static_cast<std::uint64_t>(g) + 1, bases[c]) + shift[c];
      u -= std::floor(u);
      u = std::clamp(u, 1e-16, 1.0 - 1e-16);
      w(c) = boost::math::quantile(normal, u) * inv_sigma;
    }
    for (int t = 0; t < 2 && 2 * g + t < D; ++t) {
      fm.freqs.row(2 * g + t) = w;
      fm.phases(2 * g + t) = phase + t * 0.5 * std::numbers::pi;
    }
  }

  // Moment matching: a single shifted sample deep in a tail can move the
  // empirical second moment by a few percent, so the frequencies are whitened
  // to make the implied kernel's curvature at coincident points exactly
  // I / sigma^2.
  Matrix S = fm.freqs.transpose() * fm.freqs / static_cast<double>(D);
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  const Matrix T = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                   es.eigenvectors().transpose() * inv_sigma;
  fm.freqs = fm.freqs * T;
  return fm;
}

Vector FeatureMap::features(const VectorRef& x) const {
  require(*this, x.size());
  return scale * (freqs * x + phases).array().cos().matrix();
}

Matrix FeatureMap::features_jacobian(const VectorRef& x) const {
  require(*this, x.size());
  const Vector s = -scale * (freqs * x + phases).array().sin().matrix();
  return s.asDiagonal() * freqs;
}

double FeatureMap::kernel(const VectorRef& x, const VectorRef& y) const { return features(x).dot(features(y)); }

double FeatureMap::value(const VectorRef& theta, const VectorRef& x) const { return theta.dot(features(x)); }

Vector FeatureMap::gradient(const VectorRef& theta, const VectorRef& x) const {
  require(*this, x.size());
  const Vector s = -scale * (freqs * x + phases).array().sin().matrix();
  return freqs.transpose() * theta.cwiseProduct(s);
}

Matrix FeatureMap::hessian(const VectorRef& theta, const VectorRef& x) const {
  require(*this, x.size());
  const Vector c = -scale * (freqs * x + phases).array().cos().matrix();
  return freqs.transpose() * theta.cwiseProduct(c).asDiagonal() * freqs;
}

}  // namespace kgan
