#include "kgan/discriminator.hpp"

#include "kgan/errors.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace kgan {

namespace {

inline double normalized(double v) noexcept { return v == 0.0 ? 0.0 : v; }

void require_query(int dim, Eigen::Index n) {
  if (n != dim) {
    throw DimensionError("discriminator of dimension " + std::to_string(dim) +
                         " evaluated at a point of dimension " + std::to_string(n));
  }
}

}  // namespace

DiscriminatorState::DiscriminatorState(int dim) : dim_(dim), cols_(dim), colptrs_(dim) {
  if (dim < 1) throw DimensionError("discriminator dimension must be at least 1");
}

std::uint64_t DiscriminatorState::key_hash(const double* c) const noexcept {
  std::uint64_t h = 1469598103934665603ull;
  for (int k = 0; k < dim_; ++k) {
    h ^= std::bit_cast<std::uint64_t>(normalized(c[k]));
    h *= 1099511628211ull;
    h ^= h >> 29;
  }
  return h;
}

bool DiscriminatorState::same_center(std::size_t slot, const double* c) const noexcept {
  for (int k = 0; k < dim_; ++k) {
    if (std::bit_cast<std::uint64_t>(normalized(cols_[k][slot])) !=
        std::bit_cast<std::uint64_t>(normalized(c[k]))) {
      return false;
    }
  }
  return true;
}

void DiscriminatorState::add_term(const VectorRef& center, double coef) {
  require_query(dim_, center.size());
  Vector tmp = center;
  add_term(tmp.data(), coef);
}

void DiscriminatorState::add_term(const double* center, double coef) {
  const std::uint64_t h = key_hash(center);
  auto [lo, hi] = index_.equal_range(h);
  for (auto it = lo; it != hi; ++it) {
    if (same_center(it->second, center)) {
      coefs_[it->second] += coef;
      return;
    }
  }
  const std::size_t slot = coefs_.size();
  for (int k = 0; k < dim_; ++k) cols_[k].push_back(normalized(center[k]));
  coefs_.push_back(coef);
  alive_.push_back(1);
  index_.emplace(h, slot);
  ++live_;
}

void DiscriminatorState::scale(double w) {
  for (double& c : coefs_) c *= w;
}

void DiscriminatorState::prune(double tol) {
  std::vector<double> key;
  for (std::size_t i = 0; i < coefs_.size(); ++i) {
    if (!alive_[i] || std::abs(coefs_[i]) >= tol) continue;
    key.resize(dim_);
    for (int k = 0; k < dim_; ++k) key[k] = cols_[k][i];
    auto [lo, hi] = index_.equal_range(key_hash(key.data()));
    for (auto it = lo; it != hi; ++it) {
      if (it->second == i) {
        index_.erase(it);
        break;
      }
    }
    coefs_[i] = 0.0;
    alive_[i] = 0;
    --live_;
  }
  if (coefs_.size() > 64 && 2 * live_ < coefs_.size()) compact();
}

void DiscriminatorState::compact() {
  std::size_t out = 0;
  for (std::size_t i = 0; i < coefs_.size(); ++i) {
    if (!alive_[i]) continue;
    for (int k = 0; k < dim_; ++k) cols_[k][out] = cols_[k][i];
    coefs_[out] = coefs_[i];
    alive_[out] = 1;
    ++out;
  }
  for (int k = 0; k < dim_; ++k) cols_[k].resize(out);
  coefs_.resize(out);
  alive_.resize(out);
  index_.clear();
  index_.reserve(out);
  std::vector<double> c(dim_);
  for (std::size_t i = 0; i < out; ++i) {
    for (int k = 0; k < dim_; ++k) c[k] = cols_[k][i];
    index_.emplace(key_hash(c.data()), i);
  }
}

simd::CenterView DiscriminatorState::view() const {
  for (int k = 0; k < dim_; ++k) colptrs_[k] = cols_[k].data();
  simd::CenterView v;
  v.count = coefs_.size();
  v.dim = dim_;
  v.cols = colptrs_.data();
  v.coefs = coefs_.data();
  return v;
}

void DiscriminatorState::value_and_gradient(const KernelSpec& k, const double* x, double& value,
                                            double* grad) const {
  const double g = k.curvature();
  simd::rbf_sum(view(), std::span<const double>(x, dim_), -0.5 * g, value,
                std::span<double>(grad, dim_));
  for (int i = 0; i < dim_; ++i) grad[i] *= g;
}

double DiscriminatorState::value(const KernelSpec& k, const VectorRef& x) const {
  require_query(dim_, x.size());
  Vector xx = x;
  Vector grad(dim_);
  double v = 0.0;
  value_and_gradient(k, xx.data(), v, grad.data());
  return v;
}

Vector DiscriminatorState::gradient(const KernelSpec& k, const VectorRef& x) const {
  require_query(dim_, x.size());
  Vector xx = x;
  Vector grad(dim_);
  double v = 0.0;
  value_and_gradient(k, xx.data(), v, grad.data());
  return grad;
}

Matrix DiscriminatorState::hessian(const KernelSpec& k, const VectorRef& x) const {
  require_query(dim_, x.size());
  Matrix h = Matrix::Zero(dim_, dim_);
  Vector c(dim_);
  for (std::size_t i = 0; i < coefs_.size(); ++i) {
    if (!alive_[i]) continue;
    for (int j = 0; j < dim_; ++j) c(j) = cols_[j][i];
    h += coefs_[i] * hess11(k, x, c);
  }
  return h;
}

double DiscriminatorState::norm_sq(const KernelSpec& k) const {
  double total = 0.0;
  std::vector<double> c(dim_), grad(dim_);
  for (std::size_t i = 0; i < coefs_.size(); ++i) {
    if (!alive_[i]) continue;
    for (int j = 0; j < dim_; ++j) c[j] = cols_[j][i];
    double v = 0.0;
    value_and_gradient(k, c.data(), v, grad.data());
    total += coefs_[i] * v;
  }
  return total;
}

std::vector<std::pair<Vector, double>> DiscriminatorState::terms() const {
  std::vector<std::pair<Vector, double>> out;
  out.reserve(live_);
  for (std::size_t i = 0; i < coefs_.size(); ++i) {
    if (!alive_[i]) continue;
    Vector c(dim_);
    for (int j = 0; j < dim_; ++j) c(j) = cols_[j][i];
    out.emplace_back(std::move(c), coefs_[i]);
  }
  return out;
}

double DiscriminatorState::coef_at(const VectorRef& center) const {
  require_query(dim_, center.size());
  Vector c = center;
  auto [lo, hi] = index_.equal_range(key_hash(c.data()));
  for (auto it = lo; it != hi; ++it) {
    if (same_center(it->second, c.data())) return coefs_[it->second];
  }
  return 0.0;
}

}  // namespace kgan
