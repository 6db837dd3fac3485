#pragma once

#include "kgan/kernel.hpp"
#include "kgan/simd/rbf_sum.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace kgan {

constexpr double kPruneTol = 1e-15;

/// f(.) = sum_k coef_k K(., center_k), stored structure-of-arrays so the
/// weighted kernel sums run through the SIMD layer.
///
/// Terms are merged only when their centers are bitwise equal (after
/// normalizing -0.0). Pruned terms leave a zero-coefficient slot behind until
/// more than half of the slots are dead, at which point storage is compacted.
class DiscriminatorState {
 public:
  explicit DiscriminatorState(int dim);

  int dim() const noexcept { return dim_; }
  // Live terms.
  std::size_t size() const noexcept { return live_; }
  bool empty() const noexcept { return live_ == 0; }

  void add_term(const VectorRef& center, double coef);
  void add_term(const double* center, double coef);
  void scale(double w);
  // Drops every term with |coef| < tol.
  void prune(double tol = kPruneTol);

  double value(const KernelSpec& k, const VectorRef& x) const;
  Vector gradient(const KernelSpec& k, const VectorRef& x) const;
  void value_and_gradient(const KernelSpec& k, const double* x, double& value, double* grad) const;
  Matrix hessian(const KernelSpec& k, const VectorRef& x) const;
  // RKHS norm squared, sum_{k,l} coef_k coef_l K(center_k, center_l).
  double norm_sq(const KernelSpec& k) const;

  // Live terms in insertion order.
  std::vector<std::pair<Vector, double>> terms() const;
  // Coefficient of the term centered exactly at `center`, 0 if absent.
  double coef_at(const VectorRef& center) const;

  simd::CenterView view() const;

 private:
  std::uint64_t key_hash(const double* c) const noexcept;
  bool same_center(std::size_t slot, const double* c) const noexcept;
  void compact();

  int dim_;
  std::vector<std::vector<double>> cols_;
  std::vector<double> coefs_;
  std::vector<char> alive_;
  mutable std::vector<const double*> colptrs_;
  std::unordered_multimap<std::uint64_t, std::size_t> index_;
  std::size_t live_ = 0;
};

}  // namespace kgan
