#pragma once

#include "condcop/copulas.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace condcop {

// ---------------------------------------------------------------------------
// Kernels

enum class KernelKind
{
  EpanechnikovProduct,
  GaussianProduct
};

struct KernelSpec
{
  KernelKind kind = KernelKind::EpanechnikovProduct;
  int dimension = 1;

  //! Half-width of the support along every axis (infinite for Gaussian).
  double support_radius() const;
  bool compact() const { return kind == KernelKind::EpanechnikovProduct; }
};

//! "epanechnikov" / "gaussian".
std::string_view
to_string(KernelKind kind);
KernelKind
kernel_from_string(std::string_view name);

//! Product kernel K(v).
double
kernel_eval(const KernelSpec& spec, std::span<const double> v);

//! K_h(v) = h^{-s} K(v / h). Throws DomainError if h <= 0.
double
kernel_scaled(const KernelSpec& spec, std::span<const double> v, double h);

//! One-dimensional factor of the product kernel.
double
kernel_factor(KernelKind kind, double x);

// ---------------------------------------------------------------------------
// Links

enum class LinkKind
{
  ScaledLogistic,
  Identity,
  LogitUnit,
  LogPositive
};

//! Strictly increasing map psi from the copula parameter space onto the real
//! line. The estimator works with nu = psi(theta) and maps back through the
//! inverse link.
class LinkFunction
{
public:
  LinkFunction() = default;

  static LinkFunction scaled_logistic(double lower, double upper);
  static LinkFunction identity();
  static LinkFunction logit();
  static LinkFunction log();

  //! Parses "scaled_logistic(a,b)", "identity", "logit" or "log".
  static LinkFunction parse(std::string_view text);

  LinkKind kind() const { return kind_; }
  //! Open image of the inverse link.
  ThetaDomain range() const;

  //! theta = psi^{-1}(nu); always strictly inside range().
  double inverse(double nu) const;
  double inverse_d1(double nu) const;
  double inverse_d2(double nu) const;

  struct InverseTerms
  {
    double theta;
    double d1;
    double d2;
  };
  //! inverse, inverse_d1 and inverse_d2 with a single transcendental call.
  InverseTerms inverse_terms(double nu) const;

  //! nu = psi(theta); throws DomainError outside range().
  double forward(double theta) const;
  double forward_d1(double theta) const;
  double forward_d2(double theta) const;

  std::string to_string() const;

private:
  LinkKind kind_ = LinkKind::Identity;
  double lower_ = 0.0;
  double upper_ = 1.0;
};

// ---------------------------------------------------------------------------
// Polynomial basis

using MultiIndex = std::vector<int>;

int
total_degree(const MultiIndex& alpha);
double
multi_factorial(const MultiIndex& alpha);

//! All monomials v^alpha with |alpha| <= p in graded-lexicographic order,
//! zero multi-index first.
class PolyBasis
{
public:
  PolyBasis(int dimension, int degree);

  int dimension() const { return dimension_; }
  int degree() const { return degree_; }
  std::size_t size() const { return indices_.size(); }
  const std::vector<MultiIndex>& multi_indices() const { return indices_; }

  //! Position of alpha in the ordering; throws DomainError if absent.
  std::size_t index_of(const MultiIndex& alpha) const;

  Eigen::VectorXd eval(std::span<const double> v) const;
  //! Writes phi_p(v) into out, which must already have size().
  void eval_into(std::span<const double> v, Eigen::Ref<Eigen::VectorXd> out) const;

private:
  int dimension_;
  int degree_;
  std::vector<MultiIndex> indices_;
};

//! Multi-indices of exact total degree `degree` in graded-lex order.
std::vector<MultiIndex>
multi_indices_of_degree(int dimension, int degree);

Eigen::VectorXd
basis_eval(const PolyBasis& basis, std::span<const double> v);

// ---------------------------------------------------------------------------
// Kernel moments

//! S = int phi phi^T K, S* = int phi phi^T K^2, and for every |beta| = p + 1
//! the vector c_{p,beta} = int phi(v) v^beta K(v) dv. The order p + 2 vectors
//! are computed alongside for completeness.
struct KernelMoments
{
  Eigen::MatrixXd S;
  Eigen::MatrixXd S_star;
  std::vector<std::pair<MultiIndex, Eigen::VectorXd>> c_vectors;
  std::vector<std::pair<MultiIndex, Eigen::VectorXd>> c_tilde_vectors;

  const Eigen::VectorXd& c_vector(const MultiIndex& beta) const;
};

//! int v^alpha K(v)^power dv by tensor Gauss-Legendre quadrature with 64
//! nodes per axis (over [-8, 8] for the Gaussian kernel).
double
kernel_moment(const KernelSpec& spec, const MultiIndex& alpha, int power = 1);

//! Throws DimensionMismatch if the kernel and basis dimensions differ.
KernelMoments
kernel_moments(const KernelSpec& spec, const PolyBasis& basis);

} // namespace condcop
