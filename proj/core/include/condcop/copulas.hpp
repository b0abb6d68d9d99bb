#pragma once

#include "condcop/random.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace condcop {

enum class FamilyId
{
  Frank,
  Clayton,
  Gaussian
};

//! "frank", "clayton" or "gaussian".
std::string_view
to_string(FamilyId id);

//! Inverse of to_string; throws DomainError on an unknown name.
FamilyId
family_from_string(std::string_view name);

//! Open interval of admissible copula parameters.
struct ThetaDomain
{
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double theta) const { return theta > lower && theta < upper; }
};

//! l(theta, u) = log c(u | theta) together with its first two
//! theta-derivatives.
struct LogDensityDerivatives
{
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

using CopulaPoint = std::array<double, 2>;

//! A bivariate single-parameter copula family.
//!
//! Implementations must be stateless: every member is a pure function of its
//! arguments, so one instance can be shared across threads. The estimator
//! only ever calls `log_density_derivatives` in its inner loop; user-defined
//! families (test stubs, experimental models) only need to override the pure
//! virtual members.
class CopulaFamily
{
public:
  virtual ~CopulaFamily() = default;

  virtual std::string_view name() const = 0;
  virtual ThetaDomain theta_domain() const = 0;
  int dimension() const { return 2; }

  //! Natural log of the copula density and its theta-derivatives at (u, v).
  //! Throws DomainError when u or v is not strictly inside (0,1) or theta is
  //! not admissible.
  virtual LogDensityDerivatives log_density_derivatives(double u,
                                                        double v,
                                                        double theta) const = 0;

  virtual double log_density(double u, double v, double theta) const;
  double log_density_d1(double u, double v, double theta) const;
  double log_density_d2(double u, double v, double theta) const;

  //! Conditional distribution of the first coordinate given the second,
  //! P(U1 <= u | U2 = given). All built-in families are exchangeable, so the
  //! same function serves either conditioning direction.
  virtual double h_function(double u, double given, double theta) const = 0;

  //! Inverse of h_function in its first argument. The default implementation
  //! inverts numerically by bisection.
  virtual double h_inverse(double p, double given, double theta) const;

  virtual double kendall_tau(double theta) const = 0;

  //! Throws DomainError unless theta is admissible.
  void check_theta(double theta) const;

protected:
  static void check_unit(double u, const char* what);
};

using FamilyPtr = std::shared_ptr<const CopulaFamily>;

//! Frank copula on (-50, 50); theta = 0 is the independence limit and is
//! evaluated through a power series around zero.
class FrankCopula final : public CopulaFamily
{
public:
  std::string_view name() const override { return "frank"; }
  ThetaDomain theta_domain() const override { return { -50.0, 50.0 }; }
  LogDensityDerivatives log_density_derivatives(double u,
                                                double v,
                                                double theta) const override;
  double log_density(double u, double v, double theta) const override;
  double h_function(double u, double given, double theta) const override;
  double h_inverse(double p, double given, double theta) const override;
  double kendall_tau(double theta) const override;
};

//! Clayton copula on (0, inf).
class ClaytonCopula final : public CopulaFamily
{
public:
  std::string_view name() const override { return "clayton"; }
  ThetaDomain theta_domain() const override
  {
    return { 0.0, std::numeric_limits<double>::infinity() };
  }
  LogDensityDerivatives log_density_derivatives(double u,
                                                double v,
                                                double theta) const override;
  double h_function(double u, double given, double theta) const override;
  double h_inverse(double p, double given, double theta) const override;
  double kendall_tau(double theta) const override;
};

//! Gaussian copula with correlation theta in (-1, 1).
class GaussianCopula final : public CopulaFamily
{
public:
  std::string_view name() const override { return "gaussian"; }
  ThetaDomain theta_domain() const override { return { -1.0, 1.0 }; }
  LogDensityDerivatives log_density_derivatives(double u,
                                                double v,
                                                double theta) const override;
  double h_function(double u, double given, double theta) const override;
  double h_inverse(double p, double given, double theta) const override;
  double kendall_tau(double theta) const override;
};

FamilyPtr
make_family(FamilyId id);

//! Draws (U1, U2) with U2 ~ Uniform and U1 = h_inverse(V, U2, theta),
//! V ~ Uniform, consuming exactly two uniforms from rng (V first).
CopulaPoint
draw(const CopulaFamily& family, double theta, Rng& rng);

std::vector<CopulaPoint>
sample(const CopulaFamily& family, double theta, std::size_t count, Rng& rng);

std::vector<CopulaPoint>
sample(const CopulaFamily& family,
       double theta,
       std::size_t count,
       std::uint64_t seed);

} // namespace condcop
