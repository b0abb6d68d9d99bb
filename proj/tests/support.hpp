#pragma once

// Shared fixtures and independent oracles for the unit tests.

#include "condcop/copulas.hpp"
#include "condcop/dataset.hpp"
#include "condcop/local_likelihood.hpp"
#include "condcop/numerics.hpp"
#include "condcop/random.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

namespace testing {

using namespace condcop;

//! l(theta, u) = -(theta - a)^2 / 2 regardless of u.
class QuadraticStub final : public CopulaFamily
{
public:
  explicit QuadraticStub(double a)
    : a_(a)
  {
  }
  std::string_view name() const override { return "quadratic-stub"; }
  ThetaDomain theta_domain() const override { return {}; }
  LogDensityDerivatives log_density_derivatives(double, double, double theta) const override
  {
    return { -0.5 * (theta - a_) * (theta - a_), -(theta - a_), -1.0 };
  }
  double h_function(double u, double, double) const override { return u; }
  double kendall_tau(double) const override { return 0.0; }

private:
  double a_;
};

//! Independence at every theta: l == 0.
class IndependenceStub final : public CopulaFamily
{
public:
  std::string_view name() const override { return "independence-stub"; }
  ThetaDomain theta_domain() const override { return {}; }
  LogDensityDerivatives log_density_derivatives(double, double, double) const override
  {
    return { 0.0, 0.0, 0.0 };
  }
  double h_function(double u, double, double) const override { return u; }
  double kendall_tau(double) const override { return 0.0; }
};

//! N rows with Y ~ Uniform(lo, hi)^s and (U1, U2) drawn from `family` at
//! theta(Y) (first covariate only).
inline Dataset
draw_dataset(const CopulaFamily& family,
             const std::function<double(double)>& theta,
             std::size_t N,
             int s,
             std::uint64_t seed,
             double lo = -2.0,
             double hi = 2.0)
{
  Rng rng(seed);
  Dataset d;
  d.U.resize(static_cast<Eigen::Index>(N), 2);
  d.Y.resize(static_cast<Eigen::Index>(N), s);
  for (std::size_t i = 0; i < N; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int j = 0; j < s; ++j) {
      d.Y(r, j) = lo + (hi - lo) * uniform_open(rng);
    }
    const auto p = draw(family, theta(d.Y(r, 0)), rng);
    d.U(r, 0) = p[0];
    d.U(r, 1) = p[1];
  }
  return d;
}

inline Eigen::VectorXd
vec(std::initializer_list<double> xs)
{
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) {
    v(k++) = x;
  }
  return v;
}

inline double
epanechnikov_1d(double x)
{
  return std::abs(x) <= 1.0 ? 0.75 * (1.0 - x * x) : 0.0;
}

//! Monomials of degree <= p for s <= 2 in graded-lex order, written out by
//! hand: s = 1: 1, v, v^2, ...; s = 2: 1, v1, v2, v1^2, v1 v2, v2^2, ...
inline std::vector<double>
naive_basis(const std::vector<double>& v, int p)
{
  std::vector<double> out;
  if (v.size() == 1) {
    for (int k = 0; k <= p; ++k) {
      out.push_back(std::pow(v[0], k));
    }
    return out;
  }
  for (int k = 0; k <= p; ++k) {
    for (int a = k; a >= 0; --a) {
      out.push_back(std::pow(v[0], a) * std::pow(v[1], k - a));
    }
  }
  return out;
}

//! Direct re-summation of the local log-likelihood, Epanechnikov kernel only.
inline double
naive_objective(const Dataset& d,
                const FitConfig& cfg,
                const Eigen::VectorXd& y,
                const Eigen::VectorXd& gamma)
{
  const int s = d.covariate_dimension();
  const double h = cfg.bandwidth;
  double total = 0.0;
  for (Eigen::Index i = 0; i < d.U.rows(); ++i) {
    double w = 1.0;
    std::vector<double> v(static_cast<std::size_t>(s));
    for (int j = 0; j < s; ++j) {
      v[static_cast<std::size_t>(j)] = d.Y(i, j) - y(j);
      w *= epanechnikov_1d(v[static_cast<std::size_t>(j)] / h) / h;
    }
    if (w == 0.0) {
      continue;
    }
    const auto phi = naive_basis(v, cfg.degree);
    double eta = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
      eta += phi[k] * gamma(static_cast<Eigen::Index>(k));
    }
    total += w * cfg.weight_scale *
             cfg.family->log_density(d.U(i, 0), d.U(i, 1), cfg.link.inverse(eta));
  }
  return total;
}

//! Central difference of a scalar function.
inline double
central_difference(const std::function<double(double)>& f, double x, double step)
{
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

//! Integral of f over the unit square by 64-node Gauss-Legendre on every
//! cell of a tensor partition graded geometrically towards both edges.
inline double
unit_square_integral(const std::function<double(double, double)>& f)
{
  std::vector<double> breaks{ 0.0 };
  for (int k = -12; k <= -1; ++k) {
    breaks.push_back(0.5 * std::pow(10.0, k));
  }
  breaks.push_back(0.5);
  for (int k = -1; k >= -12; --k) {
    breaks.push_back(1.0 - 0.5 * std::pow(10.0, k));
  }
  breaks.push_back(1.0);
  const auto& g = GaussLegendre::get(64);
  double total = 0.0;
  for (std::size_t a = 0; a + 1 < breaks.size(); ++a) {
    const double ha = 0.5 * (breaks[a + 1] - breaks[a]);
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
      const double hb = 0.5 * (breaks[b + 1] - breaks[b]);
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double u = breaks[a] + ha * (g.nodes[i] + 1.0);
        for (std::size_t j = 0; j < g.nodes.size(); ++j) {
          const double v = breaks[b] + hb * (g.nodes[j] + 1.0);
          total += ha * hb * g.weights[i] * g.weights[j] * f(u, v);
        }
      }
    }
  }
  return total;
}

inline FitConfig
frank_config(double h, int p = 1)
{
  FitConfig cfg;
  cfg.family = make_family(FamilyId::Frank);
  cfg.link = LinkFunction::scaled_logistic(1.0, 5.0);
  cfg.degree = p;
  cfg.bandwidth = h;
  return cfg;
}

} // namespace testing
