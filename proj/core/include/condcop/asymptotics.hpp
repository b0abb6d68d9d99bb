#pragma once

#include "condcop/copulas.hpp"
#include "condcop/smoothing.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

namespace condcop {

//! Everything the asymptotic predictors need to know about the truth at y.
struct TrueModelPoint
{
  Eigen::VectorXd y;
  double nu = 0.0;
  //! Partial derivatives D^beta nu(y); must cover every |beta| = p + 1 and
  //! the target multi-index alpha when alpha != 0.
  std::vector<std::pair<MultiIndex, double>> derivatives;
  double density = 0.0;          //!< f_Y(y)
  double fisher_curvature = 0.0; //!< sigma^2(y) = -E[l''(theta(y), U) | Y = y]

  //! Throws DomainError if beta is not listed.
  double derivative(const MultiIndex& beta) const;
};

struct AsymptoticPrediction
{
  MultiIndex alpha;
  double truth = 0.0; //!< D^alpha nu(y), or nu(y) for alpha = 0
  double bias = 0.0;
  double variance = 0.0;
  double std_normal_scaling = 0.0; //!< sqrt(N h^{s + 2|alpha|})
  //! theta-scale versions; only meaningful for alpha = 0.
  double truth_theta = 0.0;
  double theta_bias = 0.0;
  double theta_variance = 0.0;

  struct Components
  {
    double density = 0.0;
    double fisher_curvature = 0.0;
    double link_slope = 0.0; //!< (psi^{-1})'(nu(y))
    std::vector<std::pair<MultiIndex, double>> derivatives;
  } components;
};

//! Leading-order conditional bias and variance of alpha! * gamma_alpha(y)
//! as an estimator of D^alpha nu(y). Throws ParityError when p - |alpha| is
//! even or |alpha| > p, DomainError on non-positive density or curvature.
AsymptoticPrediction
predict_bias_variance(const TrueModelPoint& truth,
                      const LinkFunction& link,
                      const KernelSpec& kernel,
                      const MultiIndex& alpha,
                      int p,
                      double h,
                      std::size_t N);

//! Variance alone; defined for every |alpha| <= p regardless of parity.
double
predict_variance(const TrueModelPoint& truth,
                 const LinkFunction& link,
                 const KernelSpec& kernel,
                 const MultiIndex& alpha,
                 int p,
                 double h,
                 std::size_t N);

enum class SamplingTarget
{
  Nu,
  Theta,
  Derivative
};

struct NormalDescriptor
{
  double mean = 0.0;
  double variance = 0.0;
};

NormalDescriptor
predicted_sampling_distribution(const AsymptoticPrediction& prediction, SamplingTarget target);

struct BandwidthRate
{
  double exponent = 0.0; //!< -1 / (2p + 2 + s)
  double value = 0.0;    //!< N^exponent
};

BandwidthRate
optimal_bandwidth_rate(double N, int p, int s);

struct RateProxy
{
  double h = 0.0;
  double N = 0.0;
  int p = 0;
  int s = 0;
  double value = 0.0;
};

//! h^{p+1} + sqrt(log N / (N h^s)) with the natural logarithm.
RateProxy
rate_proxy(double h, double N, int p, int s);

//! Numerical argmin over h of the rate proxy (golden section in log h).
double
rate_proxy_minimizer(double N, int p, int s);

//! -E[l''(theta, U)] under the copula at theta, by the tensor graded rule.
double
fisher_curvature(const CopulaFamily& family, double theta);

} // namespace condcop
