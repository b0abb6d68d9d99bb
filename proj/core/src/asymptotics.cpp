#include "condcop/asymptotics.hpp"

#include "condcop/errors.hpp"
#include "condcop/numerics.hpp"

#include <cmath>

namespace condcop {

double
TrueModelPoint::derivative(const MultiIndex& beta) const
{
  for (const auto& [index, value] : derivatives) {
    if (index == beta) {
      return value;
    }
  }
  throw DomainError("true model point lacks a required derivative");
}

namespace {

struct Pieces
{
  KernelMoments moments;
  Eigen::LDLT<Eigen::MatrixXd> S_inv;
  Eigen::VectorXd e_alpha;
  double alpha_factorial;
  int order;
};

Pieces
prepare(const TrueModelPoint& truth,
        const KernelSpec& kernel,
        const MultiIndex& alpha,
        int p,
        double h,
        std::size_t N)
{
  const int s = kernel.dimension;
  if (truth.y.size() != s || static_cast<int>(alpha.size()) != s) {
    throw DimensionMismatch("evaluation point, multi-index and kernel dimensions differ");
  }
  if (p < 0) {
    throw DomainError("degree must be nonnegative");
  }
  if (!(h > 0.0) || N < 1) {
    throw DomainError("bandwidth must be positive and N at least one");
  }
  if (!(truth.density > 0.0)) {
    throw DomainError("covariate density must be positive");
  }
  if (!(truth.fisher_curvature > 0.0)) {
    throw DomainError("Fisher curvature must be positive");
  }
  const int order = total_degree(alpha);
  if (order > p) {
    throw ParityError("|alpha| exceeds the polynomial degree");
  }
  const PolyBasis basis(s, p);
  Pieces out{ kernel_moments(kernel, basis), {}, {}, multi_factorial(alpha), order };
  out.S_inv.compute(out.moments.S);
  out.e_alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  out.e_alpha[static_cast<Eigen::Index>(basis.index_of(alpha))] = 1.0;
  return out;
}

double
variance_from(const Pieces& pc,
              const TrueModelPoint& truth,
              double slope,
              int s,
              double h,
              std::size_t N)
{
  const Eigen::VectorXd a = pc.S_inv.solve(pc.e_alpha);
  const double sandwich = a.dot(pc.moments.S_star * a);
  const double scale = static_cast<double>(N) * std::pow(h, s + 2 * pc.order);
  return pc.alpha_factorial * pc.alpha_factorial * sandwich /
         (scale * truth.fisher_curvature * slope * slope * truth.density);
}

} // namespace

AsymptoticPrediction
predict_bias_variance(const TrueModelPoint& truth,
                      const LinkFunction& link,
                      const KernelSpec& kernel,
                      const MultiIndex& alpha,
                      int p,
                      double h,
                      std::size_t N)
{
  const Pieces pc = prepare(truth, kernel, alpha, p, h, N);
  if ((p - pc.order) % 2 == 0) {
    throw ParityError("bias formula requires p - |alpha| odd");
  }
  const int s = kernel.dimension;

  Eigen::VectorXd lead = Eigen::VectorXd::Zero(pc.e_alpha.size());
  AsymptoticPrediction out;
  out.alpha = alpha;
  for (const MultiIndex& beta : multi_indices_of_degree(s, p + 1)) {
    const double d = truth.derivative(beta);
    out.components.derivatives.emplace_back(beta, d);
    lead += (d / multi_factorial(beta)) * pc.moments.c_vector(beta);
  }
  const double slope = link.inverse_d1(truth.nu);
  out.components.density = truth.density;
  out.components.fisher_curvature = truth.fisher_curvature;
  out.components.link_slope = slope;

  out.truth = pc.order == 0 ? truth.nu : truth.derivative(alpha);
  out.bias = pc.alpha_factorial * std::pow(h, p + 1 - pc.order) *
             pc.e_alpha.dot(pc.S_inv.solve(lead));
  out.variance = variance_from(pc, truth, slope, s, h, N);
  out.std_normal_scaling = std::sqrt(static_cast<double>(N) * std::pow(h, s + 2 * pc.order));

  out.truth_theta = link.inverse(truth.nu);
  out.theta_bias = out.bias * slope;
  out.theta_variance = out.variance * slope * slope;
  return out;
}

double
predict_variance(const TrueModelPoint& truth,
                 const LinkFunction& link,
                 const KernelSpec& kernel,
                 const MultiIndex& alpha,
                 int p,
                 double h,
                 std::size_t N)
{
  const Pieces pc = prepare(truth, kernel, alpha, p, h, N);
  return variance_from(pc, truth, link.inverse_d1(truth.nu), kernel.dimension, h, N);
}

NormalDescriptor
predicted_sampling_distribution(const AsymptoticPrediction& prediction, SamplingTarget target)
{
  switch (target) {
    case SamplingTarget::Theta:
      return { prediction.truth_theta + prediction.theta_bias, prediction.theta_variance };
    case SamplingTarget::Nu:
    case SamplingTarget::Derivative:
      break;
  }
  return { prediction.truth + prediction.bias, prediction.variance };
}

BandwidthRate
optimal_bandwidth_rate(double N, int p, int s)
{
  if (!(N >= 1.0) || p < 0 || s < 1) {
    throw DomainError("optimal_bandwidth_rate needs N >= 1, p >= 0, s >= 1");
  }
  BandwidthRate out;
  out.exponent = -1.0 / static_cast<double>(2 * p + 2 + s);
  out.value = std::pow(N, out.exponent);
  return out;
}

RateProxy
rate_proxy(double h, double N, int p, int s)
{
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw DomainError("rate_proxy needs a positive bandwidth");
  }
  if (!(N >= 2.0)) {
    throw DomainError("rate_proxy needs N >= 2");
  }
  if (p < 0 || s < 1) {
    throw DomainError("rate_proxy needs p >= 0 and s >= 1");
  }
  RateProxy out{ h, N, p, s, 0.0 };
  out.value = std::pow(h, p + 1) + std::sqrt(std::log(N) / (N * std::pow(h, s)));
  return out;
}

double
rate_proxy_minimizer(double N, int p, int s)
{
  // the proxy is unimodal in log h
  auto f = [&](double x) { return rate_proxy(std::exp(x), N, p, s).value; };
  double a = std::log(1e-8);
  double b = std::log(1e3);
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > 1e-12) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = f(x2);
    }
  }
  return std::exp(0.5 * (a + b));
}

double
fisher_curvature(const CopulaFamily& family, double theta)
{
  family.check_theta(theta);
  const GaussLegendre& rule = graded_unit_rule();
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u = rule.nodes[i];
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double v = rule.nodes[j];
      const auto l = family.log_density_derivatives(u, v, theta);
      total += rule.weights[i] * rule.weights[j] * std::exp(l.value) * l.d2;
    }
  }
  return -total;
}

} // namespace condcop
