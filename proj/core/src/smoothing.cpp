#include "condcop/smoothing.hpp"

#include "condcop/errors.hpp"
#include "condcop/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace condcop {

// ---------------------------------------------------------------------------
// Kernels

namespace {

constexpr double gaussian_kernel_range = 8.0;
constexpr std::size_t moment_nodes = 64;

} // namespace

double
KernelSpec::support_radius() const
{
  return compact() ? 1.0 : std::numeric_limits<double>::infinity();
}

std::string_view
to_string(KernelKind kind)
{
  return kind == KernelKind::EpanechnikovProduct ? "epanechnikov" : "gaussian";
}

KernelKind
kernel_from_string(std::string_view name)
{
  if (name == "epanechnikov") {
    return KernelKind::EpanechnikovProduct;
  }
  if (name == "gaussian") {
    return KernelKind::GaussianProduct;
  }
  throw DomainError("unknown kernel '" + std::string(name) + "'");
}

double
kernel_factor(KernelKind kind, double x)
{
  if (kind == KernelKind::EpanechnikovProduct) {
    return std::abs(x) <= 1.0 ? 0.75 * (1.0 - x * x) : 0.0;
  }
  return normal_pdf(x);
}

double
kernel_eval(const KernelSpec& spec, std::span<const double> v)
{
  if (static_cast<int>(v.size()) != spec.dimension) {
    throw DimensionMismatch("kernel_eval: argument has wrong dimension");
  }
  double k = 1.0;
  for (double x : v) {
    k *= kernel_factor(spec.kind, x);
    if (k == 0.0) {
      break;
    }
  }
  return k;
}

double
kernel_scaled(const KernelSpec& spec, std::span<const double> v, double h)
{
  if (!(h > 0.0)) {
    throw DomainError("kernel_scaled: bandwidth must be positive");
  }
  if (static_cast<int>(v.size()) != spec.dimension) {
    throw DimensionMismatch("kernel_scaled: argument has wrong dimension");
  }
  double k = 1.0;
  for (double x : v) {
    k *= kernel_factor(spec.kind, x / h) / h;
    if (k == 0.0) {
      break;
    }
  }
  return k;
}

// ---------------------------------------------------------------------------
// Links

LinkFunction
LinkFunction::scaled_logistic(double lower, double upper)
{
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw DomainError("scaled_logistic: need finite lower < upper");
  }
  LinkFunction link;
  link.kind_ = LinkKind::ScaledLogistic;
  link.lower_ = lower;
  link.upper_ = upper;
  return link;
}

LinkFunction
LinkFunction::identity()
{
  LinkFunction link;
  link.kind_ = LinkKind::Identity;
  return link;
}

LinkFunction
LinkFunction::logit()
{
  LinkFunction link;
  link.kind_ = LinkKind::LogitUnit;
  link.lower_ = 0.0;
  link.upper_ = 1.0;
  return link;
}

LinkFunction
LinkFunction::log()
{
  LinkFunction link;
  link.kind_ = LinkKind::LogPositive;
  return link;
}

namespace {

double
parse_double(std::string_view text)
{
  while (!text.empty() && text.front() == ' ') {
    text.remove_prefix(1);
  }
  while (!text.empty() && text.back() == ' ') {
    text.remove_suffix(1);
  }
  double value = 0.0;
  const auto [ptr, ec] =
    std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DomainError("cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

} // namespace

LinkFunction
LinkFunction::parse(std::string_view text)
{
  if (text == "identity") {
    return identity();
  }
  if (text == "logit") {
    return logit();
  }
  if (text == "log") {
    return log();
  }
  constexpr std::string_view prefix = "scaled_logistic(";
  if (text.starts_with(prefix) && text.ends_with(")")) {
    auto inner = text.substr(prefix.size(), text.size() - prefix.size() - 1);
    const auto comma = inner.find(',');
    if (comma == std::string_view::npos) {
      throw DomainError("scaled_logistic link needs two bounds");
    }
    return scaled_logistic(parse_double(inner.substr(0, comma)),
                           parse_double(inner.substr(comma + 1)));
  }
  throw DomainError("unknown link '" + std::string(text) + "'");
}

ThetaDomain
LinkFunction::range() const
{
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (kind_) {
    case LinkKind::ScaledLogistic:
    case LinkKind::LogitUnit:
      return { lower_, upper_ };
    case LinkKind::Identity:
      return { -inf, inf };
    case LinkKind::LogPositive:
      return { 0.0, inf };
  }
  return { -inf, inf };
}

namespace {

// sigma(x) (1 - sigma(x)) without overflow.
double
logistic_slope(double x)
{
  const double e = std::exp(-std::abs(x));
  return e / ((1.0 + e) * (1.0 + e));
}

} // namespace

double
LinkFunction::inverse(double nu) const
{
  switch (kind_) {
    case LinkKind::ScaledLogistic:
    case LinkKind::LogitUnit: {
      // Evaluate from the nearer bound so the result stays accurate and
      // strictly inside the open interval.
      const double width = upper_ - lower_;
      double theta = nu < 0.0 ? lower_ + width * logistic(nu)
                              : upper_ - width * logistic(-nu);
      if (theta <= lower_) {
        theta = std::nextafter(lower_, upper_);
      } else if (theta >= upper_) {
        theta = std::nextafter(upper_, lower_);
      }
      return theta;
    }
    case LinkKind::Identity:
      return nu;
    case LinkKind::LogPositive:
      return std::max(std::exp(nu), std::numeric_limits<double>::min());
  }
  return nu;
}

double
LinkFunction::inverse_d1(double nu) const
{
  switch (kind_) {
    case LinkKind::ScaledLogistic:
    case LinkKind::LogitUnit:
      return (upper_ - lower_) * logistic_slope(nu);
    case LinkKind::Identity:
      return 1.0;
    case LinkKind::LogPositive:
      return std::exp(nu);
  }
  return 1.0;
}

double
LinkFunction::inverse_d2(double nu) const
{
  switch (kind_) {
    case LinkKind::ScaledLogistic:
    case LinkKind::LogitUnit:
      // sigma (1 - sigma) (1 - 2 sigma), with 1 - 2 sigma = -tanh(nu / 2)
      return -(upper_ - lower_) * logistic_slope(nu) * std::tanh(0.5 * nu);
    case LinkKind::Identity:
      return 0.0;
    case LinkKind::LogPositive:
      return std::exp(nu);
  }
  return 0.0;
}

LinkFunction::InverseTerms
LinkFunction::inverse_terms(double nu) const
{
  switch (kind_) {
    case LinkKind::ScaledLogistic:
    case LinkKind::LogitUnit: {
      const double width = upper_ - lower_;
      // e = exp(-|nu|) in (0, 1]; sigma(-|nu|) = e / (1 + e)
      const double e = std::exp(-std::abs(nu));
      const double small = e / (1.0 + e);
      const double slope = small * (1.0 - small);
      double theta = nu < 0.0 ? lower_ + width * small : upper_ - width * small;
      if (theta <= lower_) {
        theta = std::nextafter(lower_, upper_);
      } else if (theta >= upper_) {
        theta = std::nextafter(upper_, lower_);
      }
      // 1 - 2 sigma(nu) = -sign(nu) (1 - e) / (1 + e)
      const double centre = std::copysign((1.0 - e) / (1.0 + e), nu);
      return { theta, width * slope, -width * slope * centre };
    }
    case LinkKind::Identity:
      return { nu, 1.0, 0.0 };
    case LinkKind::LogPositive: {
      const double e = std::exp(nu);
      return { std::max(e, std::numeric_limits<double>::min()), e, e };
    }
  }
  return { nu, 1.0, 0.0 };
}

double
LinkFunction::forward(double theta) const
{
  if (!range().contains(theta)) {
    std::ostringstream msg;
    msg << "link " << to_string() << ": theta = " << theta << " outside its range";
    throw DomainError(msg.str());
  }
  switch (kind_) {
    case LinkKind::ScaledLogistic:
    case LinkKind::LogitUnit:
      return std::log(theta - lower_) - std::log(upper_ - theta);
    case LinkKind::Identity:
      return theta;
    case LinkKind::LogPositive:
      return std::log(theta);
  }
  return theta;
}

double
LinkFunction::forward_d1(double theta) const
{
  (void)forward(theta);
  switch (kind_) {
    case LinkKind::ScaledLogistic:
    case LinkKind::LogitUnit:
      return 1.0 / (theta - lower_) + 1.0 / (upper_ - theta);
    case LinkKind::Identity:
      return 1.0;
    case LinkKind::LogPositive:
      return 1.0 / theta;
  }
  return 1.0;
}

double
LinkFunction::forward_d2(double theta) const
{
  (void)forward(theta);
  switch (kind_) {
    case LinkKind::ScaledLogistic:
    case LinkKind::LogitUnit: {
      const double a = theta - lower_;
      const double b = upper_ - theta;
      return -1.0 / (a * a) + 1.0 / (b * b);
    }
    case LinkKind::Identity:
      return 0.0;
    case LinkKind::LogPositive:
      return -1.0 / (theta * theta);
  }
  return 0.0;
}

std::string
LinkFunction::to_string() const
{
  switch (kind_) {
    case LinkKind::ScaledLogistic: {
      std::ostringstream out;
      out << "scaled_logistic(" << lower_ << "," << upper_ << ")";
      return out.str();
    }
    case LinkKind::Identity:
      return "identity";
    case LinkKind::LogitUnit:
      return "logit";
    case LinkKind::LogPositive:
      return "log";
  }
  return "identity";
}

// ---------------------------------------------------------------------------
// Polynomial basis

int
total_degree(const MultiIndex& alpha)
{
  return std::accumulate(alpha.begin(), alpha.end(), 0);
}

double
multi_factorial(const MultiIndex& alpha)
{
  double f = 1.0;
  for (int a : alpha) {
    for (int k = 2; k <= a; ++k) {
      f *= k;
    }
  }
  return f;
}

namespace {

void
append_degree(int remaining_dims,
              int degree,
              MultiIndex& prefix,
              std::vector<MultiIndex>& out)
{
  if (remaining_dims == 1) {
    prefix.push_back(degree);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int first = degree; first >= 0; --first) {
    prefix.push_back(first);
    append_degree(remaining_dims - 1, degree - first, prefix, out);
    prefix.pop_back();
  }
}

} // namespace

std::vector<MultiIndex>
multi_indices_of_degree(int dimension, int degree)
{
  if (dimension < 1 || degree < 0) {
    throw DomainError("multi_indices_of_degree: need dimension >= 1, degree >= 0");
  }
  std::vector<MultiIndex> out;
  MultiIndex prefix;
  append_degree(dimension, degree, prefix, out);
  return out;
}

PolyBasis::PolyBasis(int dimension, int degree)
  : dimension_(dimension)
  , degree_(degree)
{
  if (dimension < 1 || degree < 0) {
    throw DomainError("PolyBasis: need dimension >= 1 and degree >= 0");
  }
  for (int d = 0; d <= degree; ++d) {
    auto level = multi_indices_of_degree(dimension, d);
    indices_.insert(indices_.end(), level.begin(), level.end());
  }
}

std::size_t
PolyBasis::index_of(const MultiIndex& alpha) const
{
  const auto it = std::find(indices_.begin(), indices_.end(), alpha);
  if (it == indices_.end()) {
    throw DomainError("multi-index not part of the basis");
  }
  return static_cast<std::size_t>(it - indices_.begin());
}

void
PolyBasis::eval_into(std::span<const double> v, Eigen::Ref<Eigen::VectorXd> out) const
{
  if (static_cast<int>(v.size()) != dimension_) {
    throw DimensionMismatch("basis_eval: argument has wrong dimension");
  }
  if (dimension_ == 1) {
    double power = 1.0;
    for (int k = 0; k <= degree_; ++k) {
      out[k] = power;
      power *= v[0];
    }
    return;
  }
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    double m = 1.0;
    for (int j = 0; j < dimension_; ++j) {
      for (int k = 0; k < indices_[i][j]; ++k) {
        m *= v[j];
      }
    }
    out[static_cast<Eigen::Index>(i)] = m;
  }
}

Eigen::VectorXd
PolyBasis::eval(std::span<const double> v) const
{
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  eval_into(v, out);
  return out;
}

Eigen::VectorXd
basis_eval(const PolyBasis& basis, std::span<const double> v)
{
  return basis.eval(v);
}

// ---------------------------------------------------------------------------
// Kernel moments

const Eigen::VectorXd&
KernelMoments::c_vector(const MultiIndex& beta) const
{
  for (const auto& [index, vec] : c_vectors) {
    if (index == beta) {
      return vec;
    }
  }
  throw DomainError("no moment vector for the requested multi-index");
}

namespace {

// int x^k K1(x)^power dx for the one-dimensional kernel factor.
double
axis_moment(KernelKind kind, int k, int power)
{
  const auto& rule = GaussLegendre::get(moment_nodes);
  const double range = kind == KernelKind::EpanechnikovProduct ? 1.0 : gaussian_kernel_range;
  return rule.integrate(
    [&](double x) {
      return std::pow(x, k) * std::pow(kernel_factor(kind, x), power);
    },
    -range,
    range);
}

} // namespace

double
kernel_moment(const KernelSpec& spec, const MultiIndex& alpha, int power)
{
  if (static_cast<int>(alpha.size()) != spec.dimension) {
    throw DimensionMismatch("kernel_moment: multi-index has wrong dimension");
  }
  // The tensor rule applied to a product integrand factorizes into the
  // product of the one-dimensional rules.
  double m = 1.0;
  for (int a : alpha) {
    m *= axis_moment(spec.kind, a, power);
  }
  return m;
}

KernelMoments
kernel_moments(const KernelSpec& spec, const PolyBasis& basis)
{
  if (spec.dimension != basis.dimension()) {
    throw DimensionMismatch("kernel_moments: kernel and basis dimensions differ");
  }
  const int s = spec.dimension;
  const int p = basis.degree();
  const int max_order = 2 * p + 2;

  std::vector<std::vector<double>> axis(3, std::vector<double>(max_order + 1));
  for (int power = 1; power <= 2; ++power) {
    for (int k = 0; k <= max_order; ++k) {
      axis[power][k] = axis_moment(spec.kind, k, power);
    }
  }
  auto moment = [&](const MultiIndex& a, const MultiIndex& b, int power) {
    double m = 1.0;
    for (int j = 0; j < s; ++j) {
      m *= axis[power][a[j] + b[j]];
    }
    return m;
  };

  const auto& idx = basis.multi_indices();
  const auto d = static_cast<Eigen::Index>(idx.size());
  KernelMoments out;
  out.S.resize(d, d);
  out.S_star.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out.S(i, j) = moment(idx[i], idx[j], 1);
      out.S_star(i, j) = moment(idx[i], idx[j], 2);
    }
  }
  for (int order : { p + 1, p + 2 }) {
    auto& target = order == p + 1 ? out.c_vectors : out.c_tilde_vectors;
    for (const auto& beta : multi_indices_of_degree(s, order)) {
      Eigen::VectorXd c(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        c[i] = moment(idx[i], beta, 1);
      }
      target.emplace_back(beta, std::move(c));
    }
  }
  return out;
}

} // namespace condcop
