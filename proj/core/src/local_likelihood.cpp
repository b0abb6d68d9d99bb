#include "condcop/local_likelihood.hpp"

#include "condcop/errors.hpp"
#include "condcop/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

namespace condcop {

namespace {

constexpr std::size_t no_row = std::numeric_limits<std::size_t>::max();
constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double ridge = 1e-8;
constexpr int max_halvings = 60;
// Range of the default start grid on the nu scale.
constexpr double start_range = 8.0;
// Beyond this |nu| a bounded inverse link is flat to double precision.
constexpr double saturation = 36.0;
// Largest |nu| a warm start may reach on the kernel window.
constexpr double warm_range = 12.0;
// A stationary point past this |nu| only reflects a flat link: the likelihood
// is still rising toward the boundary of the parameter range.
constexpr double boundary_range = 12.0;

bool
bounded(const LinkFunction& link)
{
  return link.kind() == LinkKind::ScaledLogistic || link.kind() == LinkKind::LogitUnit;
}

double
safe_tau(const CopulaFamily& family, double theta)
{
  try {
    return family.kendall_tau(theta);
  } catch (const Error&) {
    return nan;
  }
}

} // namespace

void
FitConfig::validate(int covariate_dimension) const
{
  if (!family) {
    throw DomainError("fit configuration has no copula family");
  }
  if (degree < 0) {
    throw DomainError("polynomial degree must be nonnegative");
  }
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw DomainError("bandwidth must be positive and finite");
  }
  if (max_iter < 1) {
    throw DomainError("max_iter must be positive");
  }
  if (!(grad_tol > 0.0)) {
    throw DomainError("grad_tol must be positive");
  }
  if (!(step_damping > 0.0 && step_damping <= 1.0)) {
    throw DomainError("step_damping must lie in (0, 1]");
  }
  if (!(weight_scale > 0.0) || !std::isfinite(weight_scale)) {
    throw DomainError("weight_scale must be positive");
  }
  if (kernel.dimension != covariate_dimension) {
    throw DimensionMismatch("kernel dimension does not match the covariates");
  }
}

std::size_t
CurveEstimate::failures() const
{
  return static_cast<std::size_t>(
    std::count_if(fits.begin(), fits.end(), [](const LocalFit& f) { return f.failed; }));
}

LocalLikelihood::LocalLikelihood(const Dataset& data, FitConfig config)
  : config_(std::move(config))
  , basis_(data.covariate_dimension(), config_.degree)
  , dim_(data.covariate_dimension())
{
  data.validate();
  config_.validate(dim_);

  const std::size_t n = data.size();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{ 0 });
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return data.Y(static_cast<Eigen::Index>(a), 0) < data.Y(static_cast<Eigen::Index>(b), 0);
  });
  rank_.resize(n);
  y_.resize(n * static_cast<std::size_t>(dim_));
  u1_.resize(n);
  u2_.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const auto row = static_cast<Eigen::Index>(order_[pos]);
    rank_[order_[pos]] = pos;
    u1_[pos] = data.U(row, 0);
    u2_[pos] = data.U(row, 1);
    for (int j = 0; j < dim_; ++j) {
      y_[pos * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(j)] = data.Y(row, j);
    }
  }
}

void
LocalLikelihood::check_point(const Eigen::VectorXd& y) const
{
  if (y.size() != dim_) {
    throw DimensionMismatch("evaluation point has wrong dimension");
  }
}

LocalLikelihood::Window
LocalLikelihood::window(const Eigen::VectorXd& y) const
{
  const std::size_t n = order_.size();
  if (!config_.kernel.compact()) {
    return { 0, n };
  }
  const double reach = config_.kernel.support_radius() * config_.bandwidth;
  const double lo = y[0] - reach;
  const double hi = y[0] + reach;
  // y_ is row-major; binary search over the first column by position
  std::size_t first = 0;
  std::size_t count = n;
  while (count > 0) {
    const std::size_t half = count / 2;
    if (y_[(first + half) * static_cast<std::size_t>(dim_)] < lo) {
      first += half + 1;
      count -= half + 1;
    } else {
      count = half;
    }
  }
  std::size_t last = first;
  count = n - first;
  while (count > 0) {
    const std::size_t half = count / 2;
    if (!(hi < y_[(last + half) * static_cast<std::size_t>(dim_)])) {
      last += half + 1;
      count -= half + 1;
    } else {
      count = half;
    }
  }
  return { first, last };
}

std::size_t
LocalLikelihood::sorted_position(std::optional<std::size_t> exclude) const
{
  if (!exclude) {
    return no_row;
  }
  if (*exclude >= rank_.size()) {
    throw DimensionMismatch("excluded row index out of range");
  }
  return rank_[*exclude];
}

LocalTerms
LocalLikelihood::evaluate(const Eigen::VectorXd& y,
                          const Eigen::VectorXd& gamma,
                          int order,
                          std::optional<std::size_t> exclude) const
{
  check_point(y);
  const auto d = static_cast<Eigen::Index>(basis_.size());
  if (gamma.size() != d) {
    throw DimensionMismatch("coefficient vector has wrong length");
  }
  const CopulaFamily& family = *config_.family;
  const LinkFunction& link = config_.link;
  const KernelKind kind = config_.kernel.kind;
  const double h = config_.bandwidth;
  const std::size_t skip = sorted_position(exclude);
  const auto [begin, end] = window(y);
  const auto s = static_cast<std::size_t>(dim_);

  LocalTerms out;
  if (order >= 1) {
    out.score = Eigen::VectorXd::Zero(d);
  }
  if (order >= 2) {
    out.hessian = Eigen::MatrixXd::Zero(d, d);
  }
  Eigen::VectorXd phi(d);
  std::array<double, 8> small_diff{};
  std::vector<double> big_diff(s > small_diff.size() ? s : 0);
  double* diff = s > small_diff.size() ? big_diff.data() : small_diff.data();

  for (std::size_t pos = begin; pos < end; ++pos) {
    if (pos == skip) {
      continue;
    }
    double w = config_.weight_scale;
    for (std::size_t j = 0; j < s; ++j) {
      diff[j] = y_[pos * s + j] - y[static_cast<Eigen::Index>(j)];
      w *= kernel_factor(kind, diff[j] / h) / h;
    }
    if (w == 0.0) {
      continue;
    }
    ++out.effective_n;
    basis_.eval_into(std::span<const double>(diff, s), phi);
    const double eta = phi.dot(gamma);
    if (order == 0) {
      out.value += w * family.log_density(u1_[pos], u2_[pos], link.inverse(eta));
      continue;
    }
    const auto inv = link.inverse_terms(eta);
    const auto l = family.log_density_derivatives(u1_[pos], u2_[pos], inv.theta);
    out.value += w * l.value;
    out.score.noalias() += (w * l.d1 * inv.d1) * phi;
    if (order >= 2) {
      const double curvature = w * (l.d2 * inv.d1 * inv.d1 + l.d1 * inv.d2);
      out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(phi, curvature);
    }
  }
  if (order >= 2) {
    out.hessian.triangularView<Eigen::StrictlyUpper>() = out.hessian.transpose();
  }
  return out;
}

std::size_t
LocalLikelihood::effective_n(const Eigen::VectorXd& y, std::optional<std::size_t> exclude) const
{
  check_point(y);
  const std::size_t skip = sorted_position(exclude);
  const auto [begin, end] = window(y);
  const auto s = static_cast<std::size_t>(dim_);
  std::size_t count = 0;
  for (std::size_t pos = begin; pos < end; ++pos) {
    if (pos == skip) {
      continue;
    }
    double w = 1.0;
    for (std::size_t j = 0; j < s && w != 0.0; ++j) {
      w *= kernel_factor(config_.kernel.kind,
                         (y_[pos * s + j] - y[static_cast<Eigen::Index>(j)]) /
                           config_.bandwidth);
    }
    count += w != 0.0 ? 1 : 0;
  }
  return count;
}

Eigen::VectorXd
LocalLikelihood::initial_gamma(const Eigen::VectorXd& y, std::optional<std::size_t> exclude) const
{
  check_point(y);
  constexpr int candidates = 33;
  const CopulaFamily& family = *config_.family;
  const ThetaDomain domain = family.theta_domain();
  std::array<double, candidates> nu{};
  std::array<double, candidates> theta{};
  std::array<double, candidates> total{};
  std::array<bool, candidates> usable{};
  for (int k = 0; k < candidates; ++k) {
    nu[k] = -start_range + 0.5 * k;
    theta[k] = config_.link.inverse(nu[k]);
    usable[k] = domain.contains(theta[k]);
  }

  const std::size_t skip = sorted_position(exclude);
  const auto [begin, end] = window(y);
  const auto s = static_cast<std::size_t>(dim_);
  for (std::size_t pos = begin; pos < end; ++pos) {
    if (pos == skip) {
      continue;
    }
    double w = 1.0;
    for (std::size_t j = 0; j < s && w != 0.0; ++j) {
      w *= kernel_factor(config_.kernel.kind,
                         (y_[pos * s + j] - y[static_cast<Eigen::Index>(j)]) /
                           config_.bandwidth);
    }
    if (w == 0.0) {
      continue;
    }
    for (int k = 0; k < candidates; ++k) {
      if (!usable[k]) {
        continue;
      }
      try {
        total[k] += w * family.log_density(u1_[pos], u2_[pos], theta[k]);
      } catch (const Error&) {
        usable[k] = false;
      }
    }
  }

  int best = -1;
  for (int k = 0; k < candidates; ++k) {
    if (!usable[k] || !std::isfinite(total[k])) {
      continue;
    }
    // ties go to the candidate nearest nu = 0
    if (best < 0 || total[k] > total[best] ||
        (total[k] == total[best] && std::abs(nu[k]) < std::abs(nu[best]))) {
      best = k;
    }
  }
  if (best < 0) {
    throw DomainError("no admissible starting value for the local fit");
  }
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis_.size()));
  gamma[0] = nu[best];
  return gamma;
}

Eigen::VectorXd
LocalLikelihood::newton_direction(const LocalTerms& terms) const
{
  const Eigen::VectorXd& g = terms.score;
  Eigen::MatrixXd negative = -terms.hessian;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(negative);
  Eigen::VectorXd dir;
  if (ldlt.info() == Eigen::Success) {
    dir = ldlt.solve(g);
  }
  if (ldlt.info() != Eigen::Success || !dir.allFinite()) {
    negative.diagonal().array() += ridge;
    ldlt.compute(negative);
    if (ldlt.info() == Eigen::Success) {
      dir = ldlt.solve(g);
    }
    if (ldlt.info() != Eigen::Success || !dir.allFinite()) {
      throw SingularHessian("Newton system is singular after ridge regularization");
    }
  }
  if (ldlt.isPositive() && g.dot(dir) > 0.0) {
    return dir;
  }
  // -H is not positive definite: precondition the gradient with |H|, whose
  // eigenvalues are floored relative to the largest one.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(negative);
  if (eig.info() == Eigen::Success) {
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseAbs();
    const double floor =
      std::max(1e-8 * lambda.maxCoeff(), std::numeric_limits<double>::min());
    const Eigen::VectorXd inv = lambda.cwiseMax(floor).cwiseInverse();
    dir = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose() * g;
    if (dir.allFinite() && g.dot(dir) > 0.0) {
      return dir;
    }
  }
  const double scale =
    std::max({ terms.hessian.norm(), g.norm(), std::numeric_limits<double>::min() });
  return g / scale;
}

LocalFit
LocalLikelihood::fit(const Eigen::VectorXd& y,
                     const std::optional<Eigen::VectorXd>& init,
                     std::optional<std::size_t> exclude,
                     std::vector<double>* trace) const
{
  check_point(y);
  const auto d = basis_.size();
  LocalFit out;
  out.eval_point = y;
  out.effective_n = effective_n(y, exclude);
  if (out.effective_n < d) {
    throw InsufficientLocalData("only " + std::to_string(out.effective_n) +
                                " observations carry kernel weight; need " +
                                std::to_string(d));
  }

  Eigen::VectorXd gamma;
  LocalTerms terms;
  bool started = false;
  if (init) {
    if (static_cast<std::size_t>(init->size()) != d) {
      throw DimensionMismatch("initial coefficient vector has wrong length");
    }
  }
  if (init && usable_start(y, *init, exclude)) {
    try {
      gamma = *init;
      terms = evaluate(y, gamma, 2, exclude);
      started = std::isfinite(terms.value) && terms.score.allFinite();
    } catch (const DomainError&) {
    } catch (const OverflowGuard&) {
    }
  }
  if (!started) {
    gamma = initial_gamma(y, exclude);
    terms = evaluate(y, gamma, 2, exclude);
  }
  if (trace) {
    trace->push_back(terms.value);
  }

  const double eps = std::numeric_limits<double>::epsilon();
  int iterations = 0;
  bool converged = false;
  while (true) {
    if (terms.score.lpNorm<Eigen::Infinity>() <= config_.grad_tol) {
      converged = true;
      break;
    }
    if (iterations >= config_.max_iter) {
      break;
    }
    if (bounded(config_.link) && std::abs(gamma[0]) > saturation) {
      // theta_hat sits on the boundary of the link range
      break;
    }
    const Eigen::VectorXd dir = newton_direction(terms);
    const double slope = terms.score.dot(dir);
    // Gains below this are indistinguishable from rounding in the objective.
    const double noise = 64.0 * eps * (1.0 + std::abs(terms.value));

    double step = config_.step_damping;
    bool accepted = false;
    Eigen::VectorXd candidate;
    LocalTerms next;
    for (int halving = 0; halving <= max_halvings; ++halving, step *= 0.5) {
      candidate = gamma + step * dir;
      try {
        next = evaluate(y, candidate, 2, exclude);
      } catch (const DomainError&) {
        continue;
      } catch (const OverflowGuard&) {
        continue;
      }
      if (!std::isfinite(next.value) || !next.score.allFinite()) {
        continue;
      }
      if (next.value >= terms.value || step * slope <= noise) {
        accepted = true;
        break;
      }
    }
    if (!accepted || candidate == gamma) {
      break;
    }
    gamma = std::move(candidate);
    terms = std::move(next);
    ++iterations;
    if (trace) {
      trace->push_back(terms.value);
    }
  }

  out.gamma_hat = gamma;
  out.nu_hat = gamma[0];
  out.theta_hat = config_.link.inverse(out.nu_hat);
  out.tau_hat = safe_tau(*config_.family, out.theta_hat);
  out.objective = terms.value;
  out.converged = converged && !(bounded(config_.link) && std::abs(gamma[0]) > boundary_range);
  out.iterations = iterations;
  out.final_grad_norm = terms.score.lpNorm<Eigen::Infinity>();
  return out;
}

bool
LocalLikelihood::usable_start(const Eigen::VectorXd& y,
                              const Eigen::VectorXd& gamma,
                              std::optional<std::size_t> exclude) const
{
  if (!gamma.allFinite()) {
    return false;
  }
  // the start polynomial must not saturate the link on the weighted window
  const std::size_t skip = sorted_position(exclude);
  const auto [begin, end] = window(y);
  const auto s = static_cast<std::size_t>(dim_);
  Eigen::VectorXd phi(static_cast<Eigen::Index>(basis_.size()));
  std::array<double, 8> small_diff{};
  std::vector<double> big_diff(s > small_diff.size() ? s : 0);
  double* diff = s > small_diff.size() ? big_diff.data() : small_diff.data();
  for (std::size_t pos = begin; pos < end; ++pos) {
    if (pos == skip) {
      continue;
    }
    double w = 1.0;
    for (std::size_t j = 0; j < s; ++j) {
      diff[j] = y_[pos * s + j] - y[static_cast<Eigen::Index>(j)];
      w *= kernel_factor(config_.kernel.kind, diff[j] / config_.bandwidth);
    }
    if (w == 0.0) {
      continue;
    }
    basis_.eval_into(std::span<const double>(diff, s), phi);
    if (std::abs(phi.dot(gamma)) > warm_range) {
      return false;
    }
  }
  return true;
}

Eigen::VectorXd
LocalLikelihood::shift_start(const Eigen::VectorXd& gamma,
                             const Eigen::VectorXd& from,
                             const Eigen::VectorXd& to) const
{
  Eigen::VectorXd out = gamma;
  if (basis_.degree() >= 1) {
    // first-order multi-indices follow the intercept in graded-lex order
    for (int j = 0; j < dim_; ++j) {
      MultiIndex e(static_cast<std::size_t>(dim_), 0);
      e[static_cast<std::size_t>(j)] = 1;
      out[0] += gamma[static_cast<Eigen::Index>(basis_.index_of(e))] * (to[j] - from[j]);
    }
  }
  return out;
}

double
objective(const Dataset& data,
          const FitConfig& cfg,
          const Eigen::VectorXd& y,
          const Eigen::VectorXd& gamma)
{
  return LocalLikelihood(data, cfg).evaluate(y, gamma, 0).value;
}

Eigen::VectorXd
score(const Dataset& data,
      const FitConfig& cfg,
      const Eigen::VectorXd& y,
      const Eigen::VectorXd& gamma)
{
  return LocalLikelihood(data, cfg).evaluate(y, gamma, 1).score;
}

Eigen::MatrixXd
hessian(const Dataset& data,
        const FitConfig& cfg,
        const Eigen::VectorXd& y,
        const Eigen::VectorXd& gamma)
{
  return LocalLikelihood(data, cfg).evaluate(y, gamma, 2).hessian;
}

LocalFit
fit_point(const Dataset& data,
          const FitConfig& cfg,
          const Eigen::VectorXd& y,
          const std::optional<Eigen::VectorXd>& gamma_init)
{
  return LocalLikelihood(data, cfg).fit(y, gamma_init);
}

namespace {

LocalFit
failed_fit(const Eigen::VectorXd& y, std::size_t d, const std::string& why)
{
  LocalFit f;
  f.eval_point = y;
  f.gamma_hat = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), nan);
  f.nu_hat = f.theta_hat = f.tau_hat = f.objective = f.final_grad_norm = nan;
  f.failed = true;
  f.failure = why;
  return f;
}

} // namespace

CurveEstimate
fit_curve(const LocalLikelihood& model,
          const std::vector<Eigen::VectorXd>& grid,
          const CurveOptions& options)
{
  if (grid.empty()) {
    throw DomainError("evaluation grid is empty");
  }
  CurveEstimate curve;
  curve.grid = grid;
  curve.config = model.config();
  curve.fits.resize(grid.size());
  const std::size_t d = model.basis().size();

  auto fit_one = [&](std::size_t k, const std::optional<Eigen::VectorXd>& init) {
    try {
      curve.fits[k] = model.fit(grid[k], init);
    } catch (const Error& e) {
      curve.fits[k] = failed_fit(grid[k], d, e.what());
    }
  };

  if (options.warm_start) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      std::optional<Eigen::VectorXd> init;
      if (k > 0 && !curve.fits[k - 1].failed) {
        init = model.shift_start(curve.fits[k - 1].gamma_hat, grid[k - 1], grid[k]);
      }
      fit_one(k, init);
    }
  } else {
    parallel_for(grid.size(), options.threads, [&](std::size_t k) { fit_one(k, std::nullopt); });
  }
  return curve;
}

CurveEstimate
fit_curve(const Dataset& data,
          const FitConfig& cfg,
          const std::vector<Eigen::VectorXd>& grid,
          const CurveOptions& options)
{
  return fit_curve(LocalLikelihood(data, cfg), grid, options);
}

void
write_curve_csv(const CurveEstimate& curve, std::ostream& out)
{
  const auto s = curve.grid.empty() ? 0 : curve.grid.front().size();
  for (Eigen::Index j = 0; j < s; ++j) {
    out << 'y' << j + 1 << ',';
  }
  out << "nu_hat,theta_hat,tau_hat,converged,iterations\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t k = 0; k < curve.fits.size(); ++k) {
    const LocalFit& f = curve.fits[k];
    for (Eigen::Index j = 0; j < s; ++j) {
      out << curve.grid[k][j] << ',';
    }
    auto put = [&](double x) {
      if (std::isfinite(x)) {
        out << x;
      } else {
        out << "NA";
      }
    };
    put(f.nu_hat);
    out << ',';
    put(f.theta_hat);
    out << ',';
    put(f.tau_hat);
    out << ',' << (f.converged ? 1 : 0) << ',' << f.iterations << '\n';
  }
}

std::vector<Eigen::VectorXd>
linear_grid(double lower, double upper, std::size_t count)
{
  if (count == 0 || !(upper >= lower)) {
    throw DomainError("grid needs at least one point and lower <= upper");
  }
  std::vector<Eigen::VectorXd> grid;
  grid.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    Eigen::VectorXd y(1);
    y[0] = k + 1 == count ? upper : lower + (upper - lower) * t;
    grid.push_back(y);
  }
  return grid;
}

} // namespace condcop
