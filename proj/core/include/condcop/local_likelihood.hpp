#pragma once

#include "condcop/copulas.hpp"
#include "condcop/dataset.hpp"
#include "condcop/smoothing.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace condcop {

struct FitConfig
{
  FamilyPtr family;
  LinkFunction link;
  KernelSpec kernel;
  int degree = 1;
  double bandwidth = 1.0;
  int max_iter = 100;
  double grad_tol = 1e-8;
  //! Initial Newton step length; halved on every non-increase.
  double step_damping = 1.0;
  //! Constant multiplier on every kernel weight. The maximizer does not
  //! depend on it; it exists so that invariance can be tested.
  double weight_scale = 1.0;

  //! Throws DomainError / DimensionMismatch for inconsistent settings.
  void validate(int covariate_dimension) const;
};

struct LocalFit
{
  Eigen::VectorXd eval_point;
  Eigen::VectorXd gamma_hat;
  double nu_hat = 0.0;
  double theta_hat = 0.0;
  double tau_hat = 0.0;
  double objective = 0.0;
  std::size_t effective_n = 0;
  bool converged = false;
  int iterations = 0;
  double final_grad_norm = 0.0;
  //! Set only for curve points whose fit threw; estimates are NaN then.
  bool failed = false;
  std::string failure;
};

struct CurveEstimate
{
  std::vector<Eigen::VectorXd> grid;
  std::vector<LocalFit> fits;
  FitConfig config;

  std::size_t failures() const;
};

//! Local log-likelihood with score and Hessian at one (y, gamma).
struct LocalTerms
{
  double value = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd hessian;
  std::size_t effective_n = 0;
};

//! Kernel-weighted local likelihood over a fixed dataset and configuration.
//!
//! Observations are stored sorted by their first covariate so that compact
//! kernels only visit the window |Y_i1 - y_1| <= h. Row indices passed in
//! `exclude` refer to the original dataset order.
class LocalLikelihood
{
public:
  LocalLikelihood(const Dataset& data, FitConfig config);

  const FitConfig& config() const { return config_; }
  const PolyBasis& basis() const { return basis_; }
  std::size_t size() const { return order_.size(); }

  //! order 0: value only; 1: adds the score; 2: adds the Hessian.
  LocalTerms evaluate(const Eigen::VectorXd& y,
                      const Eigen::VectorXd& gamma,
                      int order = 2,
                      std::optional<std::size_t> exclude = std::nullopt) const;

  std::size_t effective_n(const Eigen::VectorXd& y,
                          std::optional<std::size_t> exclude = std::nullopt) const;

  //! Default start: intercept from a 33-point grid search over nu in [-8, 8]
  //! of the kernel-weighted constant (p = 0) likelihood at y, every other
  //! coefficient zero. Only observations with positive weight take part.
  Eigen::VectorXd initial_gamma(const Eigen::VectorXd& y,
                                std::optional<std::size_t> exclude = std::nullopt) const;

  //! Damped Newton ascent from `init`, or from initial_gamma() when `init`
  //! is absent or fails usable_start(). A
  //! bounded link whose intercept passes |nu| > 36 stops the iteration, and
  //! any fit ending with |nu| > 12 under a bounded link is reported
  //! unconverged (no interior maximizer). If `trace` is given, the objective after every
  //! accepted iterate (starting with the initial point) is appended.
  LocalFit fit(const Eigen::VectorXd& y,
               const std::optional<Eigen::VectorXd>& init = std::nullopt,
               std::optional<std::size_t> exclude = std::nullopt,
               std::vector<double>* trace = nullptr) const;

  //! Carries a fit at `from` over to `to`: the intercept moves along the
  //! first-order coefficients, everything else is copied.
  Eigen::VectorXd shift_start(const Eigen::VectorXd& gamma,
                              const Eigen::VectorXd& from,
                              const Eigen::VectorXd& to) const;

  //! Whether phi(Y_i - y)^T gamma stays within [-12, 12] for every weighted
  //! observation.
  bool usable_start(const Eigen::VectorXd& y,
                    const Eigen::VectorXd& gamma,
                    std::optional<std::size_t> exclude = std::nullopt) const;

private:
  struct Window
  {
    std::size_t begin;
    std::size_t end;
  };
  Window window(const Eigen::VectorXd& y) const;
  std::size_t sorted_position(std::optional<std::size_t> exclude) const;
  void check_point(const Eigen::VectorXd& y) const;
  Eigen::VectorXd newton_direction(const LocalTerms& terms) const;

  FitConfig config_;
  PolyBasis basis_;
  int dim_;
  std::vector<double> y_;  // sorted, row-major N x s
  std::vector<double> u1_; // sorted
  std::vector<double> u2_; // sorted
  std::vector<std::size_t> order_; // sorted position -> original row
  std::vector<std::size_t> rank_;  // original row -> sorted position
};

double
objective(const Dataset& data,
          const FitConfig& cfg,
          const Eigen::VectorXd& y,
          const Eigen::VectorXd& gamma);

Eigen::VectorXd
score(const Dataset& data,
      const FitConfig& cfg,
      const Eigen::VectorXd& y,
      const Eigen::VectorXd& gamma);

Eigen::MatrixXd
hessian(const Dataset& data,
        const FitConfig& cfg,
        const Eigen::VectorXd& y,
        const Eigen::VectorXd& gamma);

LocalFit
fit_point(const Dataset& data,
          const FitConfig& cfg,
          const Eigen::VectorXd& y,
          const std::optional<Eigen::VectorXd>& gamma_init = std::nullopt);

struct CurveOptions
{
  bool warm_start = false;
  //! Worker threads for independent points; 0 uses all cores.
  int threads = 1;
};

CurveEstimate
fit_curve(const Dataset& data,
          const FitConfig& cfg,
          const std::vector<Eigen::VectorXd>& grid,
          const CurveOptions& options = {});

CurveEstimate
fit_curve(const LocalLikelihood& model,
          const std::vector<Eigen::VectorXd>& grid,
          const CurveOptions& options = {});

//! Columns y1..ys, nu_hat, theta_hat, tau_hat, converged, iterations. Failed
//! points are written with NA estimates.
void
write_curve_csv(const CurveEstimate& curve, std::ostream& out);

//! Equally spaced one-dimensional grid as s = 1 points.
std::vector<Eigen::VectorXd>
linear_grid(double lower, double upper, std::size_t count);

} // namespace condcop
