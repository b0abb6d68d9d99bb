#include "condcop/tuning.hpp"

#include "condcop/errors.hpp"
#include "condcop/numerics.hpp"
#include "condcop/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace condcop {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double minus_inf = -std::numeric_limits<double>::infinity();
// Rows per warm-started chain. Fixed so results do not depend on threads.
constexpr std::size_t chain_length = 64;
constexpr std::size_t fold_grid_points = 101;

std::vector<std::size_t>
sorted_rows(const Dataset& data)
{
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{ 0 });
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.Y(static_cast<Eigen::Index>(a), 0) < data.Y(static_cast<Eigen::Index>(b), 0);
  });
  return order;
}

Eigen::VectorXd
covariate(const Dataset& data, std::size_t i)
{
  return data.Y.row(static_cast<Eigen::Index>(i)).transpose();
}

FitConfig
with_bandwidth(const FitConfig& cfg, double h)
{
  FitConfig out = cfg;
  out.bandwidth = h;
  return out;
}

struct RowResult
{
  double theta = nan;
  double log_density = nan;
  std::string failure;
};

// Fits the rows order[begin, end) against `model`, each chain warm-started
// from the previous row. `exclude_self` removes row i from its own fit.
void
fit_rows(const LocalLikelihood& model,
         const Dataset& data,
         const std::vector<std::size_t>& order,
         std::size_t begin,
         std::size_t end,
         bool exclude_self,
         std::vector<RowResult>& out)
{
  const CopulaFamily& family = *model.config().family;
  std::optional<Eigen::VectorXd> prev_gamma;
  Eigen::VectorXd prev_y;
  for (std::size_t pos = begin; pos < end; ++pos) {
    const std::size_t i = order[pos];
    const Eigen::VectorXd y = covariate(data, i);
    std::optional<Eigen::VectorXd> init;
    if (prev_gamma) {
      init = model.shift_start(*prev_gamma, prev_y, y);
    }
    RowResult& r = out[i];
    try {
      const LocalFit fit =
        model.fit(y, init, exclude_self ? std::optional<std::size_t>(i) : std::nullopt);
      r.theta = fit.theta_hat;
      const auto row = static_cast<Eigen::Index>(i);
      r.log_density = family.log_density(data.U(row, 0), data.U(row, 1), r.theta);
      prev_gamma = fit.gamma_hat;
      prev_y = y;
    } catch (const Error& e) {
      r = RowResult{};
      r.failure = e.what();
      prev_gamma.reset();
    }
  }
}

void
exact_held_out(const Dataset& data,
               const FitConfig& cfg,
               const CvOptions& options,
               std::vector<RowResult>& rows)
{
  const LocalLikelihood model(data, cfg);
  const auto order = sorted_rows(data);
  const std::size_t chains = (order.size() + chain_length - 1) / chain_length;
  parallel_for(chains, options.threads, [&](std::size_t c) {
    const std::size_t begin = c * chain_length;
    fit_rows(model, data, order, begin, std::min(order.size(), begin + chain_length), true, rows);
  });
}

void
kfold_held_out(const Dataset& data,
               const FitConfig& cfg,
               const CvOptions& options,
               std::vector<RowResult>& rows)
{
  if (options.folds < 2) {
    throw DomainError("k-fold cross-validation needs at least two folds");
  }
  const auto folds = static_cast<std::size_t>(options.folds);
  const auto order = sorted_rows(data);
  const double y_min = data.Y.col(0).minCoeff();
  const double y_max = data.Y.col(0).maxCoeff();

  parallel_for(folds, options.threads, [&](std::size_t f) {
    std::vector<std::size_t> kept;
    std::vector<std::size_t> held;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      (pos % folds == f ? held : kept).push_back(order[pos]);
    }
    if (held.empty()) {
      return;
    }
    auto fail_all = [&](const std::string& why) {
      for (std::size_t i : held) {
        rows[i] = RowResult{};
        rows[i].failure = why;
      }
    };
    if (kept.empty()) {
      fail_all("fold leaves no training data");
      return;
    }
    Dataset train;
    train.U.resize(static_cast<Eigen::Index>(kept.size()), 2);
    train.Y.resize(static_cast<Eigen::Index>(kept.size()), data.Y.cols());
    for (std::size_t k = 0; k < kept.size(); ++k) {
      train.U.row(static_cast<Eigen::Index>(k)) = data.U.row(static_cast<Eigen::Index>(kept[k]));
      train.Y.row(static_cast<Eigen::Index>(k)) = data.Y.row(static_cast<Eigen::Index>(kept[k]));
    }
    const LocalLikelihood model(train, cfg);

    if (data.covariate_dimension() > 1) {
      // no interpolation grid in several dimensions: fit every held-out row
      std::vector<std::size_t> held_order = held;
      fit_rows(model, data, held_order, 0, held_order.size(), false, rows);
      return;
    }

    const auto grid = linear_grid(y_min, y_max, fold_grid_points);
    const CurveEstimate curve = fit_curve(model, grid, { .warm_start = true, .threads = 1 });
    std::vector<double> nu(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      nu[g] = curve.fits[g].failed ? nan : curve.fits[g].nu_hat;
    }
    const CopulaFamily& family = *cfg.family;
    for (std::size_t i : held) {
      const double y = data.Y(static_cast<Eigen::Index>(i), 0);
      const double step = (y_max - y_min) / static_cast<double>(grid.size() - 1);
      auto g = step > 0.0 ? static_cast<std::size_t>(std::floor((y - y_min) / step)) : 0;
      g = std::min(g, grid.size() - 2);
      // nearest finite neighbours on each side
      std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(g);
      std::size_t hi = g + 1;
      while (lo >= 0 && std::isnan(nu[static_cast<std::size_t>(lo)])) {
        --lo;
      }
      while (hi < nu.size() && std::isnan(nu[hi])) {
        ++hi;
      }
      RowResult& r = rows[i];
      double value;
      if (lo >= 0 && hi < nu.size()) {
        const double y0 = grid[static_cast<std::size_t>(lo)][0];
        const double y1 = grid[hi][0];
        const double t = y1 > y0 ? (y - y0) / (y1 - y0) : 0.0;
        value = (1.0 - t) * nu[static_cast<std::size_t>(lo)] + t * nu[hi];
      } else if (lo >= 0) {
        value = nu[static_cast<std::size_t>(lo)];
      } else if (hi < nu.size()) {
        value = nu[hi];
      } else {
        r = RowResult{};
        r.failure = "every fold grid fit failed";
        continue;
      }
      try {
        r.theta = cfg.link.inverse(value);
        const auto row = static_cast<Eigen::Index>(i);
        r.log_density = family.log_density(data.U(row, 0), data.U(row, 1), r.theta);
        r.failure.clear();
      } catch (const Error& e) {
        r = RowResult{};
        r.failure = e.what();
      }
    }
  });
}

} // namespace

HeldOut
held_out_fits(const Dataset& data, const FitConfig& cfg, double h, const CvOptions& options)
{
  if (!(h > 0.0)) {
    throw DomainError("bandwidth must be positive");
  }
  if (data.size() < 2) {
    throw DomainError("cross-validation needs at least two rows");
  }
  const FitConfig fit_cfg = with_bandwidth(cfg, h);
  std::vector<RowResult> rows(data.size());
  if (options.mode == CvOptions::Mode::Exact) {
    exact_held_out(data, fit_cfg, options, rows);
  } else {
    kfold_held_out(data, fit_cfg, options, rows);
  }

  HeldOut out;
  out.h = h;
  out.theta.resize(rows.size());
  out.log_density.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.theta[i] = rows[i].theta;
    out.log_density[i] = rows[i].log_density;
    if (!rows[i].failure.empty()) {
      if (out.failed_rows++ == 0) {
        out.first_failure = "row " + std::to_string(i + 1) + ": " + rows[i].failure;
      }
    }
  }
  return out;
}

CvlValue
cvl_detail(const Dataset& data, const FitConfig& cfg, double h, const CvOptions& options)
{
  const HeldOut held = held_out_fits(data, cfg, h, options);
  CvlValue out;
  out.failed_rows = held.failed_rows;
  if (held.failed_rows == held.log_density.size()) {
    out.ok = false;
    out.value = minus_inf;
    out.failure = "every held-out fit failed; " + held.first_failure;
    return out;
  }
  if (held.failed_rows > 0 && !options.failure_penalty) {
    out.ok = false;
    out.value = minus_inf;
    out.failure = std::to_string(held.failed_rows) + " held-out fits failed; " + held.first_failure;
    return out;
  }
  // ordered reduction over the original row order
  double total = 0.0;
  for (double v : held.log_density) {
    total += std::isnan(v) ? *options.failure_penalty : v;
  }
  out.value = total;
  return out;
}

double
cvl(const Dataset& data, const FitConfig& cfg, double h, const CvOptions& options)
{
  const CvlValue v = cvl_detail(data, cfg, h, options);
  if (!v.ok) {
    throw AllFitsFailed("cvl(h = " + std::to_string(h) + "): " + v.failure);
  }
  return v.value;
}

std::vector<double>
log_spaced(double lower, double upper, std::size_t count)
{
  if (!(lower > 0.0) || !(upper >= lower) || count == 0) {
    throw DomainError("log_spaced needs 0 < lower <= upper and count >= 1");
  }
  std::vector<double> out(count);
  const double a = std::log(lower);
  const double b = std::log(upper);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = count == 1 ? lower
                        : std::exp(a + (b - a) * static_cast<double>(k) /
                                         static_cast<double>(count - 1));
  }
  if (count > 1) {
    out.front() = lower;
    out.back() = upper;
  }
  return out;
}

std::vector<double>
default_bandwidth_grid(const Dataset& data, std::size_t count)
{
  data.validate();
  double range = 0.0;
  for (Eigen::Index j = 0; j < data.Y.cols(); ++j) {
    range = std::max(range, data.Y.col(j).maxCoeff() - data.Y.col(j).minCoeff());
  }
  if (!(range > 0.0)) {
    throw DataError("covariates have zero range; no default bandwidth grid");
  }
  return log_spaced(0.1 * range, range, count);
}

BandwidthSelection
select_bandwidth(const Dataset& data,
                 const FitConfig& cfg,
                 std::vector<double> grid,
                 const CvOptions& options)
{
  if (grid.empty()) {
    throw DomainError("bandwidth grid is empty");
  }
  for (double h : grid) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw DomainError("bandwidth candidates must be positive and finite");
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (options.max_h) {
    std::erase_if(grid, [&](double h) { return h > *options.max_h; });
    if (grid.empty()) {
      throw DomainError("no bandwidth candidate is below max_h");
    }
  }

  BandwidthSelection out;
  auto evaluate = [&](double h) {
    const CvlValue v = cvl_detail(data, cfg, h, options);
    out.candidates.push_back(h);
    out.cvl_values.push_back(v.value);
    out.failures.push_back(v.ok ? std::string() : v.failure);
    return v.value;
  };
  for (double h : grid) {
    evaluate(h);
  }

  auto argmax = [&]() {
    std::ptrdiff_t best = -1;
    for (std::size_t k = 0; k < out.candidates.size(); ++k) {
      if (!std::isfinite(out.cvl_values[k])) {
        continue;
      }
      // ties go to the larger bandwidth
      if (best < 0 || out.cvl_values[k] > out.cvl_values[static_cast<std::size_t>(best)] ||
          (out.cvl_values[k] == out.cvl_values[static_cast<std::size_t>(best)] &&
           out.candidates[k] > out.candidates[static_cast<std::size_t>(best)])) {
        best = static_cast<std::ptrdiff_t>(k);
      }
    }
    return best;
  };

  const std::ptrdiff_t best = argmax();
  if (best < 0) {
    std::string why = out.failures.empty() ? "" : out.failures.front();
    throw AllCandidatesFailed("no bandwidth candidate gave a finite CVL; " + why);
  }

  if (options.refine && grid.size() >= 2) {
    const auto b = static_cast<std::size_t>(best);
    const double lo = std::log(grid[b == 0 ? 0 : b - 1]);
    const double hi = std::log(grid[std::min(b + 1, grid.size() - 1)]);
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo;
    double c = hi;
    double x1 = c - ratio * (c - a);
    double x2 = a + ratio * (c - a);
    double f1 = evaluate(std::exp(x1));
    double f2 = evaluate(std::exp(x2));
    for (int it = 0; it < options.refine_steps; ++it) {
      if (f1 >= f2) {
        c = x2;
        x2 = x1;
        f2 = f1;
        x1 = c - ratio * (c - a);
        f1 = evaluate(std::exp(x1));
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + ratio * (c - a);
        f2 = evaluate(std::exp(x2));
      }
    }
    out.refined = true;
  }

  // report candidates in increasing order
  std::vector<std::size_t> idx(out.candidates.size());
  std::iota(idx.begin(), idx.end(), std::size_t{ 0 });
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return out.candidates[a] < out.candidates[b];
  });
  BandwidthSelection sorted;
  sorted.refined = out.refined;
  for (std::size_t k : idx) {
    if (!sorted.candidates.empty() && sorted.candidates.back() == out.candidates[k]) {
      continue;
    }
    sorted.candidates.push_back(out.candidates[k]);
    sorted.cvl_values.push_back(out.cvl_values[k]);
    sorted.failures.push_back(out.failures[k]);
  }
  out = std::move(sorted);
  out.h_cv = out.candidates[static_cast<std::size_t>(argmax())];
  return out;
}

double
conditional_prediction(const CopulaFamily& family, double given, double theta)
{
  if (!(given > 0.0 && given < 1.0)) {
    throw DomainError("conditioning value must lie strictly inside (0,1)");
  }
  family.check_theta(theta);
  // 1 - int_0^1 P(U1 <= u | U2 = given) du; the density can be singular at the edges
  const GaussLegendre& rule = graded_unit_rule();
  double mass = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    mass += rule.weights[k] * family.h_function(rule.nodes[k], given, theta);
  }
  const double total = 1.0 - mass;
  return std::clamp(total, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

LinkFunction
canonical_link(FamilyId id)
{
  switch (id) {
    case FamilyId::Frank:
      return LinkFunction::scaled_logistic(-50.0, 50.0);
    case FamilyId::Clayton:
      return LinkFunction::log();
    case FamilyId::Gaussian:
      return LinkFunction::scaled_logistic(-1.0, 1.0);
  }
  return LinkFunction::identity();
}

double
cvpe(const Dataset& data, const FitConfig& cfg, double h, const CvOptions& options)
{
  const HeldOut held = held_out_fits(data, cfg, h, options);
  if (held.failed_rows > 0) {
    throw AllFitsFailed(std::to_string(held.failed_rows) +
                        " held-out fits failed; " + held.first_failure);
  }
  const CopulaFamily& family = *cfg.family;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double u1 = data.U(row, 0);
    const double u2 = data.U(row, 1);
    // built-in families are exchangeable: one predictor serves both coordinates
    const double e1 = conditional_prediction(family, u2, held.theta[i]);
    const double e2 = conditional_prediction(family, u1, held.theta[i]);
    total += (u1 - e1) * (u1 - e1) + (u2 - e2) * (u2 - e2);
  }
  return total;
}

FamilySelection
select_family(const Dataset& data,
              const FitConfig& cfg,
              const std::vector<FamilyId>& candidates,
              const std::vector<double>& bandwidth_grid,
              const CvOptions& options,
              const std::optional<LinkFunction>& link_override)
{
  if (candidates.empty()) {
    throw DomainError("no candidate families");
  }
  FamilySelection out;
  for (FamilyId id : candidates) {
    FamilyScore score;
    score.family = id;
    FitConfig fcfg = cfg;
    fcfg.family = make_family(id);
    fcfg.link = link_override ? *link_override : canonical_link(id);
    try {
      score.bandwidth = select_bandwidth(data, fcfg, bandwidth_grid, options);
      score.h = score.bandwidth.h_cv;
      score.cvpe = cvpe(data, fcfg, score.h, options);
      score.ok = std::isfinite(score.cvpe);
      if (!score.ok) {
        score.reason = "non-finite prediction error";
      }
    } catch (const Error& e) {
      score.ok = false;
      score.reason = e.what();
    }
    out.per_family.push_back(std::move(score));
  }
  const FamilyScore* best = nullptr;
  for (const auto& s : out.per_family) {
    if (s.ok && (!best || s.cvpe < best->cvpe)) {
      best = &s;
    }
  }
  if (!best) {
    throw AllCandidatesFailed("every candidate family failed: " + out.per_family.front().reason);
  }
  out.chosen = best->family;
  return out;
}

} // namespace condcop
