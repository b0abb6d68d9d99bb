// Acceptance gate: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include "acceptance.hpp"
#include "support.hpp"

#include "condcop/asymptotics.hpp"
#include "condcop/errors.hpp"
#include "condcop/simulation.hpp"
#include "condcop/stats.hpp"
#include "condcop/tuning.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

using namespace condcop;
using acceptance::Outcome;
using testing::vec;

namespace {

std::string
num(double x, int digits = 4)
{
  std::ostringstream os;
  os << std::setprecision(digits) << x;
  return os.str();
}

double
elapsed(std::chrono::steady_clock::time_point since)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

// ---------------------------------------------------------------------------
// 4: analytic derivatives against finite differences

Outcome
derivative_probes()
{
  Outcome o{ 4, "score/Hessian vs finite differences on 200 probes", true, "" };
  const FamilyId families[] = { FamilyId::Frank, FamilyId::Clayton, FamilyId::Gaussian };
  Rng rng(404);
  double worst_score = 0.0;
  double worst_hessian = 0.0;
  int probes = 0;
  for (int k = 0; k < 200; ++k) {
    const FamilyId id = families[k % 3];
    const int s = 1 + (k / 3) % 2;
    const int p = (k / 6) % (s == 1 ? 3 : 2);
    FitConfig cfg;
    cfg.family = make_family(id);
    cfg.link = canonical_link(id);
    cfg.kernel.dimension = s;
    cfg.kernel.kind = (k / 12) % 2 == 0 ? KernelKind::EpanechnikovProduct : KernelKind::GaussianProduct;
    cfg.degree = p;
    cfg.bandwidth = s == 1 ? 0.8 : 1.5;
    const double level = id == FamilyId::Gaussian ? 0.4 : 2.0;
    const auto data = testing::draw_dataset(
      *cfg.family, [&](double y) { return id == FamilyId::Gaussian ? level * std::tanh(y) : level + 0.5 * y; }, 120,
      s, 1000 + static_cast<std::uint64_t>(k));
    Eigen::VectorXd y(s);
    for (int j = 0; j < s; ++j) {
      y(j) = -1.5 + 3.0 * uniform_open(rng);
    }
    const PolyBasis basis(s, p);
    Eigen::VectorXd g(static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      g(j) = 2.0 * uniform_open(rng) - 1.0;
    }
    const auto sc = score(data, cfg, y, g);
    const auto H = hessian(data, cfg, y, g);
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      const double step = 1e-5;
      Eigen::VectorXd gp = g;
      Eigen::VectorXd gm = g;
      gp(j) += step;
      gm(j) -= step;
      const double fd = (objective(data, cfg, y, gp) - objective(data, cfg, y, gm)) / (2 * step);
      const Eigen::VectorXd fdH = (score(data, cfg, y, gp) - score(data, cfg, y, gm)) / (2 * step);
      worst_score = std::max(worst_score, std::abs(sc(j) - fd) / std::max(1.0, std::abs(fd)));
      worst_hessian = std::max(worst_hessian, (H.col(j) - fdH).cwiseAbs().maxCoeff() /
                                                std::max(1.0, fdH.cwiseAbs().maxCoeff()));
    }
    ++probes;
  }
  o.pass = worst_score <= 1e-6 && worst_hessian <= 1e-5;
  o.detail = std::to_string(probes) + " probes; worst score error " + num(worst_score, 3) +
             " (tol 1e-6), worst Hessian error " + num(worst_hessian, 3) + " (tol 1e-5)";
  return o;
}

// ---------------------------------------------------------------------------
// 5: maximizer against a brute-force grid

//! Brute-force argmax of the p=0 objective over gamma_0 in [-8, 8].
double
grid_argmax(const Dataset& data, const FitConfig& cfg, const Eigen::VectorXd& y)
{
  double best = -INFINITY;
  double arg = 0.0;
  for (int k = -8000; k <= 8000; ++k) {
    const double g = k * 1e-3;
    const double v = objective(data, cfg, y, vec({ g }));
    if (v > best) {
      best = v;
      arg = g;
    }
  }
  return arg;
}

//! Frank's canonical link keeps a finite maximizer on every dataset. Under the
//! simulation link (1, 5) a sample of 40 often puts the Frank MLE outside the
//! range, so the likelihood rises to the edge; those cases are counted apart.
Outcome
maximizer_oracle()
{
  Outcome o{ 5, "p=0 fit_point vs 1e-3 brute-force grid on 20 datasets (N=40)", true, "" };
  auto cfg = testing::frank_config(0.9, 0);
  cfg.link = canonical_link(FamilyId::Frank);
  auto model_cfg = testing::frank_config(0.9, 0);
  const auto y = vec({ 0.0 });
  const auto y_mid = vec({ std::sqrt(2.0) });
  int agree = 0;
  double worst = 0.0;
  int model_interior = 0;
  int model_agree = 0;
  int model_flagged = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DgpSpec dgp;
    dgp.N = 40;
    dgp.seed = seed;
    const auto data = generate(dgp);
    const double arg = grid_argmax(data, cfg, y);
    try {
      const auto fit = fit_point(data, cfg, y);
      const double gap = std::abs(fit.gamma_hat(0) - arg);
      worst = std::max(worst, gap);
      agree += (gap <= 1e-3 && fit.converged) ? 1 : 0;
    } catch (const Error&) {
      worst = INFINITY;
    }

    const double model_arg = grid_argmax(data, model_cfg, y_mid);
    const auto model_fit = fit_point(data, model_cfg, y_mid);
    if (std::abs(model_arg) < 8.0) {
      ++model_interior;
      model_agree += std::abs(model_fit.gamma_hat(0) - model_arg) <= 1e-3 ? 1 : 0;
    } else {
      model_flagged += model_fit.converged ? 0 : 1;
    }
  }
  o.pass = agree == 20;
  o.detail = std::to_string(agree) + "/20 within one grid cell; largest gap " + num(worst, 3) +
             " (link (1,5) at y=sqrt 2: " + std::to_string(model_agree) + "/" + std::to_string(model_interior) +
             " interior maximizers matched, " + std::to_string(model_flagged) + "/" +
             std::to_string(20 - model_interior) + " edge cases flagged unconverged)";
  return o;
}

// ---------------------------------------------------------------------------
// 6 and 7: bias, variance and normality at a fixed bandwidth

struct FixedRun
{
  std::vector<double> nu_err;
  std::vector<double> theta_hat;
  std::size_t dropped = 0;
  AsymptoticPrediction prediction;
};

FixedRun
fixed_bandwidth_run()
{
  DgpSpec dgp;
  dgp.model = CalibrationModel::m2();
  dgp.N = 2000;
  const double y = 0.3;
  const double h = 0.4;
  const std::size_t R = 500;
  const auto truth = true_model_point(dgp, y);
  const auto cfg = testing::frank_config(h, 1);
  FixedRun run;
  for (std::size_t r = 0; r < R; ++r) {
    dgp.seed = derive_seed(20240601, { hash_label("bias-variance"), dgp.N, r });
    const auto fit = fit_point(generate(dgp), cfg, vec({ y }));
    // No finite maximizer exists for a few samples (the fit saturates at the
    // link bounds); those are reported as dropped.
    if (!fit.converged) {
      ++run.dropped;
      continue;
    }
    run.nu_err.push_back(fit.nu_hat - truth.nu);
    run.theta_hat.push_back(fit.theta_hat);
  }
  run.prediction = predict_bias_variance(truth, cfg.link, cfg.kernel, { 0 }, 1, h, dgp.N);
  return run;
}

Outcome
bias_variance(const FixedRun& run)
{
  Outcome o{ 6, "M2 y=0.3 h=0.4 N=2000 R=500: bias within 3 SE, variance within 30%", true, "" };
  const double mean = stats::mean(run.nu_err);
  const double sd = stats::sd(run.nu_err);
  const double se = sd / std::sqrt(static_cast<double>(run.nu_err.size()));
  const double var = sd * sd;
  const bool bias_ok = std::abs(mean - run.prediction.bias) <= 3.0 * se;
  const bool var_ok = std::abs(var / run.prediction.variance - 1.0) <= 0.30;
  o.pass = bias_ok && var_ok;
  o.detail = "MC bias " + num(mean) + " +- " + num(se) + " vs predicted " + num(run.prediction.bias) +
             "; MC variance " + num(var) + " vs predicted " + num(run.prediction.variance) + " (ratio " +
             num(var / run.prediction.variance, 3) + "); " + std::to_string(run.dropped) + " of 500 dropped";
  return o;
}

Outcome
normality(const FixedRun& run)
{
  Outcome o{ 7, "Anderson-Darling on standardized theta_hat(0.3) at level 0.01", true, "" };
  const auto dist = predicted_sampling_distribution(run.prediction, SamplingTarget::Theta);
  std::vector<double> z;
  for (double t : run.theta_hat) {
    z.push_back((t - dist.mean) / std::sqrt(dist.variance));
  }
  const double a2 = stats::anderson_darling_normal(z);
  o.pass = a2 < stats::anderson_darling_critical_1pct;
  o.detail = "A^2 = " + num(a2) + " against N(" + num(dist.mean) + ", " + num(dist.variance) +
             "), critical value " + num(stats::anderson_darling_critical_1pct);
  return o;
}

// ---------------------------------------------------------------------------
// 8: property suite

struct Check
{
  std::string name;
  bool pass;
  std::string detail;
};

Check
check_normalization()
{
  double worst = 0.0;
  const std::vector<std::pair<FamilyId, std::vector<double>>> grid{
    { FamilyId::Frank, { -10.0, -1.0, 0.5, 5.0, 20.0 } },
    { FamilyId::Clayton, { 0.5, 2.0, 8.0 } },
    { FamilyId::Gaussian, { -0.9, -0.3, 0.3, 0.9 } },
  };
  for (const auto& [id, thetas] : grid) {
    const auto f = make_family(id);
    for (double t : thetas) {
      const double mass = testing::unit_square_integral([&](double u, double v) { return std::exp(f->log_density(u, v, t)); });
      worst = std::max(worst, std::abs(mass - 1.0));
    }
  }
  return { "density normalization", worst <= 1e-6, "worst |mass-1| " + num(worst, 3) };
}

Check
check_round_trips()
{
  double worst_h = 0.0;
  double worst_link = 0.0;
  const std::vector<std::pair<FamilyId, double>> cases{
    { FamilyId::Frank, 4.0 }, { FamilyId::Frank, -6.0 }, { FamilyId::Clayton, 2.0 }, { FamilyId::Gaussian, 0.6 }
  };
  for (const auto& [id, t] : cases) {
    const auto f = make_family(id);
    for (double u = 0.05; u < 1.0; u += 0.1) {
      for (double v = 0.05; v < 1.0; v += 0.1) {
        if (std::exp(f->log_density(u, v, t)) < 1e-4) {
          continue;
        }
        worst_h = std::max(worst_h, std::abs(f->h_inverse(f->h_function(u, v, t), v, t) - u));
      }
    }
  }
  for (const auto& link : { LinkFunction::identity(), LinkFunction::log(), LinkFunction::scaled_logistic(1.0, 5.0),
                            LinkFunction::scaled_logistic(-1.0, 1.0) }) {
    for (double nu = -10.0; nu <= 10.0; nu += 0.25) {
      const double back = link.forward(link.inverse(nu));
      worst_link = std::max(worst_link, std::abs(back - nu) / std::max(1.0, std::abs(nu)));
    }
  }
  return { "h-function and link round trips", worst_h <= 1e-10 && worst_link <= 1e-10,
           "worst h " + num(worst_h, 3) + ", worst link " + num(worst_link, 3) };
}

Check
check_sampler_tau()
{
  Rng rng(2024);
  const auto frank = make_family(FamilyId::Frank);
  const auto draws = sample(*frank, 4.0, 20000, rng);
  std::vector<double> a;
  std::vector<double> b;
  for (const auto& p : draws) {
    a.push_back(p[0]);
    b.push_back(p[1]);
  }
  const double gap = std::abs(stats::kendall_tau(a, b) - frank->kendall_tau(4.0));
  return { "sampler Kendall tau", gap <= 0.02, "Frank(4) gap " + num(gap, 3) };
}

Check
check_moment_anchors()
{
  const KernelSpec k{};
  const auto m = kernel_moments(k, PolyBasis(1, 1));
  Eigen::Matrix2d S;
  S << 1.0, 0.0, 0.0, 0.2;
  Eigen::Matrix2d Ss;
  Ss << 0.6, 0.0, 0.0, 3.0 / 35.0;
  const Eigen::Vector2d c(0.2, 0.0);
  const double e = std::max({ (m.S - S).cwiseAbs().maxCoeff(), (m.S_star - Ss).cwiseAbs().maxCoeff(),
                              (m.c_vector({ 2 }) - c).cwiseAbs().maxCoeff() });
  return { "kernel moment anchors", e <= 1e-12, "max deviation " + num(e, 3) };
}

Check
check_loo_oracle()
{
  const auto cfg = testing::frank_config(1.0);
  const auto d = testing::draw_dataset(*cfg.family, [](double y) { return 3.0 + y; }, 20, 1, 7, -1.0, 1.0);
  double worst = 0.0;
  for (double h : { 0.8, 1.2, 3.0 }) {
    auto c = cfg;
    c.bandwidth = h;
    double naive = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const auto fit = fit_point(d.without_row(i), c, d.Y.row(row).transpose());
      naive += cfg.family->log_density(d.U(row, 0), d.U(row, 1), fit.theta_hat);
    }
    worst = std::max(worst, std::abs(cvl(d, cfg, h) - naive) / std::abs(naive));
  }
  return { "leave-one-out naive oracle", worst <= 1e-8, "worst relative gap " + num(worst, 3) };
}

Check
check_determinism()
{
  McConfig cfg;
  cfg.replications = 2;
  cfg.sample_sizes = { 150 };
  cfg.bandwidth.kind = BandwidthPolicy::Kind::Fixed;
  cfg.bandwidth.h = 0.7;
  const auto a = report_json(run_mc(cfg));
  cfg.threads = 2;
  const auto b = report_json(run_mc(cfg));
  DgpSpec dgp;
  const bool data_same = generate(dgp).U == generate(dgp).U;
  return { "determinism under fixed seeds", a == b && data_same, a == b ? "identical" : "reports differ" };
}

Check
check_rate_slope()
{
  std::vector<double> x;
  std::vector<double> y;
  for (double N : { 1e3, 1e4, 1e5 }) {
    x.push_back(std::log(N));
    y.push_back(std::log(rate_proxy_minimizer(N, 1, 1)));
  }
  const double slope = (y[2] - y[0]) / (x[2] - x[0]);
  return { "rate-proxy minimizer slope", std::abs(slope + 0.2) <= 0.03, "slope " + num(slope) + " vs -0.2" };
}

//! Simulation invariants evaluated on the desk-scale reports.
std::vector<Check>
check_mc_trends(const McReport& m1, const McReport& m2)
{
  std::vector<Check> out;
  for (const McReport* rep : { &m1, &m2 }) {
    if (rep->cells.empty()) {
      continue;
    }
    std::vector<double> sup;
    std::vector<double> rate;
    for (std::size_t N : { 100, 500, 2000 }) {
      for (const auto& cell : rep->cells) {
        if (cell.N == N) {
          sup.push_back(cell.aggregates.sup_median);
          rate.push_back(cell.aggregates.rate_median);
        }
      }
    }
    const std::string model = rep->cells.front().model;
    if (sup.size() != 3) {
      out.push_back({ model + " trend", false, "cells missing" });
      continue;
    }
    int inversions = 0;
    bool small = true;
    for (std::size_t k = 1; k < sup.size(); ++k) {
      if (sup[k] > sup[k - 1]) {
        ++inversions;
        small = small && sup[k] <= 1.05 * sup[k - 1];
      }
    }
    out.push_back({ model + " median sup_error non-increasing", inversions == 0 || (inversions == 1 && small),
                    std::to_string(inversions) + " inversion(s)" });
    const double rho = stats::spearman(sup, rate);
    out.push_back({ model + " error/rate Spearman", rho >= 0.9, "rho " + num(rho, 3) });
  }
  return out;
}

Outcome
property_suite(const McReport* m1, const McReport* m2)
{
  Outcome o{ 8, "property suite", true, "" };
  std::vector<Check> checks{ check_normalization(), check_round_trips(), check_sampler_tau(), check_moment_anchors(),
                             check_loo_oracle(),    check_determinism(), check_rate_slope() };
  if (m1 != nullptr && m2 != nullptr) {
    for (auto& c : check_mc_trends(*m1, *m2)) {
      checks.push_back(std::move(c));
    }
  }
  std::ostringstream detail;
  int passed = 0;
  for (const auto& c : checks) {
    passed += c.pass ? 1 : 0;
    if (!c.pass) {
      detail << c.name << " FAILED (" << c.detail << "); ";
    }
  }
  o.pass = passed == static_cast<int>(checks.size());
  detail << passed << "/" << checks.size() << " checks pass";
  o.detail = detail.str();
  return o;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "Acceptance criteria", "acceptance" };
  std::string out_dir = "acceptance_out";
  std::string scale = "desk";
  std::size_t R = 0;
  bool kfold = false;
  int threads = 1;
  std::vector<int> only;
  app.add_option("--out-dir", out_dir, "Directory for the simulation tables")->capture_default_str();
  app.add_option("--scale", scale, "desk or full")->capture_default_str();
  app.add_option("--R", R, "Override the replications of criteria 1 to 3");
  app.add_flag("--kfold", kfold, "10-fold cross-validation for criteria 1 to 3");
  app.add_option("--threads", threads, "Worker threads")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::set<int> selected(only.begin(), only.end());
  const auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };
  std::vector<Outcome> outcomes;
  const auto report = [&](Outcome o, std::chrono::steady_clock::time_point t0) {
    o.detail += " [" + num(elapsed(t0), 3) + " s]";
    std::cout << acceptance::format(o) << std::endl;
    outcomes.push_back(std::move(o));
  };

  std::optional<McReport> m1;
  std::optional<McReport> m2;
  if (wanted(1) || wanted(2) || wanted(3)) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto sc = scale == "full" ? acceptance::Scale::Full : acceptance::Scale::Desk;
    const std::size_t reps = R > 0 ? R : acceptance::replications(sc);
    const auto progress = [](const std::string& line) { std::cerr << line << std::endl; };
    auto c1 = acceptance::study_config("m1", acceptance::sample_sizes(sc, "m1"), reps, 20240601, kfold, threads);
    auto c2 = acceptance::study_config("m2", acceptance::sample_sizes(sc, "m2"), reps, 20240601, kfold, threads);
    c1.progress = progress;
    c2.progress = progress;
    m1 = run_mc(c1);
    m2 = run_mc(c2);
    McReport merged = *m1;
    merged.merge(*m2);
    std::filesystem::create_directories(out_dir);
    emit_tables(merged, out_dir);
    for (auto& o : acceptance::table_criteria(*m1, *m2, kfold)) {
      if (wanted(o.id)) {
        report(std::move(o), t0);
      }
    }
  }
  if (wanted(4)) {
    const auto t0 = std::chrono::steady_clock::now();
    report(derivative_probes(), t0);
  }
  if (wanted(5)) {
    const auto t0 = std::chrono::steady_clock::now();
    report(maximizer_oracle(), t0);
  }
  if (wanted(6) || wanted(7)) {
    const auto t0 = std::chrono::steady_clock::now();
    const FixedRun run = fixed_bandwidth_run();
    if (wanted(6)) {
      report(bias_variance(run), t0);
    }
    if (wanted(7)) {
      report(normality(run), t0);
    }
  }
  if (wanted(8)) {
    const auto t0 = std::chrono::steady_clock::now();
    report(property_suite(m1 ? &*m1 : nullptr, m2 ? &*m2 : nullptr), t0);
  }

  int failed = 0;
  for (const auto& o : outcomes) {
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "ALL CRITERIA PASS" : std::to_string(failed) + " CRITERIA FAIL") << std::endl;
  return failed == 0 ? 0 : 1;
}
