#include "condcop/simulation.hpp"

#include "condcop/errors.hpp"
#include "condcop/numerics.hpp"
#include "condcop/parallel.hpp"
#include "condcop/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>

namespace condcop {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double support_lower = -2.0;
constexpr double support_upper = 2.0;

void
check_support(double y)
{
  if (!(y >= support_lower && y <= support_upper)) {
    std::ostringstream msg;
    msg << "covariate value " << y << " outside the model support [-2, 2]";
    throw DomainError(msg.str());
  }
}

std::string
fmt(double x)
{
  if (!std::isfinite(x)) {
    return "NA";
  }
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return out.str();
}

} // namespace

// ---------------------------------------------------------------------------
// Covariate and calibration curves

double
TruncatedNormal::sample(Rng& rng) const
{
  const double pa = normal_cdf((lower - mean) / sd);
  const double pb = normal_cdf((upper - mean) / sd);
  const double p = pa + uniform_open(rng) * (pb - pa);
  return std::clamp(mean + sd * normal_quantile(p), lower, upper);
}

double
TruncatedNormal::pdf(double y) const
{
  if (y < lower || y > upper) {
    return 0.0;
  }
  const double mass = normal_cdf((upper - mean) / sd) - normal_cdf((lower - mean) / sd);
  return normal_pdf((y - mean) / sd) / (sd * mass);
}

CalibrationModel
CalibrationModel::m1()
{
  return CalibrationModel{};
}

CalibrationModel
CalibrationModel::m2()
{
  CalibrationModel m;
  m.kind_ = Kind::M2;
  m.label_ = "M2";
  return m;
}

CalibrationModel
CalibrationModel::constant_theta(double theta)
{
  CalibrationModel m;
  m.kind_ = Kind::ConstantTheta;
  std::ostringstream label;
  label << "const:" << theta;
  m.label_ = label.str();
  m.constant_ = theta;
  return m;
}

CalibrationModel
CalibrationModel::custom(std::string label, std::function<double(double)> nu, LinkFunction link)
{
  CalibrationModel m;
  m.kind_ = Kind::Custom;
  m.label_ = std::move(label);
  m.nu_ = std::move(nu);
  m.link_ = link;
  return m;
}

CalibrationModel
CalibrationModel::parse(std::string_view text)
{
  if (text == "m1" || text == "M1") {
    return m1();
  }
  if (text == "m2" || text == "M2") {
    return m2();
  }
  if (text.starts_with("const:")) {
    const auto body = text.substr(6);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (ec == std::errc() && ptr == body.data() + body.size() && !body.empty()) {
      return constant_theta(value);
    }
  }
  throw DomainError("unknown model '" + std::string(text) + "' (expected m1, m2 or const:<theta>)");
}

double
CalibrationModel::theta(double y) const
{
  check_support(y);
  switch (kind_) {
    case Kind::M1:
      return 5.0 - y * y;
    case Kind::M2:
      return 3.0 + y + (5.0 / 6.0) * (std::exp(-y * y) - std::exp(-4.0));
    case Kind::ConstantTheta:
      return constant_;
    case Kind::Custom:
      return link_.inverse(nu_(y));
  }
  return nan;
}

double
CalibrationModel::theta_d1(double y) const
{
  check_support(y);
  switch (kind_) {
    case Kind::M1:
      return -2.0 * y;
    case Kind::M2:
      return 1.0 - (5.0 / 3.0) * y * std::exp(-y * y);
    case Kind::ConstantTheta:
      return 0.0;
    case Kind::Custom: {
      const double e = 1e-5;
      return (link_.inverse(nu_(y + e)) - link_.inverse(nu_(y - e))) / (2.0 * e);
    }
  }
  return nan;
}

double
CalibrationModel::theta_d2(double y) const
{
  check_support(y);
  switch (kind_) {
    case Kind::M1:
      return -2.0;
    case Kind::M2:
      return -(5.0 / 3.0) * std::exp(-y * y) * (1.0 - 2.0 * y * y);
    case Kind::ConstantTheta:
      return 0.0;
    case Kind::Custom: {
      const double e = 1e-4;
      return (link_.inverse(nu_(y + e)) - 2.0 * link_.inverse(nu_(y)) +
              link_.inverse(nu_(y - e))) /
             (e * e);
    }
  }
  return nan;
}

double
true_theta(const CalibrationModel& model, double y)
{
  return model.theta(y);
}

Dataset
generate(const DgpSpec& dgp)
{
  if (dgp.N < 1) {
    throw DomainError("sample size must be positive");
  }
  const FamilyPtr family = make_family(dgp.family);
  Rng rng(dgp.seed);
  Dataset data;
  data.U.resize(static_cast<Eigen::Index>(dgp.N), 2);
  data.Y.resize(static_cast<Eigen::Index>(dgp.N), 1);
  for (std::size_t i = 0; i < dgp.N; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double y = dgp.covariate.sample(rng);
    const CopulaPoint u = draw(*family, dgp.model.theta(y), rng);
    data.Y(row, 0) = y;
    data.U(row, 0) = u[0];
    data.U(row, 1) = u[1];
  }
  return data;
}

TrueModelPoint
true_model_point(const DgpSpec& dgp, double y)
{
  const double t = dgp.model.theta(y);
  const double t1 = dgp.model.theta_d1(y);
  const double t2 = dgp.model.theta_d2(y);
  const LinkFunction& link = dgp.link;
  TrueModelPoint out;
  out.y = Eigen::VectorXd::Constant(1, y);
  out.nu = link.forward(t);
  const double g1 = link.forward_d1(t);
  const double g2 = link.forward_d2(t);
  out.derivatives = { { MultiIndex{ 1 }, g1 * t1 }, { MultiIndex{ 2 }, g2 * t1 * t1 + g1 * t2 } };
  out.density = dgp.covariate.pdf(y);
  out.fisher_curvature = fisher_curvature(*make_family(dgp.family), t);
  return out;
}

double
sup_error(const CurveEstimate& curve, const CalibrationModel& model, double trim)
{
  const double lo = support_lower + trim;
  const double hi = support_upper - trim;
  double worst = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    if (curve.grid[k].size() != 1) {
      throw DimensionMismatch("sup_error needs a one-dimensional grid");
    }
    const double y = curve.grid[k][0];
    if (y < lo || y > hi) {
      continue;
    }
    ++used;
    const double est = curve.fits[k].theta_hat;
    if (!std::isfinite(est)) {
      return std::numeric_limits<double>::infinity();
    }
    worst = std::max(worst, std::abs(est - model.theta(y)));
  }
  if (used == 0) {
    throw EmptyTrimmedGrid("no grid point lies inside the trimmed interval");
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Monte Carlo

void
McConfig::validate() const
{
  if (replications < 1) {
    throw DomainError("replications must be at least one");
  }
  if (sample_sizes.empty()) {
    throw DomainError("no sample sizes given");
  }
  for (auto n : sample_sizes) {
    if (n < 2) {
      throw DomainError("sample sizes must be at least two");
    }
  }
  if (degree < 0) {
    throw DomainError("degree must be nonnegative");
  }
  if (kernel.dimension != 1) {
    throw DimensionMismatch("simulation models have one covariate");
  }
  if (grid_points < 2) {
    throw DomainError("evaluation grid needs at least two points");
  }
  if (!(trim >= 0.0) || trim >= 2.0) {
    throw DomainError("trim must lie in [0, 2)");
  }
  if (bandwidth.kind == BandwidthPolicy::Kind::Fixed && !(bandwidth.h > 0.0)) {
    throw DomainError("fixed bandwidth must be positive");
  }
}

Replication
run_replication(const McConfig& cfg, std::size_t N, std::size_t r)
{
  Replication rep;
  rep.r = r;
  rep.seed = derive_seed(cfg.master_seed, { hash_label(cfg.dgp.model.label()), N, r });
  try {
    DgpSpec dgp = cfg.dgp;
    dgp.N = N;
    dgp.seed = rep.seed;
    const Dataset data = generate(dgp);

    FitConfig fit;
    fit.family = make_family(dgp.family);
    fit.link = dgp.link;
    fit.kernel = cfg.kernel;
    fit.degree = cfg.degree;

    if (cfg.bandwidth.kind == BandwidthPolicy::Kind::CrossValidated) {
      const auto grid =
        cfg.bandwidth.grid.empty() ? default_bandwidth_grid(data) : cfg.bandwidth.grid;
      CvOptions cv = cfg.bandwidth.cv;
      cv.threads = 1;
      rep.h = select_bandwidth(data, fit, grid, cv).h_cv;
    } else {
      rep.h = cfg.bandwidth.h;
    }
    fit.bandwidth = rep.h;

    const auto grid = linear_grid(support_lower, support_upper, cfg.grid_points);
    const CurveEstimate curve = fit_curve(data, fit, grid, { .warm_start = false, .threads = 1 });
    rep.theta_hat.resize(grid.size());
    std::size_t converged = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      rep.theta_hat[k] = curve.fits[k].theta_hat;
      converged += curve.fits[k].converged ? 1 : 0;
    }
    rep.convergence_fraction = static_cast<double>(converged) / static_cast<double>(grid.size());
    rep.sup_error = sup_error(curve, cfg.dgp.model, cfg.trim);
    rep.rate_proxy = rate_proxy(rep.h, static_cast<double>(N), cfg.degree, 1).value;
    if (!std::isfinite(rep.sup_error)) {
      rep.ok = false;
      rep.failure = "curve fit failed inside the trimmed interval";
    }
  } catch (const Error& e) {
    rep.ok = false;
    rep.failure = e.what();
  }
  return rep;
}

CellAggregates
aggregate(const std::vector<Replication>& reps)
{
  std::vector<double> sup;
  std::vector<double> rate;
  std::vector<double> h;
  for (const auto& r : reps) {
    if (r.ok) {
      sup.push_back(r.sup_error);
      rate.push_back(r.rate_proxy);
      h.push_back(r.h);
    }
  }
  CellAggregates a;
  a.used = sup.size();
  if (sup.empty()) {
    a.sup_mean = a.sup_sd = a.sup_median = nan;
    a.rate_mean = a.rate_sd = a.rate_median = nan;
    a.h_mean = a.h_sd = a.h_median = a.h_min = a.h_max = nan;
    a.sup_over_rate = a.rate_over_sup = nan;
    return a;
  }
  a.sup_mean = stats::mean(sup);
  a.sup_sd = stats::sd(sup);
  a.sup_median = stats::median(sup);
  a.rate_mean = stats::mean(rate);
  a.rate_sd = stats::sd(rate);
  a.rate_median = stats::median(rate);
  a.h_mean = stats::mean(h);
  a.h_sd = stats::sd(h);
  a.h_median = stats::median(h);
  a.h_min = stats::min(h);
  a.h_max = stats::max(h);
  a.sup_over_rate = a.sup_mean / a.rate_mean;
  a.rate_over_sup = a.rate_mean / a.sup_mean;
  return a;
}

void
McReport::merge(const McReport& other)
{
  cells.insert(cells.end(), other.cells.begin(), other.cells.end());
}

McReport
run_mc(const McConfig& cfg)
{
  cfg.validate();
  const std::size_t R = cfg.replications;
  const std::size_t cells = cfg.sample_sizes.size();
  std::vector<Replication> all(cells * R);
  std::mutex progress_mutex;
  std::size_t finished = 0;

  parallel_for(all.size(), cfg.threads, [&](std::size_t k) {
    const std::size_t N = cfg.sample_sizes[k / R];
    all[k] = run_replication(cfg, N, k % R);
    if (cfg.progress) {
      std::lock_guard lock(progress_mutex);
      ++finished;
      std::ostringstream msg;
      msg << cfg.dgp.model.label() << " N=" << N << " r=" << k % R << " h=" << all[k].h
          << " sup=" << all[k].sup_error << (all[k].ok ? "" : " FAILED: " + all[k].failure)
          << " [" << finished << "/" << all.size() << "]";
      cfg.progress(msg.str());
    }
  });

  McReport report;
  report.master_seed = cfg.master_seed;
  report.replications = R;
  report.degree = cfg.degree;
  report.kernel = std::string(to_string(cfg.kernel.kind));
  report.link = cfg.dgp.link.to_string();
  report.family = std::string(to_string(cfg.dgp.family));
  report.bandwidth_policy =
    cfg.bandwidth.kind == BandwidthPolicy::Kind::Fixed ? "fixed:" + fmt(cfg.bandwidth.h) : "cv";
  report.trim = cfg.trim;

  const auto grid = linear_grid(support_lower, support_upper, cfg.grid_points);
  for (std::size_t c = 0; c < cells; ++c) {
    McCell cell;
    cell.model = cfg.dgp.model.label();
    cell.N = cfg.sample_sizes[c];
    cell.replications.assign(all.begin() + static_cast<std::ptrdiff_t>(c * R),
                             all.begin() + static_cast<std::ptrdiff_t>((c + 1) * R));
    const auto failed = static_cast<std::size_t>(std::count_if(
      cell.replications.begin(), cell.replications.end(), [](const auto& r) { return !r.ok; }));
    if (2 * failed > R) {
      const auto first = std::find_if(cell.replications.begin(), cell.replications.end(),
                                      [](const auto& r) { return !r.ok; });
      throw ConvergenceError("more than half of the replications failed for " + cell.model +
                             " N=" + std::to_string(cell.N) + ": " + first->failure);
    }
    cell.aggregates = aggregate(cell.replications);
    for (const auto& y : grid) {
      cell.grid.push_back(y[0]);
      cell.theta_true.push_back(cfg.dgp.model.theta(y[0]));
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Output

std::string
table1_csv(const McReport& report)
{
  std::ostringstream out;
  out << "model,N,sup_mean,sup_sd,sup_median,rate_mean,rate_sd,rate_median\n";
  for (const auto& c : report.cells) {
    const auto& a = c.aggregates;
    out << c.model << ',' << c.N << ',' << fmt(a.sup_mean) << ',' << fmt(a.sup_sd) << ','
        << fmt(a.sup_median) << ',' << fmt(a.rate_mean) << ',' << fmt(a.rate_sd) << ','
        << fmt(a.rate_median) << '\n';
  }
  return out.str();
}

std::string
table2_csv(const McReport& report)
{
  std::ostringstream out;
  out << "model,N,sup_mean_over_rate_mean,rate_mean_over_sup_mean\n";
  for (const auto& c : report.cells) {
    out << c.model << ',' << c.N << ',' << fmt(c.aggregates.sup_over_rate) << ','
        << fmt(c.aggregates.rate_over_sup) << '\n';
  }
  return out.str();
}

std::string
table3_csv(const McReport& report)
{
  std::ostringstream out;
  out << "model,N,h_mean,h_sd,h_median,h_min,h_max\n";
  for (const auto& c : report.cells) {
    const auto& a = c.aggregates;
    out << c.model << ',' << c.N << ',' << fmt(a.h_mean) << ',' << fmt(a.h_sd) << ','
        << fmt(a.h_median) << ',' << fmt(a.h_min) << ',' << fmt(a.h_max) << '\n';
  }
  return out.str();
}

namespace {

struct CurveSummary
{
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
};

CurveSummary
summarize_curve(const McCell& cell)
{
  CurveSummary s;
  for (std::size_t k = 0; k < cell.grid.size(); ++k) {
    std::vector<double> values;
    for (const auto& r : cell.replications) {
      if (r.ok && k < r.theta_hat.size() && std::isfinite(r.theta_hat[k])) {
        values.push_back(r.theta_hat[k]);
      }
    }
    if (values.empty()) {
      s.mean.push_back(nan);
      s.lower.push_back(nan);
      s.upper.push_back(nan);
    } else {
      s.mean.push_back(stats::mean(values));
      s.lower.push_back(stats::quantile(values, 0.025));
      s.upper.push_back(stats::quantile(values, 0.975));
    }
  }
  return s;
}

nlohmann::ordered_json
number(double x)
{
  return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
}

} // namespace

std::string
curve_csv(const McCell& cell)
{
  const CurveSummary s = summarize_curve(cell);
  std::ostringstream out;
  out << "y,theta_true,theta_mean,theta_q025,theta_q975\n";
  for (std::size_t k = 0; k < cell.grid.size(); ++k) {
    out << fmt(cell.grid[k]) << ',' << fmt(cell.theta_true[k]) << ',' << fmt(s.mean[k]) << ','
        << fmt(s.lower[k]) << ',' << fmt(s.upper[k]) << '\n';
  }
  return out.str();
}

std::string
report_json(const McReport& report)
{
  using json = nlohmann::ordered_json;
  json root;
  root["master_seed"] = report.master_seed;
  root["replications"] = report.replications;
  root["degree"] = report.degree;
  root["kernel"] = report.kernel;
  root["family"] = report.family;
  root["link"] = report.link;
  root["bandwidth_policy"] = report.bandwidth_policy;
  root["trim"] = report.trim;
  json cells = json::array();
  for (const auto& c : report.cells) {
    const auto& a = c.aggregates;
    json cell;
    cell["model"] = c.model;
    cell["N"] = c.N;
    cell["aggregates"] = {
      { "used", a.used },
      { "sup_mean", number(a.sup_mean) },
      { "sup_sd", number(a.sup_sd) },
      { "sup_median", number(a.sup_median) },
      { "rate_mean", number(a.rate_mean) },
      { "rate_sd", number(a.rate_sd) },
      { "rate_median", number(a.rate_median) },
      { "h_mean", number(a.h_mean) },
      { "h_sd", number(a.h_sd) },
      { "h_median", number(a.h_median) },
      { "h_min", number(a.h_min) },
      { "h_max", number(a.h_max) },
      { "sup_mean_over_rate_mean", number(a.sup_over_rate) },
      { "rate_mean_over_sup_mean", number(a.rate_over_sup) },
    };
    json reps = json::array();
    for (const auto& r : c.replications) {
      reps.push_back({
        { "r", r.r },
        { "seed", r.seed },
        { "ok", r.ok },
        { "failure", r.failure },
        { "sup_error", number(r.sup_error) },
        { "rate_proxy", number(r.rate_proxy) },
        { "h", number(r.h) },
        { "convergence_fraction", number(r.convergence_fraction) },
      });
    }
    cell["replications"] = std::move(reps);
    const CurveSummary s = summarize_curve(c);
    json curve = json::array();
    for (std::size_t k = 0; k < c.grid.size(); ++k) {
      curve.push_back({ { "y", c.grid[k] },
                        { "theta_true", number(c.theta_true[k]) },
                        { "theta_mean", number(s.mean[k]) },
                        { "theta_q025", number(s.lower[k]) },
                        { "theta_q975", number(s.upper[k]) } });
    }
    cell["curve"] = std::move(curve);
    cells.push_back(std::move(cell));
  }
  root["cells"] = std::move(cells);
  return root.dump(2) + "\n";
}

std::vector<std::string>
emit_tables(const McReport& report, const std::string& directory)
{
  if (report.cells.empty()) {
    throw DomainError("report has no cells");
  }
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) {
    throw IoError("cannot create directory '" + directory + "': " + ec.message());
  }
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& content) {
    const std::string path = (fs::path(directory) / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) {
      throw IoError("cannot write '" + path + "'");
    }
    written.push_back(path);
  };
  put("table1.csv", table1_csv(report));
  put("table2.csv", table2_csv(report));
  put("table3.csv", table3_csv(report));
  const std::string seed = std::to_string(report.master_seed);
  for (const auto& c : report.cells) {
    std::string model = c.model;
    std::replace(model.begin(), model.end(), ':', '_');
    put("curve_" + model + "_N" + std::to_string(c.N) + "_seed" + seed + ".csv", curve_csv(c));
  }
  put("report_seed" + seed + ".json", report_json(report));
  return written;
}

} // namespace condcop
