#include "cli.hpp"

#include "acceptance.hpp"

#include "condcop/asymptotics.hpp"
#include "condcop/dataset.hpp"
#include "condcop/errors.hpp"
#include "condcop/local_likelihood.hpp"
#include "condcop/simulation.hpp"
#include "condcop/tuning.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace condcop::cli {

namespace {

using json = nlohmann::ordered_json;

//! Bad flag values or combinations; exit code 2.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Unreadable or malformed input data; exit code 4.
class InputError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

double
parse_number(const std::string& text, const std::string& key)
{
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ConfigError(key + ": '" + text + "' is not a finite number");
  }
  return value;
}

struct GridSpec
{
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

//! "lo:hi:count" with lo <= hi and count >= 1 (count == 1 requires lo == hi).
GridSpec
parse_grid(const std::string& text, const std::string& key)
{
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? a : text.find(':', a + 1);
  if (a == std::string::npos || b == std::string::npos ||
      text.find(':', b + 1) != std::string::npos) {
    throw ConfigError(key + ": expected lo:hi:count, got '" + text + "'");
  }
  GridSpec g;
  g.lower = parse_number(text.substr(0, a), key);
  g.upper = parse_number(text.substr(a + 1, b - a - 1), key);
  const std::string count = text.substr(b + 1);
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), n);
  if (ec != std::errc() || ptr != count.data() + count.size() || n == 0) {
    throw ConfigError(key + ": count must be a positive integer, got '" + count + "'");
  }
  g.count = n;
  if (g.lower > g.upper || (n == 1 && g.lower != g.upper) || (n > 1 && g.lower == g.upper)) {
    throw ConfigError(key + ": need lo < hi with count > 1, or lo == hi with count 1");
  }
  return g;
}

//! Either "lo:hi:count" (log-spaced) or an explicit list "h1,h2,...".
std::vector<double>
bandwidth_grid(const std::string& text, const std::string& key)
{
  if (text.find(':') == std::string::npos) {
    std::vector<double> out;
    std::size_t start = 0;
    while (true) {
      const auto comma = text.find(',', start);
      const double h = parse_number(text.substr(start, comma - start), key);
      if (!(h > 0.0)) {
        throw ConfigError(key + ": bandwidths must be positive");
      }
      out.push_back(h);
      if (comma == std::string::npos) {
        break;
      }
      start = comma + 1;
    }
    return out;
  }
  const GridSpec g = parse_grid(text, key);
  if (g.lower <= 0.0) {
    throw ConfigError(key + ": bandwidths must be positive");
  }
  return g.count == 1 ? std::vector<double>{ g.lower } : log_spaced(g.lower, g.upper, g.count);
}

Dataset
load_data(const std::string& path)
{
  try {
    return read_dataset_csv(path);
  } catch (const Error& e) {
    throw InputError(e.what());
  }
}

//! Runs `f` and turns library domain errors into configuration errors.
template<class F>
auto
as_config(const std::string& key, F&& f)
{
  try {
    return f();
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void
write_text(const std::string& path, const std::string& text)
{
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  file << text;
  if (!file) {
    throw IoError("write to '" + path + "' failed");
  }
}

//! Writes the JSON document to `path`, or to `out` when path is empty.
void
emit_json(const json& doc, const std::string& path, std::ostream& out)
{
  const std::string text = doc.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

json
finite_or_null(double x)
{
  return std::isfinite(x) ? json(x) : json(nullptr);
}

// ---------------------------------------------------------------------------
// Options shared by the estimation commands

struct ModelArgs
{
  std::string family = "frank";
  std::string link;
  std::string kernel = "epanechnikov";
  int degree = 1;
  int max_iter = 100;
};

void
add_model_options(CLI::App& cmd, ModelArgs& m, bool with_family)
{
  if (with_family) {
    cmd.add_option("--family", m.family, "Copula family: frank, clayton or gaussian")
      ->capture_default_str();
  }
  cmd.add_option("--link", m.link,
                 "Link: scaled_logistic(a,b), identity, logit or log (default: canonical for the family)");
  cmd.add_option("--kernel", m.kernel, "Kernel: epanechnikov or gaussian")->capture_default_str();
  cmd.add_option("--p", m.degree, "Local polynomial degree")->capture_default_str();
  cmd.add_option("--max-iter", m.max_iter, "Newton iteration cap per point")->capture_default_str();
}

FitConfig
make_fit_config(const ModelArgs& m, int dimension)
{
  FitConfig cfg;
  const FamilyId id = as_config("--family", [&] { return family_from_string(m.family); });
  cfg.family = make_family(id);
  cfg.link = m.link.empty() ? canonical_link(id)
                            : as_config("--link", [&] { return LinkFunction::parse(m.link); });
  cfg.kernel.kind = as_config("--kernel", [&] { return kernel_from_string(m.kernel); });
  cfg.kernel.dimension = dimension;
  cfg.degree = m.degree;
  cfg.max_iter = m.max_iter;
  if (m.degree < 0) {
    throw ConfigError("--p: degree must be nonnegative");
  }
  if (m.max_iter < 1) {
    throw ConfigError("--max-iter: must be at least 1");
  }
  return cfg;
}

struct CvArgs
{
  std::string h_grid;
  int kfold = 0;
  double max_h = 0.0;
  bool refine = false;
  double penalty = 0.0;
  CLI::Option* max_h_opt = nullptr;
  CLI::Option* penalty_opt = nullptr;
};

void
add_cv_options(CLI::App& cmd, CvArgs& c)
{
  cmd.add_option("--h-grid", c.h_grid,
                 "Bandwidth candidates: lo:hi:count log-spaced, or a list h1,h2,... (default: 16 values on [0.1, 1] x covariate range)");
  cmd.add_option("--kfold", c.kfold, "Use k-fold cross-validation with this many folds instead of leave-one-out");
  c.max_h_opt = cmd.add_option("--max-h", c.max_h, "Discard bandwidth candidates above this value");
  cmd.add_flag("--refine", c.refine, "Golden-section refinement around the best grid candidate");
  c.penalty_opt = cmd.add_option("--penalty", c.penalty,
                                 "Log-density charged for a row whose held-out fit fails (default: reject the candidate)");
}

CvOptions
make_cv_options(const CvArgs& c, int threads)
{
  CvOptions opt;
  if (c.kfold != 0) {
    if (c.kfold < 2) {
      throw ConfigError("--kfold: need at least 2 folds");
    }
    opt.mode = CvOptions::Mode::KFold;
    opt.folds = c.kfold;
  }
  if (c.max_h_opt->count() > 0) {
    if (!(c.max_h > 0.0)) {
      throw ConfigError("--max-h: must be positive");
    }
    opt.max_h = c.max_h;
  }
  if (c.penalty_opt->count() > 0) {
    opt.failure_penalty = c.penalty;
  }
  opt.refine = c.refine;
  opt.threads = threads;
  return opt;
}

std::vector<double>
make_h_grid(const CvArgs& c, const Dataset& data)
{
  return c.h_grid.empty() ? default_bandwidth_grid(data) : bandwidth_grid(c.h_grid, "--h-grid");
}

json
selection_json(const BandwidthSelection& sel)
{
  json rows = json::array();
  for (std::size_t k = 0; k < sel.candidates.size(); ++k) {
    rows.push_back({ { "h", sel.candidates[k] },
                     { "cvl", finite_or_null(sel.cvl_values[k]) },
                     { "failure", sel.failures[k] } });
  }
  return { { "h_cv", sel.h_cv }, { "refined", sel.refined }, { "candidates", rows } };
}

std::string
cv_mode(const CvOptions& opt)
{
  return opt.mode == CvOptions::Mode::Exact ? "leave-one-out"
                                            : std::to_string(opt.folds) + "-fold";
}

// ---------------------------------------------------------------------------
// Commands

struct Common
{
  int threads = 0;
  std::uint64_t seed = 0;
};

void
add_common_options(CLI::App& cmd, Common& c)
{
  cmd.add_option("--threads", c.threads, "Worker threads (0: all cores); results do not depend on it")
    ->capture_default_str();
  cmd.add_option("--seed", c.seed, "Random seed (recorded; only simulate and reproduce draw random numbers)")
    ->capture_default_str();
}

struct FitArgs
{
  std::string data;
  ModelArgs model;
  Common common;
  double h = 0.0;
  CLI::Option* h_opt = nullptr;
  std::string grid;
  std::string points;
  std::string out = "curve.csv";
  std::string summary;
  bool warm_start = false;
};

std::vector<Eigen::VectorXd>
read_points(const std::string& path, int dimension)
{
  std::ifstream file(path);
  if (!file) {
    throw InputError("cannot open '" + path + "'");
  }
  std::vector<Eigen::VectorXd> points;
  std::string line;
  std::getline(file, line); // header
  std::size_t line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    Eigen::VectorXd y(dimension);
    std::stringstream row(line);
    std::string cell;
    int j = 0;
    while (std::getline(row, cell, ',')) {
      if (j >= dimension) {
        throw InputError(path + ":" + std::to_string(line_no) + ": too many columns");
      }
      try {
        y(j++) = parse_number(cell, "points");
      } catch (const ConfigError& e) {
        throw InputError(path + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (j != dimension) {
      throw InputError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(dimension) + " columns");
    }
    points.push_back(std::move(y));
  }
  if (points.empty()) {
    throw InputError(path + ": no evaluation points");
  }
  return points;
}

int
cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err)
{
  if (a.h_opt->count() == 0) {
    throw ConfigError("--h is required; choose a bandwidth with `condcop cv-bandwidth` first");
  }
  if (!(a.h > 0.0)) {
    throw ConfigError("--h: bandwidth must be positive");
  }
  if (!a.grid.empty() && !a.points.empty()) {
    throw ConfigError("--grid and --points are mutually exclusive");
  }
  const Dataset data = load_data(a.data);
  const int s = data.covariate_dimension();
  FitConfig cfg = make_fit_config(a.model, s);
  cfg.bandwidth = a.h;
  as_config("configuration", [&] {
    cfg.validate(s);
    return 0;
  });

  std::vector<Eigen::VectorXd> grid;
  if (!a.points.empty()) {
    grid = read_points(a.points, s);
  } else if (s == 1) {
    if (a.grid.empty()) {
      grid = linear_grid(data.Y.col(0).minCoeff(), data.Y.col(0).maxCoeff(), 101);
    } else {
      const GridSpec g = parse_grid(a.grid, "--grid");
      grid = linear_grid(g.lower, g.upper, g.count);
    }
  } else {
    throw ConfigError("--grid only describes one covariate; use --points for " + std::to_string(s) +
                      " covariates");
  }

  const CurveEstimate curve =
    fit_curve(data, cfg, grid, { .warm_start = a.warm_start, .threads = a.common.threads });
  std::ostringstream csv;
  write_curve_csv(curve, csv);
  write_text(a.out, csv.str());

  const std::size_t failed = curve.failures();
  std::size_t converged = 0;
  for (const auto& f : curve.fits) {
    converged += f.converged ? 1 : 0;
  }
  json doc = { { "command", "fit" },
               { "data", a.data },
               { "n", data.size() },
               { "family", std::string(cfg.family->name()) },
               { "link", cfg.link.to_string() },
               { "kernel", std::string(to_string(cfg.kernel.kind)) },
               { "p", cfg.degree },
               { "h", cfg.bandwidth },
               { "points", grid.size() },
               { "converged_points", converged },
               { "failed_points", failed },
               { "curve", a.out },
               { "seed", a.common.seed } };
  emit_json(doc, a.summary, out);
  if (failed > 0) {
    err << "condcop fit: " << failed << " of " << grid.size() << " points failed\n";
    return exit_partial;
  }
  return exit_ok;
}

struct CvBandwidthArgs
{
  std::string data;
  ModelArgs model;
  CvArgs cv;
  Common common;
  std::string out;
};

int
cmd_cv_bandwidth(const CvBandwidthArgs& a, std::ostream& out, std::ostream& err)
{
  const Dataset data = load_data(a.data);
  const int s = data.covariate_dimension();
  const FitConfig cfg = make_fit_config(a.model, s);
  as_config("configuration", [&] {
    cfg.validate(s);
    return 0;
  });
  const CvOptions opt = make_cv_options(a.cv, a.common.threads);
  const std::vector<double> grid = make_h_grid(a.cv, data);
  const BandwidthSelection sel = select_bandwidth(data, cfg, grid, opt);

  json doc = { { "command", "cv-bandwidth" },
               { "data", a.data },
               { "n", data.size() },
               { "family", std::string(cfg.family->name()) },
               { "link", cfg.link.to_string() },
               { "kernel", std::string(to_string(cfg.kernel.kind)) },
               { "p", cfg.degree },
               { "criterion", "cvl" },
               { "mode", cv_mode(opt) },
               { "seed", a.common.seed } };
  doc.update(selection_json(sel));
  emit_json(doc, a.out, out);

  std::size_t failed = 0;
  for (const auto& f : sel.failures) {
    failed += f.empty() ? 0 : 1;
  }
  if (failed > 0) {
    err << "condcop cv-bandwidth: " << failed << " candidate bandwidths failed\n";
    return exit_partial;
  }
  return exit_ok;
}

struct SelectFamilyArgs
{
  std::string data;
  ModelArgs model;
  CvArgs cv;
  Common common;
  std::vector<std::string> families{ "frank", "clayton", "gaussian" };
  std::string out;
};

int
cmd_select_family(const SelectFamilyArgs& a, std::ostream& out, std::ostream& err)
{
  const Dataset data = load_data(a.data);
  const int s = data.covariate_dimension();
  FitConfig cfg = make_fit_config(a.model, s);
  std::vector<FamilyId> ids;
  for (const auto& name : a.families) {
    ids.push_back(as_config("--families", [&] { return family_from_string(name); }));
  }
  if (ids.empty()) {
    throw ConfigError("--families: need at least one family");
  }
  std::optional<LinkFunction> link_override;
  if (!a.model.link.empty()) {
    link_override = cfg.link;
  }
  const CvOptions opt = make_cv_options(a.cv, a.common.threads);
  const std::vector<double> grid = make_h_grid(a.cv, data);
  const FamilySelection sel = select_family(data, cfg, ids, grid, opt, link_override);

  json rows = json::array();
  std::size_t failed = 0;
  for (const auto& f : sel.per_family) {
    failed += f.ok ? 0 : 1;
    const LinkFunction link = link_override ? *link_override : canonical_link(f.family);
    rows.push_back({ { "family", std::string(to_string(f.family)) },
                     { "link", link.to_string() },
                     { "ok", f.ok },
                     { "reason", f.reason },
                     { "h", f.ok ? json(f.h) : json(nullptr) },
                     { "cvpe", f.ok ? finite_or_null(f.cvpe) : json(nullptr) },
                     { "bandwidth", selection_json(f.bandwidth) } });
  }
  json doc = { { "command", "select-family" },
               { "data", a.data },
               { "n", data.size() },
               { "kernel", std::string(to_string(cfg.kernel.kind)) },
               { "p", cfg.degree },
               { "mode", cv_mode(opt) },
               { "seed", a.common.seed },
               { "families", rows },
               { "chosen", std::string(to_string(sel.chosen)) } };
  emit_json(doc, a.out, out);
  if (failed > 0) {
    err << "condcop select-family: " << failed << " families could not be scored\n";
    return exit_partial;
  }
  return exit_ok;
}

struct PredictArgs
{
  std::string model = "m2";
  double y = 0.3;
  double h = 0.4;
  std::size_t N = 2000;
  int degree = 1;
  int alpha = 0;
  std::string kernel = "epanechnikov";
  Common common;
  std::string out;
};

int
cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream&)
{
  DgpSpec dgp;
  dgp.model = as_config("--model", [&] { return CalibrationModel::parse(a.model); });
  KernelSpec kernel;
  kernel.kind = as_config("--kernel", [&] { return kernel_from_string(a.kernel); });
  if (a.degree < 0 || a.degree > 1) {
    throw ConfigError("--p: the simulation models provide derivatives for p = 0 or 1 only");
  }
  if (a.alpha < 0 || a.alpha > a.degree) {
    throw ConfigError("--alpha: derivative order must lie in [0, p]");
  }
  if (!(a.h > 0.0)) {
    throw ConfigError("--h: bandwidth must be positive");
  }
  if (a.N < 2) {
    throw ConfigError("--N: need at least 2 observations");
  }
  if (!(a.y >= -2.0 && a.y <= 2.0)) {
    throw ConfigError("--y: evaluation point must lie in [-2, 2]");
  }
  const TrueModelPoint truth = true_model_point(dgp, a.y);
  const MultiIndex alpha{ a.alpha };
  const double N = static_cast<double>(a.N);

  json doc = { { "command", "predict" },
               { "model", dgp.model.label() },
               { "family", std::string(to_string(dgp.family)) },
               { "link", dgp.link.to_string() },
               { "kernel", std::string(to_string(kernel.kind)) },
               { "y", a.y },
               { "h", a.h },
               { "N", a.N },
               { "p", a.degree },
               { "alpha", a.alpha },
               { "seed", a.common.seed },
               { "nu", truth.nu },
               { "theta", dgp.model.theta(a.y) },
               { "density", truth.density },
               { "fisher_curvature", truth.fisher_curvature } };
  try {
    const AsymptoticPrediction pred =
      predict_bias_variance(truth, dgp.link, kernel, alpha, a.degree, a.h, a.N);
    doc["bias_available"] = true;
    doc["truth"] = pred.truth;
    doc["bias"] = pred.bias;
    doc["variance"] = pred.variance;
    doc["std_normal_scaling"] = pred.std_normal_scaling;
    const auto nu = predicted_sampling_distribution(pred, a.alpha == 0 ? SamplingTarget::Nu
                                                                      : SamplingTarget::Derivative);
    doc["sampling_distribution"] = { { "mean", nu.mean }, { "variance", nu.variance } };
    if (a.alpha == 0) {
      const auto th = predicted_sampling_distribution(pred, SamplingTarget::Theta);
      doc["theta_bias"] = pred.theta_bias;
      doc["theta_variance"] = pred.theta_variance;
      doc["theta_sampling_distribution"] = { { "mean", th.mean }, { "variance", th.variance } };
    }
  } catch (const ParityError&) {
    doc["bias_available"] = false;
    doc["variance"] = predict_variance(truth, dgp.link, kernel, alpha, a.degree, a.h, a.N);
  }
  const RateProxy rate = rate_proxy(a.h, N, a.degree, 1);
  const BandwidthRate order = optimal_bandwidth_rate(N, a.degree, 1);
  doc["rate_proxy"] = rate.value;
  doc["bandwidth_rate"] = { { "exponent", order.exponent }, { "value", order.value } };
  doc["rate_proxy_minimizer"] = rate_proxy_minimizer(N, a.degree, 1);
  emit_json(doc, a.out, out);
  return exit_ok;
}

struct SimulateArgs
{
  std::vector<std::string> models{ "m1" };
  std::vector<std::size_t> sizes{ 100, 500, 2000 };
  std::size_t R = 30;
  double h = 0.0;
  CLI::Option* h_opt = nullptr;
  CvArgs cv;
  int degree = 1;
  std::string kernel = "epanechnikov";
  std::size_t grid_points = 101;
  double trim = 0.2;
  Common common{ 0, 20240601 };
  std::string out_dir = ".";
  bool progress = false;
};

McReport
run_models(const std::vector<McConfig>& configs, bool progress, std::ostream& err)
{
  McReport report;
  bool first = true;
  for (McConfig cfg : configs) {
    if (progress) {
      cfg.progress = [&err](const std::string& line) { err << line << '\n' << std::flush; };
    }
    McReport part = run_mc(cfg);
    if (first) {
      report = std::move(part);
      first = false;
    } else {
      report.merge(part);
    }
  }
  return report;
}

void
ensure_directory(const std::string& dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create directory '" + dir + "': " + ec.message());
  }
}

int
cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err)
{
  if (a.models.empty() || a.sizes.empty()) {
    throw ConfigError("--model and --N need at least one value");
  }
  std::vector<McConfig> configs;
  for (const auto& name : a.models) {
    McConfig cfg;
    cfg.dgp.model = as_config("--model", [&] { return CalibrationModel::parse(name); });
    cfg.sample_sizes = a.sizes;
    cfg.replications = a.R;
    cfg.degree = a.degree;
    cfg.kernel.kind = as_config("--kernel", [&] { return kernel_from_string(a.kernel); });
    cfg.grid_points = a.grid_points;
    cfg.trim = a.trim;
    cfg.master_seed = a.common.seed;
    cfg.threads = a.common.threads;
    if (a.h_opt->count() > 0) {
      cfg.bandwidth.kind = BandwidthPolicy::Kind::Fixed;
      cfg.bandwidth.h = a.h;
    } else {
      cfg.bandwidth.kind = BandwidthPolicy::Kind::CrossValidated;
      if (!a.cv.h_grid.empty()) {
        cfg.bandwidth.grid = bandwidth_grid(a.cv.h_grid, "--h-grid");
      }
      cfg.bandwidth.cv = make_cv_options(a.cv, 1);
    }
    as_config("configuration", [&] {
      cfg.validate();
      return 0;
    });
    configs.push_back(std::move(cfg));
  }
  ensure_directory(a.out_dir);
  const McReport report = run_models(configs, a.progress, err);
  emit_tables(report, a.out_dir);
  out << table1_csv(report);
  return exit_ok;
}

struct ReproduceArgs
{
  std::string scale = "desk";
  bool kfold = false;
  std::size_t R = 0;
  Common common{ 0, 20240601 };
  std::string out_dir = ".";
  bool progress = false;
};

int
cmd_reproduce(const ReproduceArgs& a, std::ostream& out, std::ostream& err)
{
  if (a.scale != "desk" && a.scale != "full") {
    throw ConfigError("--scale: expected desk or full, got '" + a.scale + "'");
  }
  const auto scale = a.scale == "desk" ? acceptance::Scale::Desk : acceptance::Scale::Full;
  const std::size_t R = a.R > 0 ? a.R : acceptance::replications(scale);

  std::vector<McConfig> m1;
  std::vector<McConfig> m2;
  m1.push_back(acceptance::study_config("m1", acceptance::sample_sizes(scale, "m1"), R,
                                        a.common.seed, a.kfold, a.common.threads));
  m2.push_back(acceptance::study_config("m2", acceptance::sample_sizes(scale, "m2"), R,
                                        a.common.seed, a.kfold, a.common.threads));
  ensure_directory(a.out_dir);
  McReport r1 = run_models(m1, a.progress, err);
  const McReport r2 = run_models(m2, a.progress, err);
  const auto outcomes = acceptance::table_criteria(r1, r2, a.kfold);
  r1.merge(r2);
  emit_tables(r1, a.out_dir);

  bool pass = true;
  for (const auto& o : outcomes) {
    out << acceptance::format(o) << '\n';
    pass = pass && o.pass;
  }
  return pass ? exit_ok : exit_acceptance;
}

} // namespace

int
run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{ "Local polynomial likelihood estimation of covariate-dependent copulas", "condcop" };
  // "--h" is the bandwidth, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file ([command] sections)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_version_flag("--version", "condcop 0.1.0");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate the copula parameter curve at fixed bandwidth");
  fit_cmd->add_option("data", fit.data, "Dataset CSV with header u1,u2,y1[,y2...]")->required();
  add_model_options(*fit_cmd, fit.model, true);
  fit.h_opt = fit_cmd->add_option("--h", fit.h, "Bandwidth (see cv-bandwidth)");
  fit_cmd->add_option("--grid", fit.grid, "Evaluation grid lo:hi:count (default: data range, 101 points)");
  fit_cmd->add_option("--points", fit.points, "CSV of evaluation points, header y1[,y2...]");
  fit_cmd->add_option("--out", fit.out, "Curve CSV output path")->capture_default_str();
  fit_cmd->add_option("--summary", fit.summary, "JSON summary path (default: stdout)");
  fit_cmd->add_flag("--warm-start", fit.warm_start, "Start each point from its neighbour's fit");
  add_common_options(*fit_cmd, fit.common);

  CvBandwidthArgs cvb;
  auto* cvb_cmd = app.add_subcommand("cv-bandwidth", "Select the bandwidth by cross-validated likelihood");
  cvb_cmd->add_option("data", cvb.data, "Dataset CSV")->required();
  add_model_options(*cvb_cmd, cvb.model, true);
  add_cv_options(*cvb_cmd, cvb.cv);
  cvb_cmd->add_option("--out", cvb.out, "JSON report path (default: stdout)");
  add_common_options(*cvb_cmd, cvb.common);

  SelectFamilyArgs sf;
  auto* sf_cmd = app.add_subcommand("select-family", "Choose a copula family by cross-validated prediction error");
  sf_cmd->add_option("data", sf.data, "Dataset CSV")->required();
  add_model_options(*sf_cmd, sf.model, false);
  sf_cmd->add_option("--families", sf.families, "Candidate families")->delimiter(',')->capture_default_str();
  add_cv_options(*sf_cmd, sf.cv);
  sf_cmd->add_option("--out", sf.out, "JSON report path (default: stdout)");
  add_common_options(*sf_cmd, sf.common);

  PredictArgs pr;
  auto* pr_cmd = app.add_subcommand("predict", "Asymptotic bias, variance and rate for a simulation model");
  pr_cmd->add_option("--model", pr.model, "m1, m2 or const:<theta>")->capture_default_str();
  pr_cmd->add_option("--y", pr.y, "Evaluation point in [-2, 2]")->capture_default_str();
  pr_cmd->add_option("--h", pr.h, "Bandwidth")->capture_default_str();
  pr_cmd->add_option("--N", pr.N, "Sample size")->capture_default_str();
  pr_cmd->add_option("--p", pr.degree, "Local polynomial degree (0 or 1)")->capture_default_str();
  pr_cmd->add_option("--alpha", pr.alpha, "Derivative order of the target")->capture_default_str();
  pr_cmd->add_option("--kernel", pr.kernel, "Kernel: epanechnikov or gaussian")->capture_default_str();
  pr_cmd->add_option("--out", pr.out, "JSON report path (default: stdout)");
  add_common_options(*pr_cmd, pr.common);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study on the simulation models");
  sim_cmd->add_option("--model", sim.models, "Models: m1, m2, const:<theta>")
    ->delimiter(',')
    ->capture_default_str();
  sim_cmd->add_option("--N", sim.sizes, "Sample sizes")->delimiter(',')->capture_default_str();
  sim_cmd->add_option("--R", sim.R, "Replications per sample size")->capture_default_str();
  sim.h_opt = sim_cmd->add_option("--h", sim.h, "Fixed bandwidth (default: cross-validated)");
  add_cv_options(*sim_cmd, sim.cv);
  sim_cmd->add_option("--p", sim.degree, "Local polynomial degree")->capture_default_str();
  sim_cmd->add_option("--kernel", sim.kernel, "Kernel: epanechnikov or gaussian")->capture_default_str();
  sim_cmd->add_option("--grid-points", sim.grid_points, "Evaluation grid size on [-2, 2]")
    ->capture_default_str();
  sim_cmd->add_option("--trim", sim.trim, "Boundary trim for the uniform error")->capture_default_str();
  sim_cmd->add_option("--out-dir", sim.out_dir, "Directory for tables, curves and JSON")
    ->capture_default_str();
  sim_cmd->add_flag("--progress", sim.progress, "Report every finished replication on stderr");
  add_common_options(*sim_cmd, sim.common);

  ReproduceArgs rep;
  auto* rep_cmd = app.add_subcommand("reproduce", "Run the simulation study and check it against the reference tables");
  rep_cmd->add_option("--scale", rep.scale, "desk (R=30) or full (R=100, seven sample sizes)")
    ->capture_default_str();
  rep_cmd->add_flag("--kfold", rep.kfold, "10-fold instead of leave-one-out cross-validation");
  rep_cmd->add_option("--R", rep.R, "Override the number of replications (smoke runs)");
  rep_cmd->add_option("--out-dir", rep.out_dir, "Directory for tables, curves and JSON")
    ->capture_default_str();
  rep_cmd->add_flag("--progress", rep.progress, "Report every finished replication on stderr");
  add_common_options(*rep_cmd, rep.common);

  for (auto* cmd : app.get_subcommands({})) {
    cmd->allow_config_extras(CLI::config_extras_mode::error);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (fit_cmd->parsed()) {
      return cmd_fit(fit, out, err);
    }
    if (cvb_cmd->parsed()) {
      return cmd_cv_bandwidth(cvb, out, err);
    }
    if (sf_cmd->parsed()) {
      return cmd_select_family(sf, out, err);
    }
    if (pr_cmd->parsed()) {
      return cmd_predict(pr, out, err);
    }
    if (sim_cmd->parsed()) {
      return cmd_simulate(sim, out, err);
    }
    return cmd_reproduce(rep, out, err);
  } catch (const ConfigError& e) {
    err << "condcop: configuration error: " << e.what() << '\n';
    return exit_config;
  } catch (const InputError& e) {
    err << "condcop: data error: " << e.what() << '\n';
    return exit_data;
  } catch (const IoError& e) {
    err << "condcop: i/o error: " << e.what() << '\n';
    return exit_data;
  } catch (const Error& e) {
    err << "condcop: " << e.what() << '\n';
    return exit_partial;
  }
}

} // namespace condcop::cli
