#include "support.hpp"

#include "condcop/errors.hpp"
#include "condcop/simulation.hpp"
#include "condcop/stats.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace condcop;
using testing::vec;

namespace {

McConfig
fixed_config(double h, std::size_t R, std::vector<std::size_t> sizes)
{
  McConfig cfg;
  cfg.replications = R;
  cfg.sample_sizes = std::move(sizes);
  cfg.bandwidth.kind = BandwidthPolicy::Kind::Fixed;
  cfg.bandwidth.h = h;
  cfg.grid_points = 41;
  return cfg;
}

CurveEstimate
curve_from(const std::vector<double>& ys, const std::function<double(double)>& theta)
{
  CurveEstimate c;
  for (double y : ys) {
    c.grid.push_back(vec({ y }));
    LocalFit f;
    f.theta_hat = theta(y);
    c.fits.push_back(f);
  }
  return c;
}

std::vector<std::vector<std::string>>
read_csv(const std::string& text)
{
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      row.push_back(cell);
    }
    rows.push_back(row);
  }
  return rows;
}

} // namespace

TEST_CASE("calibration curves")
{
  const auto m1 = CalibrationModel::m1();
  const auto m2 = CalibrationModel::m2();
  CHECK(true_theta(m1, 0.0) == 5.0);
  CHECK(true_theta(m1, 2.0) == 1.0);
  CHECK(true_theta(m1, -2.0) == 1.0);
  CHECK(true_theta(m2, 0.0) == doctest::Approx(3.0 + (5.0 / 6.0) * (1.0 - std::exp(-4.0))).epsilon(1e-15));
  CHECK(true_theta(m2, 0.0) == doctest::Approx(3.81807).epsilon(1e-6));
  CHECK_THROWS_AS(true_theta(m1, 2.0 + 1e-12), DomainError);
  CHECK_THROWS_AS(true_theta(m2, -3.0), DomainError);
  CHECK(CalibrationModel::constant_theta(2.5).theta(1.0) == 2.5);
  CHECK(CalibrationModel::parse("const:2.5").theta(0.0) == 2.5);
  CHECK(CalibrationModel::parse("M2").label() == "M2");
  CHECK_THROWS_AS(CalibrationModel::parse("m3"), DomainError);

  const auto link = LinkFunction::scaled_logistic(1.0, 5.0);
  const auto custom = CalibrationModel::custom("c", [](double y) { return 0.5 * y; }, link);
  CHECK(custom.theta(0.4) == doctest::Approx(link.inverse(0.2)).epsilon(1e-15));

  for (const auto& m : { m1, m2, custom }) {
    for (double y : { -1.7, -0.3, 0.0, 0.8, 1.9 }) {
      const double e = 1e-5;
      CHECK(m.theta_d1(y) == doctest::Approx((m.theta(y + e) - m.theta(y - e)) / (2 * e)).epsilon(1e-6));
      CHECK(m.theta_d2(y) == doctest::Approx((m.theta_d1(y + e) - m.theta_d1(y - e)) / (2 * e)).epsilon(1e-4));
    }
  }
  // M2 stays inside the link range and touches its lower end at y = -2;
  // M1 touches the upper end at y = 0.
  for (double y = -1.99; y <= 2.0; y += 0.01) {
    CHECK(m2.theta(y) > 1.0);
    CHECK(m2.theta(y) < 5.0);
  }
  CHECK(m2.theta(-2.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("truncated normal covariate")
{
  const TruncatedNormal tn;
  Rng rng(17);
  const std::size_t n = 100000;
  std::vector<double> y(n);
  std::vector<double> u(n);
  const double pa = normal_cdf(-1.0);
  const double pb = normal_cdf(1.0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = tn.sample(rng);
    REQUIRE(y[i] >= -2.0);
    REQUIRE(y[i] <= 2.0);
    u[i] = (normal_cdf(y[i] / 2.0) - pa) / (pb - pa);
  }
  CHECK(std::abs(stats::mean(y)) <= 3.0 * stats::sd(y) / std::sqrt(static_cast<double>(n)));
  CHECK(stats::ks_uniform(u) < 1.6276 / std::sqrt(static_cast<double>(n)));
  CHECK(integrate_adaptive([&](double x) { return tn.pdf(x); }, -2.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tn.pdf(2.5) == 0.0);
}

TEST_CASE("generated data")
{
  DgpSpec dgp;
  dgp.N = 300;
  dgp.seed = 5;
  const auto a = generate(dgp);
  const auto b = generate(dgp);
  CHECK(a.U == b.U);
  CHECK(a.Y == b.Y);
  CHECK_NOTHROW(a.validate());
  dgp.seed = 6;
  CHECK(generate(dgp).U != a.U);

  // Kendall tau in a thin bin around y = 0 matches theta = 5.
  dgp.N = 100000;
  dgp.seed = 11;
  const auto big = generate(dgp);
  std::vector<double> u1;
  std::vector<double> u2;
  for (Eigen::Index i = 0; i < big.U.rows(); ++i) {
    if (std::abs(big.Y(i, 0)) < 0.05) {
      u1.push_back(big.U(i, 0));
      u2.push_back(big.U(i, 1));
    }
  }
  REQUIRE(u1.size() >= 2000);
  CHECK(std::abs(stats::kendall_tau(u1, u2) - make_family(FamilyId::Frank)->kendall_tau(5.0)) <= 0.05);

  const auto tp = true_model_point(DgpSpec{}, 0.5);
  CHECK(tp.nu == doctest::Approx(LinkFunction::scaled_logistic(1.0, 5.0).forward(4.75)).epsilon(1e-14));
  CHECK(tp.density == doctest::Approx(TruncatedNormal{}.pdf(0.5)).epsilon(1e-15));
}

TEST_CASE("uniform error over the trimmed grid")
{
  const auto m1 = CalibrationModel::m1();
  const auto grid = [] {
    std::vector<double> g;
    for (int k = 0; k <= 40; ++k) {
      g.push_back(-2.0 + 0.1 * k);
    }
    return g;
  }();
  CHECK(sup_error(curve_from(grid, [&](double y) { return m1.theta(y); }), m1, 0.2) == 0.0);
  CHECK(sup_error(curve_from(grid, [&](double y) { return m1.theta(y) + 0.3; }), m1, 0.2) ==
        doctest::Approx(0.3).epsilon(1e-12));

  // Closed interval: the point -1.8 counts, a point just outside does not.
  const auto edge = curve_from({ -1.8, 0.0 }, [&](double y) { return y < -1.0 ? m1.theta(y) + 1.0 : m1.theta(y); });
  CHECK(sup_error(edge, m1, 0.2) == doctest::Approx(1.0).epsilon(1e-12));
  const auto outside =
    curve_from({ -1.8 - 1e-9, 0.0 }, [&](double y) { return y < -1.0 ? m1.theta(y) + 1.0 : m1.theta(y); });
  CHECK(sup_error(outside, m1, 0.2) == 0.0);

  auto failed = curve_from({ 0.0, 0.5 }, [&](double y) { return m1.theta(y); });
  failed.fits[1].theta_hat = std::nan("");
  CHECK(std::isinf(sup_error(failed, m1, 0.2)));
  CHECK_THROWS_AS(sup_error(curve_from({ -1.95, 1.95 }, [](double) { return 3.0; }), m1, 0.2), EmptyTrimmedGrid);
}

TEST_CASE("Monte Carlo with a fixed bandwidth")
{
  auto cfg = fixed_config(0.5, 3, { 200, 400 });
  const auto report = run_mc(cfg);
  REQUIRE(report.cells.size() == 2);
  for (const auto& cell : report.cells) {
    CHECK(cell.model == "M1");
    REQUIRE(cell.replications.size() == 3);
    CHECK(cell.grid.size() == 41);
    for (const auto& r : cell.replications) {
      CHECK(r.ok);
      CHECK(r.h == 0.5);
      CHECK(r.rate_proxy == rate_proxy(0.5, static_cast<double>(cell.N), 1, 1).value);
      CHECK(r.theta_hat.size() == 41);
      // theta(0) = 5 is the upper link bound, so fits near y = 0 have no
      // interior maximizer and are reported unconverged.
      CHECK(r.convergence_fraction > 0.5);
      CHECK(r.convergence_fraction < 1.0);
    }
    // aggregates recompute from the replication records
    std::vector<double> sup;
    for (const auto& r : cell.replications) {
      sup.push_back(r.sup_error);
    }
    CHECK(cell.aggregates.sup_mean == stats::mean(sup));
    CHECK(cell.aggregates.sup_sd == stats::sd(sup));
    CHECK(cell.aggregates.rate_sd == 0.0);
    CHECK(cell.aggregates.sup_over_rate * cell.aggregates.rate_over_sup == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("one replication")
  {
    auto one = fixed_config(0.5, 1, { 200 });
    const auto rep = run_mc(one);
    const auto& a = rep.cells[0].aggregates;
    const auto& r = rep.cells[0].replications[0];
    CHECK(a.sup_mean == r.sup_error);
    CHECK(a.sup_median == r.sup_error);
    CHECK(a.h_mean == r.h);
    CHECK(std::isnan(a.sup_sd));
    CHECK(std::isnan(a.h_sd));
    // the same (N, r) pair reproduces the cell above
    CHECK(r.theta_hat == report.cells[0].replications[0].theta_hat);
  }
  SUBCASE("thread count does not change the report")
  {
    auto par = cfg;
    par.threads = 3;
    CHECK(report_json(run_mc(par)) == report_json(report));
  }
  SUBCASE("configuration errors")
  {
    auto bad = cfg;
    bad.replications = 0;
    CHECK_THROWS_AS(run_mc(bad), DomainError);
    bad = cfg;
    bad.grid_points = 1;
    CHECK_THROWS_AS(run_mc(bad), DomainError);
    bad = cfg;
    bad.trim = -0.1;
    CHECK_THROWS_AS(run_mc(bad), DomainError);
  }
}

TEST_CASE("tables and their serialization")
{
  auto cfg = fixed_config(0.6, 4, { 150, 300 });
  cfg.dgp.model = CalibrationModel::m2();
  const auto report = run_mc(cfg);

  const auto t1 = read_csv(table1_csv(report));
  REQUIRE(t1.size() == 3);
  CHECK(t1[0] == std::vector<std::string>{ "model", "N", "sup_mean", "sup_sd", "sup_median", "rate_mean", "rate_sd", "rate_median" });
  CHECK(std::stod(t1[1][2]) == report.cells[0].aggregates.sup_mean);
  CHECK(t1[2][1] == "300");

  const auto t2 = read_csv(table2_csv(report));
  CHECK(t2[0] == std::vector<std::string>{ "model", "N", "sup_mean_over_rate_mean", "rate_mean_over_sup_mean" });
  for (std::size_t k = 1; k < t2.size(); ++k) {
    CHECK(std::stod(t2[k][2]) * std::stod(t2[k][3]) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto t3 = read_csv(table3_csv(report));
  CHECK(t3[0] == std::vector<std::string>{ "model", "N", "h_mean", "h_sd", "h_median", "h_min", "h_max" });

  // Recompute every aggregate from the per-replication JSON records.
  const auto root = nlohmann::json::parse(report_json(report));
  CHECK(root["master_seed"] == 20240601);
  for (const auto& cell : root["cells"]) {
    std::vector<Replication> reps;
    for (const auto& r : cell["replications"]) {
      Replication x;
      x.ok = r["ok"];
      x.sup_error = r["sup_error"];
      x.rate_proxy = r["rate_proxy"];
      x.h = r["h"];
      reps.push_back(x);
    }
    const auto a = aggregate(reps);
    const auto& j = cell["aggregates"];
    CHECK(a.sup_mean == doctest::Approx(j["sup_mean"].get<double>()).epsilon(1e-12));
    CHECK(a.sup_median == doctest::Approx(j["sup_median"].get<double>()).epsilon(1e-12));
    CHECK(a.rate_mean == doctest::Approx(j["rate_mean"].get<double>()).epsilon(1e-12));
    CHECK(a.h_max == doctest::Approx(j["h_max"].get<double>()).epsilon(1e-12));
    CHECK(cell["curve"].size() == 41);
  }

  const auto curve = read_csv(curve_csv(report.cells[1]));
  CHECK(curve[0] == std::vector<std::string>{ "y", "theta_true", "theta_mean", "theta_q025", "theta_q975" });
  CHECK(curve.size() == 42);

  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "condcop_test_tables";
  fs::remove_all(dir);
  const auto written = emit_tables(report, dir.string());
  CHECK(written.size() == 3 + 2 + 1);
  for (const auto& path : written) {
    CHECK(fs::exists(path));
  }
  std::ifstream in(dir / "table1.csv");
  std::stringstream text;
  text << in.rdbuf();
  CHECK(text.str() == table1_csv(report));
  CHECK(fs::exists(dir / "curve_M2_N300_seed20240601.csv"));

  const auto blocker = dir / "table1.csv";
  CHECK_THROWS_AS(emit_tables(report, (blocker / "sub").string()), IoError);
  CHECK_THROWS_AS(emit_tables(McReport{}, dir.string()), DomainError);
}

TEST_CASE("Monte Carlo band covers the true curve")
{
  McConfig cfg;
  cfg.replications = 100;
  cfg.sample_sizes = { 500 };
  const auto report = run_mc(cfg);
  const auto& cell = report.cells[0];
  std::size_t inside = 0;
  std::size_t interior = 0;
  for (std::size_t k = 0; k < cell.grid.size(); ++k) {
    if (std::abs(cell.grid[k]) > 2.0 - cfg.trim) {
      continue;
    }
    std::vector<double> at;
    for (const auto& r : cell.replications) {
      if (r.ok) {
        at.push_back(r.theta_hat[k]);
      }
    }
    ++interior;
    const double lo = stats::quantile(at, 0.025);
    const double hi = stats::quantile(at, 0.975);
    inside += (lo <= cell.theta_true[k] && cell.theta_true[k] <= hi) ? 1 : 0;
  }
  MESSAGE("band contains the truth at ", inside, " of ", interior, " interior points");
  CHECK(static_cast<double>(inside) >= 0.8 * static_cast<double>(interior));
}
