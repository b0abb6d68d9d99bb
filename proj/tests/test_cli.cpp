#include "cli.hpp"

#include "condcop/dataset.hpp"
#include "condcop/simulation.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace condcop;

namespace {

struct Result
{
  int code = -1;
  std::string out;
  std::string err;
};

Result
invoke(std::vector<std::string> args)
{
  args.insert(args.begin(), "condcop");
  std::vector<const char*> argv;
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  std::ostringstream out;
  std::ostringstream err;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string
slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t
line_count(const std::string& text)
{
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

//! Fresh working directory with a small Model M1 dataset.
fs::path
workdir(const std::string& name)
{
  const fs::path dir = fs::path(CONDCOP_TEST_WORKDIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  DgpSpec dgp;
  dgp.N = 200;
  dgp.seed = 3;
  std::ofstream out(dir / "data.csv");
  write_dataset_csv(generate(dgp), out);
  return dir;
}

} // namespace

TEST_CASE("usage errors exit with code 2")
{
  CHECK(invoke({}).code == cli::exit_config);
  CHECK(invoke({ "nonsense" }).code == cli::exit_config);
  CHECK(invoke({ "fit", "x.csv", "--h", "0.5", "--bogus" }).code == cli::exit_config);
  const auto missing_h = invoke({ "fit", "x.csv" });
  CHECK(missing_h.code == cli::exit_config);
  CHECK(missing_h.err.find("cv-bandwidth") != std::string::npos);
  CHECK(invoke({ "fit", "x.csv", "--h", "abc" }).code == cli::exit_config);
  CHECK(invoke({ "reproduce", "--scale", "huge" }).code == cli::exit_config);
  CHECK(invoke({ "--help" }).code == cli::exit_ok);
  CHECK(invoke({ "--version" }).code == cli::exit_ok);
}

TEST_CASE("fit writes a curve and a summary")
{
  const auto dir = workdir("fit");
  const auto data = (dir / "data.csv").string();
  const auto curve = (dir / "curve.csv").string();
  const auto r = invoke({ "fit", data, "--h", "0.8", "--grid=-1.8:1.8:101", "--out", curve });
  REQUIRE(r.code == cli::exit_ok);
  const auto text = slurp(curve);
  CHECK(line_count(text) == 102);
  const auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["points"] == 101);
  CHECK(summary["failed_points"] == 0);

  // Identical runs give identical bytes.
  const auto again = (dir / "again.csv").string();
  CHECK(invoke({ "fit", data, "--h", "0.8", "--grid=-1.8:1.8:101", "--out", again }).code == cli::exit_ok);
  CHECK(slurp(again) == text);

  SUBCASE("missing and malformed data")
  {
    CHECK(invoke({ "fit", (dir / "absent.csv").string(), "--h", "0.8" }).code == cli::exit_data);
    std::ofstream(dir / "bad.csv") << "u1,u2,y1\n0.5,1.5,0\n";
    CHECK(invoke({ "fit", (dir / "bad.csv").string(), "--h", "0.8" }).code == cli::exit_data);
  }
  SUBCASE("points outside the data give a partial result")
  {
    const auto p = invoke({ "fit", data, "--h", "0.3", "--grid=-1:9:3", "--out", (dir / "partial.csv").string() });
    CHECK(p.code == cli::exit_partial);
    CHECK(slurp(dir / "partial.csv").find("NA") != std::string::npos);
  }
  SUBCASE("options from a config file, flags winning")
  {
    std::ofstream(dir / "run.toml") << "[fit]\nh = 0.8\ngrid = \"-1.8:1.8:11\"\n";
    const auto c = invoke({ "--config", (dir / "run.toml").string(), "fit", data, "--out", (dir / "cfg.csv").string() });
    CHECK(c.code == cli::exit_ok);
    CHECK(line_count(slurp(dir / "cfg.csv")) == 12);
    const auto f = invoke({ "--config", (dir / "run.toml").string(), "fit", data, "--grid=-1:1:5", "--out",
                            (dir / "cfg2.csv").string() });
    CHECK(f.code == cli::exit_ok);
    CHECK(line_count(slurp(dir / "cfg2.csv")) == 6);

    std::ofstream(dir / "typo.toml") << "[fit]\nh = 0.8\nbandwdith = 3\n";
    const auto t = invoke({ "--config", (dir / "typo.toml").string(), "fit", data });
    CHECK(t.code == cli::exit_config);
    CHECK(t.err.find("bandwdith") != std::string::npos);
  }
}

TEST_CASE("bandwidth and family selection")
{
  const auto dir = workdir("select");
  const auto data = (dir / "data.csv").string();
  const auto cv = invoke({ "cv-bandwidth", data, "--h-grid", "0.5,1.0,2.0" });
  REQUIRE(cv.code == cli::exit_ok);
  const auto j = nlohmann::json::parse(cv.out);
  const double h = j["h_cv"];
  CHECK((h == 0.5 || h == 1.0 || h == 2.0));
  CHECK(j["candidates"].size() == 3);

  const auto sf = invoke({ "select-family", data, "--h-grid", "0.8,1.6" });
  REQUIRE(sf.code == cli::exit_ok);
  const auto s = nlohmann::json::parse(sf.out);
  CHECK(s["families"].size() == 3);
  for (const auto& f : s["families"]) {
    if (f["ok"]) {
      CHECK(std::isfinite(f["cvpe"].get<double>()));
    }
  }
  CHECK(s.contains("chosen"));
}

TEST_CASE("asymptotic predictions")
{
  const auto r = invoke({ "predict", "--model", "m2", "--y", "0.3", "--h", "0.4", "--N", "2000" });
  REQUIRE(r.code == cli::exit_ok);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["bias_available"] == true);
  CHECK(j["variance"].get<double>() > 0.0);
  CHECK(j["rate_proxy"].get<double>() > 0.0);
  const auto even = invoke({ "predict", "--p", "0" });
  REQUIRE(even.code == cli::exit_ok);
  CHECK(nlohmann::json::parse(even.out)["bias_available"] == false);
  CHECK(invoke({ "predict", "--y", "3" }).code != cli::exit_ok);
}

TEST_CASE("simulation is reproducible")
{
  const auto dir = workdir("simulate");
  const auto a = dir / "a";
  const auto b = dir / "b";
  const std::vector<std::string> common{ "simulate", "--model", "m1", "--N", "150", "--R", "2", "--h", "0.7" };
  auto args = common;
  args.insert(args.end(), { "--out-dir", a.string() });
  const auto ra = invoke(args);
  REQUIRE(ra.code == cli::exit_ok);
  args = common;
  args.insert(args.end(), { "--out-dir", b.string(), "--threads", "2" });
  REQUIRE(invoke(args).code == cli::exit_ok);
  for (const auto& name : { "table1.csv", "table2.csv", "table3.csv", "report_seed20240601.json" }) {
    CHECK(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  CHECK(ra.out.find("sup_mean") != std::string::npos);
}

TEST_CASE("reproduce writes the three tables")
{
  const auto dir = workdir("reproduce");
  const auto r = invoke({ "reproduce", "--R", "1", "--kfold", "--out-dir", dir.string() });
  CHECK((r.code == cli::exit_ok || r.code == cli::exit_acceptance));
  for (const auto& name : { "table1.csv", "table2.csv", "table3.csv" }) {
    CHECK(fs::exists(dir / name));
  }
  CHECK(r.out.find("[1]") != std::string::npos);
  CHECK(r.out.find("[3]") != std::string::npos);
}
