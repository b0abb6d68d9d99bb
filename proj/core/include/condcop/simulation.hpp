#pragma once

#include "condcop/asymptotics.hpp"
#include "condcop/local_likelihood.hpp"
#include "condcop/tuning.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace condcop {

//! Covariate law: normal(mean, sd) truncated to [lower, upper].
struct TruncatedNormal
{
  double mean = 0.0;
  double sd = 2.0;
  double lower = -2.0;
  double upper = 2.0;

  //! Inverse-CDF draw restricted to the truncation quantiles; one uniform.
  double sample(Rng& rng) const;
  double pdf(double y) const;
};

//! Copula-parameter curve on the covariate support.
class CalibrationModel
{
public:
  enum class Kind
  {
    M1,
    M2,
    ConstantTheta,
    Custom
  };

  static CalibrationModel m1();
  static CalibrationModel m2();
  static CalibrationModel constant_theta(double theta);
  //! nu(y) supplied directly; theta(y) = link^{-1}(nu(y)).
  static CalibrationModel custom(std::string label,
                                 std::function<double(double)> nu,
                                 LinkFunction link);
  //! "m1", "m2" or "const:<theta>".
  static CalibrationModel parse(std::string_view text);

  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }

  //! Throws DomainError for y outside [-2, 2].
  double theta(double y) const;
  //! theta'(y) and theta''(y).
  double theta_d1(double y) const;
  double theta_d2(double y) const;

private:
  Kind kind_ = Kind::M1;
  std::string label_ = "M1";
  double constant_ = 0.0;
  std::function<double(double)> nu_;
  LinkFunction link_;
};

double
true_theta(const CalibrationModel& model, double y);

struct DgpSpec
{
  CalibrationModel model = CalibrationModel::m1();
  TruncatedNormal covariate;
  FamilyId family = FamilyId::Frank;
  LinkFunction link = LinkFunction::scaled_logistic(1.0, 5.0);
  std::size_t N = 500;
  std::uint64_t seed = 1;
};

//! Draws Y_i, then (U_1i, U_2i) from the family at theta(Y_i); one stream.
Dataset
generate(const DgpSpec& dgp);

//! nu = psi(theta(y)) with its first two derivatives in y, the covariate
//! density and the Fisher curvature at theta(y), for s = 1 and p <= 1.
TrueModelPoint
true_model_point(const DgpSpec& dgp, double y);

//! Largest |theta_hat - theta| over grid points inside [-2 + trim, 2 - trim]
//! (closed). Failed points give +inf. Throws EmptyTrimmedGrid.
double
sup_error(const CurveEstimate& curve, const CalibrationModel& model, double trim);

struct BandwidthPolicy
{
  enum class Kind
  {
    CrossValidated,
    Fixed
  };
  Kind kind = Kind::CrossValidated;
  std::vector<double> grid; //!< empty: default grid from the data
  double h = 0.5;           //!< used when Fixed
  CvOptions cv;
};

struct McConfig
{
  DgpSpec dgp;
  std::size_t replications = 30;
  std::vector<std::size_t> sample_sizes{ 100, 500, 2000 };
  int degree = 1;
  KernelSpec kernel;
  BandwidthPolicy bandwidth;
  std::size_t grid_points = 101;
  double trim = 0.2;
  std::uint64_t master_seed = 20240601;
  int threads = 1;
  //! Called after every finished replication (from worker threads, serialized).
  std::function<void(const std::string&)> progress;

  void validate() const;
};

struct Replication
{
  std::size_t r = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string failure;
  double sup_error = 0.0;
  double rate_proxy = 0.0;
  double h = 0.0;
  double convergence_fraction = 0.0;
  std::vector<double> theta_hat; //!< on the evaluation grid
};

struct CellAggregates
{
  std::size_t used = 0;
  double sup_mean = 0, sup_sd = 0, sup_median = 0;
  double rate_mean = 0, rate_sd = 0, rate_median = 0;
  double h_mean = 0, h_sd = 0, h_median = 0, h_min = 0, h_max = 0;
  double sup_over_rate = 0, rate_over_sup = 0;
};

struct McCell
{
  std::string model;
  std::size_t N = 0;
  std::vector<Replication> replications;
  CellAggregates aggregates;
  std::vector<double> grid;
  std::vector<double> theta_true;
};

struct McReport
{
  std::uint64_t master_seed = 0;
  std::size_t replications = 0;
  int degree = 1;
  std::string kernel;
  std::string link;
  std::string family;
  std::string bandwidth_policy;
  double trim = 0.2;
  std::vector<McCell> cells;

  //! Appends the cells of another report (same settings assumed).
  void merge(const McReport& other);
};

//! Aggregates over the successful replications of a cell.
CellAggregates
aggregate(const std::vector<Replication>& reps);

//! One replication of one (model, N) cell.
Replication
run_replication(const McConfig& cfg, std::size_t N, std::size_t r);

//! Runs every (N, r) pair of the configuration. Throws ConvergenceError if
//! more than half of the replications of any cell fail.
McReport
run_mc(const McConfig& cfg);

//! Writes table1.csv, table2.csv, table3.csv, one curve CSV per cell and a
//! JSON mirror into `directory`. Returns the paths written.
std::vector<std::string>
emit_tables(const McReport& report, const std::string& directory);

std::string
table1_csv(const McReport& report);
std::string
table2_csv(const McReport& report);
std::string
table3_csv(const McReport& report);
//! y, truth, MC mean of theta_hat, 2.5% and 97.5% MC quantiles.
std::string
curve_csv(const McCell& cell);
std::string
report_json(const McReport& report);

} // namespace condcop
