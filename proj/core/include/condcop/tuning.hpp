#pragma once

#include "condcop/local_likelihood.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace condcop {

struct CvOptions
{
  enum class Mode
  {
    Exact, //!< leave-one-out, one refit per row
    KFold  //!< k-fold approximation for large N
  };
  Mode mode = Mode::Exact;
  int folds = 10;
  //! Log-density imputed for a row whose held-out fit fails. Unset means a
  //! single failed row marks the whole candidate bandwidth as failed.
  std::optional<double> failure_penalty;
  //! Golden-section refinement between the neighbours of the grid argmax.
  bool refine = false;
  int refine_steps = 12;
  //! Candidates above this are discarded.
  std::optional<double> max_h;
  int threads = 1;
};

//! Held-out predictions for every row at one bandwidth.
struct HeldOut
{
  double h = 0.0;
  std::vector<double> theta;       //!< NaN where the fit failed
  std::vector<double> log_density; //!< NaN where the fit failed
  std::size_t failed_rows = 0;
  std::string first_failure;
};

HeldOut
held_out_fits(const Dataset& data, const FitConfig& cfg, double h, const CvOptions& options = {});

struct CvlValue
{
  double value = 0.0; //!< -inf if the candidate failed
  std::size_t failed_rows = 0;
  bool ok = true;
  std::string failure;
};

CvlValue
cvl_detail(const Dataset& data, const FitConfig& cfg, double h, const CvOptions& options = {});

//! Cross-validated local likelihood sum_i log c(U_i | theta_{h,-i}(Y_i)).
//! The bandwidth in `cfg` is ignored. Throws AllFitsFailed if no row could
//! be fitted, or if any row failed and no penalty is configured.
double
cvl(const Dataset& data, const FitConfig& cfg, double h, const CvOptions& options = {});

struct BandwidthSelection
{
  std::vector<double> candidates;
  std::vector<double> cvl_values;
  std::vector<std::string> failures; //!< empty string for successful candidates
  double h_cv = 0.0;
  bool refined = false;
};

//! Throws AllCandidatesFailed if no candidate yields a finite criterion.
BandwidthSelection
select_bandwidth(const Dataset& data,
                 const FitConfig& cfg,
                 std::vector<double> grid,
                 const CvOptions& options = {});

//! `count` log-spaced values on [0.1, 1.0] times the widest covariate range.
std::vector<double>
default_bandwidth_grid(const Dataset& data, std::size_t count = 16);

std::vector<double>
log_spaced(double lower, double upper, std::size_t count);

//! E[U_1 | U_2 = given] = 1 - int_0^1 h(u, given | theta) du by
//! Gauss-Legendre on panels graded toward 0 and 1.
double
conditional_prediction(const CopulaFamily& family, double given, double theta);

//! Link mapping R onto each built-in family's full parameter space.
LinkFunction
canonical_link(FamilyId id);

struct FamilyScore
{
  FamilyId family = FamilyId::Frank;
  bool ok = false;
  std::string reason;
  double h = 0.0;
  double cvpe = 0.0;
  BandwidthSelection bandwidth;
};

struct FamilySelection
{
  std::vector<FamilyScore> per_family;
  FamilyId chosen = FamilyId::Frank;
};

//! Selects among `candidates` by cross-validated prediction error. Each
//! family uses its canonical link unless `link_override` is set. Throws
//! AllCandidatesFailed if every family fails.
FamilySelection
select_family(const Dataset& data,
              const FitConfig& cfg,
              const std::vector<FamilyId>& candidates,
              const std::vector<double>& bandwidth_grid,
              const CvOptions& options = {},
              const std::optional<LinkFunction>& link_override = std::nullopt);

//! CVPE for a fixed family and bandwidth.
double
cvpe(const Dataset& data, const FitConfig& cfg, double h, const CvOptions& options = {});

} // namespace condcop
