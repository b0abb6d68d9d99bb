#pragma once

#include "condcop/simulation.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace condcop::acceptance {

struct Outcome
{
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
};

enum class Scale
{
  Desk,
  Full
};

//! Sample sizes simulated for each model at the given scale. Desk scale adds
//! N = 200 for M1 because the bandwidth criterion compares it with N = 2000.
std::vector<std::size_t>
sample_sizes(Scale scale, const std::string& model);

std::size_t
replications(Scale scale);

//! Monte Carlo configuration of the simulation study for one model:
//! Frank family, scaled_logistic(1,5) link, p = 1, Epanechnikov kernel,
//! cross-validated bandwidths on the default grid.
McConfig
study_config(const std::string& model,
             std::vector<std::size_t> sample_sizes,
             std::size_t replications,
             std::uint64_t master_seed,
             bool kfold,
             int threads);

//! Criteria 1 to 3 (error level, error/rate ratio, bandwidth behaviour)
//! evaluated on the M1 and M2 reports. Cells that are missing make the
//! corresponding criterion fail with an explanatory detail.
std::vector<Outcome>
table_criteria(const McReport& m1, const McReport& m2, bool kfold);

//! "PASS [1] title: detail" / "FAIL [1] ...".
std::string
format(const Outcome& outcome);

} // namespace condcop::acceptance
