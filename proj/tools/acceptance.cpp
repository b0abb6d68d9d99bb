#include "acceptance.hpp"

#include "condcop/stats.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace condcop::acceptance {

namespace {

const McCell*
find_cell(const McReport& report, std::size_t N)
{
  for (const auto& cell : report.cells) {
    if (cell.N == N) {
      return &cell;
    }
  }
  return nullptr;
}

std::string
num(double x)
{
  std::ostringstream os;
  os << std::setprecision(4) << std::fixed << x;
  return os.str();
}

std::vector<double>
selected_h(const McCell& cell)
{
  std::vector<double> h;
  for (const auto& r : cell.replications) {
    if (r.ok) {
      h.push_back(r.h);
    }
  }
  return h;
}

} // namespace

std::vector<std::size_t>
sample_sizes(Scale scale, const std::string& model)
{
  if (scale == Scale::Full) {
    return { 100, 200, 500, 750, 1000, 1500, 2000 };
  }
  if (model == "m1") {
    return { 100, 200, 500, 2000 };
  }
  return { 100, 500, 2000 };
}

std::size_t
replications(Scale scale)
{
  return scale == Scale::Full ? 100 : 30;
}

McConfig
study_config(const std::string& model,
             std::vector<std::size_t> sizes,
             std::size_t R,
             std::uint64_t master_seed,
             bool kfold,
             int threads)
{
  McConfig cfg;
  cfg.dgp.model = CalibrationModel::parse(model);
  cfg.sample_sizes = std::move(sizes);
  cfg.replications = R;
  cfg.master_seed = master_seed;
  cfg.threads = threads;
  cfg.bandwidth.kind = BandwidthPolicy::Kind::CrossValidated;
  if (kfold) {
    cfg.bandwidth.cv.mode = CvOptions::Mode::KFold;
    cfg.bandwidth.cv.folds = 10;
  }
  return cfg;
}

std::vector<Outcome>
table_criteria(const McReport& m1, const McReport& m2, bool kfold)
{
  std::vector<Outcome> out;

  {
    Outcome c{ 1, "M1 sup_mean at N=100,500,2000 and strictly decreasing", true, "" };
    const double tol = kfold ? 0.30 : 0.25;
    const std::size_t sizes[] = { 100, 500, 2000 };
    const double target[] = { 2.4138, 0.9964, 0.5752 };
    std::ostringstream detail;
    double previous = INFINITY;
    for (int k = 0; k < 3; ++k) {
      const McCell* cell = find_cell(m1, sizes[k]);
      if (cell == nullptr) {
        c.pass = false;
        detail << "N=" << sizes[k] << " missing; ";
        continue;
      }
      const double s = cell->aggregates.sup_mean;
      const bool near = std::abs(s - target[k]) <= tol;
      c.pass = c.pass && near && s < previous;
      detail << "N=" << sizes[k] << " " << num(s) << " (target " << num(target[k]) << " +-" << tol
             << (near ? "" : ", outside") << "); ";
      previous = s;
    }
    c.detail = detail.str();
    out.push_back(std::move(c));
  }

  {
    Outcome c{ 2, "sup_mean/rate_mean at N=2000 (M1 in [0.70,1.25], M2 in [0.45,0.95])", true, "" };
    std::ostringstream detail;
    const McCell* a = find_cell(m1, 2000);
    const McCell* b = find_cell(m2, 2000);
    if (a == nullptr || b == nullptr) {
      c.pass = false;
      detail << "N=2000 cell missing";
    } else {
      const double r1 = a->aggregates.sup_over_rate;
      const double r2 = b->aggregates.sup_over_rate;
      c.pass = r1 >= 0.70 && r1 <= 1.25 && r2 >= 0.45 && r2 <= 0.95;
      detail << "M1 " << num(r1) << ", M2 " << num(r2);
    }
    c.detail = detail.str();
    out.push_back(std::move(c));
  }

  {
    Outcome c{ 3, "M1 mean CV bandwidth at N=2000 within 0.20 of 0.6939; median h(2000) < median h(200)",
               true, "" };
    std::ostringstream detail;
    const McCell* big = find_cell(m1, 2000);
    const McCell* small = find_cell(m1, 200);
    if (big == nullptr || small == nullptr) {
      c.pass = false;
      detail << "N=200 or N=2000 cell missing";
    } else {
      const double mean = big->aggregates.h_mean;
      const double med_big = stats::median(selected_h(*big));
      const double med_small = stats::median(selected_h(*small));
      c.pass = std::abs(mean - 0.6939) <= 0.20 && med_big < med_small;
      detail << "h_mean " << num(mean) << ", median h N=2000 " << num(med_big) << " vs N=200 "
             << num(med_small);
    }
    c.detail = detail.str();
    out.push_back(std::move(c));
  }
  return out;
}

std::string
format(const Outcome& outcome)
{
  std::ostringstream os;
  os << (outcome.pass ? "PASS" : "FAIL") << " [" << outcome.id << "] " << outcome.title;
  if (!outcome.detail.empty()) {
    os << ": " << outcome.detail;
  }
  return os.str();
}

} // namespace condcop::acceptance
