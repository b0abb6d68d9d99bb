#include "condcop/dataset.hpp"

#include "condcop/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string_view>
#include <vector>

namespace condcop {

void
Dataset::validate() const
{
  if (U.rows() < 1) {
    throw DataError("dataset must contain at least one row");
  }
  if (U.cols() != 2) {
    throw DataError("dataset must have exactly two pseudo-observation columns");
  }
  if (Y.rows() != U.rows()) {
    throw DataError("pseudo-observation and covariate row counts differ");
  }
  if (Y.cols() < 1) {
    throw DataError("dataset must have at least one covariate column");
  }
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    for (Eigen::Index k = 0; k < U.cols(); ++k) {
      const double u = U(i, k);
      if (!(u > 0.0 && u < 1.0)) {
        std::ostringstream msg;
        msg << "row " << i + 1 << ": u" << k + 1 << " = " << u
            << " is not strictly inside (0,1)";
        throw DataError(msg.str());
      }
    }
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
      if (!std::isfinite(Y(i, j))) {
        throw DataError("row " + std::to_string(i + 1) + ": non-finite covariate");
      }
    }
  }
}

Dataset
Dataset::without_row(std::size_t i) const
{
  const auto n = U.rows();
  const auto r = static_cast<Eigen::Index>(i);
  Dataset out;
  out.U.resize(n - 1, U.cols());
  out.Y.resize(n - 1, Y.cols());
  out.U.topRows(r) = U.topRows(r);
  out.Y.topRows(r) = Y.topRows(r);
  out.U.bottomRows(n - r - 1) = U.bottomRows(n - r - 1);
  out.Y.bottomRows(n - r - 1) = Y.bottomRows(n - r - 1);
  return out;
}

namespace {

std::vector<std::string_view>
split_fields(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                   : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
      field.remove_prefix(1);
    }
    while (!field.empty() &&
           (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    out.push_back(field);
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

} // namespace

Dataset
parse_dataset_csv(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("empty dataset file");
  }
  const auto header = split_fields(line);
  if (header.size() < 3 || header[0] != "u1" || header[1] != "u2") {
    throw DataError("header must start with u1,u2 followed by y1..ys");
  }
  const std::size_t s = header.size() - 2;
  for (std::size_t j = 0; j < s; ++j) {
    if (header[2 + j] != "y" + std::to_string(j + 1)) {
      throw DataError("unexpected header column '" + std::string(header[2 + j]) + "'");
    }
  }

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") {
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != s + 2) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(s + 2) + " fields");
    }
    for (auto f : fields) {
      double x = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
      if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse '" +
                        std::string(f) + "'");
      }
      values.push_back(x);
    }
    const double* row = values.data() + rows * (s + 2);
    for (std::size_t k = 0; k < 2; ++k) {
      if (!(row[k] > 0.0 && row[k] < 1.0)) {
        throw DataError("line " + std::to_string(line_no) + ": u" + std::to_string(k + 1) +
                        " must lie strictly inside (0,1)");
      }
    }
    for (std::size_t j = 0; j < s; ++j) {
      if (!std::isfinite(row[2 + j])) {
        throw DataError("line " + std::to_string(line_no) + ": non-finite y" +
                        std::to_string(j + 1));
      }
    }
    ++rows;
  }

  Dataset data;
  data.U.resize(static_cast<Eigen::Index>(rows), 2);
  data.Y.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(s));
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = values.data() + i * (s + 2);
    data.U(i, 0) = row[0];
    data.U(i, 1) = row[1];
    for (std::size_t j = 0; j < s; ++j) {
      data.Y(i, j) = row[2 + j];
    }
  }
  data.validate();
  return data;
}

Dataset
read_dataset_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path + "'");
  }
  return parse_dataset_csv(in);
}

void
write_dataset_csv(const Dataset& data, std::ostream& out)
{
  out << "u1,u2";
  for (int j = 0; j < data.covariate_dimension(); ++j) {
    out << ",y" << j + 1;
  }
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < data.U.rows(); ++i) {
    out << data.U(i, 0) << ',' << data.U(i, 1);
    for (Eigen::Index j = 0; j < data.Y.cols(); ++j) {
      out << ',' << data.Y(i, j);
    }
    out << '\n';
  }
}

} // namespace condcop
