#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>

namespace condcop {

//! N pseudo-observations in (0,1)^2 paired with s-dimensional covariates.
struct Dataset
{
  Eigen::MatrixXd U; //!< N x 2, entries strictly inside (0,1)
  Eigen::MatrixXd Y; //!< N x s

  std::size_t size() const { return static_cast<std::size_t>(U.rows()); }
  int covariate_dimension() const { return static_cast<int>(Y.cols()); }

  //! Throws DataError if the invariants are violated.
  void validate() const;

  Dataset without_row(std::size_t i) const;
};

//! Parses a CSV with header `u1,u2,y1,...,ys`. Rejects malformed numbers,
//! ragged rows and pseudo-observations outside (0,1) with DataError.
Dataset
parse_dataset_csv(std::istream& in);

//! Throws IoError if the file cannot be opened.
Dataset
read_dataset_csv(const std::string& path);

void
write_dataset_csv(const Dataset& data, std::ostream& out);

} // namespace condcop
