#pragma once

#include <stdexcept>
#include <string>

namespace condcop {

//! Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! An argument lies outside the domain of the operation (u on the boundary
//! of the unit square, inadmissible copula parameter, h <= 0, ...).
class DomainError : public Error
{
public:
  using Error::Error;
};

//! A quantity that is evaluated in log space still came out non-finite.
class OverflowGuard : public Error
{
public:
  using Error::Error;
};

class ConvergenceError : public Error
{
public:
  using Error::Error;
};

class DimensionMismatch : public Error
{
public:
  using Error::Error;
};

//! Fewer locally weighted observations than local polynomial coefficients.
class InsufficientLocalData : public Error
{
public:
  using Error::Error;
};

class SingularHessian : public Error
{
public:
  using Error::Error;
};

class AllFitsFailed : public Error
{
public:
  using Error::Error;
};

class AllCandidatesFailed : public Error
{
public:
  using Error::Error;
};

//! The bias expansion is only available when p - |alpha| is odd.
class ParityError : public Error
{
public:
  using Error::Error;
};

class EmptyTrimmedGrid : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

//! Malformed or out-of-range dataset contents.
class DataError : public Error
{
public:
  using Error::Error;
};

} // namespace condcop
