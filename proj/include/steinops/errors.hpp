#pragma once

#include <stdexcept>
#include <string>

namespace steinops {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteValue : Error {
  using Error::Error;
};
struct InvalidRange : Error {
  using Error::Error;
};
struct InvalidParameter : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct NotIntegrable : Error {
  using Error::Error;
};
struct NotSampleable : Error {
  using Error::Error;
};
struct NotSelfAdjoint : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct DivisionByZeroWeight : Error {
  using Error::Error;
};
struct TailUnderflow : Error {
  using Error::Error;
};
struct NotLogConcave : Error {
  using Error::Error;
};
struct NotDecreasing : Error {
  using Error::Error;
};
struct ZeroDenominator : Error {
  using Error::Error;
};
struct BoundaryViolation : Error {
  using Error::Error;
};
struct InfiniteSupport : Error {
  using Error::Error;
};
struct NotExact : Error {
  using Error::Error;
};

}  // namespace steinops
