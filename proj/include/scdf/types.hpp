#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace scdf {

// A joint-angle vector (radians). Dimension equals the robot dof.
using Config = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

// Returned by distance queries when there is nothing to measure against
// (empty obstacle set, empty boundary).
inline constexpr double kDistanceSentinel = 1e6;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configured memory/size guard was exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class CorruptFileError : public Error {
 public:
  using Error::Error;
};

class VersionMismatchError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

class ConstructionFailedError : public Error {
 public:
  using Error::Error;
};

class QuerySamplingFailedError : public Error {
 public:
  using Error::Error;
};

}  // namespace scdf
