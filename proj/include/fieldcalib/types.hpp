#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fieldcalib {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

template <typename T>
using Vec2T = Eigen::Matrix<T, 2, 1>;
template <typename T>
using Vec3T = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Mat3T = Eigen::Matrix<T, 3, 3>;

enum class ErrorCode {
  kInvalidArgument,
  kEmptyObservation,
  kDegenerateGeometry,
  kNonFiniteGradient,
  kOptimizationFailure,
  kInversionFailure,
  kNonInvertible,
  kMalformedInput,
  kUnknownLabel,
  kCoordinateRange,
  kIo,
};

const char* to_string(ErrorCode code);

// Library version string, e.g. "0.1.0".
const char* version();

// All library failures are reported through this type; `code()` lets callers
// (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace fieldcalib
