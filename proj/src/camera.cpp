#include "fieldcalib/camera.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

namespace fieldcalib {

bool is_valid(const CameraParams& phi) {
  return std::isfinite(phi.fov) && phi.fov > 0.0 && phi.fov < kPi && std::isfinite(phi.pan) &&
         std::isfinite(phi.tilt) && std::isfinite(phi.roll) && phi.position.allFinite();
}

const char* to_string(AxisSystem axis) {
  switch (axis) {
    case AxisSystem::kSoccerNet:
      return "soccernet";
    case AxisSystem::kWc14:
      return "wc14";
    case AxisSystem::kChen:
      return "chen";
    case AxisSystem::kJiang:
      return "jiang";
  }
  return "unknown";
}

AxisSystem parse_axis_system(const std::string& name) {
  if (name == "soccernet") return AxisSystem::kSoccerNet;
  if (name == "wc14") return AxisSystem::kWc14;
  if (name == "chen") return AxisSystem::kChen;
  if (name == "jiang") return AxisSystem::kJiang;
  throw Error(ErrorCode::kInvalidArgument, "unknown axis system '" + name + "'");
}

Mat3 Homography::world_to_image() const {
  Mat3 m = h;
  const double norm = m.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kNonInvertible, "homography is zero or not finite");
  }
  m /= norm;
  if (std::abs(m.determinant()) < 1e-12) {
    throw Error(ErrorCode::kNonInvertible, "homography is singular");
  }
  if (direction == HomographyDirection::kImageToWorld) {
    m = m.inverse().eval();
    m /= m.norm();
  }
  if (m.determinant() < 0.0) m = -m;
  return m;
}

namespace {

void check_fov(double fov) {
  if (!(fov > 0.0 && fov < kPi)) {
    throw Error(ErrorCode::kInvalidArgument, "field of view must lie in (0, pi)");
  }
}

}  // namespace

FocalNdc focal_ndc(double fov, const ImageDims& dims) {
  check_fov(fov);
  const double fx = 1.0 / std::tan(0.5 * fov);
  return {fx, dims.aspect() * fx};
}

double focal_raster(double fov, const ImageDims& dims) {
  check_fov(fov);
  return 0.5 * dims.width / std::tan(0.5 * fov);
}

double fov_from_focal_raster(double focal, const ImageDims& dims) {
  if (!(focal > 0.0)) throw Error(ErrorCode::kInvalidArgument, "focal length must be positive");
  return 2.0 * std::atan(0.5 * dims.width / focal);
}

Projection<double> project(const CameraParams& phi, const ImageDims& dims, const Vec3& x) {
  return Projector<double>(phi, dims.aspect())(x);
}

Vec2 ndc_to_raster(const Vec2& ndc, const ImageDims& dims) {
  return {0.5 * (ndc.x() + 1.0) * dims.width, 0.5 * (ndc.y() + 1.0) * dims.height};
}

Vec2 raster_to_ndc(const Vec2& px, const ImageDims& dims) {
  return {2.0 * px.x() / dims.width - 1.0, 2.0 * px.y() / dims.height - 1.0};
}

Eigen::Matrix<double, 3, 4> projection_matrix(const CameraParams& phi, const ImageDims& dims) {
  const double f = focal_raster(phi.fov, dims);
  Mat3 k;
  k << f, 0, 0.5 * dims.width, 0, f, 0.5 * dims.height, 0, 0, 1;
  const Mat3 r = rotation_matrix(phi.pan, phi.tilt, phi.roll);
  Eigen::Matrix<double, 3, 4> it;
  it.leftCols<3>() = Mat3::Identity();
  it.col(3) = -phi.position;
  return k * r * it;
}

Homography homography_from_camera(const CameraParams& phi, const ImageDims& dims) {
  const auto p = projection_matrix(phi, dims);
  Homography h;
  h.h.col(0) = p.col(0);
  h.h.col(1) = p.col(1);
  h.h.col(2) = p.col(3);
  h.axis_system = AxisSystem::kSoccerNet;
  h.direction = HomographyDirection::kWorldToImage;
  return h;
}

bool on_monotone_branch(const RadialDistortion& psi, const Vec2& p) {
  // d/dr of r(1 + k1 r^2 + k2 r^4) is q(u) = 1 + 3 k1 u + 5 k2 u^2 with u = r^2.
  const double u_max = p.squaredNorm();
  auto q = [&](double u) { return 1.0 + 3.0 * psi.k1 * u + 5.0 * psi.k2 * u * u; };
  double lowest = std::min(q(0.0), q(u_max));
  if (psi.k2 != 0.0) {
    const double vertex = -3.0 * psi.k1 / (10.0 * psi.k2);
    if (vertex > 0.0 && vertex < u_max) lowest = std::min(lowest, q(vertex));
  }
  return lowest > 0.0;
}

Vec2 undistort_checked(const RadialDistortion& psi, const Vec2& p) {
  bool ok = true;
  Vec2 out = undistort<double>(psi, p, &ok);
  if (!ok) throw Error(ErrorCode::kInversionFailure, "radial undistortion did not converge");
  return out;
}

}  // namespace fieldcalib
