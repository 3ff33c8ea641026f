#pragma once

#include <cmath>
#include <type_traits>

#include "fieldcalib/types.hpp"

namespace fieldcalib {

// Pinhole camera with square pixels, zero skew and the principal point at the
// image center. All angles in radians; position in meters (world frame of the
// calibration object).
template <typename T>
struct BasicCameraParams {
  T fov{};  // horizontal angle of view
  T pan{};
  T tilt{};
  T roll{};
  Vec3T<T> position = Vec3T<T>::Zero();
};
using CameraParams = BasicCameraParams<double>;

bool is_valid(const CameraParams& phi);

struct ImageDims {
  double width = 960.0;
  double height = 540.0;

  double aspect() const { return width / height; }
};

template <typename T>
struct BasicRadialDistortion {
  T k1{};
  T k2{};
};
using RadialDistortion = BasicRadialDistortion<double>;

enum class AxisSystem { kSoccerNet, kWc14, kChen, kJiang };

const char* to_string(AxisSystem axis);
AxisSystem parse_axis_system(const std::string& name);

// Which way the plane homography maps. homography_from_camera produces
// world->image; the dataset homographies handled by align_homography are
// image->world (their alignment transforms act on the world side).
enum class HomographyDirection { kWorldToImage, kImageToWorld };

struct Homography {
  Mat3 h = Mat3::Identity();
  AxisSystem axis_system = AxisSystem::kSoccerNet;
  HomographyDirection direction = HomographyDirection::kWorldToImage;

  // Raster world->image map normalized to unit Frobenius norm with det > 0.
  // Throws kNonInvertible for singular matrices.
  Mat3 world_to_image() const;
};

// Elementary coordinate rotations (passive form). With this convention
// tilt = 0 looks straight down the +z (downward) axis and tilt = 90 deg looks
// horizontally along -y, towards the pitch from the main tribune.
template <typename T>
Mat3T<T> rotation_z(const T& a) {
  using std::cos;
  using std::sin;
  const T c = cos(a);
  const T s = sin(a);
  Mat3T<T> r;
  r << c, s, T(0), -s, c, T(0), T(0), T(0), T(1);
  return r;
}

template <typename T>
Mat3T<T> rotation_x(const T& a) {
  using std::cos;
  using std::sin;
  const T c = cos(a);
  const T s = sin(a);
  Mat3T<T> r;
  r << T(1), T(0), T(0), T(0), c, s, T(0), -s, c;
  return r;
}

// R = Rz(roll) * Rx(tilt) * Rz(pan)
template <typename T>
Mat3T<T> rotation_matrix(const T& pan, const T& tilt, const T& roll) {
  return rotation_z(roll) * (rotation_x(tilt) * rotation_z(pan));
}

struct FocalNdc {
  double fx;
  double fy;
};

FocalNdc focal_ndc(double fov, const ImageDims& dims);
double focal_raster(double fov, const ImageDims& dims);
double fov_from_focal_raster(double focal, const ImageDims& dims);

template <typename T>
struct Projection {
  Vec2T<T> ndc = Vec2T<T>::Zero();
  // (fx*Xc, fy*Yc, Zc): homogeneous NDC point, valid even behind the camera.
  Vec3T<T> homogeneous = Vec3T<T>::Zero();
  bool in_front = false;
};

// Precomputed world->NDC projection for one camera; cheap to apply per point.
template <typename T>
class Projector {
 public:
  Projector(const BasicCameraParams<T>& phi, double aspect) : position_(phi.position) {
    using std::tan;
    const T fx = T(1) / tan(phi.fov * T(0.5));
    const T fy = fx * T(aspect);
    const Mat3T<T> r = rotation_matrix(phi.pan, phi.tilt, phi.roll);
    kr_.row(0) = r.row(0) * fx;
    kr_.row(1) = r.row(1) * fy;
    kr_.row(2) = r.row(2);
  }

  Projection<T> operator()(const Vec3T<T>& x) const {
    Projection<T> p;
    p.homogeneous = kr_ * (x - position_);
    const T& w = p.homogeneous.z();
    p.in_front = w > T(0);
    if (p.in_front) {
      p.ndc = Vec2T<T>(p.homogeneous.x() / w, p.homogeneous.y() / w);
    }
    return p;
  }

  Projection<T> operator()(const Vec3& x) const
    requires(!std::is_same_v<T, double>)
  {
    return (*this)(Vec3T<T>(x.cast<T>()));
  }

 private:
  Mat3T<T> kr_;
  Vec3T<T> position_;
};

// Projects into NDC. `in_front` is false for points with non-positive depth;
// their `ndc` is left at zero and must not be used.
Projection<double> project(const CameraParams& phi, const ImageDims& dims, const Vec3& x);

Vec2 ndc_to_raster(const Vec2& ndc, const ImageDims& dims);
Vec2 raster_to_ndc(const Vec2& px, const ImageDims& dims);

// 3x4 raster projection matrix K R [I | -t].
Eigen::Matrix<double, 3, 4> projection_matrix(const CameraParams& phi, const ImageDims& dims);

// Columns 1, 2, 4 of the raster projection matrix (maps z = 0 world points).
Homography homography_from_camera(const CameraParams& phi, const ImageDims& dims);

template <typename T>
Vec2T<T> distort(const BasicRadialDistortion<T>& psi, const Vec2T<T>& p) {
  const T r2 = p.squaredNorm();
  return p * (T(1) + psi.k1 * r2 + psi.k2 * r2 * r2);
}

// True when the distortion is strictly increasing in the radius on [0, |p|],
// i.e. p lies on the invertible branch. Points beyond it fold back towards the
// center and are treated as not visible.
bool on_monotone_branch(const RadialDistortion& psi, const Vec2& p);

inline constexpr int kUndistortIterations = 20;

// Inverts `distort` by a fixed number of Newton steps on the radius, which
// keeps the result differentiable in both psi and p. `ok` is cleared when the
// iteration leaves the monotone branch or does not reach 1e-10 accuracy.
template <typename T>
Vec2T<T> undistort(const BasicRadialDistortion<T>& psi, const Vec2T<T>& p, bool* ok = nullptr) {
  using std::abs;
  using std::sqrt;
  if (ok) *ok = true;
  const T rd2 = p.squaredNorm();
  if (!(rd2 > T(0))) return p;
  const T rd = sqrt(rd2);
  auto slope = [&](const T& x) -> T {
    const T x2 = x * x;
    return T(1) + T(3) * psi.k1 * x2 + T(5) * psi.k2 * x2 * x2;
  };
  // Start on the monotone branch; Newton steps that leave it are halved.
  T r = rd;
  for (int i = 0; i < 60 && !(slope(r) > T(0)); ++i) r = r * T(0.5);
  for (int i = 0; i < kUndistortIterations; ++i) {
    const T r2 = r * r;
    const T f = r * (T(1) + psi.k1 * r2 + psi.k2 * r2 * r2) - rd;
    const T df = slope(r);
    if (!(df > T(0))) {
      if (ok) *ok = false;
      return p;
    }
    T step = f / df;
    for (int k = 0; k < 60 && !(slope(r - step) > T(0) && r - step > T(0)); ++k) step = step * T(0.5);
    r = r - step;
  }
  if (ok) {
    const T r2 = r * r;
    const T residual = r * (T(1) + psi.k1 * r2 + psi.k2 * r2 * r2) - rd;
    if (!(abs(residual) < T(1e-10)) || !(r > T(0))) *ok = false;
  }
  return p * (r / rd);
}

// Throwing convenience wrapper (kInversionFailure).
Vec2 undistort_checked(const RadialDistortion& psi, const Vec2& p);

}  // namespace fieldcalib
