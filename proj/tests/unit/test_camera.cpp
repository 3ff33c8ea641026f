#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Geometry>
#include <unsupported/Eigen/AutoDiff>

#include "fieldcalib/camera.hpp"
#include "generators.hpp"

using namespace fieldcalib;
using fieldcalib::testing::Gen;

namespace {

// Elementary matrices written out independently of the library.
Mat3 rz(double a) {
  Mat3 m;
  m << std::cos(a), std::sin(a), 0, -std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

Mat3 rx(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), std::sin(a), 0, -std::sin(a), std::cos(a);
  return m;
}

Vec2 raster_via_matrix(const CameraParams& phi, const ImageDims& dims, const Vec3& x) {
  const Vec3 q = projection_matrix(phi, dims) * x.homogeneous();
  return q.hnormalized();
}

}  // namespace

TEST(Camera, RotationSpecialCases) {
  EXPECT_TRUE(rotation_matrix(0.0, 0.0, 0.0).isApprox(Mat3::Identity(), 0.0));
  EXPECT_LT((rotation_matrix(0.0, kPi / 2, 0.0) - rx(kPi / 2)).norm(), 1e-15);
  const Mat3 expected = rz(-0.05) * rx(1.1) * rz(0.3);
  EXPECT_LT((rotation_matrix(0.3, 1.1, -0.05) - expected).norm(), 1e-15);
}

TEST(Camera, RotationIsOrthonormal) {
  Gen g(1);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = rotation_matrix(g.angle(), g.angle(), g.angle());
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  }
}

TEST(Camera, TiltNinetyLooksAlongNegativeY) {
  const Mat3 r = rotation_matrix(0.0, kPi / 2, 0.0);
  // Optical axis in world coordinates is the third row of R.
  EXPECT_LT((Vec3(r.row(2)) - Vec3(0, -1, 0)).norm(), 1e-15);
}

TEST(Camera, FocalNdc) {
  const ImageDims hd{1280, 720};
  EXPECT_DOUBLE_EQ(focal_ndc(kPi / 2, hd).fx, 1.0 / std::tan(kPi / 4));
  EXPECT_NEAR(focal_ndc(kPi / 2, hd).fx, 1.0, 1e-15);
  EXPECT_NEAR(focal_ndc(kPi / 3, hd).fx, 1.7320508, 1e-7);
  EXPECT_NEAR(focal_ndc(kPi / 3, hd).fy, 1280.0 / 720.0 * 1.7320508075688772, 1e-12);
  EXPECT_LT(focal_ndc(kPi - 1e-9, hd).fx, 1e-8);
  EXPECT_THROW(focal_ndc(0.0, hd), Error);
  EXPECT_THROW(focal_ndc(kPi, hd), Error);
  EXPECT_THROW(focal_ndc(-0.1, hd), Error);
}

TEST(Camera, FocalRaster) {
  const ImageDims hd{1280, 720};
  EXPECT_NEAR(focal_raster(kPi / 2, hd), 640.0, 1e-12);
  EXPECT_NEAR(focal_raster(kPi / 3, hd), 1108.5125168440814, 1e-9);
  Gen g(2);
  for (int i = 0; i < 50; ++i) {
    const double fov = g.uniform(0.01, kPi - 0.01);
    EXPECT_NEAR(fov_from_focal_raster(focal_raster(fov, hd), hd), fov, 1e-12);
  }
  EXPECT_THROW(fov_from_focal_raster(0.0, hd), Error);
}

TEST(Camera, NdcAndRasterPathsAgree) {
  // fx_raster = (w / 2) * fx_ndc, fy_raster = (h / 2) * fy_ndc: square pixels.
  const ImageDims dims{960, 540};
  const auto f = focal_ndc(0.8, dims);
  EXPECT_NEAR(0.5 * dims.width * f.fx, focal_raster(0.8, dims), 1e-9);
  EXPECT_NEAR(0.5 * dims.height * f.fy, focal_raster(0.8, dims), 1e-9);
}

TEST(Camera, PrincipalRayProjectsToCenter) {
  CameraParams phi;
  phi.fov = 1.0;
  phi.position = Vec3(0, 0, -10);  // tilt 0 looks along +z, i.e. down onto the pitch
  const auto p = project(phi, {960, 540}, Vec3::Zero());
  ASSERT_TRUE(p.in_front);
  EXPECT_LT(p.ndc.norm(), 1e-15);

  Gen g(3);
  for (int i = 0; i < 50; ++i) {
    CameraParams c = g.broadcast_camera();
    const Vec3 axis = rotation_matrix(c.pan, c.tilt, c.roll).row(2).transpose();
    const Vec3 x = c.position + g.uniform(1.0, 200.0) * axis;
    c.fov = g.uniform(0.1, 3.0);
    const auto q = project(c, {960, 540}, x);
    ASSERT_TRUE(q.in_front);
    EXPECT_LT(q.ndc.norm(), 1e-12);
  }
}

TEST(Camera, BehindCameraIsTagged) {
  CameraParams phi;
  phi.fov = 1.0;
  phi.position = Vec3(0, 0, -10);
  const auto p = project(phi, {960, 540}, Vec3(0, 0, -20));
  EXPECT_FALSE(p.in_front);
  EXPECT_EQ(p.ndc, Vec2::Zero());
}

TEST(Camera, ProjectMatchesMatrixPath) {
  Gen g(4);
  const ImageDims dims{960, 540};
  for (int i = 0; i < 200; ++i) {
    const CameraParams phi = g.broadcast_camera();
    const Vec3 x(g.uniform(-52.5, 52.5), g.uniform(-34, 34), g.uniform(-3, 0));
    const auto p = project(phi, dims, x);
    if (!p.in_front) continue;
    const Vec2 a = ndc_to_raster(p.ndc, dims);
    const Vec2 b = raster_via_matrix(phi, dims, x);
    EXPECT_LT((a - b).norm(), 1e-9 * std::max(1.0, b.norm()));
  }
}

TEST(Camera, ProjectionIsScaleInvariant) {
  Gen g(5);
  const ImageDims dims{960, 540};
  for (int i = 0; i < 50; ++i) {
    const CameraParams phi = g.broadcast_camera();
    const auto p = projection_matrix(phi, dims);
    const Vec3 x(g.uniform(-50, 50), g.uniform(-30, 30), 0.0);
    const double s = g.uniform(1e-3, 1e3);
    const Vec2 a = (p * x.homogeneous()).hnormalized();
    const Vec2 b = ((s * p) * x.homogeneous()).hnormalized();
    EXPECT_LT((a - b).norm(), 1e-9);
  }
}

TEST(Camera, HomographyMatchesProjectionOnPlane) {
  Gen g(6);
  const ImageDims dims{960, 540};
  for (int i = 0; i < 100; ++i) {
    const CameraParams phi = g.broadcast_camera();
    const Homography h = homography_from_camera(phi, dims);
    EXPECT_EQ(h.axis_system, AxisSystem::kSoccerNet);
    for (const Vec3& x : {Vec3(5, 3, 0), Vec3(g.uniform(-52, 52), g.uniform(-34, 34), 0)}) {
      const auto p = project(phi, dims, x);
      if (!p.in_front) continue;
      const Vec2 a = ndc_to_raster(p.ndc, dims);
      const Vec2 b = (h.h * Vec3(x.x(), x.y(), 1.0)).hnormalized();
      EXPECT_LT((a - b).norm(), 1e-9);
    }
  }
}

TEST(Camera, HomographyDisagreesOffPlane) {
  Gen g(7);
  const ImageDims dims{960, 540};
  const CameraParams phi = g.broadcast_camera();
  const Homography h = homography_from_camera(phi, dims);
  const Vec3 x(5, 3, -2.44);
  const Vec2 a = ndc_to_raster(project(phi, dims, x).ndc, dims);
  const Vec2 b = (h.h * Vec3(x.x(), x.y(), 1.0)).hnormalized();
  EXPECT_GT((a - b).norm(), 1.0);
}

TEST(Camera, HomographyThirdRowForPureTilt) {
  CameraParams phi;
  phi.fov = 1.2;
  phi.tilt = 1.1;
  phi.position = Vec3(2, 60, -15);
  const Mat3 h = homography_from_camera(phi, {960, 540}).h;
  // K's last row is (0, 0, 1), so row 3 of H is (R31, R32, -R3 t) with R = Rx(tilt).
  const Mat3 r = rx(1.1);
  EXPECT_NEAR(h(2, 0), r(2, 0), 1e-15);
  EXPECT_NEAR(h(2, 1), r(2, 1), 1e-15);
  EXPECT_NEAR(h(2, 2), -r.row(2).dot(phi.position), 1e-12);
  EXPECT_EQ(h(2, 0), 0.0);
}

TEST(Camera, WorldToImageNormalization) {
  Homography h;
  h.h << 2, 0, 1, 0, 3, 2, 0, 0, -1;
  const Mat3 m = h.world_to_image();
  EXPECT_NEAR(m.norm(), 1.0, 1e-15);
  EXPECT_GT(m.determinant(), 0.0);
  Homography inv = h;
  inv.h = h.h.inverse();
  inv.direction = HomographyDirection::kImageToWorld;
  const Mat3 m2 = inv.world_to_image();
  EXPECT_LT((m - m2).norm(), 1e-12);
  Homography zero;
  zero.h.setZero();
  EXPECT_THROW(zero.world_to_image(), Error);
  Homography singular;
  singular.h << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  EXPECT_THROW(singular.world_to_image(), Error);
}

TEST(Camera, RasterNdcRoundTrip) {
  const ImageDims dims{960, 540};
  EXPECT_EQ(ndc_to_raster({-1, -1}, dims), Vec2(0, 0));
  EXPECT_EQ(ndc_to_raster({1, 1}, dims), Vec2(960, 540));
  EXPECT_EQ(ndc_to_raster({0, 0}, dims), Vec2(480, 270));
  Gen g(8);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p = g.vec2(0, 960);
    EXPECT_LT((ndc_to_raster(raster_to_ndc(p, dims), dims) - p).norm(), 1e-12);
  }
}

TEST(Camera, DistortionExamples) {
  const Vec2 p(0.5, 0.0);
  EXPECT_EQ(distort<double>({0, 0}, p), p);
  EXPECT_EQ(undistort<double>({0, 0}, p), p);
  for (const RadialDistortion psi : {RadialDistortion{0.3, 0.1}, RadialDistortion{-0.2, 0.05}}) {
    EXPECT_EQ(distort<double>(psi, Vec2::Zero()), Vec2::Zero());
    EXPECT_EQ(undistort<double>(psi, Vec2::Zero()), Vec2::Zero());
  }
  const Vec2 d = distort<double>({-0.1, 0}, p);
  EXPECT_NEAR(d.x(), 0.4875, 1e-15);
  EXPECT_EQ(d.y(), 0.0);
  EXPECT_LT((undistort_checked({-0.1, 0}, d) - p).norm(), 1e-8);
}

TEST(Camera, DistortionRoundTripProperty) {
  Gen g(9);
  int checked = 0;
  for (int i = 0; i < 5000; ++i) {
    const RadialDistortion psi{g.uniform(-0.3, 0.3), g.uniform(-0.1, 0.1)};
    const double r = g.uniform(0.0, 1.5);
    const double a = g.angle();
    const Vec2 p(r * std::cos(a), r * std::sin(a));
    if (!on_monotone_branch(psi, p)) continue;  // outside the invertible branch
    ++checked;
    const Vec2 d = distort<double>(psi, p);
    EXPECT_LT((undistort_checked(psi, d) - p).norm(), 1e-8) << psi.k1 << " " << psi.k2 << " " << r;
    bool ok = false;
    const Vec2 u = undistort<double>(psi, p, &ok);  // p may lie beyond the distorted range
    if (ok) {
      EXPECT_LT((distort<double>(psi, u) - p).norm(), 1e-8);
    }
  }
  EXPECT_GT(checked, 3500);
}

TEST(Camera, UndistortFailureIsSignaled) {
  // With k1 = -0.3 the radial map peaks at about 0.70 (r = 1.054); larger
  // distorted radii have no preimage.
  const RadialDistortion psi{-0.3, 0.0};
  bool ok = true;
  undistort<double>(psi, Vec2(1.2, 0.0), &ok);
  EXPECT_FALSE(ok);
  EXPECT_THROW(undistort_checked(psi, Vec2(1.2, 0.0)), Error);
  EXPECT_TRUE(on_monotone_branch(psi, Vec2(0.9, 0.0)));
  EXPECT_FALSE(on_monotone_branch(psi, Vec2(1.2, 0.0)));
}

TEST(Camera, ProjectionDerivativesMatchFiniteDifferences) {
  using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 7, 1>>;
  Gen g(10);
  const ImageDims dims{960, 540};
  for (int trial = 0; trial < 100; ++trial) {
    const CameraParams phi = g.broadcast_camera();
    const Vec3 x(g.uniform(-50, 50), g.uniform(-30, 30), g.coin() ? 0.0 : -2.44);
    if (!project(phi, dims, x).in_front) continue;

    BasicCameraParams<AD> ad;
    double base[7] = {phi.fov, phi.pan, phi.tilt, phi.roll, phi.position.x(), phi.position.y(), phi.position.z()};
    AD* slots[7] = {&ad.fov, &ad.pan, &ad.tilt, &ad.roll, &ad.position.x(), &ad.position.y(), &ad.position.z()};
    for (int k = 0; k < 7; ++k) *slots[k] = AD(base[k], 7, k);
    const auto p = Projector<AD>(ad, dims.aspect())(x);

    for (int k = 0; k < 7; ++k) {
      auto at = [&](double delta) {
        double v[7];
        std::copy(base, base + 7, v);
        v[k] += delta;
        CameraParams c;
        c.fov = v[0], c.pan = v[1], c.tilt = v[2], c.roll = v[3], c.position = Vec3(v[4], v[5], v[6]);
        return project(c, dims, x).ndc;
      };
      const double h = 1e-6;
      const Vec2 fd = (at(h) - at(-h)) / (2 * h);
      for (int c = 0; c < 2; ++c) {
        const double exact = p.ndc[c].derivatives()[k];
        EXPECT_LE(std::abs(exact - fd[c]), 1e-4 * std::max(std::abs(fd[c]), 1e-4)) << "param " << k;
      }
    }
  }
}

TEST(Camera, UndistortDerivativesMatchFiniteDifferences) {
  using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 4, 1>>;
  Gen g(12);
  for (int trial = 0; trial < 100; ++trial) {
    const RadialDistortion psi = g.distortion(0.2, 0.05);
    const Vec2 p = g.vec2(-0.9, 0.9);
    if (!on_monotone_branch(psi, p * 1.3)) continue;
    BasicRadialDistortion<AD> ad{AD(psi.k1, 4, 0), AD(psi.k2, 4, 1)};
    const Vec2T<AD> pa(AD(p.x(), 4, 2), AD(p.y(), 4, 3));
    const auto u = undistort<AD>(ad, pa);
    auto at = [&](int k, double d) {
      RadialDistortion q = psi;
      Vec2 pp = p;
      if (k == 0) q.k1 += d;
      if (k == 1) q.k2 += d;
      if (k == 2) pp.x() += d;
      if (k == 3) pp.y() += d;
      return undistort<double>(q, pp);
    };
    for (int k = 0; k < 4; ++k) {
      const Vec2 fd = (at(k, 1e-6) - at(k, -1e-6)) / 2e-6;
      for (int c = 0; c < 2; ++c) {
        EXPECT_LE(std::abs(u[c].derivatives()[k] - fd[c]), 1e-4 * std::max(std::abs(fd[c]), 1e-4));
      }
    }
  }
}

TEST(Camera, Validity) {
  CameraParams phi;
  phi.fov = 1.0;
  EXPECT_TRUE(is_valid(phi));
  phi.fov = kPi;
  EXPECT_FALSE(is_valid(phi));
  phi.fov = 1.0;
  phi.position.x() = std::nan("");
  EXPECT_FALSE(is_valid(phi));
}

TEST(Camera, AxisSystemNames) {
  for (auto a : {AxisSystem::kSoccerNet, AxisSystem::kWc14, AxisSystem::kChen, AxisSystem::kJiang}) {
    EXPECT_EQ(parse_axis_system(to_string(a)), a);
  }
  EXPECT_THROW(parse_axis_system("nope"), Error);
}
