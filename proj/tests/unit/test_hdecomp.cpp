#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/LU>

#include "fieldcalib/hdecomp.hpp"
#include "generators.hpp"

using namespace fieldcalib;
using fieldcalib::testing::Gen;

namespace {

CameraParams broadcast(double fov_deg = 40.0) {
  CameraParams phi;
  phi.fov = deg2rad(fov_deg);
  phi.pan = deg2rad(12.0);
  phi.tilt = deg2rad(72.0);
  phi.roll = deg2rad(1.5);
  phi.position = Vec3(-4.0, 62.0, -18.0);
  return phi;
}

double angle_diff(double a, double b) { return std::abs(std::remainder(a - b, 2 * kPi)); }

std::size_t visible_keypoints(const CameraParams& phi, const ImageDims& dims) {
  std::size_t n = 0;
  for (const auto& x : refinement_keypoints()) {
    const auto p = project(phi, dims, x);
    n += p.in_front && std::abs(p.ndc.x()) < 1.0 && std::abs(p.ndc.y()) < 1.0;
  }
  return n;
}

}  // namespace

TEST(Hdecomp, FocalFromKnownCamera) {
  const ImageDims dims{960, 540};
  CameraParams phi = broadcast();
  phi.fov = 2.0 * std::atan(480.0 / 900.0);  // f = 900 px
  const Homography h = homography_from_camera(phi, dims);
  EXPECT_NEAR(focal_from_homography(h, dims), 900.0, 1e-6);
}

TEST(Hdecomp, FocalRoundTripProperty) {
  Gen g(61);
  const ImageDims dims{1280, 720};
  for (int i = 0; i < 300; ++i) {
    const CameraParams phi = g.broadcast_camera();
    const Homography h = homography_from_camera(phi, dims);
    EXPECT_NEAR(focal_from_homography(h, dims), focal_raster(phi.fov, dims), 1e-6 * focal_raster(phi.fov, dims));
  }
}

TEST(Hdecomp, FrontoParallelIsDegenerate) {
  const ImageDims dims{960, 540};
  CameraParams phi;
  phi.fov = deg2rad(50.0);
  phi.position = Vec3(0, 0, -40);  // tilt 0 looks straight down
  const Homography h = homography_from_camera(phi, dims);
  try {
    focal_from_homography(h, dims);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateGeometry);
  }
  const auto r = decompose(h, dims);
  EXPECT_TRUE(r.rejected);
  EXPECT_FALSE(r.reason.empty());
}

TEST(Hdecomp, DecompositionRoundTrip) {
  Gen g(62);
  const ImageDims dims{960, 540};
  int checked = 0;
  while (checked < 300) {
    const CameraParams phi = g.broadcast_camera();
    if (visible_keypoints(phi, dims) < 6) continue;
    ++checked;
    const auto r = decompose(homography_from_camera(phi, dims), dims);
    ASSERT_FALSE(r.rejected) << r.reason << " fov " << rad2deg(phi.fov) << " pan " << rad2deg(phi.pan) << " tilt " << rad2deg(phi.tilt) << " t " << phi.position.transpose() << " used " << r.correspondences_used;
    EXPECT_NEAR(r.phi.fov, phi.fov, 1e-7);
    EXPECT_LT(angle_diff(r.phi.pan, phi.pan), 1e-7);
    EXPECT_LT(angle_diff(r.phi.tilt, phi.tilt), 1e-7);
    EXPECT_LT(angle_diff(r.phi.roll, phi.roll), 1e-7);
    EXPECT_LT((r.phi.position - phi.position).norm(), 1e-5);
  }
}

TEST(Hdecomp, ScaleInvariance) {
  const ImageDims dims{960, 540};
  const CameraParams phi = broadcast();
  Homography h = homography_from_camera(phi, dims);
  const auto a = decompose(h, dims);
  h.h *= -3.7;
  const auto b = decompose(h, dims);
  ASSERT_FALSE(a.rejected);
  ASSERT_FALSE(b.rejected);
  EXPECT_NEAR(a.phi.fov, b.phi.fov, 1e-10);
  EXPECT_NEAR(a.phi.pan, b.phi.pan, 1e-10);
  EXPECT_LT((a.phi.position - b.phi.position).norm(), 1e-8);
}

TEST(Hdecomp, ImageToWorldInputIsInverted) {
  const ImageDims dims{960, 540};
  const CameraParams phi = broadcast();
  Homography h = homography_from_camera(phi, dims);
  h.h = h.h.inverse().eval();
  h.direction = HomographyDirection::kImageToWorld;
  const auto r = decompose(h, dims);
  ASSERT_FALSE(r.rejected);
  EXPECT_LT((r.phi.position - phi.position).norm(), 1e-5);
}

TEST(Hdecomp, EulerExamples) {
  const EulerAngles id = euler_from_rotation(Mat3::Identity());
  EXPECT_NEAR(id.pan, 0.0, 1e-15);
  EXPECT_NEAR(id.tilt, 0.0, 1e-15);
  EXPECT_NEAR(id.roll, 0.0, 1e-15);
  const EulerAngles e = euler_from_rotation(rotation_matrix(deg2rad(20.0), deg2rad(70.0), deg2rad(-3.0)));
  EXPECT_NEAR(rad2deg(e.pan), 20.0, 1e-10);
  EXPECT_NEAR(rad2deg(e.tilt), 70.0, 1e-10);
  EXPECT_NEAR(rad2deg(e.roll), -3.0, 1e-10);
  // At the singularity only pan + roll is observable; roll is set to 0.
  const EulerAngles s = euler_from_rotation(rotation_matrix(deg2rad(25.0), 0.0, deg2rad(10.0)));
  EXPECT_NEAR(s.roll, 0.0, 1e-12);
  EXPECT_NEAR(rad2deg(s.pan), 35.0, 1e-10);
}

TEST(Hdecomp, EulerRoundTripProperty) {
  Gen g(63);
  for (int i = 0; i < 1000; ++i) {
    const double pan = g.uniform(-kPi / 2, kPi / 2);
    const double tilt = g.uniform(0.05, kPi - 0.05);
    const double roll = g.uniform(-kPi / 2 + 0.05, kPi / 2 - 0.05);
    const Mat3 r = rotation_matrix(pan, tilt, roll);
    const EulerAngles e = euler_from_rotation(r);
    EXPECT_LT((rotation_matrix(e.pan, e.tilt, e.roll) - r).norm(), 1e-10);
    EXPECT_LE(std::abs(e.roll), std::abs(roll) + 1e-10);
  }
}

TEST(Hdecomp, RefinementDoesNotIncreaseError) {
  Gen g(64);
  const ImageDims dims{960, 540};
  int refined = 0;
  for (int i = 0; i < 100; ++i) {
    const CameraParams phi = g.broadcast_camera();
    if (visible_keypoints(phi, dims) < 6) continue;
    Homography h = homography_from_camera(phi, dims);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) h.h(r, c) *= 1.0 + g.normal(2e-3);
    }
    const auto out = decompose(h, dims);
    if (out.rejected) continue;
    EXPECT_LE(out.rmse_refined, out.rmse_initial + 1e-12);
    EXPECT_GE(out.correspondences_used, 3u);
    refined += out.refined && out.rmse_refined < out.rmse_initial;
  }
  EXPECT_GT(refined, 25);
}

TEST(Hdecomp, NoRefinementWithZeroIterations) {
  const ImageDims dims{960, 540};
  const CameraParams phi = broadcast();
  RefinementConfig rc;
  rc.max_iterations = 0;
  const auto out = decompose(homography_from_camera(phi, dims), dims, rc);
  ASSERT_FALSE(out.rejected);
  EXPECT_NEAR(out.phi.tilt, out.initial.tilt, 1e-15);
}

TEST(Hdecomp, RejectsWhenNoKeypointIsVisible) {
  const ImageDims dims{960, 540};
  CameraParams phi = broadcast(10.0);
  phi.pan = deg2rad(180.0);  // facing away from the pitch
  phi.position = Vec3(0, 120, -15);
  const auto r = decompose(homography_from_camera(phi, dims), dims);
  EXPECT_TRUE(r.rejected);
  EXPECT_LT(r.correspondences_used, 3u);
}

TEST(Hdecomp, ConfigValidation) {
  RefinementConfig c;
  EXPECT_NO_THROW(c.validate());
  c.zeta = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.visibility_tolerance = 0.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Hdecomp, Keypoints) {
  const auto k = refinement_keypoints();
  EXPECT_EQ(k.size(), 9u + 28u);
  for (const auto& x : k) {
    EXPECT_EQ(x.z(), 0.0);
    EXPECT_LE(std::abs(x.x()), 52.5 + 1e-12);
    EXPECT_LE(std::abs(x.y()), 34.0 + 1e-12);
  }
}
