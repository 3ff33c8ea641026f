#include <gtest/gtest.h>

#include <cmath>

#include "fieldcalib/reprojection_loss.hpp"
#include "fieldcalib/synth.hpp"
#include "generators.hpp"

using namespace fieldcalib;
using fieldcalib::testing::Gen;

namespace {

// Two unit lines on the plane seen by a camera looking straight down from
// z = -1 with a 90 degree field of view: world (x, y, 0) maps to NDC (x, y).
CalibrationObject cross_object() {
  std::vector<Segment> segs{
      {{"horizontal", SegmentCategory::kLine}, LineSegment3D{Vec3(-1, 0, 0), Vec3(1, 0, 0)}},
      {{"vertical", SegmentCategory::kLine}, LineSegment3D{Vec3(0, -1, 0), Vec3(0, 1, 0)}},
      {{"spot", SegmentCategory::kPoint}, PointSegment3D{Vec3(0.5, 0.5, 0)}},
  };
  return CalibrationObject(std::move(segs), 2.0, 2.0);
}

CameraParams top_down() {
  CameraParams phi;
  phi.fov = kPi / 2;
  phi.position = Vec3(0, 0, -1);
  return phi;
}

const ImageDims kSquare{100, 100};

}  // namespace

TEST(PointLineDistance, Examples) {
  EXPECT_DOUBLE_EQ(point_line_distance({0, 1}, {0, 0}, {1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(point_line_distance({0.5, 0}, {0, 0}, {1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(point_line_distance({3, 4}, {0, 0}, {0, 2}), 3.0);
  // Infinite line: beyond the endpoints the perpendicular distance is kept.
  EXPECT_DOUBLE_EQ(point_line_distance({10, 1}, {0, 0}, {1, 0}), 1.0);
  EXPECT_THROW(point_line_distance({0, 0}, {1, 1}, {1, 1}), Error);
}

TEST(PointCloudDistance, Examples) {
  EXPECT_DOUBLE_EQ(point_cloud_distance({0, 0}, {{1, 0}, {0, 2}}), 1.0);
  EXPECT_DOUBLE_EQ(point_cloud_distance({0, 2}, {{1, 0}, {0, 2}}), 0.0);
  EXPECT_THROW(point_cloud_distance({0, 0}, {}), Error);

  std::vector<Vec2> circle;
  for (int k = 0; k < 128; ++k) circle.emplace_back(0.5 * std::cos(2 * kPi * k / 128), 0.5 * std::sin(2 * kPi * k / 128));
  double brute = 1e9;
  for (const auto& q : circle) brute = std::min(brute, q.norm());
  EXPECT_DOUBLE_EQ(point_cloud_distance({0, 0}, circle), brute);
  EXPECT_NEAR(point_cloud_distance({0, 0}, circle), 0.5, 1e-12);
  const Vec2 off(0.5 * std::cos(kPi / 128), 0.5 * std::sin(kPi / 128));  // between two samples
  const double sag = 2 * 0.5 * std::sin(kPi / 256);
  EXPECT_LE(point_cloud_distance(off, circle), sag + 1e-12);
}

TEST(TotalLoss, PerSegmentMean) {
  const auto object = cross_object();
  const auto obs = SegmentObservations::build(object, kSquare, {{{"horizontal", {{0.0, 0.1}, {0.5, 0.3}}}}});
  const auto r = total_loss(obs, object, top_down(), {});
  EXPECT_NEAR(r.total, 0.2, 1e-12);
  EXPECT_EQ(r.visible_count, 1u);
  ASSERT_EQ(r.per_segment.size(), 1u);
  EXPECT_NEAR(r.per_segment.at("horizontal"), 0.2, 1e-12);
}

TEST(TotalLoss, SegmentsWeighEqually) {
  const auto object = cross_object();
  SampleObservations s;
  s["horizontal"] = {{0.1, 0.2}, {0.2, -0.2}, {-0.3, 0.2}, {0.4, 0.2}};
  for (int k = 0; k < 40; ++k) s["vertical"].push_back({k % 2 ? 0.4 : -0.4, -0.9 + 0.045 * k});
  BatchLimits limits;
  limits.line = 40;
  const auto obs = SegmentObservations::build(object, kSquare, {s}, limits);
  const auto r = total_loss(obs, object, top_down(), {});
  EXPECT_NEAR(r.total, 0.3, 1e-12);
  const double naive = (4 * 0.2 + 40 * 0.4) / 44.0;
  EXPECT_GT(std::abs(r.total - naive), 1e-3);
}

TEST(TotalLoss, PointSegments) {
  const auto object = cross_object();
  const auto obs = SegmentObservations::build(object, kSquare, {{{"spot", {{0.5, 0.9}}}}});
  EXPECT_NEAR(total_loss(obs, object, top_down(), {}).total, 0.4, 1e-12);
}

TEST(TotalLoss, EmptySampleThrows) {
  const auto object = cross_object();
  const auto obs = SegmentObservations::build(object, kSquare, {{}});
  try {
    total_loss(obs, object, top_down(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyObservation);
  }
}

TEST(TotalLoss, AllMaskedThrowsDegenerate) {
  const auto object = cross_object();
  const auto obs = SegmentObservations::build(object, kSquare, {{{"horizontal", {{0.0, 0.1}, {0.5, 0.3}}}}});
  CameraParams behind = top_down();
  behind.position.z() = 1.0;  // the plane is now behind the camera
  try {
    total_loss(obs, object, behind, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateGeometry);
  }
}

TEST(TotalLoss, BuildRejectsBadInput) {
  const auto object = cross_object();
  EXPECT_THROW(SegmentObservations::build(object, kSquare, {{{"nope", {{0, 0}, {1, 1}}}}}), Error);
  EXPECT_THROW(SegmentObservations::build(object, kSquare,
                                          {{{"horizontal", {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}}}}}),
               Error);
  EXPECT_THROW(SegmentObservations::build(object, kSquare, {{{"horizontal", {{0, std::nan("")}, {1, 1}}}}}), Error);
}

TEST(TotalLoss, BatchLayout) {
  const auto object = build_soccer_field();
  const auto obs = SegmentObservations::build(object, {960, 540},
                                              {{{"Middle line", {{0.1, 0.2}, {0.1, 0.4}}}},
                                               {{"Circle central", {{0.0, 0.0}, {0.1, 0.0}, {0.2, 0.0}}}}});
  EXPECT_EQ(obs.line.segments, object.indices(SegmentCategory::kLine).size());
  EXPECT_EQ(obs.point_cloud.max_points, 8u);
  EXPECT_EQ(obs.line.max_points, 4u);
  std::size_t s = 0;
  while (object.segments()[obs.line.object_index[s]].label.name != "Middle line") ++s;
  EXPECT_EQ(obs.line.count(0, s), 2u);
  EXPECT_TRUE(obs.line.valid(0, s, 1));
  EXPECT_FALSE(obs.line.valid(0, s, 2));
  EXPECT_EQ(obs.line.pixel(0, s, 3), Vec2::Zero());
  EXPECT_EQ(obs.line.count(1, s), 0u);
  EXPECT_EQ(obs.observed_segments(0), 1u);
  EXPECT_EQ(obs.observed_segments(1), 1u);
}

TEST(TotalLoss, NoiselessRenderingGivesZero) {
  Gen g(21);
  const auto object = build_soccer_field();
  const ImageDims dims{960, 540};
  const LossGeometry geometry(object);
  for (int i = 0; i < 30; ++i) {
    CameraParams phi;
    const auto scene = fieldcalib::testing::render_scene(g, fieldcalib::testing::well_posed_center(), object, dims, &phi, 1);
    const auto obs = SegmentObservations::build(object, dims, {scene.observations});
    EXPECT_LT(total_loss(obs, 0, geometry, phi, {}).total, 1e-9);
    // With distortion in the rendering the loss still vanishes at the truth.
    const RadialDistortion psi{-0.1, 0.02};
    RenderOptions ro;
    try {
      const auto dist_scene = render_observations(phi, psi, object, dims, ro);
      const auto dobs = SegmentObservations::build(object, dims, {dist_scene.observations});
      EXPECT_LT(total_loss(dobs, 0, geometry, phi, psi).total, 1e-9);
    } catch (const Error&) {
    }
  }
}

TEST(TotalLoss, PaddingNeutrality) {
  Gen g(22);
  const auto object = build_soccer_field();
  const ImageDims dims{960, 540};
  const LossGeometry geometry(object);
  for (int i = 0; i < 20; ++i) {
    CameraParams phi;
    const auto scene = fieldcalib::testing::render_scene(g, fieldcalib::testing::well_posed_center(), object, dims, &phi, 1, {}, 2.0);
    const auto a = SegmentObservations::build(object, dims, {scene.observations});
    BatchLimits wide;
    wide.line = 9;
    wide.point_cloud = 17;
    wide.point = 3;
    const auto b = SegmentObservations::build(object, dims, {scene.observations}, wide);
    const CameraParams probe = g.broadcast_camera();
    const auto la = total_loss(a, 0, geometry, probe, {});
    const auto lb = total_loss(b, 0, geometry, probe, {});
    EXPECT_EQ(la.total, lb.total);
    EXPECT_EQ(la.per_segment, lb.per_segment);
    EXPECT_EQ(la.visible_count, lb.visible_count);
  }
}

TEST(TotalLoss, DuplicatingPixelsKeepsTotal) {
  Gen g(23);
  const auto object = build_soccer_field();
  const ImageDims dims{960, 540};
  const LossGeometry geometry(object);
  for (int i = 0; i < 20; ++i) {
    CameraParams phi;
    auto scene = fieldcalib::testing::render_scene(g, fieldcalib::testing::well_posed_center(), object, dims, &phi, 2, {}, 3.0);
    const auto base = SegmentObservations::build(object, dims, {scene.observations});
    const CameraParams probe = g.broadcast_camera();
    double before = 0.0;
    try {
      before = total_loss(base, 0, geometry, probe, {}).total;
    } catch (const Error&) {
      continue;
    }
    auto& pts = scene.observations.begin()->second;
    const std::size_t k = 3;
    const std::vector<Vec2> orig = pts;
    for (std::size_t r = 1; r < k; ++r) pts.insert(pts.end(), orig.begin(), orig.end());
    BatchLimits wide;
    wide.line = wide.point_cloud = wide.point = 64;
    const auto dup = SegmentObservations::build(object, dims, {scene.observations}, wide);
    EXPECT_NEAR(total_loss(dup, 0, geometry, probe, {}).total, before, 1e-15);
  }
}

TEST(TotalLoss, BatchMatchesSingleSamples) {
  Gen g(24);
  const auto object = build_soccer_field();
  const ImageDims dims{960, 540};
  const LossGeometry geometry(object);
  std::vector<SampleObservations> samples;
  std::vector<CameraParams> probes;
  std::vector<RadialDistortion> psis;
  for (int i = 0; i < 8; ++i) {
    CameraParams phi;
    samples.push_back(fieldcalib::testing::render_scene(g, fieldcalib::testing::well_posed_center(), object, dims, &phi, 2, {}, 1.0).observations);
    CameraParams probe = phi;
    probe.pan += g.uniform(-0.02, 0.02);
    probes.push_back(probe);
    psis.push_back(g.distortion(0.05, 0.01));
  }
  const auto batch = SegmentObservations::build(object, dims, samples);
  const auto all = total_loss_batch(batch, geometry, probes, psis);
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const auto single = SegmentObservations::build(object, dims, {samples[t]});
    EXPECT_NEAR(all[t].total, total_loss(single, 0, geometry, probes[t], psis[t]).total, 1e-12);
  }
  EXPECT_THROW(total_loss_batch(batch, geometry, {probes[0]}, {psis[0]}), Error);
  EXPECT_THROW(total_loss(batch, 99, geometry, probes[0], psis[0]), Error);
}

TEST(TotalLoss, NonNegative) {
  Gen g(25);
  const auto object = build_soccer_field();
  const ImageDims dims{960, 540};
  const LossGeometry geometry(object);
  for (int i = 0; i < 50; ++i) {
    CameraParams phi;
    const auto scene = fieldcalib::testing::render_scene(g, fieldcalib::testing::well_posed_center(), object, dims, &phi, 1, {}, 5.0);
    const auto obs = SegmentObservations::build(object, dims, {scene.observations});
    try {
      const auto r = total_loss(obs, 0, geometry, g.broadcast_camera(), g.distortion(0.05, 0.01));
      EXPECT_GE(r.total, 0.0);
      for (const auto& [name, v] : r.per_segment) EXPECT_GE(v, 0.0);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDegenerateGeometry);
    }
  }
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  Gen g(26);
  const auto object = build_soccer_field();
  const ImageDims dims{960, 540};
  const LossGeometry geometry(object);
  int checked = 0;
  int components = 0;
  int kinks = 0;
  while (checked < 100) {
    CameraParams truth;
    const auto scene = fieldcalib::testing::render_scene(g, fieldcalib::testing::well_posed_center(), object, dims, &truth, 1, {}, 2.0);
    const auto obs = SegmentObservations::build(object, dims, {scene.observations});
    CameraParams phi = truth;
    phi.fov *= 1.0 + g.uniform(-0.05, 0.05);
    phi.pan += g.uniform(-0.03, 0.03);
    phi.tilt += g.uniform(-0.03, 0.03);
    phi.roll += g.uniform(-0.03, 0.03);
    phi.position += g.vec3(-2, 2);
    const RadialDistortion psi = g.distortion(0.05, 0.01);
    LossGradient lg;
    try {
      lg = loss_and_gradient(obs, 0, geometry, phi, psi);
    } catch (const Error&) {
      continue;
    }
    ++checked;
    EXPECT_NEAR(lg.value, total_loss(obs, 0, geometry, phi, psi).total, 1e-15);
    auto eval = [&](int k, double d) {
      CameraParams c = phi;
      RadialDistortion q = psi;
      switch (k) {
        case kFov: c.fov += d; break;
        case kPan: c.pan += d; break;
        case kTilt: c.tilt += d; break;
        case kRoll: c.roll += d; break;
        case kTx: c.position.x() += d; break;
        case kTy: c.position.y() += d; break;
        case kTz: c.position.z() += d; break;
        case kK1: q.k1 += d; break;
        default: q.k2 += d; break;
      }
      return total_loss(obs, 0, geometry, c, q).total;
    };
    constexpr double h = 1e-6;
    for (int k = 0; k < kNumParams; ++k) {
      const double fd = (eval(k, h) - eval(k, -h)) / (2 * h);
      const double tol = std::max(1e-4 * std::abs(fd), 1e-8);
      // A nearest cloud sample that switches inside the stencil is a kink;
      // the two step sizes then disagree.
      const double fd_fine = (eval(k, h / 10) - eval(k, -h / 10)) / (h / 5);
      ++components;
      if (std::abs(fd - fd_fine) > tol) {
        ++kinks;
        continue;
      }
      EXPECT_LE(std::abs(lg.gradient[k] - fd), tol) << "component " << k << " analytic " << lg.gradient[k] << " fd " << fd;
    }
  }
  EXPECT_LT(kinks, components / 50);
}
