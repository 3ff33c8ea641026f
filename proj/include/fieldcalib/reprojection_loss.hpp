#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fieldcalib/camera.hpp"
#include "fieldcalib/field_model.hpp"

namespace fieldcalib {

// Padded per-category store of annotated NDC pixels for T samples:
// pixels are laid out T x S x N x 2, the mask T x S x N. The S axis follows the
// calibration object's segment order for the category.
struct CategoryBatch {
  SegmentCategory category = SegmentCategory::kLine;
  std::size_t samples = 0;     // T
  std::size_t segments = 0;    // S
  std::size_t max_points = 0;  // N
  std::vector<std::size_t> object_index;  // S entries
  std::vector<double> pixels;
  std::vector<std::uint8_t> mask;
  std::vector<std::uint32_t> counts;  // T x S

  std::size_t offset(std::size_t t, std::size_t s, std::size_t n) const {
    return (t * segments + s) * max_points + n;
  }
  Vec2 pixel(std::size_t t, std::size_t s, std::size_t n) const {
    const std::size_t o = 2 * offset(t, s, n);
    return {pixels[o], pixels[o + 1]};
  }
  bool valid(std::size_t t, std::size_t s, std::size_t n) const { return mask[offset(t, s, n)] != 0; }
  std::uint32_t count(std::size_t t, std::size_t s) const { return counts[t * segments + s]; }
};

// Annotated pixels of one sample: segment label -> NDC points.
using SampleObservations = std::map<std::string, std::vector<Vec2>>;

struct BatchLimits {
  std::size_t line = 4;
  std::size_t point_cloud = 8;
  std::size_t point = 1;
};

struct SegmentObservations {
  ImageDims dims;
  std::size_t samples = 0;
  CategoryBatch point;
  CategoryBatch line;
  CategoryBatch point_cloud;

  const CategoryBatch& batch(SegmentCategory category) const;

  // Number of segments of sample t with at least one annotation.
  std::size_t observed_segments(std::size_t t) const;

  // Builds padded batches. Labels must exist in `object`; segments with more
  // points than the category limit are rejected (select points first).
  static SegmentObservations build(const CalibrationObject& object, const ImageDims& dims,
                                   const std::vector<SampleObservations>& samples,
                                   const BatchLimits& limits = {});
};

struct LossBreakdown {
  double total = 0.0;
  std::map<std::string, double> per_segment;
  std::size_t visible_count = 0;
};

// Order of the gradient components returned by loss_and_gradient.
enum ParamIndex : int { kFov = 0, kPan, kTilt, kRoll, kTx, kTy, kTz, kK1, kK2, kNumParams };

using ParamVector = Eigen::Matrix<double, kNumParams, 1>;

struct LossGradient {
  double value = 0.0;
  ParamVector gradient = ParamVector::Zero();
};

// Object geometry prepared for repeated loss evaluation: line endpoints,
// point-cloud samples (n_pc per cloud) and points, indexed like the object.
class LossGeometry {
 public:
  explicit LossGeometry(const CalibrationObject& object, std::size_t n_pc_samples = 128);

  const CalibrationObject& object() const { return *object_; }
  const LineSegment3D& line(std::size_t object_index) const { return lines_[object_index]; }
  const std::vector<Vec3>& cloud(std::size_t object_index) const { return clouds_[object_index]; }
  const Vec3& point(std::size_t object_index) const { return points_[object_index]; }

 private:
  const CalibrationObject* object_;
  std::vector<LineSegment3D> lines_;
  std::vector<std::vector<Vec3>> clouds_;
  std::vector<Vec3> points_;
};

inline constexpr double kDegenerateLineLength = 1e-12;

// Perpendicular distance of p to the infinite line through a and b.
// Throws kDegenerateGeometry when |b - a| < 1e-12.
double point_line_distance(const Vec2& p, const Vec2& a, const Vec2& b);

// Minimum Euclidean distance of p to the cloud. Throws kDegenerateGeometry for
// an empty cloud.
double point_cloud_distance(const Vec2& p, const std::vector<Vec2>& cloud);

// Segment reprojection loss of sample t: mean over observed segments of the
// mean pixel distance to the reprojected segment. Throws kEmptyObservation if
// the sample has no annotations and kDegenerateGeometry if every observed
// segment had to be masked.
LossBreakdown total_loss(const SegmentObservations& obs, std::size_t t, const LossGeometry& geometry,
                         const CameraParams& phi, const RadialDistortion& psi);

LossBreakdown total_loss(const SegmentObservations& obs, const CalibrationObject& object,
                         const CameraParams& phi, const RadialDistortion& psi, std::size_t t = 0);

// Per-sample evaluation of all T samples with per-sample parameters.
std::vector<LossBreakdown> total_loss_batch(const SegmentObservations& obs,
                                            const LossGeometry& geometry,
                                            const std::vector<CameraParams>& phis,
                                            const std::vector<RadialDistortion>& psis);

// Loss value and its gradient with respect to (fov, pan, tilt, roll, t, k1, k2).
LossGradient loss_and_gradient(const SegmentObservations& obs, std::size_t t,
                               const LossGeometry& geometry, const CameraParams& phi,
                               const RadialDistortion& psi);

}  // namespace fieldcalib
