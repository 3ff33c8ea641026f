#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fieldcalib/camera.hpp"
#include "fieldcalib/field_model.hpp"

namespace fieldcalib {

using Polyline = std::vector<Vec2>;

// Annotated polylines of one image in raster pixels, keyed by segment label.
using ImageAnnotations = std::map<std::string, std::vector<Vec2>>;

// Reprojected segments of one image; each segment may be split into several
// visible runs where it leaves the image.
using ImagePrediction = std::map<std::string, std::vector<Polyline>>;

struct PolylineAnnotation {
  std::string label;
  std::vector<Vec2> points;
};

inline constexpr double kDenseSampleStep = 0.2;    // meters
inline constexpr double kReprojectionMargin = 0.05;  // fraction of the image size

// World points along a segment, spaced at most `step` meters apart.
std::vector<Vec3> dense_samples(const SegmentGeometry& geometry, double step = kDenseSampleStep);

std::vector<Polyline> reproject_segment_polyline(const CameraParams& phi, const RadialDistortion& psi,
                                                 const SegmentGeometry& geometry, const ImageDims& dims);

// A reprojected segment counts as present when at least two of its points
// fall inside the image proper.
bool is_present(const std::vector<Polyline>& runs, const ImageDims& dims);

// Reprojects every evaluation segment (all but the central-circle halves) and
// keeps the present ones.
ImagePrediction reproject_object(const CameraParams& phi, const RadialDistortion& psi,
                                 const CalibrationObject& object, const ImageDims& dims);

// Distance to the closest edge (finite segment) of any run.
double point_polyline_distance(const Vec2& p, const std::vector<Polyline>& runs);
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

struct EvalCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double accuracy() const;
  EvalCounts& operator+=(const EvalCounts& other);
};

EvalCounts ac_at_t(const ImagePrediction& prediction, const ImageAnnotations& annotation, double t);

inline constexpr std::array<double, 3> kAccuracyThresholds{5.0, 10.0, 20.0};
inline constexpr std::array<double, 3> kAccuracyWeights{0.5, 0.35, 0.15};

double compound_score(double ac5, double ac10, double ac20, double cr);

double completeness_ratio(std::size_t delivered, std::size_t total);

enum class IouMode { kPart, kWhole };

struct TopViewGrid {
  double pixels_per_meter = 10.0;
  double field_length = 105.0;
  double field_width = 68.0;
  // Canvas margin around the field, in meters, so shifted masks are not clipped.
  double margin = 30.0;
};

// Binary IoU of the field template warped into the top view by the predicted
// and the ground-truth homography (both world->image after normalization).
double iou_topview(const Homography& pred, const Homography& gt, const ImageDims& dims, IouMode mode,
                   const TopViewGrid& grid = {});

double median(std::vector<double> values);

}  // namespace fieldcalib
