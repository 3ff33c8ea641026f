#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fieldcalib/types.hpp"

namespace fieldcalib {

enum class SegmentCategory { kPoint, kLine, kPointCloud };

const char* to_string(SegmentCategory category);

struct SegmentLabel {
  std::string name;
  SegmentCategory category = SegmentCategory::kLine;
};

struct LineSegment3D {
  Vec3 x0 = Vec3::Zero();
  Vec3 x1 = Vec3::UnitX();
};

enum class ArcSampling {
  // n points spread over [theta_begin, theta_end], both endpoints included.
  kEndpoints,
  // n cells per full turn starting at theta_begin of the parent circle; only
  // the cell centers falling into [theta_begin, theta_end) are kept. Sub-arcs
  // sharing the same phase origin therefore partition the parent samples.
  kCellCentered,
};

// Circle arc in a plane of constant z. Angles are measured from +x towards +y.
struct ArcGenerator {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  double theta_begin = 0.0;
  double theta_end = 2.0 * kPi;
  ArcSampling sampling = ArcSampling::kEndpoints;
  // Only used by kCellCentered: angle at which cell 0 of the parent circle starts.
  double phase = 0.0;

  Vec3 point_at(double theta) const;
  double arc_length() const { return radius * (theta_end - theta_begin); }
};

struct PointCloudSegment3D {
  std::vector<Vec3> points;
  std::optional<ArcGenerator> generator;
};

struct PointSegment3D {
  Vec3 x = Vec3::Zero();
};

using SegmentGeometry = std::variant<PointSegment3D, LineSegment3D, PointCloudSegment3D>;

struct Segment {
  SegmentLabel label;
  SegmentGeometry geometry;
};

// IFAB marking dimensions in meters. build_soccer_field scales all of them
// uniformly when the requested pitch is smaller than 105 x 68.
struct PitchMarkings {
  double goal_width = 7.32;
  double goal_height = 2.44;
  double penalty_area_width = 40.32;
  double penalty_area_length = 16.5;
  double goal_area_width = 18.32;
  double goal_area_length = 5.5;
  double circle_radius = 9.15;
  double penalty_mark_distance = 11.0;
};

// Immutable set of labeled 3D segments. World frame: origin at the field
// center, x along the length, y along the width, z pointing down (cameras
// above the pitch have negative z). Field markings lie in z = 0.
class CalibrationObject {
 public:
  CalibrationObject(std::vector<Segment> segments, double field_length, double field_width);

  const std::vector<Segment>& segments() const { return segments_; }
  const Segment* find(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  // Segment indices of one category in object order (the S axis of batches).
  const std::vector<std::size_t>& indices(SegmentCategory category) const;

  double field_length() const { return field_length_; }
  double field_width() const { return field_width_; }

 private:
  std::vector<Segment> segments_;
  std::vector<std::size_t> by_category_[3];
  double field_length_;
  double field_width_;
};

namespace labels {
inline constexpr std::string_view kCircleCentral = "Circle central";
inline constexpr std::string_view kCircleCentralLeft = "Circle central left";
inline constexpr std::string_view kCircleCentralRight = "Circle central right";
inline constexpr std::string_view kMiddleLine = "Middle line";
}  // namespace labels

// Labels of the annotation taxonomy that carry no geometry and are skipped.
bool is_ignored_label(std::string_view name);

// Maps known spelling variants of the public annotation release (e.g. the
// trailing blank in "Goal left post left ") onto canonical names.
std::string canonical_label(std::string_view name);

// True for the two central-circle halves introduced by the split heuristic.
bool is_split_half(std::string_view name);

CalibrationObject build_soccer_field(double length = 105.0, double width = 68.0);

std::vector<Vec3> sample_point_cloud(const PointCloudSegment3D& segment, std::size_t n);

struct CircleSplit {
  std::vector<Vec2> left;
  std::vector<Vec2> right;
  bool split = false;
};

// Maximum angle between the fitted middle line and the image y-axis.
inline constexpr double kMiddleLineMaxTiltRad = 25.0 * kPi / 180.0;

// Assigns central-circle pixels (raster coordinates) to the left or right
// half by their side of the fitted middle line. When the middle line is
// missing or not roughly vertical, `split` is false and both lists are empty.
CircleSplit split_central_circle(const std::vector<Vec2>& circle_pixels,
                                 const std::vector<Vec2>& middle_line_pixels);

nlohmann::json field_template_json(const CalibrationObject& object);

}  // namespace fieldcalib
