#include "fieldcalib/field_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace fieldcalib {

const char* to_string(SegmentCategory category) {
  switch (category) {
    case SegmentCategory::kPoint:
      return "point";
    case SegmentCategory::kLine:
      return "line";
    case SegmentCategory::kPointCloud:
      return "point_cloud";
  }
  return "unknown";
}

Vec3 ArcGenerator::point_at(double theta) const {
  return center + radius * Vec3(std::cos(theta), std::sin(theta), 0.0);
}

CalibrationObject::CalibrationObject(std::vector<Segment> segments, double field_length,
                                     double field_width)
    : segments_(std::move(segments)), field_length_(field_length), field_width_(field_width) {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& seg = segments_[i];
    for (std::size_t j = 0; j < i; ++j) {
      if (segments_[j].label.name == seg.label.name) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate segment label '" + seg.label.name + "'");
      }
    }
    if (const auto* line = std::get_if<LineSegment3D>(&seg.geometry)) {
      if ((line->x1 - line->x0).norm() == 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "zero-length line '" + seg.label.name + "'");
      }
    } else if (const auto* pc = std::get_if<PointCloudSegment3D>(&seg.geometry)) {
      if (pc->points.size() < 2) {
        throw Error(ErrorCode::kInvalidArgument,
                    "point cloud '" + seg.label.name + "' needs at least two points");
      }
    }
    by_category_[static_cast<int>(seg.label.category)].push_back(i);
  }
}

const Segment* CalibrationObject::find(std::string_view name) const {
  const auto idx = index_of(name);
  return idx ? &segments_[*idx] : nullptr;
}

std::optional<std::size_t> CalibrationObject::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].label.name == name) return i;
  }
  return std::nullopt;
}

const std::vector<std::size_t>& CalibrationObject::indices(SegmentCategory category) const {
  return by_category_[static_cast<int>(category)];
}

bool is_ignored_label(std::string_view name) {
  return name == "Goal unknown" || name == "Line unknown";
}

std::string canonical_label(std::string_view name) {
  std::size_t end = name.size();
  while (end > 0 && name[end - 1] == ' ') --end;
  return std::string(name.substr(0, end));
}

bool is_split_half(std::string_view name) {
  return name == labels::kCircleCentralLeft || name == labels::kCircleCentralRight;
}

namespace {

Segment line(std::string name, Vec3 a, Vec3 b) {
  return Segment{{std::move(name), SegmentCategory::kLine}, LineSegment3D{a, b}};
}

Segment arc(std::string name, const ArcGenerator& gen) {
  PointCloudSegment3D pc;
  pc.generator = gen;
  pc.points = sample_point_cloud(pc, 128);
  return Segment{{std::move(name), SegmentCategory::kPointCloud}, std::move(pc)};
}

}  // namespace

CalibrationObject build_soccer_field(double length, double width) {
  if (!(length > 0.0) || !(width > 0.0) || !std::isfinite(length) || !std::isfinite(width)) {
    throw Error(ErrorCode::kInvalidArgument, "field dimensions must be positive");
  }
  PitchMarkings m;
  const double s = std::min({1.0, length / 105.0, width / 68.0});
  m.goal_width *= s;
  m.goal_height *= s;
  m.penalty_area_width *= s;
  m.penalty_area_length *= s;
  m.goal_area_width *= s;
  m.goal_area_length *= s;
  m.circle_radius *= s;
  m.penalty_mark_distance *= s;

  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  const double gz = -m.goal_height;  // z points down
  const double gy = 0.5 * m.goal_width;

  std::vector<Segment> segs;
  segs.push_back(line("Side line top", {-hl, -hw, 0}, {hl, -hw, 0}));
  segs.push_back(line("Side line bottom", {-hl, hw, 0}, {hl, hw, 0}));
  segs.push_back(line("Side line left", {-hl, -hw, 0}, {-hl, hw, 0}));
  segs.push_back(line("Side line right", {hl, -hw, 0}, {hl, hw, 0}));
  segs.push_back(line("Middle line", {0, -hw, 0}, {0, hw, 0}));

  struct Box {
    const char* name;
    double depth;
    double half_width;
  };
  const std::array<Box, 2> boxes{{{"Big rect.", m.penalty_area_length, 0.5 * m.penalty_area_width},
                                  {"Small rect.", m.goal_area_length, 0.5 * m.goal_area_width}}};
  for (const auto& box : boxes) {
    for (int side : {-1, 1}) {
      const std::string prefix = std::string(box.name) + (side < 0 ? " left " : " right ");
      const double goal_x = side * hl;
      const double inner_x = side * (hl - box.depth);
      segs.push_back(line(prefix + "top", {goal_x, -box.half_width, 0}, {inner_x, -box.half_width, 0}));
      segs.push_back(line(prefix + "main", {inner_x, -box.half_width, 0}, {inner_x, box.half_width, 0}));
      segs.push_back(line(prefix + "bottom", {goal_x, box.half_width, 0}, {inner_x, box.half_width, 0}));
    }
  }

  // Post naming follows a viewer on the pitch facing the goal.
  segs.push_back(line("Goal left crossbar", {-hl, -gy, gz}, {-hl, gy, gz}));
  segs.push_back(line("Goal left post left", {-hl, gy, 0}, {-hl, gy, gz}));
  segs.push_back(line("Goal left post right", {-hl, -gy, 0}, {-hl, -gy, gz}));
  segs.push_back(line("Goal right crossbar", {hl, -gy, gz}, {hl, gy, gz}));
  segs.push_back(line("Goal right post left", {hl, -gy, 0}, {hl, -gy, gz}));
  segs.push_back(line("Goal right post right", {hl, gy, 0}, {hl, gy, gz}));

  const double r = m.circle_radius;
  const double phase = -0.5 * kPi;
  segs.push_back(arc(std::string(labels::kCircleCentral),
                     {Vec3::Zero(), r, phase, phase + 2.0 * kPi, ArcSampling::kCellCentered, phase}));
  segs.push_back(arc(std::string(labels::kCircleCentralLeft),
                     {Vec3::Zero(), r, 0.5 * kPi, 1.5 * kPi, ArcSampling::kCellCentered, phase}));
  segs.push_back(arc(std::string(labels::kCircleCentralRight),
                     {Vec3::Zero(), r, -0.5 * kPi, 0.5 * kPi, ArcSampling::kCellCentered, phase}));

  // Penalty arcs: the part of the circle around the penalty mark outside the box.
  const double alpha = std::acos((m.penalty_area_length - m.penalty_mark_distance) / r);
  segs.push_back(arc("Circle left", {Vec3(-hl + m.penalty_mark_distance, 0, 0), r, -alpha, alpha,
                                     ArcSampling::kEndpoints, 0.0}));
  segs.push_back(arc("Circle right", {Vec3(hl - m.penalty_mark_distance, 0, 0), r, kPi - alpha,
                                      kPi + alpha, ArcSampling::kEndpoints, 0.0}));

  return CalibrationObject(std::move(segs), length, width);
}

std::vector<Vec3> sample_point_cloud(const PointCloudSegment3D& segment, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "point cloud sampling needs n >= 2");
  std::vector<Vec3> out;
  if (segment.generator) {
    const auto& g = *segment.generator;
    if (g.sampling == ArcSampling::kEndpoints) {
      out.reserve(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(n - 1);
        out.push_back(g.point_at(g.theta_begin + u * (g.theta_end - g.theta_begin)));
      }
    } else {
      const double cell = 2.0 * kPi / static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double theta = g.phase + cell * (static_cast<double>(k) + 0.5);
        // Compare on the same turn as [theta_begin, theta_end).
        double t = theta;
        while (t < g.theta_begin) t += 2.0 * kPi;
        while (t >= g.theta_begin + 2.0 * kPi) t -= 2.0 * kPi;
        if (t < g.theta_end) out.push_back(g.point_at(theta));
      }
    }
    return out;
  }
  const std::size_t m = segment.points.size();
  if (m < n) {
    throw Error(ErrorCode::kInvalidArgument, "point cloud has fewer stored points than requested");
  }
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double pos = static_cast<double>(k) * static_cast<double>(m - 1) / static_cast<double>(n - 1);
    out.push_back(segment.points[static_cast<std::size_t>(std::llround(pos))]);
  }
  return out;
}

CircleSplit split_central_circle(const std::vector<Vec2>& circle_pixels,
                                 const std::vector<Vec2>& middle_line_pixels) {
  CircleSplit result;
  if (middle_line_pixels.size() < 2) return result;

  Vec2 mean = Vec2::Zero();
  for (const auto& p : middle_line_pixels) mean += p;
  mean /= static_cast<double>(middle_line_pixels.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : middle_line_pixels) cov += (p - mean) * (p - mean).transpose();
  if (cov.trace() <= 0.0) return result;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Vec2 dir = eig.eigenvectors().col(1);  // largest eigenvalue
  const double angle_to_y = std::acos(std::min(1.0, std::abs(dir.y())));
  if (!(angle_to_y < kMiddleLineMaxTiltRad)) return result;

  for (const auto& p : circle_pixels) {
    const double x_line = mean.x() + dir.x() / dir.y() * (p.y() - mean.y());
    (p.x() < x_line ? result.left : result.right).push_back(p);
  }
  result.split = true;
  return result;
}

nlohmann::json field_template_json(const CalibrationObject& object) {
  auto vec = [](const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& seg : object.segments()) {
    nlohmann::json j;
    j["label"] = seg.label.name;
    j["category"] = to_string(seg.label.category);
    if (const auto* l = std::get_if<LineSegment3D>(&seg.geometry)) {
      j["x0"] = vec(l->x0);
      j["x1"] = vec(l->x1);
    } else if (const auto* p = std::get_if<PointSegment3D>(&seg.geometry)) {
      j["x"] = vec(p->x);
    } else if (const auto* pc = std::get_if<PointCloudSegment3D>(&seg.geometry)) {
      if (pc->generator) {
        const auto& g = *pc->generator;
        j["generator"] = {{"center", vec(g.center)},
                          {"radius", g.radius},
                          {"theta_begin", g.theta_begin},
                          {"theta_end", g.theta_end},
                          {"phase", g.phase},
                          {"sampling", g.sampling == ArcSampling::kEndpoints ? "endpoints" : "cell_centered"}};
      } else {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& q : pc->points) pts.push_back(vec(q));
        j["points"] = std::move(pts);
      }
    }
    segs.push_back(std::move(j));
  }
  return {{"field_length", object.field_length()},
          {"field_width", object.field_width()},
          {"segments", std::move(segs)}};
}

}  // namespace fieldcalib
