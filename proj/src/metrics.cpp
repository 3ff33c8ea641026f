#include "fieldcalib/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

namespace fieldcalib {

std::vector<Vec3> dense_samples(const SegmentGeometry& geometry, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sampling step must be positive");
  std::vector<Vec3> out;
  if (const auto* l = std::get_if<LineSegment3D>(&geometry)) {
    const double len = (l->x1 - l->x0).norm();
    const auto n = static_cast<std::size_t>(std::max(2.0, std::ceil(len / step) + 1.0));
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double u = static_cast<double>(k) / static_cast<double>(n - 1);
      out.push_back(l->x0 + u * (l->x1 - l->x0));
    }
  } else if (const auto* p = std::get_if<PointSegment3D>(&geometry)) {
    out.push_back(p->x);
  } else if (const auto* pc = std::get_if<PointCloudSegment3D>(&geometry)) {
    if (pc->generator) {
      const auto& g = *pc->generator;
      const auto n = static_cast<std::size_t>(std::max(2.0, std::ceil(g.arc_length() / step) + 1.0));
      out.reserve(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(n - 1);
        out.push_back(g.point_at(g.theta_begin + u * (g.theta_end - g.theta_begin)));
      }
    } else {
      out = pc->points;
    }
  }
  return out;
}

std::vector<Polyline> reproject_segment_polyline(const CameraParams& phi, const RadialDistortion& psi,
                                                 const SegmentGeometry& geometry, const ImageDims& dims) {
  const Projector<double> project(phi, dims.aspect());
  const double mx = kReprojectionMargin * dims.width;
  const double my = kReprojectionMargin * dims.height;
  std::vector<Polyline> runs;
  Polyline current;
  for (const auto& x : dense_samples(geometry)) {
    const auto pr = project(x);
    bool keep = pr.in_front && on_monotone_branch(psi, pr.ndc);
    Vec2 px = Vec2::Zero();
    if (keep) {
      px = ndc_to_raster(distort<double>(psi, pr.ndc), dims);
      keep = px.x() >= -mx && px.x() <= dims.width + mx && px.y() >= -my && px.y() <= dims.height + my;
    }
    if (keep) {
      current.push_back(px);
    } else if (!current.empty()) {
      runs.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) runs.push_back(std::move(current));
  return runs;
}

bool is_present(const std::vector<Polyline>& runs, const ImageDims& dims) {
  std::size_t inside = 0;
  for (const auto& run : runs) {
    for (const auto& p : run) {
      if (p.x() >= 0.0 && p.x() < dims.width && p.y() >= 0.0 && p.y() < dims.height) ++inside;
    }
  }
  return inside >= 2;
}

ImagePrediction reproject_object(const CameraParams& phi, const RadialDistortion& psi,
                                 const CalibrationObject& object, const ImageDims& dims) {
  ImagePrediction out;
  for (const auto& seg : object.segments()) {
    if (is_split_half(seg.label.name)) continue;
    auto runs = reproject_segment_polyline(phi, psi, seg.geometry, dims);
    if (is_present(runs, dims)) out.emplace(seg.label.name, std::move(runs));
  }
  return out;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double u = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + u * ab)).norm();
}

double point_polyline_distance(const Vec2& p, const std::vector<Polyline>& runs) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& run : runs) {
    if (run.size() == 1) best = std::min(best, (p - run.front()).norm());
    for (std::size_t i = 1; i < run.size(); ++i) {
      best = std::min(best, point_segment_distance(p, run[i - 1], run[i]));
    }
  }
  return best;
}

double EvalCounts::accuracy() const {
  const std::size_t denom = tp + fp + fn;
  return denom == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

EvalCounts& EvalCounts::operator+=(const EvalCounts& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

EvalCounts ac_at_t(const ImagePrediction& prediction, const ImageAnnotations& annotation, double t) {
  EvalCounts c;
  for (const auto& [label, runs] : prediction) {
    const auto it = annotation.find(label);
    if (it == annotation.end()) {
      ++c.fp;
      continue;
    }
    bool all_within = true;
    for (const auto& p : it->second) {
      if (!(point_polyline_distance(p, runs) < t)) {
        all_within = false;
        break;
      }
    }
    ++(all_within ? c.tp : c.fp);
  }
  for (const auto& [label, pts] : annotation) {
    if (!prediction.count(label)) ++c.fn;
  }
  return c;
}

double compound_score(double ac5, double ac10, double ac20, double cr) {
  for (double v : {ac5, ac10, ac20, cr}) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "scores must lie in [0, 1]");
  }
  const double weighted = kAccuracyWeights[0] * ac5 + kAccuracyWeights[1] * ac10 + kAccuracyWeights[2] * ac20;
  return (1.0 - std::exp(-4.0 * cr)) * weighted;
}

double completeness_ratio(std::size_t delivered, std::size_t total) {
  if (total == 0 || delivered > total) {
    throw Error(ErrorCode::kInvalidArgument, "completeness ratio needs 0 <= delivered <= total, total > 0");
  }
  return static_cast<double>(delivered) / static_cast<double>(total);
}

namespace {

struct Canvas {
  double x0, y0, step;
  int nx, ny;

  Vec3 center(int i, int j) const { return {x0 + (i + 0.5) * step, y0 + (j + 0.5) * step, 1.0}; }
};

bool in_field(const Vec3& h, const TopViewGrid& g) {
  if (!(h.z() > 0.0)) return false;
  const double x = h.x() / h.z();
  const double y = h.y() / h.z();
  return std::abs(x) <= 0.5 * g.field_length && std::abs(y) <= 0.5 * g.field_width;
}

bool in_image(const Vec3& h, const ImageDims& dims) {
  if (!(h.z() > 0.0)) return false;
  const double u = h.x() / h.z();
  const double v = h.y() / h.z();
  return u >= 0.0 && u < dims.width && v >= 0.0 && v < dims.height;
}

double iou_of(const Canvas& canvas, const auto& mask_a, const auto& mask_b) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (int j = 0; j < canvas.ny; ++j) {
    for (int i = 0; i < canvas.nx; ++i) {
      const Vec3 x = canvas.center(i, j);
      const bool a = mask_a(x);
      const bool b = mask_b(x);
      inter += (a && b) ? 1 : 0;
      uni += (a || b) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

double iou_topview(const Homography& pred, const Homography& gt, const ImageDims& dims, IouMode mode,
                   const TopViewGrid& grid) {
  const Mat3 hp = pred.world_to_image();
  const Mat3 hg = gt.world_to_image();
  const Mat3 hp_inv = hp.inverse();
  const Mat3 hg_inv = hg.inverse();

  Canvas canvas;
  canvas.step = 1.0 / grid.pixels_per_meter;
  canvas.x0 = -0.5 * grid.field_length - grid.margin;
  canvas.y0 = -0.5 * grid.field_width - grid.margin;
  canvas.nx = static_cast<int>(std::lround((grid.field_length + 2.0 * grid.margin) * grid.pixels_per_meter));
  canvas.ny = static_cast<int>(std::lround((grid.field_width + 2.0 * grid.margin) * grid.pixels_per_meter));

  auto field = [&](const Vec3& x) { return in_field(x, grid); };

  if (mode == IouMode::kPart) {
    auto visible = [&](const Mat3& h) {
      return [&, h](const Vec3& x) { return field(x) && in_image(h * x, dims); };
    };
    return iou_of(canvas, visible(hp), visible(hg));
  }

  // Whole field carried through the image by one homography and back by the
  // other; averaged over both directions so the score is symmetric.
  auto warped = [&](const Mat3& to_image, const Mat3& from_image) {
    return [&, to_image, from_image](const Vec3& x) {
      const Vec3 img = to_image * x;
      if (!(img.z() > 0.0)) return false;
      return field(from_image * img);
    };
  };
  const double forward = iou_of(canvas, field, warped(hp, hg_inv));
  const double backward = iou_of(canvas, field, warped(hg, hp_inv));
  return 0.5 * (forward + backward);
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace fieldcalib
