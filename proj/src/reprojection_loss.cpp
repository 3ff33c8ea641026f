#include "fieldcalib/reprojection_loss.hpp"

#include <cmath>
#include <limits>
#include <type_traits>

#include <Eigen/Geometry>
#include <unsupported/Eigen/AutoDiff>

namespace fieldcalib {

using Jet = Eigen::AutoDiffScalar<ParamVector>;

const CategoryBatch& SegmentObservations::batch(SegmentCategory category) const {
  switch (category) {
    case SegmentCategory::kPoint:
      return point;
    case SegmentCategory::kLine:
      return line;
    case SegmentCategory::kPointCloud:
      break;
  }
  return point_cloud;
}

std::size_t SegmentObservations::observed_segments(std::size_t t) const {
  std::size_t n = 0;
  for (const auto* b : {&point, &line, &point_cloud}) {
    for (std::size_t s = 0; s < b->segments; ++s) n += b->count(t, s) > 0 ? 1 : 0;
  }
  return n;
}

SegmentObservations SegmentObservations::build(const CalibrationObject& object, const ImageDims& dims,
                                               const std::vector<SampleObservations>& samples,
                                               const BatchLimits& limits) {
  SegmentObservations obs;
  obs.dims = dims;
  obs.samples = samples.size();
  const std::array<std::pair<CategoryBatch*, std::size_t>, 3> cats{
      {{&obs.point, limits.point}, {&obs.line, limits.line}, {&obs.point_cloud, limits.point_cloud}}};
  const std::array<SegmentCategory, 3> kinds{SegmentCategory::kPoint, SegmentCategory::kLine,
                                             SegmentCategory::kPointCloud};
  for (std::size_t c = 0; c < 3; ++c) {
    auto& b = *cats[c].first;
    b.category = kinds[c];
    b.samples = samples.size();
    b.object_index = object.indices(kinds[c]);
    b.segments = b.object_index.size();
    b.max_points = cats[c].second;
    b.pixels.assign(2 * b.samples * b.segments * b.max_points, 0.0);
    b.mask.assign(b.samples * b.segments * b.max_points, 0);
    b.counts.assign(b.samples * b.segments, 0);
  }

  for (std::size_t t = 0; t < samples.size(); ++t) {
    for (const auto& [name, pts] : samples[t]) {
      const auto idx = object.index_of(name);
      if (!idx) throw Error(ErrorCode::kUnknownLabel, "segment '" + name + "' is not part of the object");
      const auto cat = object.segments()[*idx].label.category;
      auto& b = *cats[static_cast<std::size_t>(cat)].first;
      std::size_t s = 0;
      while (b.object_index[s] != *idx) ++s;
      if (pts.size() > b.max_points) {
        throw Error(ErrorCode::kInvalidArgument,
                    "segment '" + name + "' has more points than the batch allows");
      }
      for (std::size_t n = 0; n < pts.size(); ++n) {
        if (!pts[n].allFinite()) throw Error(ErrorCode::kMalformedInput, "non-finite pixel in '" + name + "'");
        const std::size_t o = b.offset(t, s, n);
        b.pixels[2 * o] = pts[n].x();
        b.pixels[2 * o + 1] = pts[n].y();
        b.mask[o] = 1;
      }
      b.counts[t * b.segments + s] = static_cast<std::uint32_t>(pts.size());
    }
  }
  return obs;
}

LossGeometry::LossGeometry(const CalibrationObject& object, std::size_t n_pc_samples)
    : object_(&object) {
  const auto& segs = object.segments();
  lines_.resize(segs.size());
  clouds_.resize(segs.size());
  points_.resize(segs.size(), Vec3::Zero());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (const auto* l = std::get_if<LineSegment3D>(&segs[i].geometry)) {
      lines_[i] = *l;
    } else if (const auto* pc = std::get_if<PointCloudSegment3D>(&segs[i].geometry)) {
      clouds_[i] = pc->generator ? sample_point_cloud(*pc, n_pc_samples) : pc->points;
    } else if (const auto* p = std::get_if<PointSegment3D>(&segs[i].geometry)) {
      points_[i] = p->x;
    }
  }
}

double point_line_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (!(len >= kDegenerateLineLength)) {
    throw Error(ErrorCode::kDegenerateGeometry, "projected line is degenerate");
  }
  const Vec2 e = a - p;
  return std::abs(d.x() * e.y() - d.y() * e.x()) / len;
}

double point_cloud_distance(const Vec2& p, const std::vector<Vec2>& cloud) {
  if (cloud.empty()) throw Error(ErrorCode::kDegenerateGeometry, "empty point cloud");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : cloud) best = std::min(best, (p - q).squaredNorm());
  return std::sqrt(best);
}

namespace {

template <typename T>
T safe_norm(const Vec2T<T>& v) {
  using std::sqrt;
  const T sq = v.squaredNorm();
  if (!(sq > T(0))) return T(0);
  return sqrt(sq);
}

template <typename T>
struct SampleResult {
  T total{0.0};
  std::size_t visible = 0;
  // (object index, mean distance) per visible segment, in evaluation order.
  std::vector<std::pair<std::size_t, double>> per_segment;
};

// Nearest cloud sample per annotated point-cloud pixel. Filled by the double
// pass and reused by the differentiated pass, where only that sample is
// projected; the min is piecewise smooth so this gives the same gradient.
using ArgminTable = std::vector<int>;

template <typename T>
SampleResult<T> evaluate_sample(const SegmentObservations& obs, std::size_t t,
                                const LossGeometry& geometry, const BasicCameraParams<T>& phi,
                                const BasicRadialDistortion<T>& psi, ArgminTable& argmin,
                                bool record_per_segment) {
  using std::abs;
  constexpr bool kDouble = std::is_same_v<T, double>;
  SampleResult<T> out;
  const Projector<T> project(phi, obs.dims.aspect());
  const bool identity_psi = kDouble && psi.k1 == T(0) && psi.k2 == T(0);

  std::size_t argmin_pos = 0;
  std::size_t observed = 0;

  auto pixel = [&](const CategoryBatch& b, std::size_t s, std::size_t n, bool& ok) -> Vec2T<T> {
    const Vec2 raw = b.pixel(t, s, n);
    ok = true;
    if (identity_psi) return raw.cast<T>();
    return undistort<T>(psi, Vec2T<T>(raw.cast<T>()), &ok);
  };

  auto add_segment = [&](std::size_t object_index, const T& sum, std::size_t n) {
    if (n == 0) return;
    const T mean = sum / T(static_cast<double>(n));
    out.total += mean;
    ++out.visible;
    if (record_per_segment) {
      if constexpr (kDouble) {
        out.per_segment.emplace_back(object_index, mean);
      } else {
        out.per_segment.emplace_back(object_index, mean.value());
      }
    }
  };

  // Lines.
  const auto& lb = obs.line;
  for (std::size_t s = 0; s < lb.segments; ++s) {
    const std::size_t cnt = lb.count(t, s);
    if (cnt == 0) continue;
    ++observed;
    const auto& seg = geometry.line(lb.object_index[s]);
    const Projection<T> a = project(seg.x0);
    const Projection<T> b = project(seg.x1);
    if (!a.in_front && !b.in_front) continue;

    T sum(0.0);
    std::size_t n_valid = 0;
    if (a.in_front && b.in_front) {
      const Vec2T<T> d = b.ndc - a.ndc;
      const T len = safe_norm<T>(d);
      if (!(len >= T(kDegenerateLineLength))) continue;
      for (std::size_t n = 0; n < lb.max_points; ++n) {
        if (!lb.valid(t, s, n)) continue;
        bool ok = true;
        const Vec2T<T> p = pixel(lb, s, n, ok);
        if (!ok) continue;
        const Vec2T<T> e = a.ndc - p;
        sum += abs(d.x() * e.y() - d.y() * e.x()) / len;
        ++n_valid;
      }
    } else {
      // One endpoint behind the camera: the image line is still spanned by the
      // two homogeneous projections.
      const Vec3T<T> l = a.homogeneous.cross(b.homogeneous);
      const T len = safe_norm<T>(Vec2T<T>(l.x(), l.y()));
      if (!(len >= T(kDegenerateLineLength))) continue;
      for (std::size_t n = 0; n < lb.max_points; ++n) {
        if (!lb.valid(t, s, n)) continue;
        bool ok = true;
        const Vec2T<T> p = pixel(lb, s, n, ok);
        if (!ok) continue;
        sum += abs(l.x() * p.x() + l.y() * p.y() + l.z()) / len;
        ++n_valid;
      }
    }
    add_segment(lb.object_index[s], sum, n_valid);
  }

  // Point clouds.
  const auto& cb = obs.point_cloud;
  std::vector<Vec2T<T>> projected;
  std::vector<int> projected_index;
  for (std::size_t s = 0; s < cb.segments; ++s) {
    const std::size_t cnt = cb.count(t, s);
    if (cnt == 0) continue;
    ++observed;
    const auto& cloud = geometry.cloud(cb.object_index[s]);
    T sum(0.0);
    std::size_t n_valid = 0;
    if constexpr (kDouble) {
      projected.clear();
      projected_index.clear();
      for (std::size_t j = 0; j < cloud.size(); ++j) {
        const auto pr = project(cloud[j]);
        if (pr.in_front) {
          projected.push_back(pr.ndc);
          projected_index.push_back(static_cast<int>(j));
        }
      }
      for (std::size_t n = 0; n < cb.max_points; ++n) {
        if (!cb.valid(t, s, n)) continue;
        bool ok = true;
        const Vec2 p = pixel(cb, s, n, ok);
        if (!ok || projected.empty()) {
          argmin.push_back(-1);
          continue;
        }
        double best = std::numeric_limits<double>::infinity();
        int best_j = -1;
        for (std::size_t j = 0; j < projected.size(); ++j) {
          const double d2 = (p - projected[j]).squaredNorm();
          if (d2 < best) {
            best = d2;
            best_j = projected_index[j];
          }
        }
        argmin.push_back(best_j);
        sum += std::sqrt(best);
        ++n_valid;
      }
    } else {
      for (std::size_t n = 0; n < cb.max_points; ++n) {
        if (!cb.valid(t, s, n)) continue;
        const int j = argmin[argmin_pos++];
        if (j < 0) continue;
        bool ok = true;
        const Vec2T<T> p = pixel(cb, s, n, ok);
        if (!ok) continue;
        const auto pr = project(cloud[static_cast<std::size_t>(j)]);
        sum += safe_norm<T>(Vec2T<T>(p - pr.ndc));
        ++n_valid;
      }
    }
    add_segment(cb.object_index[s], sum, n_valid);
  }

  // Points.
  const auto& pb = obs.point;
  for (std::size_t s = 0; s < pb.segments; ++s) {
    const std::size_t cnt = pb.count(t, s);
    if (cnt == 0) continue;
    ++observed;
    const auto pr = project(geometry.point(pb.object_index[s]));
    if (!pr.in_front) continue;
    T sum(0.0);
    std::size_t n_valid = 0;
    for (std::size_t n = 0; n < pb.max_points; ++n) {
      if (!pb.valid(t, s, n)) continue;
      bool ok = true;
      const Vec2T<T> p = pixel(pb, s, n, ok);
      if (!ok) continue;
      sum += safe_norm<T>(Vec2T<T>(p - pr.ndc));
      ++n_valid;
    }
    add_segment(pb.object_index[s], sum, n_valid);
  }

  if (observed == 0) throw Error(ErrorCode::kEmptyObservation, "sample has no annotated segments");
  if (out.visible == 0) {
    throw Error(ErrorCode::kDegenerateGeometry, "no observed segment projects to valid image geometry");
  }
  out.total = out.total / T(static_cast<double>(out.visible));
  return out;
}

void check_sample(const SegmentObservations& obs, std::size_t t) {
  if (t >= obs.samples) throw Error(ErrorCode::kInvalidArgument, "sample index out of range");
}

}  // namespace

LossBreakdown total_loss(const SegmentObservations& obs, std::size_t t, const LossGeometry& geometry,
                         const CameraParams& phi, const RadialDistortion& psi) {
  check_sample(obs, t);
  ArgminTable argmin;
  const auto r = evaluate_sample<double>(obs, t, geometry, phi, psi, argmin, true);
  LossBreakdown out;
  out.total = r.total;
  out.visible_count = r.visible;
  for (const auto& [idx, mean] : r.per_segment) {
    out.per_segment[geometry.object().segments()[idx].label.name] = mean;
  }
  return out;
}

LossBreakdown total_loss(const SegmentObservations& obs, const CalibrationObject& object,
                         const CameraParams& phi, const RadialDistortion& psi, std::size_t t) {
  const LossGeometry geometry(object);
  return total_loss(obs, t, geometry, phi, psi);
}

std::vector<LossBreakdown> total_loss_batch(const SegmentObservations& obs,
                                            const LossGeometry& geometry,
                                            const std::vector<CameraParams>& phis,
                                            const std::vector<RadialDistortion>& psis) {
  if (phis.size() != obs.samples || psis.size() != obs.samples) {
    throw Error(ErrorCode::kInvalidArgument, "one camera and distortion per sample required");
  }
  std::vector<LossBreakdown> out;
  out.reserve(obs.samples);
  for (std::size_t t = 0; t < obs.samples; ++t) out.push_back(total_loss(obs, t, geometry, phis[t], psis[t]));
  return out;
}

LossGradient loss_and_gradient(const SegmentObservations& obs, std::size_t t,
                               const LossGeometry& geometry, const CameraParams& phi,
                               const RadialDistortion& psi) {
  check_sample(obs, t);
  ArgminTable argmin;
  const auto plain = evaluate_sample<double>(obs, t, geometry, phi, psi, argmin, false);

  BasicCameraParams<Jet> jphi;
  jphi.fov = Jet(phi.fov, kNumParams, kFov);
  jphi.pan = Jet(phi.pan, kNumParams, kPan);
  jphi.tilt = Jet(phi.tilt, kNumParams, kTilt);
  jphi.roll = Jet(phi.roll, kNumParams, kRoll);
  jphi.position = Vec3T<Jet>(Jet(phi.position.x(), kNumParams, kTx), Jet(phi.position.y(), kNumParams, kTy),
                             Jet(phi.position.z(), kNumParams, kTz));
  BasicRadialDistortion<Jet> jpsi{Jet(psi.k1, kNumParams, kK1), Jet(psi.k2, kNumParams, kK2)};

  const auto diff = evaluate_sample<Jet>(obs, t, geometry, jphi, jpsi, argmin, false);
  LossGradient out;
  out.value = plain.total;
  out.gradient = diff.total.derivatives();
  return out;
}

}  // namespace fieldcalib
