#include "fieldcalib/synth.hpp"

#include <algorithm>
#include <random>

#include "fieldcalib/dataset_io.hpp"

namespace fieldcalib {

CameraParams sample_camera(const ParamDistribution& dist, std::uint64_t seed) {
  dist.validate();
  std::mt19937_64 rng(seed);
  auto draw = [&](int i) {
    const auto& r = dist.ranges[static_cast<std::size_t>(i)];
    return std::uniform_real_distribution<double>(r.lower, r.upper)(rng);
  };
  CameraParams phi;
  phi.fov = draw(kFov);
  phi.pan = draw(kPan);
  phi.tilt = draw(kTilt);
  phi.roll = draw(kRoll);
  for (int i = 0; i < 3; ++i) phi.position[i] = draw(kTx + i);
  return phi;
}

RenderedScene render_observations(const CameraParams& phi, const RadialDistortion& psi,
                                  const CalibrationObject& object, const ImageDims& dims,
                                  const RenderOptions& options) {
  if (!is_valid(phi)) throw Error(ErrorCode::kInvalidArgument, "invalid camera parameters");
  if (!(options.noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be >= 0");

  const Projector<double> project(phi, dims.aspect());
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  RenderedScene scene;
  for (const auto& seg : object.segments()) {
    if (is_split_half(seg.label.name)) continue;

    std::vector<Vec3> world;
    std::size_t cap = options.limits.line;
    if (const auto* pc = std::get_if<PointCloudSegment3D>(&seg.geometry)) {
      world = sample_point_cloud(*pc, options.n_pc_samples);
      cap = options.limits.point_cloud;
    } else if (const auto* p = std::get_if<PointSegment3D>(&seg.geometry)) {
      world = {p->x};
      cap = options.limits.point;
    } else {
      world = dense_samples(seg.geometry, options.line_step);
    }

    std::vector<Vec2> visible;
    for (const auto& x : world) {
      const auto pr = project(x);
      if (!pr.in_front || !on_monotone_branch(psi, pr.ndc)) continue;
      const Vec2 px = ndc_to_raster(distort<double>(psi, pr.ndc), dims);
      if (px.x() >= 0.0 && px.x() < dims.width && px.y() >= 0.0 && px.y() < dims.height) visible.push_back(px);
    }
    const std::size_t needed = seg.label.category == SegmentCategory::kPoint ? 1 : 2;
    if (visible.size() < needed) continue;

    std::vector<Vec2> clean;
    for (std::size_t i : farthest_point_subset(visible, cap)) clean.push_back(visible[i]);
    std::vector<Vec2> noisy = clean;
    if (options.noise_sigma > 0.0) {
      for (auto& p : noisy) {
        p.x() = std::clamp(p.x() + options.noise_sigma * noise(rng), 0.0, dims.width);
        p.y() = std::clamp(p.y() + options.noise_sigma * noise(rng), 0.0, dims.height);
      }
    }
    scene.clean_annotations.emplace(seg.label.name, std::move(clean));
    scene.annotations.emplace(seg.label.name, std::move(noisy));
  }
  if (scene.annotations.empty()) throw Error(ErrorCode::kEmptyObservation, "no segment visible");

  scene.observations = observations_from_annotations(scene.annotations, object, dims, options.limits);
  return scene;
}

}  // namespace fieldcalib
