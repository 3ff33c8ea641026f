#pragma once

#include <cstdint>

#include "fieldcalib/camera.hpp"
#include "fieldcalib/field_model.hpp"
#include "fieldcalib/metrics.hpp"
#include "fieldcalib/optimizer.hpp"
#include "fieldcalib/reprojection_loss.hpp"

namespace fieldcalib {

// One uniform draw per parameter from the distribution's ranges.
CameraParams sample_camera(const ParamDistribution& dist, std::uint64_t seed);

struct RenderOptions {
  double noise_sigma = 0.0;  // isotropic Gaussian, raster pixels
  std::uint64_t seed = 0;
  BatchLimits limits;
  std::size_t n_pc_samples = 128;
  double line_step = 0.1;  // meters between rendered line samples
};

struct RenderedScene {
  // Selected annotation points as written to file (noisy), raster pixels.
  ImageAnnotations annotations;
  // The same points before noise.
  ImageAnnotations clean_annotations;
  // Loss observations built from `annotations` through the loader path.
  SampleObservations observations;
};

// Projects every segment (the unsplit central circle stands for both halves),
// keeps in-image points with positive depth, selects the most spread points
// per segment and adds pixel noise. Point clouds are rendered from the same
// samples the loss uses. Throws kEmptyObservation when no segment has at
// least two visible points.
RenderedScene render_observations(const CameraParams& phi, const RadialDistortion& psi,
                                  const CalibrationObject& object, const ImageDims& dims,
                                  const RenderOptions& options = {});

}  // namespace fieldcalib
