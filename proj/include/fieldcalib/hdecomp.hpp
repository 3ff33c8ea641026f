#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fieldcalib/camera.hpp"

namespace fieldcalib {

struct RefinementConfig {
  double zeta = 100.0;                // px, outlier cutoff on the initial reprojection error
  double visibility_tolerance = 0.1;  // fraction of the image size added on each side
  int max_iterations = 50;

  void validate() const;
};

struct DecompositionResult {
  CameraParams phi;
  CameraParams initial;  // before refinement
  double focal = 0.0;    // raster px
  bool refined = false;
  std::size_t correspondences_used = 0;
  bool rejected = false;
  std::string reason;
  double rmse_initial = 0.0;  // px over the used correspondences
  double rmse_refined = 0.0;
};

struct EulerAngles {
  double pan = 0.0;
  double tilt = 0.0;
  double roll = 0.0;
};

// Focal length in raster pixels from the two orthogonality constraints of the
// centered homography. Throws kDegenerateGeometry when the constraints are
// degenerate or give a non-positive 1/f^2.
double focal_from_homography(const Homography& h, const ImageDims& dims);

// Inverts R = Rz(roll) Rx(tilt) Rz(pan), choosing the solution with minimal
// |roll|; at the gimbal singularity roll is set to 0.
EulerAngles euler_from_rotation(const Mat3& r);

// Field-plane keypoints used for refinement: the nine canonical pitch points
// and a 4 x 7 grid.
std::vector<Vec3> refinement_keypoints(double length = 105.0, double width = 68.0);

// Levenberg-Marquardt over rotation and position with the focal length fixed,
// on keypoints mapped through h. Fills the refinement fields of `info`.
CameraParams refine_pose(const CameraParams& phi0, const Homography& h, const ImageDims& dims,
                         const RefinementConfig& config, DecompositionResult* info = nullptr,
                         double field_length = 105.0, double field_width = 68.0);

// Focal estimation, rotation/translation extraction, refinement and Euler
// extraction. Failures are reported through `rejected`, not exceptions.
DecompositionResult decompose(const Homography& h, const ImageDims& dims, const RefinementConfig& config = {});

}  // namespace fieldcalib
