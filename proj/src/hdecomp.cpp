#include "fieldcalib/hdecomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace fieldcalib {

void RefinementConfig::validate() const {
  if (!(zeta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "zeta must be positive");
  if (!(visibility_tolerance >= 0.0 && visibility_tolerance < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "visibility_tolerance must lie in [0, 0.5)");
  }
  if (max_iterations < 0) throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 0");
}

namespace {

Mat3 centering(const ImageDims& dims) {
  Mat3 t = Mat3::Identity();
  t(0, 2) = 0.5 * dims.width;
  t(1, 2) = 0.5 * dims.height;
  return t;
}

// Centered world->image homography with unit Frobenius norm.
Mat3 centered(const Homography& h, const ImageDims& dims) {
  Mat3 hc = centering(dims).inverse() * h.world_to_image();
  return hc / hc.norm();
}

}  // namespace

double focal_from_homography(const Homography& h, const ImageDims& dims) {
  const Mat3 m = centered(h, dims);
  const double h11 = m(0, 0), h12 = m(0, 1), h21 = m(1, 0), h22 = m(1, 1), h31 = m(2, 0), h32 = m(2, 1);
  const Eigen::Vector2d a(h11 * h12 + h21 * h22, h11 * h11 + h21 * h21 - h12 * h12 - h22 * h22);
  const Eigen::Vector2d b(-h31 * h32, -(h31 * h31 - h32 * h32));
  const double aa = a.squaredNorm();
  if (!(aa > 1e-24)) throw Error(ErrorCode::kDegenerateGeometry, "focal constraints are degenerate");
  const double u = a.dot(b) / aa;
  if (!(u > 0.0) || !std::isfinite(u)) {
    throw Error(ErrorCode::kDegenerateGeometry, "focal estimate is not positive");
  }
  const double f = 1.0 / std::sqrt(u);
  if (!std::isfinite(f)) throw Error(ErrorCode::kDegenerateGeometry, "focal estimate is not finite");
  return f;
}

EulerAngles euler_from_rotation(const Mat3& r) {
  EulerAngles e;
  const double st = std::hypot(r(2, 0), r(2, 1));
  if (st < 1e-10) {
    e.tilt = r(2, 2) > 0.0 ? 0.0 : kPi;
    e.roll = 0.0;
    e.pan = std::atan2(r(0, 1), r(0, 0));
    return e;
  }
  const double tilt = std::atan2(st, r(2, 2));  // in (0, pi)
  EulerAngles pos{std::atan2(r(2, 0), -r(2, 1)), tilt, std::atan2(r(0, 2), r(1, 2))};
  EulerAngles neg{std::atan2(-r(2, 0), r(2, 1)), -tilt, std::atan2(-r(0, 2), -r(1, 2))};
  return std::abs(neg.roll) < std::abs(pos.roll) ? neg : pos;
}

std::vector<Vec3> refinement_keypoints(double length, double width) {
  const double s = std::min({1.0, length / 105.0, width / 68.0});
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  const double penalty = hl - 11.0 * s;
  std::vector<Vec3> pts{{0.0, 0.0, 0.0},       {-hl, -hw, 0.0}, {-hl, hw, 0.0}, {hl, -hw, 0.0}, {hl, hw, 0.0},
                        {0.0, -hw, 0.0},       {0.0, hw, 0.0},  {-penalty, 0.0, 0.0}, {penalty, 0.0, 0.0}};
  constexpr int kRows = 4;
  constexpr int kCols = 7;
  for (int j = 0; j < kRows; ++j) {
    for (int i = 0; i < kCols; ++i) {
      pts.emplace_back(-hl + (i + 0.5) * length / kCols, -hw + (j + 0.5) * width / kRows, 0.0);
    }
  }
  return pts;
}

namespace {

struct Pose {
  Mat3 r;
  Vec3 t;
};

CameraParams to_params(const Pose& p, double focal, const ImageDims& dims) {
  const EulerAngles e = euler_from_rotation(p.r);
  CameraParams phi;
  phi.fov = fov_from_focal_raster(focal, dims);
  phi.pan = e.pan;
  phi.tilt = e.tilt;
  phi.roll = e.roll;
  phi.position = p.t;
  return phi;
}

// Raster projection with K = [f 0 cx; 0 f cy; 0 0 1]; false behind the camera.
bool project_raster(const Pose& p, double focal, const ImageDims& dims, const Vec3& x, Vec2* out) {
  const Vec3 c = p.r * (x - p.t);
  if (!(c.z() > 0.0)) return false;
  *out = {focal * c.x() / c.z() + 0.5 * dims.width, focal * c.y() / c.z() + 0.5 * dims.height};
  return true;
}

struct Correspondence {
  Vec3 world;
  Vec2 image;
};

Pose perturb(const Pose& p, const Eigen::Matrix<double, 6, 1>& d) {
  const Vec3 w = d.head<3>();
  const double angle = w.norm();
  Mat3 dr = Mat3::Identity();
  if (angle > 0.0) dr = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
  return {dr * p.r, p.t + d.tail<3>()};
}

bool residuals(const Pose& p, double focal, const ImageDims& dims, const std::vector<Correspondence>& cs,
               Eigen::VectorXd* r) {
  r->resize(static_cast<Eigen::Index>(2 * cs.size()));
  for (std::size_t i = 0; i < cs.size(); ++i) {
    Vec2 u;
    if (!project_raster(p, focal, dims, cs[i].world, &u)) return false;
    r->segment<2>(static_cast<Eigen::Index>(2 * i)) = u - cs[i].image;
  }
  return true;
}

}  // namespace

CameraParams refine_pose(const CameraParams& phi0, const Homography& h, const ImageDims& dims,
                         const RefinementConfig& config, DecompositionResult* info, double field_length,
                         double field_width) {
  config.validate();
  DecompositionResult local;
  DecompositionResult& out = info ? *info : local;
  out.refined = false;

  const double focal = focal_raster(phi0.fov, dims);
  const Pose start{rotation_matrix(phi0.pan, phi0.tilt, phi0.roll), phi0.position};
  const Mat3 hw = h.world_to_image();

  const double mx = config.visibility_tolerance * dims.width;
  const double my = config.visibility_tolerance * dims.height;
  std::vector<Correspondence> cs;
  for (const auto& x : refinement_keypoints(field_length, field_width)) {
    const Vec3 q = hw * Vec3(x.x(), x.y(), 1.0);
    if (!(q.z() > 0.0)) continue;
    const Vec2 u(q.x() / q.z(), q.y() / q.z());
    if (u.x() < -mx || u.x() > dims.width + mx || u.y() < -my || u.y() > dims.height + my) continue;
    Vec2 proj;
    if (!project_raster(start, focal, dims, x, &proj)) continue;
    if ((proj - u).norm() > config.zeta) continue;
    cs.push_back({x, u});
  }
  out.correspondences_used = cs.size();
  if (cs.size() < 3) {
    out.rejected = true;
    out.reason = "fewer than three usable correspondences";
    return phi0;
  }

  Pose pose = start;
  Eigen::VectorXd r;
  residuals(pose, focal, dims, cs, &r);
  double cost = r.squaredNorm();
  out.rmse_initial = std::sqrt(cost / static_cast<double>(cs.size()));
  double lambda = 1e-3;
  constexpr double kStep = 1e-7;

  for (int it = 0; it < config.max_iterations && cost > 0.0; ++it) {
    Eigen::MatrixXd jac(r.size(), 6);
    bool ok = true;
    for (int k = 0; k < 6 && ok; ++k) {
      Eigen::Matrix<double, 6, 1> d = Eigen::Matrix<double, 6, 1>::Zero();
      d[k] = kStep;
      Eigen::VectorXd rp, rm;
      ok = residuals(perturb(pose, d), focal, dims, cs, &rp) && residuals(perturb(pose, -d), focal, dims, cs, &rm);
      if (ok) jac.col(k) = (rp - rm) / (2.0 * kStep);
    }
    if (!ok) break;
    const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
    const Eigen::Matrix<double, 6, 1> jtr = jac.transpose() * r;

    bool improved = false;
    while (lambda < 1e12) {
      Eigen::Matrix<double, 6, 6> a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Matrix<double, 6, 1> delta = a.ldlt().solve(-jtr);
      const Pose candidate = perturb(pose, delta);
      Eigen::VectorXd rc;
      if (delta.allFinite() && residuals(candidate, focal, dims, cs, &rc) && rc.squaredNorm() < cost) {
        const double rel = (cost - rc.squaredNorm()) / cost;
        pose = candidate;
        r = rc;
        cost = rc.squaredNorm();
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (rel < 1e-14 || delta.norm() < 1e-14) it = config.max_iterations;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }

  out.rmse_refined = std::sqrt(cost / static_cast<double>(cs.size()));
  if (!std::isfinite(out.rmse_refined) || out.rmse_refined > out.rmse_initial) {
    out.rmse_refined = out.rmse_initial;
    return phi0;
  }
  out.refined = true;
  return to_params(pose, focal, dims);
}

DecompositionResult decompose(const Homography& h, const ImageDims& dims, const RefinementConfig& config) {
  DecompositionResult out;
  Mat3 m;
  try {
    out.focal = focal_from_homography(h, dims);
    m = centered(h, dims);
  } catch (const Error& e) {
    out.rejected = true;
    out.reason = e.what();
    return out;
  }

  const Mat3 k_inv = Eigen::Vector3d(1.0 / out.focal, 1.0 / out.focal, 1.0).asDiagonal();
  Pose pose;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const Mat3 a = k_inv * m;
    const Vec3 r1p = a.col(0);
    const Vec3 r2p = a.col(1);
    const double n1 = r1p.norm();
    const double n2 = r2p.norm();
    if (!(n1 > 0.0 && n2 > 0.0)) {
      out.rejected = true;
      out.reason = "homography has a zero column";
      return out;
    }
    const double s = std::sqrt(n1 * n2);
    Mat3 rp;
    rp.col(0) = r1p / n1;
    rp.col(1) = r2p / n2;
    rp.col(2) = rp.col(0).cross(rp.col(1));
    Eigen::JacobiSVD<Mat3> svd(rp, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 r = u * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
      u.col(2) = -u.col(2);
      r = u * svd.matrixV().transpose();
    }
    // Columns of K^-1 H are (r1, r2, -R t) up to scale; R is world->camera.
    pose.r = r;
    pose.t = -r.transpose() * (a.col(2) / s);
    if (pose.t.z() < 0.0) break;  // camera above the pitch (z points down)
    m = -m;
  }
  if (!(pose.t.z() < 0.0) || !pose.r.allFinite() || !pose.t.allFinite()) {
    out.rejected = true;
    out.reason = "no camera above the field plane";
    return out;
  }
  const Mat3 rtr = pose.r.transpose() * pose.r - Mat3::Identity();
  if (!(std::abs(pose.r.determinant() - 1.0) < 1e-9) || !(rtr.norm() < 1e-9)) {
    out.rejected = true;
    out.reason = "rotation estimate is not orthonormal";
    return out;
  }

  out.initial = to_params(pose, out.focal, dims);
  out.phi = refine_pose(out.initial, h, dims, config, &out);
  return out;
}

}  // namespace fieldcalib
