// Copyright 2026 The vlapath Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Pinhole camera model, trajectory projection into normalized image paths,
// PnP extrinsic recovery and reprojection-based quality filtering.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vlapath/error.hpp"
#include "vlapath/pathcore.hpp"

namespace vlapath {

/// Ideal pinhole intrinsics. No lens distortion.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  bool valid() const noexcept {
    return fx > 0.0 && fy > 0.0 && width >= 1 && height >= 1 && cx >= 0.0 && cx < width &&
           cy >= 0.0 && cy < height;
  }
  void validate() const {
    if (!valid()) throw Error(ErrorCode::kInvalidArgument, "invalid camera intrinsics");
  }
  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }
};

/// World-to-camera rigid transform: q = R * p + t.
struct CameraExtrinsics {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static CameraExtrinsics identity() { return {}; }

  bool valid() const noexcept {
    const Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() < 1e-9 && rotation.determinant() > 0.0 &&
           translation.allFinite();
  }
  void validate() const {
    if (!valid()) throw Error(ErrorCode::kInvalidArgument, "rotation is not a proper orthonormal matrix");
  }
};

struct EEFrame {
  std::int64_t step = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  bool gripper_open = true;
};

struct Trajectory {
  std::vector<EEFrame> frames;
  std::string instruction;
  std::string camera_id;

  void validate() const {
    if (frames.empty()) throw Error(ErrorCode::kInvalidArgument, "trajectory has no frames");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (!frames[i].position.allFinite()) {
        throw Error(ErrorCode::kInvalidArgument, "non-finite position at frame " + std::to_string(i));
      }
      if (frames[i].step < 0 || (i > 0 && frames[i].step <= frames[i - 1].step)) {
        throw Error(ErrorCode::kInvalidArgument, "frame steps must be non-negative and strictly increasing");
      }
    }
  }
};

struct Correspondence {
  Eigen::Vector3d world = Eigen::Vector3d::Zero();
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

inline constexpr double kMinDepth = 1e-9;

inline Eigen::Vector2d project_point(const Eigen::Vector3d& p, const CameraIntrinsics& intr,
                                     const CameraExtrinsics& extr) {
  const Eigen::Vector3d q = extr.rotation * p + extr.translation;
  if (q.z() <= kMinDepth) throw Error(ErrorCode::kBehindCamera, "point has non-positive depth");
  return {intr.fx * q.x() / q.z() + intr.cx, intr.fy * q.y() / q.z() + intr.cy};
}

struct ProjectionResult {
  Path2D path;
  /// In-frame points over all frames. Frames behind the camera are dropped
  /// from the path and count as not visible.
  double visibility = 0.0;
};

inline ProjectionResult project_trajectory(const Trajectory& traj, const CameraIntrinsics& intr,
                                           const CameraExtrinsics& extr) {
  if (traj.frames.empty()) throw Error(ErrorCode::kInvalidArgument, "trajectory has no frames");
  intr.validate();
  std::vector<PathPoint> pts;
  pts.reserve(traj.frames.size());
  std::size_t in_frame = 0;
  for (const auto& frame : traj.frames) {
    const Eigen::Vector3d q = extr.rotation * frame.position + extr.translation;
    if (q.z() <= kMinDepth) continue;
    const double u = intr.fx * q.x() / q.z() + intr.cx;
    const double v = intr.fy * q.y() / q.z() + intr.cy;
    PathPoint p{u / intr.width, v / intr.height, frame.gripper_open};
    if (p.in_frame()) ++in_frame;
    pts.push_back(p);
  }
  if (pts.empty()) throw Error(ErrorCode::kAllBehindCamera, "no frame projects with positive depth");
  const double visibility = static_cast<double>(in_frame) / static_cast<double>(traj.frames.size());
  return {Path2D(std::move(pts)), visibility};
}

inline double reprojection_rmse(std::span<const Correspondence> corrs, const CameraIntrinsics& intr,
                                const CameraExtrinsics& extr) {
  if (corrs.empty()) throw Error(ErrorCode::kInvalidArgument, "no correspondences");
  double sum = 0.0;
  for (const auto& c : corrs) sum += (project_point(c.world, intr, extr) - c.pixel).squaredNorm();
  return std::sqrt(sum / static_cast<double>(corrs.size()));
}

/// Geodesic distance on SO(3) in radians.
inline double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near zero; recover small angles from the skew part.
  const Eigen::Matrix3d d = a.transpose() * b;
  const Eigen::Vector3d w(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  return std::atan2(0.5 * w.norm(), c);
}

/// Closest rotation in the Frobenius sense.
inline Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

struct PnpOptions {
  int max_iterations = 100;
  double step_tolerance = 1e-10;
  /// Relative size of the smallest principal extent of the world points below
  /// which they count as coplanar or collinear.
  double degeneracy_tolerance = 1e-8;
};

namespace detail {

inline void check_pnp_configuration(std::span<const Correspondence> corrs, double tolerance) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& c : corrs) centroid += c.world;
  centroid /= static_cast<double>(corrs.size());
  Eigen::MatrixXd centered(corrs.size(), 3);
  for (std::size_t i = 0; i < corrs.size(); ++i) centered.row(i) = (corrs[i].world - centroid).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const Eigen::Vector3d s = svd.singularValues();
  if (!(s(0) > 0.0) || s(2) <= tolerance * s(0)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "world points are collinear or coplanar");
  }
}

/// Linear DLT on intrinsics-normalized image points with Hartley-style
/// conditioning of the world points.
inline CameraExtrinsics pnp_dlt(std::span<const Correspondence> corrs, const CameraIntrinsics& intr) {
  const std::size_t n = corrs.size();
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& c : corrs) centroid += c.world;
  centroid /= static_cast<double>(n);
  double mean_dist = 0.0;
  for (const auto& c : corrs) mean_dist += (c.world - centroid).norm();
  mean_dist /= static_cast<double>(n);
  const double scale = std::sqrt(3.0) / mean_dist;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 12);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d xw = (corrs[i].world - centroid) * scale;
    const Eigen::Vector4d xh(xw.x(), xw.y(), xw.z(), 1.0);
    const double xn = (corrs[i].pixel.x() - intr.cx) / intr.fx;
    const double yn = (corrs[i].pixel.y() - intr.cy) / intr.fy;
    a.block<1, 4>(2 * i, 0) = xh.transpose();
    a.block<1, 4>(2 * i, 8) = -xn * xh.transpose();
    a.block<1, 4>(2 * i + 1, 4) = xh.transpose();
    a.block<1, 4>(2 * i + 1, 8) = -yn * xh.transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> p_cond;
  p_cond << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8), h(9), h(10), h(11);

  // Undo conditioning: X' = scale * (X - centroid).
  Eigen::Matrix4d cond = Eigen::Matrix4d::Identity();
  cond.topLeftCorner<3, 3>() *= scale;
  cond.topRightCorner<3, 1>() = -scale * centroid;
  Eigen::Matrix<double, 3, 4> p = p_cond * cond;

  Eigen::Matrix3d m = p.leftCols<3>();
  if (m.determinant() < 0.0) {
    p = -p;
    m = -m;
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> msvd(m);
  const double lambda = msvd.singularValues().mean();
  if (!(lambda > 0.0)) throw Error(ErrorCode::kDegenerateConfiguration, "DLT solution is rank deficient");

  CameraExtrinsics extr;
  extr.rotation = nearest_rotation(m);
  extr.translation = p.col(3) / lambda;
  return extr;
}

/// Sum of squared pixel residuals, or +inf when any point is behind the camera.
inline double reprojection_cost(std::span<const Correspondence> corrs, const CameraIntrinsics& intr,
                                const CameraExtrinsics& extr) {
  double cost = 0.0;
  for (const auto& c : corrs) {
    const Eigen::Vector3d q = extr.rotation * c.world + extr.translation;
    if (q.z() <= kMinDepth) return std::numeric_limits<double>::infinity();
    const Eigen::Vector2d uv(intr.fx * q.x() / q.z() + intr.cx, intr.fy * q.y() / q.z() + intr.cy);
    cost += (uv - c.pixel).squaredNorm();
  }
  return cost;
}

inline CameraExtrinsics apply_pose_update(const CameraExtrinsics& extr, const Eigen::Matrix<double, 6, 1>& delta) {
  CameraExtrinsics out;
  const Eigen::Vector3d w = delta.head<3>();
  const double angle = w.norm();
  const Eigen::Matrix3d dr =
      angle > 0.0 ? Eigen::AngleAxisd(angle, w / angle).toRotationMatrix() : Eigen::Matrix3d::Identity();
  out.rotation = dr * extr.rotation;
  out.translation = extr.translation + delta.tail<3>();
  return out;
}

}  // namespace detail

/// Camera pose from >= 6 non-coplanar 3D/2D correspondences: linear DLT,
/// projection of the rotation block onto SO(3), then Gauss-Newton on pixel
/// residuals with step halving when a step fails to lower the cost.
inline CameraExtrinsics solve_pnp(std::span<const Correspondence> corrs, const CameraIntrinsics& intr,
                                  const PnpOptions& options = {}) {
  if (corrs.size() < 6) throw Error(ErrorCode::kTooFewPoints, "PnP needs at least 6 correspondences");
  intr.validate();
  for (const auto& c : corrs) {
    if (!c.world.allFinite() || !c.pixel.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite correspondence");
    }
  }
  detail::check_pnp_configuration(corrs, options.degeneracy_tolerance);

  CameraExtrinsics extr = detail::pnp_dlt(corrs, intr);
  double cost = detail::reprojection_cost(corrs, intr, extr);
  if (!std::isfinite(cost)) throw Error(ErrorCode::kNoConvergence, "linear estimate puts points behind the camera");

  const std::size_t n = corrs.size();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d rx = extr.rotation * corrs[i].world;
      const Eigen::Vector3d q = rx + extr.translation;
      const double iz = 1.0 / q.z();
      const Eigen::Vector2d r(intr.fx * q.x() * iz + intr.cx - corrs[i].pixel.x(),
                              intr.fy * q.y() * iz + intr.cy - corrs[i].pixel.y());
      Eigen::Matrix<double, 2, 3> dpix_dq;
      dpix_dq << intr.fx * iz, 0.0, -intr.fx * q.x() * iz * iz, 0.0, intr.fy * iz, -intr.fy * q.y() * iz * iz;
      // Left perturbation R <- exp(w) R gives dq/dw = -[R X]_x.
      Eigen::Matrix3d skew;
      skew << 0.0, -rx.z(), rx.y(), rx.z(), 0.0, -rx.x(), -rx.y(), rx.x(), 0.0;
      Eigen::Matrix<double, 2, 6> j;
      j.leftCols<3>() = -dpix_dq * skew;
      j.rightCols<3>() = dpix_dq;
      jtj += j.transpose() * j;
      jtr += j.transpose() * r;
    }
    Eigen::Matrix<double, 6, 1> step = jtj.ldlt().solve(-jtr);
    if (!step.allFinite()) throw Error(ErrorCode::kNoConvergence, "singular normal equations");

    double scale = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      const CameraExtrinsics trial = detail::apply_pose_update(extr, scale * step);
      const double trial_cost = detail::reprojection_cost(corrs, intr, trial);
      if (trial_cost <= cost) {
        extr = trial;
        cost = trial_cost;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if ((scale * step).norm() < options.step_tolerance) return extr;
    // No descent possible along the Gauss-Newton direction: at a numerical minimum.
    if (!improved) return extr;
  }
  throw Error(ErrorCode::kNoConvergence, "Gauss-Newton did not converge");
}

struct AlignmentCandidate {
  Trajectory trajectory;
  std::vector<Correspondence> correspondences;
  CameraExtrinsics extrinsics;
};

struct AlignmentRejection {
  std::size_t index = 0;
  std::string reason;  // "rmse", "visibility" or "error"
  std::string detail;
};

struct AlignmentReport {
  std::vector<std::size_t> kept;
  std::vector<AlignmentRejection> rejected;
};

/// Partitions candidates by reprojection RMSE and projected visibility,
/// preserving input order. Failures inside the checks reject the candidate.
inline AlignmentReport filter_by_alignment(std::span<const AlignmentCandidate> candidates,
                                           const CameraIntrinsics& intr, double threshold,
                                           double min_visibility = 0.9) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be > 0");
  AlignmentReport report;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    try {
      const double rmse = reprojection_rmse(c.correspondences, intr, c.extrinsics);
      if (!(rmse <= threshold)) {
        report.rejected.push_back({i, "rmse", "rmse " + std::to_string(rmse) + " px"});
        continue;
      }
      const auto proj = project_trajectory(c.trajectory, intr, c.extrinsics);
      if (proj.visibility < min_visibility) {
        report.rejected.push_back({i, "visibility", "visibility " + std::to_string(proj.visibility)});
        continue;
      }
      report.kept.push_back(i);
    } catch (const Error& e) {
      report.rejected.push_back({i, "error", e.what()});
    }
  }
  return report;
}

}  // namespace vlapath
