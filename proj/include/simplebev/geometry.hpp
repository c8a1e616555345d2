#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "simplebev/types.hpp"

namespace simplebev {

// Rotation + translation mapping points from a source frame to a target frame:
// p_target = R * p_source + t.
template <typename Scalar>
class RigidTransform {
 public:
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  RigidTransform() : rotation_(Matrix3::Identity()), translation_(Vector3::Zero()) {}

  // Throws ContractError unless `rotation` is orthonormal with det +1 (1e-9).
  RigidTransform(const Matrix3& rotation, const Vector3& translation)
      : rotation_(rotation), translation_(translation) {
    const Scalar tol = Scalar(1e-9);
    require(((rotation_.transpose() * rotation_) - Matrix3::Identity()).cwiseAbs().maxCoeff() <= tol,
            "RigidTransform: rotation is not orthonormal");
    require(std::abs(rotation_.determinant() - Scalar(1)) <= tol,
            "RigidTransform: rotation determinant is not +1");
    require(translation_.allFinite(), "RigidTransform: non-finite translation");
  }

  static RigidTransform Identity() { return RigidTransform(); }

  static RigidTransform Translation(const Vector3& t) {
    return RigidTransform(Matrix3::Identity(), t, Unchecked{});
  }

  // Rotation about +z by `yaw` radians, followed by translation `t`.
  static RigidTransform RotZ(Scalar yaw, const Vector3& t = Vector3::Zero()) {
    Matrix3 r;
    const Scalar c = std::cos(yaw), s = std::sin(yaw);
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return RigidTransform(r, t, Unchecked{});
  }

  const Matrix3& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }

  Vector3 apply(const Vector3& p) const { return rotation_ * p + translation_; }

  RigidTransform inverse() const {
    const Matrix3 rt = rotation_.transpose();
    return RigidTransform(rt, -(rt * translation_), Unchecked{});
  }

  template <typename S>
  friend RigidTransform<S> compose(const RigidTransform<S>& a, const RigidTransform<S>& b);

 private:
  struct Unchecked {};
  RigidTransform(const Matrix3& r, const Vector3& t, Unchecked) : rotation_(r), translation_(t) {}

  Matrix3 rotation_;
  Vector3 translation_;
};

// compose(a, b).apply(p) == a.apply(b.apply(p)).
template <typename Scalar>
RigidTransform<Scalar> compose(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
  using T = RigidTransform<Scalar>;
  return T(a.rotation_ * b.rotation_, a.rotation_ * b.translation_ + a.translation_,
           typename T::Unchecked{});
}

template <typename Scalar>
RigidTransform<Scalar> invert(const RigidTransform<Scalar>& t) {
  return t.inverse();
}

// N x 4 rows of (x, y, z, intensity).
template <typename Scalar>
struct BasicPointCloud {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 4, Eigen::RowMajor>;

  Matrix points;

  BasicPointCloud() : points(0, 4) {}
  explicit BasicPointCloud(Matrix m) : points(std::move(m)) {}

  Index size() const { return points.rows(); }
  bool empty() const { return points.rows() == 0; }
  Eigen::Matrix<Scalar, 3, 1> xyz(Index i) const { return points.row(i).template head<3>().transpose(); }
  Scalar intensity(Index i) const { return points(i, 3); }
  bool all_finite() const { return points.allFinite(); }

  friend bool operator==(const BasicPointCloud& a, const BasicPointCloud& b) {
    return a.points.rows() == b.points.rows() && a.points == b.points;
  }
};

template <typename Scalar>
BasicPointCloud<Scalar> transform_points(const RigidTransform<Scalar>& t, const BasicPointCloud<Scalar>& pts) {
  BasicPointCloud<Scalar> out = pts;
  // row-vector form of R * p + t
  out.points.template leftCols<3>() =
      (pts.points.template leftCols<3>() * t.rotation().transpose()).rowwise() + t.translation().transpose();
  return out;
}

template <typename Scalar>
struct Projection {
  Scalar u = 0;
  Scalar v = 0;
  Scalar depth = 0;
  bool valid = false;
};

// Pinhole camera, +z forward, +x right, +y down, no distortion.
template <typename Scalar>
class BasicCameraModel {
 public:
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  // Points closer than this to the image plane never project.
  static constexpr Scalar kMinDepth = Scalar(1e-3);

  BasicCameraModel() = default;
  BasicCameraModel(Scalar fx, Scalar fy, Scalar cx, Scalar cy, int width, int height,
                   RigidTransform<Scalar> cam_from_lidar)
      : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height),
        cam_from_lidar_(std::move(cam_from_lidar)) {
    require(fx > 0 && fy > 0, "CameraModel: focal lengths must be positive");
    require(width > 0 && height > 0, "CameraModel: image size must be positive");
    require(std::isfinite(cx) && std::isfinite(cy), "CameraModel: non-finite principal point");
  }

  Scalar fx() const { return fx_; }
  Scalar fy() const { return fy_; }
  Scalar cx() const { return cx_; }
  Scalar cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const RigidTransform<Scalar>& cam_from_lidar() const { return cam_from_lidar_; }
  RigidTransform<Scalar> lidar_from_cam() const { return cam_from_lidar_.inverse(); }

  BasicCameraModel with_extrinsic(RigidTransform<Scalar> cam_from_lidar) const {
    BasicCameraModel c = *this;
    c.cam_from_lidar_ = std::move(cam_from_lidar);
    return c;
  }

  // `p` in the camera frame.
  Projection<Scalar> project(const Vector3& p) const {
    Projection<Scalar> out;
    out.depth = p.z();
    if (!(p.z() > kMinDepth)) return out;
    out.u = fx_ * p.x() / p.z() + cx_;
    out.v = fy_ * p.y() / p.z() + cy_;
    out.valid = out.u >= 0 && out.u < width_ && out.v >= 0 && out.v < height_;
    return out;
  }

  // Camera-frame point that projects to pixel (u, v) at the given depth.
  Vector3 unproject(Scalar u, Scalar v, Scalar depth) const {
    return Vector3((u - cx_) / fx_ * depth, (v - cy_) / fy_ * depth, depth);
  }

 private:
  Scalar fx_ = 1, fy_ = 1, cx_ = 0, cy_ = 0;
  int width_ = 1, height_ = 1;
  RigidTransform<Scalar> cam_from_lidar_;
};

// Projects points that are already expressed in the camera frame. Every input
// point yields one entry; points that miss the image are flagged, not removed.
template <typename Scalar>
std::vector<Projection<Scalar>> project_to_image(const BasicCameraModel<Scalar>& cam,
                                                 const BasicPointCloud<Scalar>& pts_cam) {
  std::vector<Projection<Scalar>> out;
  out.reserve(static_cast<size_t>(pts_cam.size()));
  for (Index i = 0; i < pts_cam.size(); ++i) out.push_back(cam.project(pts_cam.xyz(i)));
  return out;
}

using RigidTransformd = RigidTransform<double>;
using PointCloud = BasicPointCloud<double>;
using CameraModel = BasicCameraModel<double>;

// Wraps an angle to (-pi, pi]. Values already in range are returned unchanged.
double normalize_angle(double a);

}  // namespace simplebev
