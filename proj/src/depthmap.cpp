#include "simplebev/depthmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "simplebev/lift_splat.hpp"

namespace simplebev {

void DepthBinSpec::validate() const {
  require(std::isfinite(d_min) && std::isfinite(d_max), "DepthBinSpec: non-finite range");
  require(0.0 < d_min && d_min < d_max, "DepthBinSpec: need 0 < d_min < d_max");
  require(num_bins >= 2, "DepthBinSpec: need at least 2 bins");
}

int DepthBinSpec::bin_index(double depth) const {
  const double k = std::floor((depth - d_min) / bin_width());
  if (!(k > 0)) return 0;  // also catches NaN
  if (k >= num_bins - 1) return num_bins - 1;
  return static_cast<int>(k);
}

DepthGrid DepthGrid::Zero(Index height, Index width, Index bins) {
  DepthGrid g;
  g.values = Tensor<3>(height, width, bins);
  g.values.setZero();
  return g;
}

double DepthGrid::pixel_sum(Index v, Index u) const {
  double s = 0.0;
  for (Index d = 0; d < bins(); ++d) s += values(v, u, d);
  return s;
}

bool DepthGrid::is_normalized(double tol, bool allow_empty) const {
  for (Index v = 0; v < height(); ++v)
    for (Index u = 0; u < width(); ++u) {
      const double s = pixel_sum(v, u);
      if (std::abs(s - 1.0) <= tol) continue;
      if (allow_empty && s == 0.0) continue;
      return false;
    }
  return true;
}

Eigen::VectorXd depth_to_onehot(double depth, const DepthBinSpec& spec) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.num_bins);
  out[spec.bin_index(depth)] = 1.0;
  return out;
}

std::pair<DepthGrid, MaskMap> rasterize_lidar_depth(const CameraModel& cam, const PointCloud& pts_lidar,
                                                    int stride, const DepthBinSpec& spec) {
  spec.validate();
  require(stride >= 1, "rasterize_lidar_depth: stride must be >= 1");
  require(cam.width() % stride == 0 && cam.height() % stride == 0,
          "rasterize_lidar_depth: stride must divide the image size");
  const Index h = cam.height() / stride, w = cam.width() / stride;

  // Nearest depth per feature pixel; strict '<' keeps the earliest point on ties.
  Eigen::ArrayXXd nearest = Eigen::ArrayXXd::Constant(h, w, std::numeric_limits<double>::infinity());
  const PointCloud pts_cam = transform_points(cam.cam_from_lidar(), pts_lidar);
  for (Index i = 0; i < pts_cam.size(); ++i) {
    const Projection<double> p = cam.project(pts_cam.xyz(i));
    if (!p.valid) continue;
    const auto fu = static_cast<Index>(std::floor(p.u / stride));
    const auto fv = static_cast<Index>(std::floor(p.v / stride));
    if (p.depth < nearest(fv, fu)) nearest(fv, fu) = p.depth;
  }

  DepthGrid grid = DepthGrid::Zero(h, w, spec.num_bins);
  MaskMap mask = MaskMap::Zero(h, w);
  for (Index v = 0; v < h; ++v)
    for (Index u = 0; u < w; ++u) {
      if (!std::isfinite(nearest(v, u))) continue;
      grid.values(v, u, spec.bin_index(nearest(v, u))) = 1.0;
      mask(v, u) = 1;
    }
  return {std::move(grid), std::move(mask)};
}

DepthGrid rectify_depth(const DepthGrid& d_cam, const DepthGrid& d_lid, const MaskMap& mask) {
  require(d_cam.height() == d_lid.height() && d_cam.width() == d_lid.width() && d_cam.bins() == d_lid.bins(),
          "rectify_depth: depth grid shapes differ");
  require(mask.rows() == d_cam.height() && mask.cols() == d_cam.width(), "rectify_depth: mask shape differs");
  require(d_cam.is_normalized(), "rectify_depth: camera depth is not normalized");

  DepthGrid out = d_cam;
  for (Index v = 0; v < out.height(); ++v)
    for (Index u = 0; u < out.width(); ++u) {
      if (mask(v, u) == 0) continue;
      require(std::abs(d_lid.pixel_sum(v, u) - 1.0) <= 1e-6,
              "rectify_depth: LiDAR depth is not normalized at a masked pixel");
      for (Index d = 0; d < out.bins(); ++d) out.values(v, u, d) = d_lid.values(v, u, d);
    }
  return out;
}

DepthGrid uniform_depth(Index height, Index width, const DepthBinSpec& spec) {
  DepthGrid g = DepthGrid::Zero(height, width, spec.num_bins);
  g.values.setConstant(1.0 / spec.num_bins);
  return g;
}

DepthGrid GroundPriorDepthProvider::operator()(const CameraModel& cam, const FeatureImage& features,
                                               const DepthBinSpec& spec) const {
  const Index h = features.height(), w = features.width();
  const int stride = features.stride;
  DepthGrid out = DepthGrid::Zero(h, w, spec.num_bins);
  const RigidTransformd lidar_from_cam = cam.lidar_from_cam();
  const Eigen::Vector3d origin = lidar_from_cam.translation();
  for (Index v = 0; v < h; ++v)
    for (Index u = 0; u < w; ++u) {
      const Eigen::Vector3d ray = lidar_from_cam.rotation() * cam.unproject((u + 0.5) * stride, (v + 0.5) * stride, 1.0);
      // Camera-frame depth at which the ray reaches the ground plane.
      const double t = ray.z() < 0 ? (ground_z - origin.z()) / ray.z() : -1.0;
      if (!(t >= spec.d_min && t < spec.d_max)) {
        for (Index d = 0; d < spec.num_bins; ++d) out.values(v, u, d) = 1.0 / spec.num_bins;
        continue;
      }
      const double mu = (t - spec.d_min) / spec.bin_width() - 0.5;
      double total = 0.0;
      for (Index d = 0; d < spec.num_bins; ++d) {
        const double z = (static_cast<double>(d) - mu) / sigma_bins;
        out.values(v, u, d) = std::exp(-0.5 * z * z);
        total += out.values(v, u, d);
      }
      for (Index d = 0; d < spec.num_bins; ++d) out.values(v, u, d) /= total;
    }
  return out;
}

}  // namespace simplebev
