#pragma once

#include <functional>
#include <utility>

#include "simplebev/geometry.hpp"
#include "simplebev/types.hpp"

namespace simplebev {

// Uniform depth discretization over [d_min, d_max) with `num_bins` bins.
struct DepthBinSpec {
  double d_min = 1.0;
  double d_max = 61.0;
  int num_bins = 60;

  void validate() const;
  double bin_width() const { return (d_max - d_min) / num_bins; }
  // Clamped to [0, num_bins - 1].
  int bin_index(double depth) const;
  double bin_center(int k) const { return d_min + (k + 0.5) * bin_width(); }
};

// Per-pixel categorical distribution over depth bins, shape H x W x D.
// Pixels are addressed (v, u): row v in [0, H), column u in [0, W).
struct DepthGrid {
  Tensor<3> values;

  static DepthGrid Zero(Index height, Index width, Index bins);

  Index height() const { return values.dimension(0); }
  Index width() const { return values.dimension(1); }
  Index bins() const { return values.dimension(2); }

  double pixel_sum(Index v, Index u) const;
  // True when every pixel sums to 1 (within tol), or to 0 if `allow_empty`.
  bool is_normalized(double tol = 1e-6, bool allow_empty = false) const;
};

// 1 where at least one LiDAR point landed on the feature pixel.
using MaskMap = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::VectorXd depth_to_onehot(double depth, const DepthBinSpec& spec);

// Projects LiDAR points into the camera and rasterizes them at feature
// resolution (image pixel / stride). The nearest point wins each pixel.
std::pair<DepthGrid, MaskMap> rasterize_lidar_depth(const CameraModel& cam, const PointCloud& pts_lidar,
                                                    int stride, const DepthBinSpec& spec);

// Keeps the LiDAR distribution where the mask is set and the camera estimate
// everywhere else.
DepthGrid rectify_depth(const DepthGrid& d_cam, const DepthGrid& d_lid, const MaskMap& mask);

struct FeatureImage;

// Source of camera depth distributions. The learned estimator is not part of
// this library; anything producing a normalized DepthGrid plugs in here.
using DepthProvider =
    std::function<DepthGrid(const CameraModel&, const FeatureImage&, const DepthBinSpec&)>;

// Every pixel gets 1/D in every bin.
DepthGrid uniform_depth(Index height, Index width, const DepthBinSpec& spec);

// Deterministic stand-in estimator: a Gaussian over bins centered on the depth
// at which the pixel ray meets the plane z = ground_z (LiDAR frame), or uniform
// when the ray misses the plane inside the bin range.
struct GroundPriorDepthProvider {
  double ground_z = -4.9;
  double sigma_bins = 2.0;

  DepthGrid operator()(const CameraModel& cam, const FeatureImage& features, const DepthBinSpec& spec) const;
};

}  // namespace simplebev
