#pragma once

#include <optional>
#include <span>
#include <vector>

#include "simplebev/depthmap.hpp"
#include "simplebev/geometry.hpp"
#include "simplebev/types.hpp"

namespace simplebev {

// Metric ground-plane window split into square cells.
struct BevGridSpec {
  double x_min = -54.0;
  double x_max = 54.0;
  double y_min = -54.0;
  double y_max = 54.0;
  double cell_size = 0.6;
  int channels = 1;

  void validate() const;
  Index size_x() const;
  Index size_y() const;
  // Cell containing (x, y), or nullopt outside [min, max) on either axis.
  std::optional<std::pair<Index, Index>> cell_of(double x, double y) const;
  bool same_window(const BevGridSpec& other, double tol = 1e-9) const;
};

// X x Y x C dense feature map. Cell (i, j) covers
// [x_min + i*cell, x_min + (i+1)*cell) x [y_min + j*cell, ...).
struct BevGrid {
  BevGridSpec spec;
  Tensor<3> data;

  static BevGrid Zero(const BevGridSpec& spec);

  Index size_x() const { return data.dimension(0); }
  Index size_y() const { return data.dimension(1); }
  Index channels() const { return data.dimension(2); }
  double total() const;
  // Cells with any non-zero channel.
  Index occupied_cells() const;
};

// Camera features at 1/stride of the input image, shape H x W x C.
struct FeatureImage {
  Tensor<3> data;
  int stride = 1;

  Index height() const { return data.dimension(0); }
  Index width() const { return data.dimension(1); }
  Index channels() const { return data.dimension(2); }
};

// LiDAR-frame coordinates of every (v, u, d) sample of one camera.
struct Frustum {
  Tensor<4> coords;  // H x W x D x 3
  int camera_id = 0;

  Index height() const { return coords.dimension(0); }
  Index width() const { return coords.dimension(1); }
  Index bins() const { return coords.dimension(2); }
  Eigen::Vector3d at(Index v, Index u, Index d) const {
    return {coords(v, u, d, 0), coords(v, u, d, 1), coords(v, u, d, 2)};
  }
};

// Feature pixel (u, v) has its center at image pixel ((u + 0.5) * stride, (v + 0.5) * stride).
Frustum build_frustum(const CameraModel& cam, int stride, const DepthBinSpec& spec, int camera_id = 0);

// out(v, u, d, c) = depth(v, u, d) * features(v, u, c); shape H x W x D x C.
Tensor<4> lift(const FeatureImage& features, const DepthGrid& depth);

struct SplatOptions {
  // Optional [z_min, z_max) filter on frustum samples; off by default.
  std::optional<std::pair<double, double>> z_clip;
};

// Sum-pools lifted samples into BEV cells, dropping height. Samples are
// accumulated in (u, v, d) ascending order.
BevGrid splat(const Tensor<4>& lifted, const Frustum& frustum, const BevGridSpec& spec,
              const SplatOptions& options = {});

// Sum over cameras of splat(lift(...)); per-camera grids are added in camera order.
BevGrid camera_bev(std::span<const CameraModel> cams, std::span<const FeatureImage> features,
                   std::span<const DepthGrid> depths, const DepthBinSpec& bin_spec,
                   const BevGridSpec& bev_spec, const SplatOptions& options = {});

}  // namespace simplebev
