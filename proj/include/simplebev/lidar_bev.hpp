#pragma once

#include <array>
#include <map>
#include <span>
#include <vector>

#include "simplebev/geometry.hpp"
#include "simplebev/lift_splat.hpp"

namespace simplebev {

struct VoxelSpec {
  double vx = 0.075, vy = 0.075, vz = 0.2;
  double x_min = -54.0, x_max = 54.0;
  double y_min = -54.0, y_max = 54.0;
  double z_min = -5.0, z_max = -3.0;

  void validate() const;
  // Voxel counts at stride 1.
  std::array<int, 3> dims() const;
};

using VoxelKey = std::array<int, 3>;

// Hand-crafted per-voxel feature: mean (x, y, z) offset from the voxel center,
// mean intensity, min(n, 16) / 16.
inline constexpr int kVoxelFeatureChannels = 5;
inline constexpr int kVoxelCountSaturation = 16;

struct SparseVoxelGrid {
  VoxelSpec spec;
  int stride = 1;
  int channels = kVoxelFeatureChannels;
  std::map<VoxelKey, Eigen::VectorXd> entries;

  // ceil(dims / stride) per axis.
  std::array<int, 3> dims() const;
  Index occupied() const { return static_cast<Index>(entries.size()); }
};

SparseVoxelGrid voxelize(const PointCloud& pts, const VoxelSpec& spec);

// Groups children by floor(index / 2) and keeps the channelwise max.
SparseVoxelGrid downsample(const SparseVoxelGrid& grid, int factor = 2);

// Stride 1, 2, 4, ... up to `levels` entries.
std::vector<SparseVoxelGrid> build_pyramid(const SparseVoxelGrid& base, int levels = 4);

// BEV map with C * Z channels; channels [iz*C, (iz+1)*C) hold voxel (ix, iy, iz).
BevGrid compress_z(const SparseVoxelGrid& grid);

// Same result as max_pool_bev(compress_z(grid), factor), without building the
// fine dense map. Unoccupied cells count as zeros in the max.
BevGrid compress_z_pooled(const SparseVoxelGrid& grid, int factor);

// Channelwise max over factor x factor blocks.
BevGrid max_pool_bev(const BevGrid& grid, int factor);

struct PyramidLevel {
  int stride = 1;
  BevGrid bev;
};

// Brings every level to `target_stride` (nearest-neighbor upsampling for
// coarser levels, max pooling for finer ones) and concatenates channels in
// the order given.
BevGrid fuse_multiscale(std::span<const PyramidLevel> pyramid, int target_stride);

// Each cell replicated into a factor x factor block.
BevGrid upsample_nearest(const BevGrid& grid, int factor);

// fuse_multiscale over compress_z of every pyramid level, computed sparsely
// for levels finer than the target so no fine dense map is materialized.
BevGrid lidar_bev_from_pyramid(std::span<const SparseVoxelGrid> pyramid, int target_stride);

// Camera channels first, then LiDAR channels.
BevGrid concat_bev(const BevGrid& cam, const BevGrid& lid);

}  // namespace simplebev
