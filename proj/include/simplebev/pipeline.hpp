#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simplebev/augment.hpp"
#include "simplebev/boxes.hpp"
#include "simplebev/depthmap.hpp"
#include "simplebev/ensemble.hpp"
#include "simplebev/lidar_bev.hpp"
#include "simplebev/lift_splat.hpp"
#include "simplebev/metrics.hpp"
#include "simplebev/scene.hpp"

namespace simplebev {

struct PipelineConfig {
  VoxelSpec voxel;
  BevGridSpec bev{-54.0, 54.0, -54.0, 54.0, 0.6, 4};
  DepthBinSpec depth_bins;
  SynthOptions image;  // image size, stride, camera ring used by synth
  std::vector<int> pyramid_strides{1, 2, 4, 8};
  int bev_stride = 8;  // LiDAR-BEV resolution in voxels; must match bev.cell_size
  double ground_z = -4.9;  // plane used by the default depth provider
  NmsOptions nms;
  TtaConfig tta;
  WbfConfig wbf;
  EvalConfig eval;
  FadeSchedule fade;
  std::uint64_t seed = 0;

  // Ranges divisible by cell sizes, stride divides the image, BEV cell equals
  // voxel size * bev_stride, channel count equals the feature channel count.
  void validate() const;
};

struct PipelineDiagnostics {
  std::vector<double> mask_coverage;  // per camera, fraction of feature pixels
  std::size_t mask_pixels = 0;
  std::vector<std::size_t> occupied_voxels;  // per pyramid level
  std::size_t camera_occupied_cells = 0;
  std::size_t lidar_occupied_cells = 0;
  std::vector<std::pair<std::string, std::uint64_t>> checksums;  // stage -> FNV-1a of float32 data
};

struct PipelineOutput {
  BevGrid camera;
  BevGrid lidar;
  BevGrid fused;
  PipelineDiagnostics diagnostics;
};

// Thrown with the failing stage prefixed to the message.
class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Camera branch: rasterize -> rectify -> lift -> splat; LiDAR branch:
// voxelize -> pyramid -> compress_z -> fuse; then concat_bev.
PipelineOutput run_pipeline(const Scene& scene, const PipelineConfig& cfg);
PipelineOutput run_pipeline(const Scene& scene, const PipelineConfig& cfg, const DepthProvider& provider);

}  // namespace simplebev
