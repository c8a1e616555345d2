#include "simplebev/pipeline.hpp"

#include <cmath>

#include "simplebev/encoding.hpp"

namespace simplebev {

void PipelineConfig::validate() const {
  voxel.validate();
  bev.validate();
  depth_bins.validate();
  tta.validate();
  eval.validate();
  fade.validate();
  require(nms.iou_threshold >= 0 && nms.iou_threshold <= 1, "PipelineConfig: nms.iou_threshold outside [0, 1]");
  require(image.num_cameras >= 1, "PipelineConfig: need at least one camera");
  require(image.feature_stride >= 1 && image.image_width % image.feature_stride == 0 &&
              image.image_height % image.feature_stride == 0,
          "PipelineConfig: feature stride must divide the image size");
  require(image.feature_channels == bev.channels, "PipelineConfig: bev.channels must equal the feature channel count");

  require(!pyramid_strides.empty() && pyramid_strides.front() == 1, "PipelineConfig: pyramid must start at stride 1");
  for (std::size_t i = 1; i < pyramid_strides.size(); ++i)
    require(pyramid_strides[i] == 2 * pyramid_strides[i - 1], "PipelineConfig: pyramid strides must double per level");
  require(bev_stride >= 1 && (bev_stride & (bev_stride - 1)) == 0 && bev_stride <= pyramid_strides.back(),
          "PipelineConfig: bev_stride must be a power of two within the pyramid");

  require(voxel.vx == voxel.vy, "PipelineConfig: BEV cells need vx == vy");
  require(std::abs(bev.cell_size - voxel.vx * bev_stride) <= 1e-9 * bev.cell_size,
          "PipelineConfig: bev.cell_size must equal vx * bev_stride");
  BevGridSpec lidar_window = bev;
  lidar_window.x_min = voxel.x_min;
  lidar_window.x_max = voxel.x_max;
  lidar_window.y_min = voxel.y_min;
  lidar_window.y_max = voxel.y_max;
  require(bev.same_window(lidar_window), "PipelineConfig: BEV window must equal the voxel x/y range");
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(std::string(name) + ": " + e.what());
  }
}

template <int Rank>
std::uint64_t checksum(const Tensor<Rank>& t) {
  const auto bytes = pack_f32le(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
  return fnv1a64(bytes);
}

}  // namespace

PipelineOutput run_pipeline(const Scene& scene, const PipelineConfig& cfg) {
  return run_pipeline(scene, cfg, GroundPriorDepthProvider{cfg.ground_z});
}

PipelineOutput run_pipeline(const Scene& scene, const PipelineConfig& cfg, const DepthProvider& provider) {
  stage("config", [&] { cfg.validate(); return 0; });
  const int stride = cfg.image.feature_stride;
  stage("scene", [&] { scene.validate(stride); return 0; });

  PipelineOutput out;
  PipelineDiagnostics& diag = out.diagnostics;

  // Camera branch.
  std::vector<FeatureImage> features;
  std::vector<DepthGrid> depths;
  std::uint64_t depth_hash = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    const CameraModel& cam = scene.cameras[i];
    FeatureImage f;
    if (scene.features.empty()) {
      f.stride = stride;
      f.data = Tensor<3>(cam.height() / stride, cam.width() / stride, cfg.bev.channels);
      f.data.setZero();
    } else {
      f = scene.features[i];
    }
    stage("features", [&] {
      require(f.channels() == cfg.bev.channels, "feature channel count does not match bev.channels");
      return 0;
    });
    const DepthGrid d_cam = stage("depth", [&] { return provider(cam, f, cfg.depth_bins); });
    const auto lid = stage("rasterize", [&] { return rasterize_lidar_depth(cam, scene.points, stride, cfg.depth_bins); });
    DepthGrid rect = stage("rectify", [&] { return rectify_depth(d_cam, lid.first, lid.second); });

    const MaskMap& mask = lid.second;
    const std::size_t hits = static_cast<std::size_t>((mask != 0).count());
    diag.mask_pixels += hits;
    diag.mask_coverage.push_back(static_cast<double>(hits) / static_cast<double>(mask.size()));
    // Chain the per-camera hashes so camera order matters.
    depth_hash = (depth_hash ^ checksum(rect.values)) * 0x100000001b3ULL;
    features.push_back(std::move(f));
    depths.push_back(std::move(rect));
  }
  out.camera = stage("splat", [&] {
    return camera_bev(scene.cameras, features, depths, cfg.depth_bins, cfg.bev);
  });

  // LiDAR branch.
  const SparseVoxelGrid base = stage("voxelize", [&] { return voxelize(scene.points, cfg.voxel); });
  const std::vector<SparseVoxelGrid> pyramid =
      stage("pyramid", [&] { return build_pyramid(base, static_cast<int>(cfg.pyramid_strides.size())); });
  for (const SparseVoxelGrid& g : pyramid) diag.occupied_voxels.push_back(static_cast<std::size_t>(g.occupied()));
  out.lidar = stage("compress", [&] { return lidar_bev_from_pyramid(pyramid, cfg.bev_stride); });

  out.fused = stage("fuse", [&] { return concat_bev(out.camera, out.lidar); });

  diag.camera_occupied_cells = static_cast<std::size_t>(out.camera.occupied_cells());
  diag.lidar_occupied_cells = static_cast<std::size_t>(out.lidar.occupied_cells());
  diag.checksums = {{"depth", depth_hash},
                    {"camera_bev", checksum(out.camera.data)},
                    {"lidar_bev", checksum(out.lidar.data)},
                    {"fused", checksum(out.fused.data)}};
  return out;
}

}  // namespace simplebev
