#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simplebev/boxes.hpp"
#include "simplebev/geometry.hpp"
#include "simplebev/lift_splat.hpp"

namespace simplebev {

// One sample: LiDAR sweep, surround cameras, ground truth and (optionally)
// per-camera feature maps. Cameras without features contribute zero features.
struct Scene {
  std::string sample_id;
  PointCloud points;
  std::vector<CameraModel> cameras;
  std::vector<Box3D> boxes;
  std::vector<FeatureImage> features;  // empty, or one per camera

  void validate(int stride) const;
  DetectionSet ground_truth() const { return {sample_id, boxes}; }
};

struct SynthOptions {
  int num_cameras = 6;
  int image_width = 704;
  int image_height = 256;
  int feature_stride = 8;
  int feature_channels = 4;
  double focal = 500.0;
  double camera_height = -3.2;  // LiDAR-frame z of the camera centers
  double camera_ring_radius = 0.5;
  double ground_z = -4.9;
  double ground_radius = 50.0;
  double object_range = 45.0;  // |x|, |y| bound for box centers
  double max_box_height = 1.6;
};

// Six cameras (by default) on a ring, each looking outward horizontally.
std::vector<CameraModel> synth_camera_ring(const SynthOptions& opt);

// Channels: u / W, v / H, camera index / num_cameras, 1, then repeats with
// alternating sign. Values are float-exact.
FeatureImage synth_features(const CameraModel& cam, int camera_index, const SynthOptions& opt);

// Deterministic synthetic scene. Boxes never overlap in BEV; points are
// sampled on box side/top faces and on a ground disc.
Scene synth_scene(std::uint64_t seed, int n_objects, int n_points, const SynthOptions& opt = {});

}  // namespace simplebev
