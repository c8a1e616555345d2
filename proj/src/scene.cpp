#include "simplebev/scene.hpp"

#include <cmath>
#include <numbers>

#include "simplebev/random.hpp"

namespace simplebev {

namespace {

// Nominal (l, w, h) per class.
constexpr std::array<std::array<double, 3>, kNumClasses> kNominalSize{{
    {4.6, 1.9, 1.7},    // car
    {7.0, 2.5, 3.0},    // truck
    {6.5, 2.8, 3.2},    // construction vehicle
    {11.0, 2.9, 3.5},   // bus
    {12.0, 2.9, 3.9},   // trailer
    {2.5, 0.5, 1.0},    // barrier
    {2.1, 0.8, 1.5},    // motorcycle
    {1.8, 0.6, 1.3},    // bicycle
    {0.7, 0.7, 1.75},   // pedestrian
    {0.4, 0.4, 1.0},    // traffic cone
}};

bool is_static(DetectionClass c) { return c == DetectionClass::kBarrier || c == DetectionClass::kTrafficCone; }

Box3D random_box(Rng& rng, const SynthOptions& opt) {
  Box3D b;
  b.label = static_cast<DetectionClass>(rng.below(kNumClasses));
  const auto& nominal = kNominalSize[static_cast<int>(b.label)];
  for (int k = 0; k < 3; ++k) b.size[k] = to_f32_exact(nominal[k] * rng.uniform(0.9, 1.1));
  b.size.z() = to_f32_exact(std::min(b.size.z(), opt.max_box_height));
  b.center.x() = to_f32_exact(rng.uniform(-opt.object_range, opt.object_range));
  b.center.y() = to_f32_exact(rng.uniform(-opt.object_range, opt.object_range));
  b.center.z() = to_f32_exact(opt.ground_z + 0.5 * b.size.z());
  b.yaw = to_f32_exact(rng.uniform(-3.14, 3.14));
  if (!is_static(b.label)) {
    b.velocity = Eigen::Vector2d(to_f32_exact(rng.uniform(-3.0, 3.0)), to_f32_exact(rng.uniform(-3.0, 3.0)));
  }
  b.score = 1.0;
  return b;
}

// Point on one of the four sides or the top, chosen by area.
Eigen::Vector3d surface_point(Rng& rng, const Box3D& b) {
  const double l = b.size.x(), w = b.size.y(), h = b.size.z();
  const double areas[5] = {w * h, w * h, l * h, l * h, l * w};
  double pick = rng.uniform(0.0, areas[0] + areas[1] + areas[2] + areas[3] + areas[4]);
  int face = 0;
  while (face < 4 && pick >= areas[face]) pick -= areas[face++];
  const double a = rng.uniform(-0.5, 0.5), c = rng.uniform(-0.5, 0.5);
  Eigen::Vector3d local;
  switch (face) {
    case 0: local = {0.5 * l, a * w, c * h}; break;
    case 1: local = {-0.5 * l, a * w, c * h}; break;
    case 2: local = {a * l, 0.5 * w, c * h}; break;
    case 3: local = {a * l, -0.5 * w, c * h}; break;
    default: local = {a * l, c * w, 0.5 * h}; break;
  }
  const double cy = std::cos(b.yaw), sy = std::sin(b.yaw);
  return b.center + Eigen::Vector3d(cy * local.x() - sy * local.y(), sy * local.x() + cy * local.y(), local.z());
}

}  // namespace

void Scene::validate(int stride) const {
  require(!cameras.empty(), "Scene: at least one camera is required");
  require(features.empty() || features.size() == cameras.size(), "Scene: need one feature map per camera");
  require(points.all_finite(), "Scene: non-finite point coordinates");
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    require(cameras[i].width() % stride == 0 && cameras[i].height() % stride == 0,
            "Scene: stride does not divide the image size");
    if (!features.empty()) {
      const FeatureImage& f = features[i];
      require(f.stride == stride && f.height() * stride == cameras[i].height() &&
                  f.width() * stride == cameras[i].width(),
              "Scene: feature map shape does not match its camera");
    }
  }
  for (const Box3D& b : boxes) b.validate();
}

std::vector<CameraModel> synth_camera_ring(const SynthOptions& opt) {
  std::vector<CameraModel> cams;
  for (int i = 0; i < opt.num_cameras; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / opt.num_cameras;
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix3d lidar_from_cam_rot;
    // columns: camera x (right), y (down), z (forward) in the LiDAR frame
    lidar_from_cam_rot << s, 0, c,  //
        -c, 0, s,                   //
        0, -1, 0;
    const Eigen::Vector3d center(opt.camera_ring_radius * c, opt.camera_ring_radius * s, opt.camera_height);
    const RigidTransformd lidar_from_cam(lidar_from_cam_rot, center);
    cams.emplace_back(opt.focal, opt.focal, 0.5 * opt.image_width, 0.5 * opt.image_height, opt.image_width,
                      opt.image_height, lidar_from_cam.inverse());
  }
  return cams;
}

FeatureImage synth_features(const CameraModel& cam, int camera_index, const SynthOptions& opt) {
  require(opt.feature_stride >= 1 && cam.width() % opt.feature_stride == 0 && cam.height() % opt.feature_stride == 0,
          "synth_features: stride must divide the image size");
  FeatureImage f;
  f.stride = opt.feature_stride;
  const Index h = cam.height() / f.stride, w = cam.width() / f.stride, nc = opt.feature_channels;
  f.data = Tensor<3>(h, w, nc);
  for (Index v = 0; v < h; ++v)
    for (Index u = 0; u < w; ++u)
      for (Index c = 0; c < nc; ++c) {
        double value;
        switch (c % 4) {
          case 0: value = (u + 0.5) / w; break;
          case 1: value = (v + 0.5) / h; break;
          case 2: value = (camera_index + 1.0) / opt.num_cameras; break;
          default: value = 1.0; break;
        }
        f.data(v, u, c) = to_f32_exact((c / 4) % 2 == 0 ? value : -value);
      }
  return f;
}

Scene synth_scene(std::uint64_t seed, int n_objects, int n_points, const SynthOptions& opt) {
  require(n_objects >= 0 && n_points >= 0, "synth_scene: counts must be non-negative");
  Rng rng(seed);
  Scene scene;
  scene.sample_id = "synth-" + std::to_string(seed);
  scene.cameras = synth_camera_ring(opt);
  for (int i = 0; i < opt.num_cameras; ++i) scene.features.push_back(synth_features(scene.cameras[i], i, opt));

  // Rejection sampling with a gap between bounding circles, so that every
  // pair of boxes is strictly disjoint.
  constexpr double kGap = 0.2;
  constexpr double kKeepOut = 4.0;  // meters around the sensor rig
  for (int attempt = 0; static_cast<int>(scene.boxes.size()) < n_objects && attempt < 1000 * (n_objects + 1);
       ++attempt) {
    const Box3D cand = random_box(rng, opt);
    const double rc = 0.5 * std::hypot(cand.size.x(), cand.size.y());
    if (cand.center.head<2>().norm() < kKeepOut + rc) continue;
    bool clear = true;
    for (const Box3D& b : scene.boxes) {
      const double rb = 0.5 * std::hypot(b.size.x(), b.size.y());
      if ((cand.center.head<2>() - b.center.head<2>()).norm() < rc + rb + kGap) {
        clear = false;
        break;
      }
    }
    if (clear) scene.boxes.push_back(cand);
  }

  const int object_points = scene.boxes.empty() ? 0 : static_cast<int>(0.4 * n_points);
  PointCloud::Matrix pts(n_points, 4);
  for (int i = 0; i < n_points; ++i) {
    Eigen::Vector3d p;
    if (i < object_points) {
      p = surface_point(rng, scene.boxes[rng.below(scene.boxes.size())]);
    } else {
      const double r = opt.ground_radius * std::sqrt(rng.uniform());
      const double phi = rng.uniform(-std::numbers::pi, std::numbers::pi);
      p = {r * std::cos(phi), r * std::sin(phi), opt.ground_z + rng.uniform(-0.04, 0.04)};
    }
    pts.row(i) << to_f32_exact(p.x()), to_f32_exact(p.y()), to_f32_exact(p.z()), to_f32_exact(rng.uniform());
  }
  scene.points = PointCloud(std::move(pts));
  return scene;
}

}  // namespace simplebev
