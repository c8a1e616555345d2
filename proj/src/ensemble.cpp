#include "simplebev/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "simplebev/geometry.hpp"

namespace simplebev {

void TtaConfig::validate() const {
  require(!yaw_rotations.empty() && !global_scales.empty(), "TtaConfig: rotation and scale lists must be non-empty");
  require(std::find(yaw_rotations.begin(), yaw_rotations.end(), 0.0) != yaw_rotations.end(),
          "TtaConfig: rotations must include 0");
  require(std::find(global_scales.begin(), global_scales.end(), 1.0) != global_scales.end(),
          "TtaConfig: scales must include 1");
  for (double s : global_scales) require(s > 0 && std::isfinite(s), "TtaConfig: scales must be positive");
  for (double r : yaw_rotations) require(std::isfinite(r), "TtaConfig: non-finite rotation");
}

Box3D apply_record(const Box3D& b, const TtaRecord& r) { return transform_box(b, r.yaw_rotation, r.scale, r.flip_x); }

Box3D invert_record(const Box3D& b, const TtaRecord& r) {
  const Box3D unflipped = r.flip_x ? transform_box(b, 0.0, 1.0, true) : b;
  // rotation about the origin and uniform scaling commute
  return transform_box(unflipped, -r.yaw_rotation, 1.0 / r.scale, false);
}

Scene transform_scene(const Scene& scene, const TtaRecord& r) {
  require(r.scale > 0, "transform_scene: scale must be positive");
  Scene out = scene;
  const RigidTransformd rot = RigidTransformd::RotZ(r.yaw_rotation);
  const Eigen::Matrix3d mirror = Eigen::Vector3d(-1.0, 1.0, 1.0).asDiagonal();

  // Points: flip(scale * R * p).
  auto xyz = out.points.points.leftCols<3>();
  xyz = (scene.points.points.leftCols<3>() * rot.rotation().transpose()) * r.scale;
  if (r.flip_x) xyz.col(0) = -xyz.col(0);

  // Cameras: p_cam' = scale * M * p_cam, which leaves (u, v) unchanged (or
  // mirrored about cx when M is the x mirror) and scales depth.
  for (auto& cam : out.cameras) {
    Eigen::Matrix3d r_new = cam.cam_from_lidar().rotation() * rot.rotation().transpose();
    Eigen::Vector3d t_new = r.scale * cam.cam_from_lidar().translation();
    if (r.flip_x) {
      r_new = mirror * r_new * mirror;
      t_new = mirror * t_new;
    }
    cam = cam.with_extrinsic(RigidTransformd(r_new, t_new));
  }

  if (r.flip_x) {
    for (std::size_t i = 0; i < out.features.size(); ++i) {
      require(out.cameras[i].cx() == 0.5 * out.cameras[i].width(),
              "transform_scene: mirroring features needs cx at the image center");
      const FeatureImage& src = scene.features[i];
      FeatureImage& dst = out.features[i];
      for (Index v = 0; v < src.height(); ++v)
        for (Index u = 0; u < src.width(); ++u)
          for (Index c = 0; c < src.channels(); ++c) dst.data(v, u, c) = src.data(v, src.width() - 1 - u, c);
    }
  }

  for (auto& b : out.boxes) b = apply_record(b, r);
  return out;
}

std::vector<TtaRecord> tta_records(const TtaConfig& cfg) {
  cfg.validate();
  std::vector<TtaRecord> out;
  for (double rot : cfg.yaw_rotations)
    for (double s : cfg.global_scales) {
      out.push_back({rot, s, false});
      if (cfg.flip_x) out.push_back({rot, s, true});
    }
  return out;
}

std::vector<TtaVariant> tta_expand(const Scene& scene, const TtaConfig& cfg) {
  std::vector<TtaVariant> out;
  for (const TtaRecord& r : tta_records(cfg)) out.push_back({transform_scene(scene, r), r});
  return out;
}

DetectionSet tta_collapse(std::span<const DetectionSet> det_sets, std::span<const TtaRecord> records) {
  require(det_sets.size() == records.size(), "tta_collapse: one record per detection set is required");
  DetectionSet out;
  if (det_sets.empty()) return out;
  out.sample_id = det_sets.front().sample_id;
  for (std::size_t i = 0; i < det_sets.size(); ++i) {
    require(det_sets[i].sample_id == out.sample_id, "tta_collapse: detection sets belong to different samples");
    for (const Box3D& b : det_sets[i].boxes) out.boxes.push_back(invert_record(b, records[i]));
  }
  return out;
}

void WbfConfig::validate(std::size_t num_sets) const {
  require(cluster_iou > 0.0 && cluster_iou < 1.0, "WbfConfig: cluster_iou must be in (0, 1)");
  require(model_weights.empty() || model_weights.size() == num_sets, "WbfConfig: need one weight per input set");
  for (double w : model_weights) require(w > 0 && std::isfinite(w), "WbfConfig: weights must be positive");
  require(min_cluster_confidence >= 0.0 && min_cluster_confidence <= 1.0,
          "WbfConfig: min_cluster_confidence must be in [0, 1]");
}

namespace {

struct Member {
  std::size_t set = 0;
  std::size_t index = 0;
  double model_weight = 1.0;
  const Box3D* box = nullptr;
};

struct Cluster {
  std::vector<Member> members;
  Box3D fused;
};

// Yaw difference folded into (-pi/2, pi/2]: boxes are symmetric under a half turn.
double aligned_offset(double yaw, double seed) {
  double d = std::remainder(yaw - seed, 2.0 * std::numbers::pi);
  if (d > 0.5 * std::numbers::pi) d -= std::numbers::pi;
  if (d <= -0.5 * std::numbers::pi) d += std::numbers::pi;
  return d;
}

// Score-weighted average of the members. A single member is reproduced bit for
// bit: its weight normalizes to exactly 1 and its yaw offset is exactly 0.
Box3D fuse(const std::vector<Member>& members, double total_weight) {
  double wsum = 0.0;
  for (const Member& m : members) wsum += m.model_weight * m.box->score;
  const Box3D& seed = *members.front().box;
  Box3D out = seed;
  out.center.setZero();
  out.size.setZero();
  out.velocity.setZero();
  double s_acc = 0.0, c_acc = 0.0, score = 0.0;
  for (const Member& m : members) {
    const double w = m.model_weight * m.box->score;
    const double a = wsum > 0 ? w / wsum : 1.0 / static_cast<double>(members.size());
    out.center += a * m.box->center;
    out.size += a * m.box->size;
    out.velocity += a * m.box->velocity;
    const double d = aligned_offset(m.box->yaw, seed.yaw);
    s_acc += a * std::sin(d);
    c_acc += a * std::cos(d);
    score += m.box->score * (m.model_weight / total_weight);
  }
  out.yaw = normalize_angle(seed.yaw + std::atan2(s_acc, c_acc));
  out.score = std::min(1.0, score);
  return out;
}

}  // namespace

DetectionSet wbf(std::span<const DetectionSet> det_sets, const WbfConfig& cfg) {
  cfg.validate(det_sets.size());
  DetectionSet out;
  if (det_sets.empty()) return out;
  out.sample_id = det_sets.front().sample_id;
  for (const DetectionSet& s : det_sets)
    require(s.sample_id == out.sample_id, "wbf: detection sets belong to different samples");

  double total_weight = 0.0;
  for (std::size_t s = 0; s < det_sets.size(); ++s)
    total_weight += cfg.model_weights.empty() ? 1.0 : cfg.model_weights[s];

  std::vector<Cluster> all_clusters;
  for (DetectionClass cls : all_classes()) {
    std::vector<Member> members;
    for (std::size_t s = 0; s < det_sets.size(); ++s)
      for (std::size_t i = 0; i < det_sets[s].boxes.size(); ++i)
        if (det_sets[s].boxes[i].label == cls)
          members.push_back({s, i, cfg.model_weights.empty() ? 1.0 : cfg.model_weights[s], &det_sets[s].boxes[i]});
    std::stable_sort(members.begin(), members.end(), [](const Member& a, const Member& b) {
      return a.model_weight * a.box->score > b.model_weight * b.box->score;
    });

    std::vector<Cluster> clusters;
    for (const Member& m : members) {
      auto it = std::find_if(clusters.begin(), clusters.end(),
                             [&](const Cluster& c) { return bev_iou(c.fused, *m.box) > cfg.cluster_iou; });
      if (it == clusters.end()) {
        clusters.push_back({{m}, {}});
        it = std::prev(clusters.end());
      } else {
        it->members.push_back(m);
      }
      it->fused = fuse(it->members, total_weight);
    }
    for (auto& c : clusters) all_clusters.push_back(std::move(c));
  }

  // Emit in the input position of each cluster's seed.
  std::sort(all_clusters.begin(), all_clusters.end(), [](const Cluster& a, const Cluster& b) {
    return std::tie(a.members.front().set, a.members.front().index) <
           std::tie(b.members.front().set, b.members.front().index);
  });
  for (const Cluster& c : all_clusters)
    if (c.fused.score >= cfg.min_cluster_confidence) out.boxes.push_back(c.fused);
  return out;
}

}  // namespace simplebev
