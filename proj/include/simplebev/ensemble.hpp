#pragma once

#include <numbers>
#include <span>
#include <vector>

#include "simplebev/boxes.hpp"
#include "simplebev/scene.hpp"

namespace simplebev {

struct TtaConfig {
  std::vector<double> yaw_rotations{-std::numbers::pi / 8, 0.0, std::numbers::pi / 8};
  std::vector<double> global_scales{0.95, 1.0, 1.05};
  bool flip_x = false;

  // Both lists non-empty, identity rotation and scale present, scales > 0.
  void validate() const;
};

// Parameters of one augmented pass, applied as rotate -> scale -> flip.
struct TtaRecord {
  double yaw_rotation = 0.0;
  double scale = 1.0;
  bool flip_x = false;

  friend bool operator==(const TtaRecord&, const TtaRecord&) = default;
};

struct TtaVariant {
  Scene scene;
  TtaRecord record;
};

// Forward map of a record applied to one box.
Box3D apply_record(const Box3D& b, const TtaRecord& r);
// Undoes apply_record: unflip, unscale, unrotate.
Box3D invert_record(const Box3D& b, const TtaRecord& r);

// Applies one record to a whole scene. Camera extrinsics are updated so every
// transformed point projects to the same pixel as before (mirrored about cx
// when flipping, with features mirrored to match); depths scale by `scale`.
Scene transform_scene(const Scene& scene, const TtaRecord& r);

// rotations x scales (x {no flip, flip}), rotation-major.
std::vector<TtaVariant> tta_expand(const Scene& scene, const TtaConfig& cfg);
std::vector<TtaRecord> tta_records(const TtaConfig& cfg);

// Maps every set back through its record and pools the results.
DetectionSet tta_collapse(std::span<const DetectionSet> det_sets, std::span<const TtaRecord> records);

struct WbfConfig {
  double cluster_iou = 0.55;
  std::vector<double> model_weights;  // empty: all 1
  double min_cluster_confidence = 0.0;

  void validate(std::size_t num_sets) const;
};

// Weighted box fusion over rotated boxes, per class. See ensemble.cpp for the
// clustering and averaging rules.
DetectionSet wbf(std::span<const DetectionSet> det_sets, const WbfConfig& cfg);

}  // namespace simplebev
