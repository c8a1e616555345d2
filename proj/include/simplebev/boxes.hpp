#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace simplebev {

enum class DetectionClass : int {
  kCar = 0,
  kTruck,
  kConstructionVehicle,
  kBus,
  kTrailer,
  kBarrier,
  kMotorcycle,
  kBicycle,
  kPedestrian,
  kTrafficCone,
};

inline constexpr int kNumClasses = 10;

const std::array<DetectionClass, kNumClasses>& all_classes();
// nuScenes detection names ("car", "construction_vehicle", ...).
std::string_view class_name(DetectionClass c);
// Short column headers (Car, Truck, C.V., ...).
std::string_view class_abbrev(DetectionClass c);
std::optional<DetectionClass> class_from_name(std::string_view name);

struct Box3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();  // l, w, h
  double yaw = 0.0;
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  DetectionClass label = DetectionClass::kCar;
  double score = 1.0;
  std::string attribute;  // empty when absent

  // Throws ContractError on non-positive sizes, out-of-range score or yaw.
  void validate() const;
  double volume() const { return size.prod(); }
  double z_bottom() const { return center.z() - 0.5 * size.z(); }
  double z_top() const { return center.z() + 0.5 * size.z(); }

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

struct DetectionSet {
  std::string sample_id;
  std::vector<Box3D> boxes;

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

// Footprint corners, counter-clockwise, as columns.
Eigen::Matrix<double, 2, 4> bev_corners(const Box3D& b);

// Area of the intersection of two convex polygons given as CCW columns.
double convex_intersection_area(const Eigen::Matrix2Xd& a, const Eigen::Matrix2Xd& b);
double polygon_area(const Eigen::Matrix2Xd& poly);

double bev_iou(const Box3D& a, const Box3D& b);
double iou3d(const Box3D& a, const Box3D& b);

// Closed containment test in the box frame.
bool contains_point(const Box3D& b, const Eigen::Vector3d& p);

struct NmsOptions {
  double iou_threshold = 0.2;
  bool per_class = true;
  double min_score = 0.0;
};

// Greedy suppression by score (ties: lower input index first). A box survives
// when its BEV IoU with every kept box (of its class, when per_class) is at
// most the threshold. Survivors are returned in decision order.
DetectionSet nms(const DetectionSet& dets, double iou_threshold, bool per_class);
DetectionSet nms(const DetectionSet& dets, const NmsOptions& options);

// Rotate about the origin by yaw_rot, scale by `scale`, then mirror x -> -x if
// flip_x. Size and velocity follow the same map.
Box3D transform_box(const Box3D& b, double yaw_rot, double scale, bool flip_x);

}  // namespace simplebev
