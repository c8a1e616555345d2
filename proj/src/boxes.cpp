#include "simplebev/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "simplebev/geometry.hpp"
#include "simplebev/types.hpp"

namespace simplebev {

namespace {

struct ClassInfo {
  DetectionClass id;
  std::string_view name;
  std::string_view abbrev;
};

constexpr std::array<ClassInfo, kNumClasses> kClassInfo{{
    {DetectionClass::kCar, "car", "Car"},
    {DetectionClass::kTruck, "truck", "Truck"},
    {DetectionClass::kConstructionVehicle, "construction_vehicle", "C.V."},
    {DetectionClass::kBus, "bus", "Bus"},
    {DetectionClass::kTrailer, "trailer", "T.L."},
    {DetectionClass::kBarrier, "barrier", "B.R."},
    {DetectionClass::kMotorcycle, "motorcycle", "M.T."},
    {DetectionClass::kBicycle, "bicycle", "Bicycle"},
    {DetectionClass::kPedestrian, "pedestrian", "Ped."},
    {DetectionClass::kTrafficCone, "traffic_cone", "T.C."},
}};

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

double circumradius(const Box3D& b) { return 0.5 * std::hypot(b.size.x(), b.size.y()); }

bool far_apart(const Box3D& a, const Box3D& b) {
  return (a.center.head<2>() - b.center.head<2>()).norm() > circumradius(a) + circumradius(b);
}

}  // namespace

const std::array<DetectionClass, kNumClasses>& all_classes() {
  static const std::array<DetectionClass, kNumClasses> classes = [] {
    std::array<DetectionClass, kNumClasses> out{};
    for (int i = 0; i < kNumClasses; ++i) out[i] = kClassInfo[i].id;
    return out;
  }();
  return classes;
}

std::string_view class_name(DetectionClass c) { return kClassInfo[static_cast<int>(c)].name; }
std::string_view class_abbrev(DetectionClass c) { return kClassInfo[static_cast<int>(c)].abbrev; }

std::optional<DetectionClass> class_from_name(std::string_view name) {
  for (const auto& info : kClassInfo)
    if (info.name == name) return info.id;
  return std::nullopt;
}

void Box3D::validate() const {
  require(center.allFinite() && velocity.allFinite() && std::isfinite(yaw), "Box3D: non-finite field");
  require(size.allFinite() && (size.array() > 0).all(), "Box3D: sizes must be positive");
  require(yaw > -std::numbers::pi && yaw <= std::numbers::pi, "Box3D: yaw outside (-pi, pi]");
  require(score >= 0.0 && score <= 1.0, "Box3D: score outside [0, 1]");
}

Eigen::Matrix<double, 2, 4> bev_corners(const Box3D& b) {
  const double hl = 0.5 * b.size.x(), hw = 0.5 * b.size.y();
  Eigen::Matrix<double, 2, 4> local;
  local << hl, -hl, -hl, hl,  //
      hw, hw, -hw, -hw;
  Eigen::Matrix2d r;
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  r << c, -s, s, c;
  return (r * local).colwise() + b.center.head<2>();
}

double polygon_area(const Eigen::Matrix2Xd& poly) {
  const Index n = poly.cols();
  double twice = 0.0;
  for (Index i = 0; i < n; ++i) twice += cross2(poly.col(i), poly.col((i + 1) % n));
  return 0.5 * twice;
}

double convex_intersection_area(const Eigen::Matrix2Xd& subject, const Eigen::Matrix2Xd& clip) {
  std::vector<Eigen::Vector2d> out;
  for (Index i = 0; i < subject.cols(); ++i) out.emplace_back(subject.col(i));
  const double scale = 1.0 + std::max(subject.cwiseAbs().maxCoeff(), clip.cwiseAbs().maxCoeff());
  // Points within this distance of a clip edge count as inside, so shared
  // edges and vertices survive clipping unchanged.
  const double tol = 1e-12 * scale;

  for (Index e = 0; e < clip.cols() && out.size() >= 3; ++e) {
    const Eigen::Vector2d a = clip.col(e), b = clip.col((e + 1) % clip.cols());
    const Eigen::Vector2d edge = b - a;
    const double len = edge.norm();
    auto signed_dist = [&](const Eigen::Vector2d& q) { return cross2(edge, q - a) / len; };

    std::vector<Eigen::Vector2d> next;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Eigen::Vector2d& cur = out[i];
      const Eigen::Vector2d& prev = out[(i + out.size() - 1) % out.size()];
      const double dc = signed_dist(cur), dp = signed_dist(prev);
      const bool cur_in = dc >= -tol, prev_in = dp >= -tol;
      if (cur_in != prev_in) next.push_back(prev + (dp / (dp - dc)) * (cur - prev));
      if (cur_in) next.push_back(cur);
    }
    out = std::move(next);
  }
  if (out.size() < 3) return 0.0;
  Eigen::Matrix2Xd poly(2, static_cast<Index>(out.size()));
  for (std::size_t i = 0; i < out.size(); ++i) poly.col(static_cast<Index>(i)) = out[i];
  return std::max(0.0, polygon_area(poly));
}

namespace {

// Intersection area plus the two footprint areas, all computed with the same
// shoelace routine.
struct Overlap {
  double inter = 0.0, area_a = 0.0, area_b = 0.0;
};

Overlap bev_overlap(const Box3D& a, const Box3D& b) {
  const Eigen::Matrix2Xd ca = bev_corners(a), cb = bev_corners(b);
  Overlap o;
  o.area_a = polygon_area(ca);
  o.area_b = polygon_area(cb);
  if (!far_apart(a, b)) o.inter = std::min({convex_intersection_area(ca, cb), o.area_a, o.area_b});
  return o;
}

}  // namespace

double bev_iou(const Box3D& a, const Box3D& b) {
  const Overlap o = bev_overlap(a, b);
  if (o.inter <= 0.0) return 0.0;
  return std::clamp(o.inter / (o.area_a + o.area_b - o.inter), 0.0, 1.0);
}

double iou3d(const Box3D& a, const Box3D& b) {
  const double dz = std::min(a.z_top(), b.z_top()) - std::max(a.z_bottom(), b.z_bottom());
  if (dz <= 0.0) return 0.0;
  const Overlap o = bev_overlap(a, b);
  if (o.inter <= 0.0) return 0.0;
  const double inter = o.inter * dz;
  const double va = o.area_a * a.size.z(), vb = o.area_b * b.size.z();
  return std::clamp(inter / (va + vb - inter), 0.0, 1.0);
}

bool contains_point(const Box3D& b, const Eigen::Vector3d& p) {
  const Eigen::Vector3d d = p - b.center;
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double lx = c * d.x() + s * d.y();
  const double ly = -s * d.x() + c * d.y();
  return std::abs(lx) <= 0.5 * b.size.x() && std::abs(ly) <= 0.5 * b.size.y() && std::abs(d.z()) <= 0.5 * b.size.z();
}

DetectionSet nms(const DetectionSet& dets, double iou_threshold, bool per_class) {
  return nms(dets, NmsOptions{iou_threshold, per_class, 0.0});
}

DetectionSet nms(const DetectionSet& dets, const NmsOptions& options) {
  require(options.iou_threshold >= 0.0 && options.iou_threshold <= 1.0, "nms: threshold outside [0, 1]");
  std::vector<std::size_t> order(dets.boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets.boxes[a].score > dets.boxes[b].score; });

  DetectionSet out{dets.sample_id, {}};
  for (std::size_t idx : order) {
    const Box3D& cand = dets.boxes[idx];
    if (cand.score < options.min_score) continue;
    const bool suppressed = std::any_of(out.boxes.begin(), out.boxes.end(), [&](const Box3D& kept) {
      return (!options.per_class || kept.label == cand.label) && bev_iou(kept, cand) > options.iou_threshold;
    });
    if (!suppressed) out.boxes.push_back(cand);
  }
  return out;
}

Box3D transform_box(const Box3D& b, double yaw_rot, double scale, bool flip_x) {
  require(scale > 0, "transform_box: scale must be positive");
  const double c = std::cos(yaw_rot), s = std::sin(yaw_rot);
  Box3D out = b;
  out.center = Eigen::Vector3d(c * b.center.x() - s * b.center.y(), s * b.center.x() + c * b.center.y(),
                               b.center.z()) * scale;
  out.size = b.size * scale;
  out.velocity = Eigen::Vector2d(c * b.velocity.x() - s * b.velocity.y(), s * b.velocity.x() + c * b.velocity.y()) *
                 scale;
  double yaw = b.yaw + yaw_rot;
  if (flip_x) {
    out.center.x() = -out.center.x();
    out.velocity.x() = -out.velocity.x();
    yaw = std::numbers::pi - yaw;
  }
  out.yaw = normalize_angle(yaw);
  return out;
}

}  // namespace simplebev
