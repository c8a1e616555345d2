#include "simplebev/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "simplebev/random.hpp"

namespace simplebev {

std::size_t GtDatabase::size() const {
  std::size_t n = 0;
  for (const auto& [cls, list] : entries) n += list.size();
  return n;
}

GtDatabase build_database(std::span<const Scene> scenes) {
  GtDatabase db;
  for (const Scene& scene : scenes) {
    for (const Box3D& b : scene.boxes) {
      const double c = std::cos(b.yaw), s = std::sin(b.yaw);
      std::vector<Index> inside;
      for (Index i = 0; i < scene.points.size(); ++i)
        if (contains_point(b, scene.points.points.row(i).head<3>().transpose())) inside.push_back(i);

      PointCloud::Matrix local(static_cast<Index>(inside.size()), 4);
      for (std::size_t k = 0; k < inside.size(); ++k) {
        const auto p = scene.points.points.row(inside[k]);
        const double dx = p(0) - b.center.x(), dy = p(1) - b.center.y();
        local.row(static_cast<Index>(k)) << c * dx + s * dy, -s * dx + c * dy, p(2) - b.center.z(), p(3);
      }
      db.entries[b.label].push_back({b, PointCloud(std::move(local))});
    }
  }
  return db;
}

PasteResult paste(const Scene& scene, const GtDatabase& db, const PasteQuota& quota, std::uint64_t seed) {
  Rng rng(seed);
  PasteResult res{scene, {}};
  Scene& out = res.scene;

  std::vector<const GtEntry*> accepted;
  for (const auto& [cls, want] : quota) {
    require(want >= 0, "paste: quota must be non-negative");
    res.report.requested[cls] = want;
    const auto it = db.entries.find(cls);
    const std::size_t n = it == db.entries.end() ? 0 : it->second.size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(want), n);
    res.report.sampled[cls] = static_cast<int>(k);
    res.report.accepted[cls] = 0;
    if (k == 0) continue;

    // Partial Fisher-Yates: the first k slots are a uniform draw without replacement.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + rng.below(n - i)]);

    for (std::size_t i = 0; i < k; ++i) {
      const GtEntry& e = it->second[order[i]];
      const bool clear = std::all_of(out.boxes.begin(), out.boxes.end(),
                                     [&](const Box3D& b) { return bev_iou(e.box, b) == 0.0; });
      if (!clear) continue;
      out.boxes.push_back(e.box);
      accepted.push_back(&e);
      ++res.report.accepted[cls];
    }
  }

  std::size_t added = 0;
  for (const GtEntry* e : accepted) added += static_cast<std::size_t>(e->local_points.size());
  if (added > 0) {
    const Index n0 = scene.points.size();
    PointCloud::Matrix pts(n0 + static_cast<Index>(added), 4);
    pts.topRows(n0) = scene.points.points;
    Index row = n0;
    for (const GtEntry* e : accepted) {
      const Box3D& b = e->box;
      const double c = std::cos(b.yaw), s = std::sin(b.yaw);
      for (Index i = 0; i < e->local_points.size(); ++i, ++row) {
        const auto p = e->local_points.points.row(i);
        pts.row(row) << b.center.x() + c * p(0) - s * p(1), b.center.y() + s * p(0) + c * p(1), b.center.z() + p(2),
            p(3);
      }
    }
    out.points = PointCloud(std::move(pts));
  }
  res.report.points_added = added;
  return res;
}

void FadeSchedule::validate() const {
  require(total_epochs >= 1, "FadeSchedule: total_epochs must be >= 1");
  require(fade_start_epoch >= 0 && fade_start_epoch <= total_epochs,
          "FadeSchedule: fade_start_epoch must be in [0, total_epochs]");
}

bool paste_enabled(int epoch, const FadeSchedule& sched) {
  sched.validate();
  require(epoch >= 0 && epoch < sched.total_epochs, "paste_enabled: epoch outside [0, total_epochs)");
  return epoch < sched.fade_start_epoch;
}

}  // namespace simplebev
