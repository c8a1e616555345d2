#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "simplebev/boxes.hpp"
#include "simplebev/geometry.hpp"
#include "simplebev/scene.hpp"

namespace simplebev {

struct GtEntry {
  Box3D box;
  PointCloud local_points;  // box frame: origin at center, x along yaw
};

struct GtDatabase {
  std::map<DetectionClass, std::vector<GtEntry>> entries;

  std::size_t size() const;
  bool empty() const { return size() == 0; }
};

GtDatabase build_database(std::span<const Scene> scenes);

using PasteQuota = std::map<DetectionClass, int>;

struct PasteReport {
  std::map<DetectionClass, int> requested;
  std::map<DetectionClass, int> sampled;
  std::map<DetectionClass, int> accepted;
  std::size_t points_added = 0;
};

struct PasteResult {
  Scene scene;
  PasteReport report;
};

// Draws up to quota[c] entries per class without replacement and pastes those
// whose box has zero BEV IoU with every box already in the scene.
PasteResult paste(const Scene& scene, const GtDatabase& db, const PasteQuota& quota, std::uint64_t seed);

struct FadeSchedule {
  int total_epochs = 20;
  int fade_start_epoch = 15;

  void validate() const;
};

// Zero-based epochs; pasting runs for epochs [0, fade_start_epoch).
bool paste_enabled(int epoch, const FadeSchedule& sched);

}  // namespace simplebev
