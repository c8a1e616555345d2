#include <algorithm>
#include <numbers>

#include "doctest.h"
#include "simplebev/augment.hpp"

using namespace simplebev;

namespace {

Scene bare_scene(std::initializer_list<std::array<double, 3>> pts, std::vector<Box3D> boxes) {
  Scene s;
  s.sample_id = "t";
  PointCloud::Matrix m(static_cast<Index>(pts.size()), 4);
  Index i = 0;
  for (const auto& p : pts) m.row(i++) << p[0], p[1], p[2], 0.25;
  s.points = PointCloud(m);
  s.boxes = std::move(boxes);
  return s;
}

Box3D cube(double x, double y, double yaw = 0.0) {
  Box3D b;
  b.center = {x, y, 0};
  b.size = {2, 2, 2};
  b.yaw = yaw;
  return b;
}

std::vector<Scene> db_scenes() {
  std::vector<Scene> out;
  for (std::uint64_t s = 0; s < 3; ++s) out.push_back(synth_scene(900 + s, 10, 8000));
  return out;
}

}  // namespace

TEST_SUITE("augment") {
  TEST_CASE("scene without boxes gives an empty database") {
    const std::vector<Scene> one{bare_scene({{0, 0, 0}}, {})};
    const GtDatabase db = build_database(one);
    CHECK(db.empty());
    CHECK(db.size() == 0);
  }

  TEST_CASE("database crops the contained points") {
    const std::vector<Scene> one{bare_scene({{0, 0, 0},
                                             {0.5, 0.5, 0.5},
                                             {-0.9, 0.2, -0.9},
                                             {0.99, -0.99, 0},
                                             {0, 0.7, 0.1},
                                             {-0.3, -0.3, 0.8},
                                             {1, 0, 0},  // on a face
                                             {1.01, 0, 0},
                                             {0, 0, 1.2},
                                             {5, 5, 0}},
                                            {cube(0, 0)})};
    const GtDatabase db = build_database(one);
    REQUIRE(db.size() == 1);
    const GtEntry& e = db.entries.at(DetectionClass::kCar).front();
    CHECK(e.local_points.size() == 7);
    CHECK(e.box == cube(0, 0));
  }

  TEST_CASE("local frame undoes the box pose") {
    const Box3D b = cube(10, -4, std::numbers::pi / 2);
    const std::vector<Scene> one{bare_scene({{10.5, -4, 0.3}}, {b})};
    const GtDatabase db = build_database(one);
    const PointCloud& lp = db.entries.at(DetectionClass::kCar).front().local_points;
    REQUIRE(lp.size() == 1);
    CHECK((lp.xyz(0) - Eigen::Vector3d(0, -0.5, 0.3)).norm() <= 1e-12);
    CHECK(lp.intensity(0) == 0.25);
  }

  TEST_CASE("stored points stay inside their boxes") {
    const GtDatabase db = build_database(db_scenes());
    CHECK(db.size() == 30);
    for (const auto& [cls, list] : db.entries)
      for (const GtEntry& e : list)
        for (Index i = 0; i < e.local_points.size(); ++i) {
          const Eigen::Vector3d p = e.local_points.xyz(i);
          CHECK((p.cwiseAbs().array() <= 0.5 * e.box.size.array() + 1e-9).all());
        }
  }

  TEST_CASE("zero quota leaves the scene unchanged") {
    const GtDatabase db = build_database(db_scenes());
    const Scene target = synth_scene(1, 5, 3000);
    PasteQuota quota;
    for (DetectionClass c : all_classes()) quota[c] = 0;
    const PasteResult r = paste(target, db, quota, 7);
    CHECK(r.scene.points == target.points);
    CHECK(r.scene.boxes == target.boxes);
    CHECK(r.report.points_added == 0);
  }

  TEST_CASE("overlapping candidates are rejected") {
    const std::vector<Scene> src{bare_scene({{0, 0, 0}, {0.5, 0, 0}}, {cube(0, 0)})};
    const GtDatabase db = build_database(src);
    const Scene target = bare_scene({{3, 3, 0}}, {cube(0.5, 0.5)});
    const PasteResult r = paste(target, db, {{DetectionClass::kCar, 1}}, 3);
    CHECK(r.scene.boxes.size() == 1);
    CHECK(r.report.sampled.at(DetectionClass::kCar) == 1);
    CHECK(r.report.accepted.at(DetectionClass::kCar) == 0);
    CHECK(r.scene.points == target.points);
  }

  TEST_CASE("paste is deterministic and adds exactly the entry points") {
    const GtDatabase db = build_database(db_scenes());
    const Scene target = synth_scene(2, 4, 3000);
    const PasteQuota quota{{DetectionClass::kCar, 2}};
    const PasteResult a = paste(target, db, quota, 11);
    const PasteResult b = paste(target, db, quota, 11);
    CHECK(a.scene.points == b.scene.points);
    CHECK(a.scene.boxes == b.scene.boxes);

    const std::size_t n_new = a.scene.boxes.size() - target.boxes.size();
    CHECK(static_cast<int>(n_new) == a.report.accepted.at(DetectionClass::kCar));
    CHECK(n_new <= 2);
    std::size_t expected = 0;
    const auto& cars = db.entries.at(DetectionClass::kCar);
    for (std::size_t k = target.boxes.size(); k < a.scene.boxes.size(); ++k) {
      const auto it = std::find_if(cars.begin(), cars.end(), [&](const GtEntry& e) { return e.box == a.scene.boxes[k]; });
      REQUIRE(it != cars.end());
      expected += static_cast<std::size_t>(it->local_points.size());
    }
    CHECK(static_cast<std::size_t>(a.scene.points.size()) == static_cast<std::size_t>(target.points.size()) + expected);
    CHECK(a.report.points_added == expected);
  }

  TEST_CASE("pasted boxes never overlap anything") {
    const GtDatabase db = build_database(db_scenes());
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Scene target = synth_scene(50 + s, 6, 1000);
      PasteQuota quota;
      for (DetectionClass c : all_classes()) quota[c] = 3;
      const PasteResult r = paste(target, db, quota, s);
      for (std::size_t i = target.boxes.size(); i < r.scene.boxes.size(); ++i)
        for (std::size_t j = 0; j < r.scene.boxes.size(); ++j)
          if (i != j) CHECK(bev_iou(r.scene.boxes[i], r.scene.boxes[j]) == 0.0);
    }
  }

  TEST_CASE("negative quota is rejected") {
    CHECK_THROWS_AS(paste(synth_scene(3, 1, 10), GtDatabase{}, {{DetectionClass::kCar, -1}}, 0), ContractError);
  }

  TEST_CASE("fade schedule") {
    const FadeSchedule def;
    CHECK(paste_enabled(0, def));
    CHECK(paste_enabled(14, def));
    CHECK_FALSE(paste_enabled(15, def));
    CHECK_FALSE(paste_enabled(19, def));
    CHECK_THROWS_AS(paste_enabled(20, def), ContractError);
    CHECK_THROWS_AS(paste_enabled(-1, def), ContractError);

    const FadeSchedule never{20, 20};
    for (int e = 0; e < 20; ++e) CHECK(paste_enabled(e, never));
    CHECK_THROWS_AS((FadeSchedule{20, 21}.validate()), ContractError);
    CHECK_THROWS_AS((FadeSchedule{0, 0}.validate()), ContractError);
  }
}
