#include <algorithm>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "simplebev/ensemble.hpp"

using namespace simplebev;

namespace {

constexpr double kPi = std::numbers::pi;

Box3D big_box(double x, double score, DetectionClass cls = DetectionClass::kCar) {
  Box3D b;
  b.center = {x, 0, 0};
  b.size = {10, 4, 2};
  b.score = score;
  b.label = cls;
  return b;
}

bool near(const Box3D& a, const Box3D& b, double tol) {
  return (a.center - b.center).norm() <= tol && (a.size - b.size).norm() <= tol &&
         std::abs(std::remainder(a.yaw - b.yaw, 2 * kPi)) <= tol && (a.velocity - b.velocity).norm() <= tol &&
         a.label == b.label && a.score == b.score;
}

std::vector<Box3D> sorted(std::vector<Box3D> v) {
  std::sort(v.begin(), v.end(), [](const Box3D& a, const Box3D& b) {
    return std::make_tuple(a.center.x(), a.center.y(), a.score) < std::make_tuple(b.center.x(), b.center.y(), b.score);
  });
  return v;
}

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("tta config validation and records") {
    TtaConfig single{{0.0}, {1.0}, false};
    CHECK(tta_records(single).size() == 1);
    CHECK(tta_records(single).front() == TtaRecord{});
    const TtaConfig def;
    const auto recs = tta_records(def);
    CHECK(recs.size() == 9);
    CHECK(recs[0] == TtaRecord{-kPi / 8, 0.95, false});
    CHECK(recs[1] == TtaRecord{-kPi / 8, 1.0, false});
    TtaConfig flip = def;
    flip.flip_x = true;
    CHECK(tta_records(flip).size() == 18);
    CHECK_THROWS_AS((TtaConfig{{0.1}, {1.0}, false}.validate()), ContractError);
    CHECK_THROWS_AS((TtaConfig{{0.0}, {}, false}.validate()), ContractError);
    CHECK_THROWS_AS((TtaConfig{{0.0}, {1.0, -1.0}, false}.validate()), ContractError);
  }

  TEST_CASE("landmarks keep their pixels through a variant") {
    const Scene scene = synth_scene(31, 4, 2000);
    std::mt19937_64 g(31);
    std::uniform_real_distribution<double> uu(0, 704), uv(0, 256), ud(2, 40);
    for (const TtaRecord& r : {TtaRecord{kPi / 8, 1.05, false}, TtaRecord{-kPi / 8, 0.95, true}}) {
      const Scene t = transform_scene(scene, r);
      for (std::size_t c = 0; c < scene.cameras.size(); ++c) {
        const CameraModel& cam = scene.cameras[c];
        for (int k = 0; k < 20; ++k) {
          const double u = uu(g), v = uv(g), d = ud(g);
          const Eigen::Vector3d p = cam.lidar_from_cam().apply(cam.unproject(u, v, d));
          Eigen::Vector3d q = r.scale * (RigidTransformd::RotZ(r.yaw_rotation).rotation() * p);
          if (r.flip_x) q.x() = -q.x();
          const auto before = cam.project(cam.cam_from_lidar().apply(p));
          const auto after = t.cameras[c].project(t.cameras[c].cam_from_lidar().apply(q));
          REQUIRE(after.valid);
          CHECK(std::abs(after.u - (r.flip_x ? 2 * cam.cx() - before.u : before.u)) <= 1e-9);
          CHECK(std::abs(after.v - before.v) <= 1e-9);
          CHECK(std::abs(after.depth - r.scale * before.depth) <= 1e-9);
        }
      }
    }
  }

  TEST_CASE("flipped variant mirrors features") {
    const Scene scene = synth_scene(32, 2, 500);
    const Scene t = transform_scene(scene, TtaRecord{0.0, 1.0, true});
    const FeatureImage& a = scene.features[0];
    const FeatureImage& b = t.features[0];
    for (Index v = 0; v < a.height(); v += 5)
      for (Index u = 0; u < a.width(); ++u) CHECK(b.data(v, u, 0) == a.data(v, a.width() - 1 - u, 0));
  }

  TEST_CASE("expand then collapse recovers the ground truth") {
    const Scene scene = synth_scene(33, 8, 1000);
    TtaConfig cfg;
    cfg.flip_x = true;
    const auto variants = tta_expand(scene, cfg);
    REQUIRE(variants.size() == 18);
    std::vector<DetectionSet> sets;
    std::vector<TtaRecord> recs;
    std::size_t expected = 0;
    for (const TtaVariant& v : variants) {
      sets.push_back(v.scene.ground_truth());
      recs.push_back(v.record);
      expected += v.scene.boxes.size();
    }
    const DetectionSet pooled = tta_collapse(sets, recs);
    REQUIRE(pooled.boxes.size() == expected);
    for (std::size_t k = 0; k < variants.size(); ++k)
      for (std::size_t i = 0; i < scene.boxes.size(); ++i)
        CHECK(near(pooled.boxes[k * scene.boxes.size() + i], scene.boxes[i], 1e-9));

    const std::vector<DetectionSet> one{scene.ground_truth()};
    const std::vector<TtaRecord> id{TtaRecord{}};
    CHECK(tta_collapse(one, id).boxes == scene.boxes);
  }

  TEST_CASE("quarter-pi variant maps back to its source box") {
    Box3D b = big_box(3, 0.5);
    b.center.y() = -2;
    b.yaw = 0.2;
    b.velocity = {1, -1};
    const TtaRecord r{kPi / 4, 1.05, false};
    CHECK(near(invert_record(apply_record(b, r), r), b, 1e-9));
  }

  TEST_CASE("wbf with a single set is the identity") {
    const Scene scene = synth_scene(34, 15, 100);
    DetectionSet s = scene.ground_truth();
    std::mt19937_64 g(34);
    std::uniform_real_distribution<double> u(0.05, 1);
    for (Box3D& b : s.boxes) b.score = u(g);
    const std::vector<DetectionSet> sets{s};
    CHECK(wbf(sets, WbfConfig{}) == s);
  }

  TEST_CASE("wbf weighted center") {
    const std::vector<DetectionSet> sets{{"s", {big_box(0, 0.8)}}, {"s", {big_box(1, 0.4), big_box(100, 0.4)}}};
    const DetectionSet out = wbf(sets, WbfConfig{});
    REQUIRE(out.boxes.size() == 2);
    CHECK(out.boxes[0].center.x() == doctest::Approx(1.0 / 3).epsilon(1e-12));
    const Box3D expect = oracle::weighted_fusion({big_box(0, 0.8), big_box(1, 0.4)}, {1.0, 1.0}, 2.0);
    CHECK(near(out.boxes[0], expect, 1e-12));
    // the far box forms its own cluster; only its score is rescaled by the total weight
    Box3D far = big_box(100, 0.2);
    CHECK(out.boxes[1] == far);
  }

  TEST_CASE("wbf keeps classes apart") {
    const std::vector<DetectionSet> sets{{"s", {big_box(0, 0.8)}}, {"s", {big_box(0, 0.8, DetectionClass::kBus)}}};
    CHECK(wbf(sets, WbfConfig{}).boxes.size() == 2);
  }

  TEST_CASE("wbf config validation") {
    const std::vector<DetectionSet> sets{{"a", {}}, {"b", {}}};
    CHECK_THROWS_AS(wbf(sets, WbfConfig{}), ContractError);
    CHECK_THROWS_AS((WbfConfig{1.0, {}, 0.0}.validate(1)), ContractError);
    CHECK_THROWS_AS((WbfConfig{0.5, {1.0}, 0.0}.validate(2)), ContractError);
    CHECK_THROWS_AS((WbfConfig{0.5, {1.0, 0.0}, 0.0}.validate(2)), ContractError);
  }

  TEST_CASE("wbf is invariant to within-set order") {
    std::mt19937_64 g(35);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3), score(0.05, 1);
    const Scene scene = synth_scene(35, 12, 100);
    std::vector<DetectionSet> sets;
    for (int m = 0; m < 3; ++m) {
      DetectionSet s = scene.ground_truth();
      for (Box3D& b : s.boxes) {
        b.center.x() += jitter(g);
        b.center.y() += jitter(g);
        b.yaw = normalize_angle(b.yaw + 0.1 * jitter(g));
        b.score = score(g);
      }
      sets.push_back(s);
    }
    const WbfConfig cfg{0.3, {1.0, 2.0, 0.5}, 0.0};
    const auto base = sorted(wbf(sets, cfg).boxes);
    for (int t = 0; t < 5; ++t) {
      auto shuffled = sets;
      for (auto& s : shuffled) std::shuffle(s.boxes.begin(), s.boxes.end(), g);
      CHECK(sorted(wbf(shuffled, cfg).boxes) == base);
    }
  }

  TEST_CASE("fused center lies in the hull of member centers") {
    std::mt19937_64 g(36);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5), score(0.05, 1);
    for (int t = 0; t < 50; ++t) {
      std::vector<DetectionSet> sets;
      std::vector<Eigen::Vector2d> c;
      for (int m = 0; m < 3; ++m) {
        Box3D b = big_box(jitter(g), score(g));
        b.center.y() = jitter(g);
        c.emplace_back(b.center.x(), b.center.y());
        sets.push_back({"s", {b}});
      }
      const DetectionSet out = wbf(sets, WbfConfig{});
      REQUIRE(out.boxes.size() == 1);
      const Eigen::Vector2d p(out.boxes[0].center.x(), out.boxes[0].center.y());
      // barycentric coordinates
      Eigen::Matrix2d m;
      m << c[1] - c[0], c[2] - c[0];
      const Eigen::Vector2d l = m.colPivHouseholderQr().solve(p - c[0]);
      CHECK(l.minCoeff() >= -1e-9);
      CHECK(l.sum() <= 1 + 1e-9);
    }
  }
}
