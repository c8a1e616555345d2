#include <cmath>
#include <set>

#include "doctest.h"
#include "simplebev/pipeline.hpp"

using namespace simplebev;

namespace {

using Cell = std::pair<Index, Index>;

std::set<Cell> occupied(const BevGrid& g) {
  std::set<Cell> out;
  for (Index i = 0; i < g.size_x(); ++i)
    for (Index j = 0; j < g.size_y(); ++j)
      for (Index c = 0; c < g.channels(); ++c)
        if (g.data(i, j, c) != 0.0) {
          out.insert({i, j});
          break;
        }
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("default config is consistent") {
    const PipelineConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    PipelineConfig bad = cfg;
    bad.bev_stride = 4;
    CHECK_THROWS_AS(bad.validate(), ContractError);
    bad = cfg;
    bad.image.image_width = 700;
    CHECK_THROWS_AS(bad.validate(), ContractError);
    bad = cfg;
    bad.bev.channels = 3;
    CHECK_THROWS_AS(bad.validate(), ContractError);
    bad = cfg;
    bad.pyramid_strides = {1, 2, 8};
    CHECK_THROWS_AS(bad.validate(), ContractError);
  }

  TEST_CASE("empty scene gives zero grids") {
    const PipelineConfig cfg;
    Scene s;
    s.sample_id = "empty";
    s.cameras = synth_camera_ring(cfg.image);
    const PipelineOutput out = run_pipeline(s, cfg);
    CHECK(out.camera.total() == 0.0);
    CHECK(out.lidar.total() == 0.0);
    CHECK(out.fused.total() == 0.0);
    CHECK(out.fused.occupied_cells() == 0);
    CHECK(out.diagnostics.mask_pixels == 0);
  }

  TEST_CASE("default grid shape and diagnostics") {
    const PipelineConfig cfg;
    const Scene s = synth_scene(5, 10, 20000);
    const PipelineOutput out = run_pipeline(s, cfg);
    CHECK(out.fused.size_x() == 180);
    CHECK(out.fused.size_y() == 180);
    CHECK(out.camera.channels() == 4);
    CHECK(out.lidar.channels() == 100);
    CHECK(out.fused.channels() == 104);
    CHECK(out.diagnostics.mask_coverage.size() == 6);
    CHECK(out.diagnostics.occupied_voxels.size() == 4);
    REQUIRE(out.diagnostics.checksums.size() == 4);
    CHECK(out.diagnostics.checksums[3].first == "fused");
    CHECK(out.diagnostics.mask_pixels > 0);

    const PipelineOutput again = run_pipeline(s, cfg);
    CHECK(again.diagnostics.checksums == out.diagnostics.checksums);
  }

  TEST_CASE("lidar cells of a single box scene") {
    const PipelineConfig cfg;
    const Scene s = synth_scene(6, 1, 6000);
    REQUIRE(s.boxes.size() == 1);
    const PipelineOutput out = run_pipeline(s, cfg);

    // footprint and ground oracle: every in-range point marks its 0.6 m cell
    const VoxelSpec& v = cfg.voxel;
    std::set<Cell> expect, footprint;
    for (Index i = 0; i < s.points.size(); ++i) {
      const Eigen::Vector3d p = s.points.xyz(i);
      if (p.x() < v.x_min || p.x() >= v.x_max || p.y() < v.y_min || p.y() >= v.y_max || p.z() < v.z_min ||
          p.z() >= v.z_max)
        continue;
      const auto ix = static_cast<Index>(std::floor((p.x() - v.x_min) / v.vx)) / cfg.bev_stride;
      const auto iy = static_cast<Index>(std::floor((p.y() - v.y_min) / v.vy)) / cfg.bev_stride;
      expect.insert({ix, iy});
      if (contains_point(s.boxes[0], p)) footprint.insert({ix, iy});
    }
    const std::set<Cell> got = occupied(out.lidar);
    CHECK(got == expect);
    CHECK_FALSE(footprint.empty());
    for (const Cell& c : footprint) CHECK(got.count(c) == 1);
    CHECK(out.diagnostics.lidar_occupied_cells == got.size());
  }

  TEST_CASE("errors carry the failing stage") {
    const PipelineConfig cfg;
    const Scene s = synth_scene(7, 2, 500);
    const DepthProvider broken = [](const CameraModel&, const FeatureImage&, const DepthBinSpec&) -> DepthGrid {
      throw ContractError("no model");
    };
    try {
      run_pipeline(s, cfg, broken);
      FAIL("expected a pipeline error");
    } catch (const PipelineError& e) {
      CHECK(std::string(e.what()) == "depth: no model");
    }

    const DepthProvider wrong_shape = [](const CameraModel&, const FeatureImage&, const DepthBinSpec& b) {
      return uniform_depth(3, 3, b);
    };
    try {
      run_pipeline(s, cfg, wrong_shape);
      FAIL("expected a pipeline error");
    } catch (const PipelineError& e) {
      CHECK(std::string(e.what()).rfind("rectify: ", 0) == 0);
    }

    PipelineConfig bad = cfg;
    bad.bev_stride = 3;
    CHECK_THROWS_WITH_AS(run_pipeline(s, bad), doctest::Contains("config: "), PipelineError);
  }
}
