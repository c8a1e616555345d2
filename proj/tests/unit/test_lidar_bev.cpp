#include <algorithm>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "simplebev/lidar_bev.hpp"

using namespace simplebev;

namespace {

// 16 x 16 x 10 voxels of 1 m x 1 m x 0.2 m.
VoxelSpec small_spec() { return VoxelSpec{1, 1, 0.2, 0, 16, 0, 16, -5, -3}; }

PointCloud random_cloud(std::mt19937_64& g, Index n, const VoxelSpec& s) {
  std::uniform_real_distribution<double> ux(s.x_min, s.x_max), uy(s.y_min, s.y_max), uz(s.z_min, s.z_max);
  PointCloud::Matrix m(n, 4);
  for (Index i = 0; i < n; ++i) m.row(i) << ux(g), uy(g), uz(g), 0.5;
  return PointCloud(m);
}

SparseVoxelGrid random_voxels(std::mt19937_64& g, int n, int extent) {
  std::uniform_int_distribution<int> k(0, extent - 1);
  std::uniform_real_distribution<double> f(-1, 1);
  SparseVoxelGrid grid;
  grid.spec = small_spec();
  while (static_cast<int>(grid.entries.size()) < n) {
    Eigen::VectorXd v(kVoxelFeatureChannels);
    for (Index c = 0; c < v.size(); ++c) v[c] = f(g);
    grid.entries.emplace(VoxelKey{k(g), k(g), k(g) % 10}, v);
  }
  return grid;
}

BevGrid random_bev(std::mt19937_64& g, const BevGridSpec& spec) {
  std::uniform_real_distribution<double> f(-1, 1);
  BevGrid b = BevGrid::Zero(spec);
  for (Index i = 0; i < b.data.size(); ++i) b.data.data()[i] = f(g);
  return b;
}

bool same(const BevGrid& a, const BevGrid& b) {
  if (a.data.dimensions() != b.data.dimensions()) return false;
  for (Index i = 0; i < a.data.size(); ++i)
    if (a.data.data()[i] != b.data.data()[i]) return false;
  return true;
}

}  // namespace

TEST_SUITE("lidar_bev") {
  TEST_CASE("voxelize examples") {
    CHECK(voxelize(PointCloud(), VoxelSpec{}).occupied() == 0);

    PointCloud::Matrix m(1, 4);
    m << 0.0375, 0.0, -4.0, 0.0;
    const SparseVoxelGrid one = voxelize(PointCloud(m), VoxelSpec{});
    REQUIRE(one.occupied() == 1);
    CHECK(one.entries.begin()->first[0] == 720);

    // voxel iz = 0 spans [-5, -4.8), center -4.9
    PointCloud::Matrix two(2, 4);
    two << 1.5, 1.5, -4.95, 0.25, 1.5, 1.5, -4.85, 0.75;
    const SparseVoxelGrid g = voxelize(PointCloud(two), small_spec());
    REQUIRE(g.occupied() == 1);
    const auto& [key, f] = *g.entries.begin();
    CHECK(key == VoxelKey{1, 1, 0});
    CHECK(std::abs(f[2]) <= 1e-12);
    CHECK(f[3] == 0.5);
    CHECK(f[4] == 2.0 / 16);
  }

  TEST_CASE("voxelize drops points outside the range") {
    PointCloud::Matrix m(4, 4);
    m << -0.01, 1, -4, 0, 16, 1, -4, 0, 1, 1, -3, 0, 1, 1, -5, 0;
    const SparseVoxelGrid g = voxelize(PointCloud(m), small_spec());
    REQUIRE(g.occupied() == 1);
    CHECK(g.entries.begin()->first == VoxelKey{1, 1, 0});
  }

  TEST_CASE("count feature saturates") {
    PointCloud::Matrix m(40, 4);
    for (Index i = 0; i < 40; ++i) m.row(i) << 3.5, 3.5, -4.1, 0.0;
    CHECK(voxelize(PointCloud(m), small_spec()).entries.begin()->second[4] == 1.0);
  }

  TEST_CASE("voxelize is permutation invariant") {
    std::mt19937_64 g(11);
    const VoxelSpec s = small_spec();
    // few voxels, many points each, so the reduction order matters
    PointCloud::Matrix m(600, 4);
    std::uniform_real_distribution<double> u(0, 1);
    for (Index i = 0; i < m.rows(); ++i) m.row(i) << 2 + 2 * u(g), 2 + 2 * u(g), -5 + 0.4 * u(g), u(g);
    const SparseVoxelGrid base = voxelize(PointCloud(m), s);
    std::vector<Index> perm(static_cast<std::size_t>(m.rows()));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Index>(i);
    for (int t = 0; t < 5; ++t) {
      std::shuffle(perm.begin(), perm.end(), g);
      PointCloud::Matrix p(m.rows(), 4);
      for (Index i = 0; i < m.rows(); ++i) p.row(i) = m.row(perm[static_cast<std::size_t>(i)]);
      const SparseVoxelGrid shuffled = voxelize(PointCloud(p), s);
      REQUIRE(shuffled.entries.size() == base.entries.size());
      CHECK(shuffled.entries == base.entries);
    }
  }

  TEST_CASE("downsample examples") {
    SparseVoxelGrid g;
    g.spec = small_spec();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(5), b = Eigen::VectorXd::Zero(5);
    a[0] = 1;
    b[1] = 2;
    g.entries[{4, 6, 2}] = a;
    const SparseVoxelGrid d = downsample(g);
    CHECK(d.stride == 2);
    REQUIRE(d.occupied() == 1);
    CHECK(d.entries.at({2, 3, 1}) == a);

    g.entries[{5, 7, 3}] = b;
    const SparseVoxelGrid d2 = downsample(g);
    REQUIRE(d2.occupied() == 1);
    CHECK(d2.entries.at({2, 3, 1})[0] == 1);
    CHECK(d2.entries.at({2, 3, 1})[1] == 2);
  }

  TEST_CASE("downsample matches the grouping oracle") {
    std::mt19937_64 g(12);
    for (int t = 0; t < 10; ++t) {
      const SparseVoxelGrid grid = random_voxels(g, 20, 16);
      const SparseVoxelGrid d = downsample(grid);
      CHECK(d.entries == oracle::downsample_groups(grid.entries));
      CHECK(d.occupied() <= grid.occupied());
      for (const auto& [p, f] : d.entries) {
        const bool has_child = std::any_of(grid.entries.begin(), grid.entries.end(), [&](const auto& e) {
          return e.first[0] / 2 == p[0] && e.first[1] / 2 == p[1] && e.first[2] / 2 == p[2];
        });
        CHECK(has_child);
      }
    }
  }

  TEST_CASE("pyramid strides double") {
    std::mt19937_64 g(13);
    const auto levels = build_pyramid(voxelize(random_cloud(g, 500, small_spec()), small_spec()), 4);
    REQUIRE(levels.size() == 4);
    for (std::size_t l = 0; l < levels.size(); ++l) CHECK(levels[l].stride == (1 << l));
    CHECK(levels[3].dims() == std::array<int, 3>{2, 2, 2});
  }

  TEST_CASE("compress_z examples") {
    SparseVoxelGrid empty;
    empty.spec = small_spec();
    const BevGrid z = compress_z(empty);
    CHECK(z.size_x() == 16);
    CHECK(z.channels() == 50);
    CHECK(z.total() == 0.0);

    SparseVoxelGrid one = empty;
    Eigen::VectorXd f(5);
    f << 1, 2, 3, 4, 5;
    one.entries[{3, 4, 0}] = f;
    const BevGrid b = compress_z(one);
    for (Index c = 0; c < 5; ++c) CHECK(b.data(3, 4, c) == f[c]);
    CHECK(b.total() == f.sum());
  }

  TEST_CASE("stride 8 grid has two z slots") {
    std::mt19937_64 g(14);
    const auto levels = build_pyramid(voxelize(random_cloud(g, 800, small_spec()), small_spec()), 4);
    const SparseVoxelGrid& s8 = levels[3];
    const BevGrid b = compress_z(s8);
    CHECK(s8.dims()[2] == 2);
    CHECK(b.channels() == 2 * kVoxelFeatureChannels);
    CHECK(b.size_x() == 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int c = 0; c < 10; ++c) CHECK(b.data(i, j, c) == oracle::compress_z_element(s8, i, j, c));
  }

  TEST_CASE("compress_z preserves nonnegative mass") {
    std::mt19937_64 g(15);
    const SparseVoxelGrid grid = voxelize(random_cloud(g, 2000, small_spec()), small_spec());
    const BevGrid b = compress_z(grid);
    for (int c : {3, 4}) {
      double voxels = 0, cells = 0;
      for (const auto& [k, f] : grid.entries) voxels += f[c];
      for (Index i = 0; i < b.size_x(); ++i)
        for (Index j = 0; j < b.size_y(); ++j)
          for (Index z = 0; z < 10; ++z) cells += b.data(i, j, z * kVoxelFeatureChannels + c);
      CHECK(cells == voxels);
    }
  }

  TEST_CASE("compress_z_pooled equals pooling the dense map") {
    std::mt19937_64 g(16);
    const auto levels = build_pyramid(voxelize(random_cloud(g, 1500, small_spec()), small_spec()), 3);
    for (const SparseVoxelGrid& lv : levels)
      for (int f : {1, 2, 4})
        if (lv.stride * f <= 8) CHECK(same(compress_z_pooled(lv, f), max_pool_bev(compress_z(lv), f)));
  }

  TEST_CASE("fuse_multiscale examples") {
    std::mt19937_64 g(17);
    const BevGrid a = random_bev(g, BevGridSpec{0, 16, 0, 16, 4, 1});
    const BevGrid b = random_bev(g, BevGridSpec{0, 16, 0, 16, 8, 2});

    const std::vector<PyramidLevel> single{{4, a}};
    CHECK(same(fuse_multiscale(single, 4), a));

    const std::vector<PyramidLevel> two{{4, a}, {8, b}};
    const BevGrid fused = fuse_multiscale(two, 4);
    REQUIRE(fused.channels() == 3);
    REQUIRE(fused.size_x() == 4);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) {
        CHECK(fused.data(i, j, 0) == a.data(i, j, 0));
        CHECK(fused.data(i, j, 1) == b.data(i / 2, j / 2, 0));
        CHECK(fused.data(i, j, 2) == b.data(i / 2, j / 2, 1));
      }

    CHECK_THROWS_AS(fuse_multiscale(two, 16), ContractError);
  }

  TEST_CASE("upsample replicates cells") {
    BevGrid g = BevGrid::Zero(BevGridSpec{0, 2, 0, 2, 1, 1});
    g.data.setValues({{{1}, {2}}, {{3}, {4}}});
    const BevGrid up = upsample_nearest(g, 2);
    REQUIRE(up.size_x() == 4);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) CHECK(up.data(i, j, 0) == g.data(i / 2, j / 2, 0));
    CHECK(up.spec.cell_size == 0.5);
  }

  TEST_CASE("lidar_bev_from_pyramid matches fusing dense levels") {
    std::mt19937_64 g(18);
    const auto levels = build_pyramid(voxelize(random_cloud(g, 1500, small_spec()), small_spec()), 4);
    std::vector<PyramidLevel> dense;
    for (const auto& lv : levels) dense.push_back({lv.stride, compress_z(lv)});
    CHECK(same(lidar_bev_from_pyramid(levels, 2), fuse_multiscale(dense, 2)));
    CHECK(same(lidar_bev_from_pyramid(levels, 8), fuse_multiscale(dense, 8)));
  }

  TEST_CASE("concat_bev examples") {
    BevGrid cam = BevGrid::Zero(BevGridSpec{0, 1, 0, 1, 1, 2});
    BevGrid lid = BevGrid::Zero(BevGridSpec{0, 1, 0, 1, 1, 1});
    cam.data.setValues({{{1, 2}}});
    lid.data.setValues({{{3}}});
    const BevGrid c = concat_bev(cam, lid);
    REQUIRE(c.channels() == 3);
    CHECK(c.data(0, 0, 0) == 1);
    CHECK(c.data(0, 0, 1) == 2);
    CHECK(c.data(0, 0, 2) == 3);

    std::mt19937_64 g(19);
    const BevGrid l = random_bev(g, BevGridSpec{-54, 54, -54, 54, 0.6, 7});
    const BevGrid z = BevGrid::Zero(BevGridSpec{-54, 54, -54, 54, 0.6, 4});
    const BevGrid out = concat_bev(z, l);
    REQUIRE(out.size_x() == 180);
    REQUIRE(out.channels() == 11);
    for (Index i = 0; i < 180; ++i)
      for (Index j = 0; j < 180; ++j) {
        for (Index k = 0; k < 4; ++k) CHECK(out.data(i, j, k) == 0.0);
        for (Index k = 0; k < 7; ++k) CHECK(out.data(i, j, 4 + k) == l.data(i, j, k));
      }

    CHECK_THROWS_AS(concat_bev(cam, BevGrid::Zero(BevGridSpec{0, 2, 0, 2, 1, 1})), ContractError);
  }
}
