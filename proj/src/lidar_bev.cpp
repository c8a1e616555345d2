#include "simplebev/lidar_bev.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>

namespace simplebev {

namespace {

bool integer_multiple(double extent, double cell) {
  const double r = extent / cell;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

BevGridSpec bev_spec_for(const VoxelSpec& spec, int stride, int channels) {
  BevGridSpec b;
  b.x_min = spec.x_min;
  b.x_max = spec.x_max;
  b.y_min = spec.y_min;
  b.y_max = spec.y_max;
  b.cell_size = spec.vx * stride;
  b.channels = channels;
  return b;
}

void require_bev_stride(const SparseVoxelGrid& grid, int stride) {
  require(grid.spec.vx == grid.spec.vy, "compress_z: BEV cells need vx == vy");
  const auto base = grid.spec.dims();
  require(base[0] % stride == 0 && base[1] % stride == 0, "compress_z: stride does not divide the x/y voxel counts");
}

}  // namespace

void VoxelSpec::validate() const {
  require(vx > 0 && vy > 0 && vz > 0, "VoxelSpec: voxel sizes must be positive");
  require(x_max > x_min && y_max > y_min && z_max > z_min, "VoxelSpec: empty range");
  require(integer_multiple(x_max - x_min, vx) && integer_multiple(y_max - y_min, vy) &&
              integer_multiple(z_max - z_min, vz),
          "VoxelSpec: ranges must be integer multiples of the voxel size");
}

std::array<int, 3> VoxelSpec::dims() const {
  return {static_cast<int>(std::llround((x_max - x_min) / vx)), static_cast<int>(std::llround((y_max - y_min) / vy)),
          static_cast<int>(std::llround((z_max - z_min) / vz))};
}

std::array<int, 3> SparseVoxelGrid::dims() const {
  const auto base = spec.dims();
  return {ceil_div(base[0], stride), ceil_div(base[1], stride), ceil_div(base[2], stride)};
}

SparseVoxelGrid voxelize(const PointCloud& pts, const VoxelSpec& spec) {
  spec.validate();
  const auto dims = spec.dims();
  SparseVoxelGrid grid;
  grid.spec = spec;

  std::map<VoxelKey, std::vector<Index>> members;
  for (Index i = 0; i < pts.size(); ++i) {
    const double x = pts.points(i, 0), y = pts.points(i, 1), z = pts.points(i, 2);
    if (!(x >= spec.x_min && x < spec.x_max && y >= spec.y_min && y < spec.y_max && z >= spec.z_min &&
          z < spec.z_max))
      continue;
    const VoxelKey k{static_cast<int>(std::floor((x - spec.x_min) / spec.vx)),
                     static_cast<int>(std::floor((y - spec.y_min) / spec.vy)),
                     static_cast<int>(std::floor((z - spec.z_min) / spec.vz))};
    if (k[0] >= dims[0] || k[1] >= dims[1] || k[2] >= dims[2]) continue;
    members[k].push_back(i);
  }

  for (auto& [k, idx] : members) {
    // Reduce in value order so that the result does not depend on input order.
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
      const auto ra = pts.points.row(a), rb = pts.points.row(b);
      return std::make_tuple(ra(0), ra(1), ra(2), ra(3)) < std::make_tuple(rb(0), rb(1), rb(2), rb(3));
    });
    Eigen::Vector4d sum = Eigen::Vector4d::Zero();
    for (Index i : idx) sum += pts.points.row(i).transpose();
    const double n = static_cast<double>(idx.size());
    const Eigen::Vector4d mean = sum / n;
    Eigen::VectorXd f(kVoxelFeatureChannels);
    f << mean[0] - (spec.x_min + (k[0] + 0.5) * spec.vx), mean[1] - (spec.y_min + (k[1] + 0.5) * spec.vy),
        mean[2] - (spec.z_min + (k[2] + 0.5) * spec.vz), mean[3],
        static_cast<double>(std::min<std::size_t>(idx.size(), kVoxelCountSaturation)) / kVoxelCountSaturation;
    grid.entries.emplace(k, std::move(f));
  }
  return grid;
}

SparseVoxelGrid downsample(const SparseVoxelGrid& grid, int factor) {
  require(factor == 2, "downsample: only factor 2 is supported");
  SparseVoxelGrid out;
  out.spec = grid.spec;
  out.stride = grid.stride * 2;
  out.channels = grid.channels;
  for (const auto& [k, f] : grid.entries) {
    const VoxelKey parent{k[0] / 2, k[1] / 2, k[2] / 2};
    auto [it, inserted] = out.entries.try_emplace(parent, f);
    if (!inserted) it->second = it->second.cwiseMax(f);
  }
  return out;
}

std::vector<SparseVoxelGrid> build_pyramid(const SparseVoxelGrid& base, int levels) {
  require(levels >= 1, "build_pyramid: need at least one level");
  std::vector<SparseVoxelGrid> out;
  out.push_back(base);
  for (int l = 1; l < levels; ++l) out.push_back(downsample(out.back()));
  return out;
}

BevGrid compress_z(const SparseVoxelGrid& grid) {
  require_bev_stride(grid, grid.stride);
  const auto dims = grid.dims();
  BevGrid out = BevGrid::Zero(bev_spec_for(grid.spec, grid.stride, grid.channels * dims[2]));
  for (const auto& [k, f] : grid.entries)
    for (int c = 0; c < grid.channels; ++c) out.data(k[0], k[1], k[2] * grid.channels + c) = f[c];
  return out;
}

BevGrid compress_z_pooled(const SparseVoxelGrid& grid, int factor) {
  require(factor >= 1, "compress_z_pooled: factor must be >= 1");
  require_bev_stride(grid, grid.stride * factor);
  const auto dims = grid.dims();
  const int nc = grid.channels;
  BevGrid out = BevGrid::Zero(bev_spec_for(grid.spec, grid.stride * factor, nc * dims[2]));

  struct Block {
    Eigen::VectorXd max;
    int count = 0;
  };
  std::map<VoxelKey, Block> blocks;
  for (const auto& [k, f] : grid.entries) {
    Block& b = blocks[{k[0] / factor, k[1] / factor, k[2]}];
    b.max = b.count == 0 ? f : b.max.cwiseMax(f);
    ++b.count;
  }
  const int full = factor * factor;
  for (const auto& [k, b] : blocks) {
    // Empty children are zeros in the dense map.
    const Eigen::VectorXd v = b.count < full ? b.max.cwiseMax(0.0) : b.max;
    for (int c = 0; c < nc; ++c) out.data(k[0], k[1], k[2] * nc + c) = v[c];
  }
  return out;
}

BevGrid max_pool_bev(const BevGrid& grid, int factor) {
  require(factor >= 1, "max_pool_bev: factor must be >= 1");
  require(grid.size_x() % factor == 0 && grid.size_y() % factor == 0, "max_pool_bev: factor must divide the grid");
  BevGridSpec spec = grid.spec;
  spec.cell_size *= factor;
  BevGrid out = BevGrid::Zero(spec);
  const Index nc = grid.channels();
  for (Index i = 0; i < out.size_x(); ++i)
    for (Index j = 0; j < out.size_y(); ++j)
      for (Index c = 0; c < nc; ++c) {
        double m = grid.data(i * factor, j * factor, c);
        for (Index a = 0; a < factor; ++a)
          for (Index b = 0; b < factor; ++b) m = std::max(m, grid.data(i * factor + a, j * factor + b, c));
        out.data(i, j, c) = m;
      }
  return out;
}

BevGrid fuse_multiscale(std::span<const PyramidLevel> pyramid, int target_stride) {
  require(!pyramid.empty(), "fuse_multiscale: empty pyramid");
  require(is_power_of_two(target_stride), "fuse_multiscale: target stride must be a power of two");
  const BevGridSpec& ref = pyramid.front().bev.spec;
  const double base_cell = ref.cell_size / pyramid.front().stride;
  int total_channels = 0;
  for (std::size_t l = 0; l < pyramid.size(); ++l) {
    const PyramidLevel& lv = pyramid[l];
    require(is_power_of_two(lv.stride), "fuse_multiscale: strides must be powers of two");
    require(l == 0 || lv.stride > pyramid[l - 1].stride, "fuse_multiscale: strides must be ascending");
    require(lv.bev.spec.same_window(ref) && std::abs(lv.bev.spec.cell_size - base_cell * lv.stride) <=
                                                1e-9 * lv.bev.spec.cell_size,
            "fuse_multiscale: inconsistent window specs");
    total_channels += static_cast<int>(lv.bev.channels());
  }
  require(target_stride <= pyramid.back().stride, "fuse_multiscale: target stride exceeds the coarsest level");

  BevGridSpec spec = ref;
  spec.cell_size = base_cell * target_stride;
  spec.channels = total_channels;
  BevGrid out = BevGrid::Zero(spec);

  Index offset = 0;
  for (const PyramidLevel& lv : pyramid) {
    const BevGrid level = lv.stride < target_stride ? max_pool_bev(lv.bev, target_stride / lv.stride) : lv.bev;
    const Index k = lv.stride < target_stride ? 1 : lv.stride / target_stride;
    require(level.size_x() * k >= out.size_x() && level.size_y() * k >= out.size_y(),
            "fuse_multiscale: level does not cover the target grid");
    const Index nc = level.channels();
    for (Index i = 0; i < out.size_x(); ++i)
      for (Index j = 0; j < out.size_y(); ++j)
        for (Index c = 0; c < nc; ++c) out.data(i, j, offset + c) = level.data(i / k, j / k, c);
    offset += nc;
  }
  return out;
}

BevGrid upsample_nearest(const BevGrid& grid, int factor) {
  require(factor >= 1, "upsample_nearest: factor must be >= 1");
  BevGridSpec spec = grid.spec;
  spec.cell_size /= factor;
  BevGrid out = BevGrid::Zero(spec);
  require(out.size_x() == grid.size_x() * factor && out.size_y() == grid.size_y() * factor,
          "upsample_nearest: grid size mismatch");
  for (Index i = 0; i < out.size_x(); ++i)
    for (Index j = 0; j < out.size_y(); ++j)
      for (Index c = 0; c < grid.channels(); ++c) out.data(i, j, c) = grid.data(i / factor, j / factor, c);
  return out;
}

BevGrid lidar_bev_from_pyramid(std::span<const SparseVoxelGrid> pyramid, int target_stride) {
  require(!pyramid.empty(), "lidar_bev_from_pyramid: empty pyramid");
  std::optional<BevGrid> out;
  for (std::size_t l = 0; l < pyramid.size(); ++l) {
    const SparseVoxelGrid& g = pyramid[l];
    require(l == 0 || g.stride > pyramid[l - 1].stride, "lidar_bev_from_pyramid: strides must be ascending");
    require(is_power_of_two(g.stride) && is_power_of_two(target_stride),
            "lidar_bev_from_pyramid: strides must be powers of two");
    const BevGrid level = g.stride <= target_stride ? compress_z_pooled(g, target_stride / g.stride)
                                                    : upsample_nearest(compress_z(g), g.stride / target_stride);
    out = out ? concat_bev(*out, level) : level;
  }
  require(target_stride <= pyramid.back().stride, "lidar_bev_from_pyramid: target stride exceeds the coarsest level");
  return *out;
}

BevGrid concat_bev(const BevGrid& cam, const BevGrid& lid) {
  require(cam.size_x() == lid.size_x() && cam.size_y() == lid.size_y() && cam.spec.same_window(lid.spec) &&
              std::abs(cam.spec.cell_size - lid.spec.cell_size) <= 1e-9 * cam.spec.cell_size,
          "concat_bev: BEV grids differ spatially");
  BevGrid out;
  out.spec = cam.spec;
  out.spec.channels = static_cast<int>(cam.channels() + lid.channels());
  out.data = cam.data.concatenate(lid.data, 2);
  return out;
}

}  // namespace simplebev
