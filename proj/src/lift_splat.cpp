#include "simplebev/lift_splat.hpp"

#include <cmath>

namespace simplebev {

namespace {

Index cells_along(double lo, double hi, double cell) { return static_cast<Index>(std::llround((hi - lo) / cell)); }

bool is_integer_multiple(double extent, double cell) {
  const double r = extent / cell;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

}  // namespace

void BevGridSpec::validate() const {
  require(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) && std::isfinite(y_max),
          "BevGridSpec: non-finite window");
  require(cell_size > 0, "BevGridSpec: cell_size must be positive");
  require(x_max > x_min && y_max > y_min, "BevGridSpec: empty window");
  require(is_integer_multiple(x_max - x_min, cell_size) && is_integer_multiple(y_max - y_min, cell_size),
          "BevGridSpec: window is not a multiple of cell_size");
  require(channels >= 1, "BevGridSpec: channels must be >= 1");
}

Index BevGridSpec::size_x() const { return cells_along(x_min, x_max, cell_size); }
Index BevGridSpec::size_y() const { return cells_along(y_min, y_max, cell_size); }

std::optional<std::pair<Index, Index>> BevGridSpec::cell_of(double x, double y) const {
  const double fi = std::floor((x - x_min) / cell_size);
  const double fj = std::floor((y - y_min) / cell_size);
  if (!(fi >= 0 && fj >= 0)) return std::nullopt;
  const auto i = static_cast<Index>(fi), j = static_cast<Index>(fj);
  if (i >= size_x() || j >= size_y()) return std::nullopt;
  return std::make_pair(i, j);
}

bool BevGridSpec::same_window(const BevGridSpec& o, double tol) const {
  return std::abs(x_min - o.x_min) <= tol && std::abs(x_max - o.x_max) <= tol && std::abs(y_min - o.y_min) <= tol &&
         std::abs(y_max - o.y_max) <= tol;
}

BevGrid BevGrid::Zero(const BevGridSpec& spec) {
  spec.validate();
  BevGrid g;
  g.spec = spec;
  g.data = Tensor<3>(spec.size_x(), spec.size_y(), spec.channels);
  g.data.setZero();
  return g;
}

double BevGrid::total() const {
  double s = 0.0;
  for (Index i = 0; i < data.size(); ++i) s += data.data()[i];
  return s;
}

Index BevGrid::occupied_cells() const {
  Index n = 0;
  const Index c = channels();
  for (Index cell = 0; cell < size_x() * size_y(); ++cell) {
    const double* p = data.data() + cell * c;
    for (Index k = 0; k < c; ++k)
      if (p[k] != 0.0) {
        ++n;
        break;
      }
  }
  return n;
}

Frustum build_frustum(const CameraModel& cam, int stride, const DepthBinSpec& spec, int camera_id) {
  spec.validate();
  require(stride >= 1 && cam.width() % stride == 0 && cam.height() % stride == 0,
          "build_frustum: stride must divide the image size");
  const Index h = cam.height() / stride, w = cam.width() / stride, nd = spec.num_bins;
  const RigidTransformd lidar_from_cam = cam.lidar_from_cam();
  Frustum f;
  f.camera_id = camera_id;
  f.coords = Tensor<4>(h, w, nd, 3);
  for (Index v = 0; v < h; ++v)
    for (Index u = 0; u < w; ++u)
      for (Index d = 0; d < nd; ++d) {
        const Eigen::Vector3d p = lidar_from_cam.apply(
            cam.unproject((u + 0.5) * stride, (v + 0.5) * stride, spec.bin_center(static_cast<int>(d))));
        for (int k = 0; k < 3; ++k) f.coords(v, u, d, k) = p[k];
      }
  return f;
}

Tensor<4> lift(const FeatureImage& features, const DepthGrid& depth) {
  require(features.height() == depth.height() && features.width() == depth.width(),
          "lift: feature and depth grids differ in size");
  const Index h = depth.height(), w = depth.width(), nd = depth.bins(), nc = features.channels();
  Tensor<4> out(h, w, nd, nc);
  for (Index v = 0; v < h; ++v)
    for (Index u = 0; u < w; ++u)
      for (Index d = 0; d < nd; ++d) {
        const double p = depth.values(v, u, d);
        for (Index c = 0; c < nc; ++c) out(v, u, d, c) = p * features.data(v, u, c);
      }
  return out;
}

BevGrid splat(const Tensor<4>& lifted, const Frustum& frustum, const BevGridSpec& spec, const SplatOptions& options) {
  require(lifted.dimension(0) == frustum.height() && lifted.dimension(1) == frustum.width() &&
              lifted.dimension(2) == frustum.bins(),
          "splat: lifted features and frustum differ in shape");
  require(lifted.dimension(3) == spec.channels, "splat: channel count differs from the BEV spec");
  BevGrid out = BevGrid::Zero(spec);
  const Index nc = spec.channels, ny = out.size_y();
  double* dst = out.data.data();
  for (Index u = 0; u < frustum.width(); ++u)
    for (Index v = 0; v < frustum.height(); ++v)
      for (Index d = 0; d < frustum.bins(); ++d) {
        if (options.z_clip) {
          const double z = frustum.coords(v, u, d, 2);
          if (!(z >= options.z_clip->first && z < options.z_clip->second)) continue;
        }
        const auto cell = spec.cell_of(frustum.coords(v, u, d, 0), frustum.coords(v, u, d, 1));
        if (!cell) continue;
        double* acc = dst + (cell->first * ny + cell->second) * nc;
        for (Index c = 0; c < nc; ++c) acc[c] += lifted(v, u, d, c);
      }
  return out;
}

BevGrid camera_bev(std::span<const CameraModel> cams, std::span<const FeatureImage> features,
                   std::span<const DepthGrid> depths, const DepthBinSpec& bin_spec, const BevGridSpec& bev_spec,
                   const SplatOptions& options) {
  require(cams.size() == features.size() && cams.size() == depths.size(),
          "camera_bev: cameras, features and depths must have equal length");
  BevGrid total = BevGrid::Zero(bev_spec);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const FeatureImage& f = features[i];
    require(f.stride >= 1 && f.height() * f.stride == cams[i].height() && f.width() * f.stride == cams[i].width(),
            "camera_bev: feature map does not match its camera at the given stride");
    const Frustum frustum = build_frustum(cams[i], f.stride, bin_spec, static_cast<int>(i));
    const BevGrid grid = splat(lift(f, depths[i]), frustum, bev_spec, options);
    total.data = total.data + grid.data;
  }
  return total;
}

}  // namespace simplebev
