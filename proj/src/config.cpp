#include "simplebev/config.hpp"

#include <functional>
#include <map>

#include "simplebev/io.hpp"

namespace simplebev {

using nlohmann::json;

namespace {

// Reads one JSON object into fields through per-key setters; keys without a
// setter are rejected so typos do not silently fall back to defaults.
class Section {
 public:
  explicit Section(std::string name) : name_(std::move(name)) {}

  template <typename T>
  Section& bind(const std::string& key, T& target) {
    setters_[key] = [&target, key, this](const json& v) {
      try {
        target = v.get<T>();
      } catch (const json::exception&) {
        throw DataError("config: bad value for '" + name_ + key + "'");
      }
    };
    return *this;
  }

  Section& custom(const std::string& key, std::function<void(const json&)> fn) {
    setters_[key] = std::move(fn);
    return *this;
  }

  void read(const json& j) const {
    if (!j.is_object()) throw DataError("config: '" + name_ + "' must be an object");
    for (const auto& [key, value] : j.items()) {
      const auto it = setters_.find(key);
      if (it == setters_.end()) throw DataError("config: unknown key '" + name_ + key + "'");
      it->second(value);
    }
  }

 private:
  std::string name_;
  std::map<std::string, std::function<void(const json&)>> setters_;
};

std::vector<DetectionClass> classes_from(const json& v) {
  if (!v.is_array()) throw DataError("config: 'eval.classes' must be a list");
  std::vector<DetectionClass> out;
  for (const json& n : v) {
    const auto cls = n.is_string() ? class_from_name(n.get<std::string>()) : std::nullopt;
    if (!cls) throw DataError("config: unknown class " + n.dump());
    out.push_back(*cls);
  }
  return out;
}

}  // namespace

json config_to_json(const PipelineConfig& c) {
  json classes = json::array();
  for (DetectionClass cls : c.eval.classes) classes.push_back(class_name(cls));
  return {
      {"voxel",
       {{"vx", c.voxel.vx},
        {"vy", c.voxel.vy},
        {"vz", c.voxel.vz},
        {"x_min", c.voxel.x_min},
        {"x_max", c.voxel.x_max},
        {"y_min", c.voxel.y_min},
        {"y_max", c.voxel.y_max},
        {"z_min", c.voxel.z_min},
        {"z_max", c.voxel.z_max}}},
      {"bev",
       {{"x_min", c.bev.x_min},
        {"x_max", c.bev.x_max},
        {"y_min", c.bev.y_min},
        {"y_max", c.bev.y_max},
        {"cell_size", c.bev.cell_size},
        {"channels", c.bev.channels}}},
      {"depth_bins", {{"d_min", c.depth_bins.d_min}, {"d_max", c.depth_bins.d_max}, {"num_bins", c.depth_bins.num_bins}}},
      {"image",
       {{"num_cameras", c.image.num_cameras},
        {"image_width", c.image.image_width},
        {"image_height", c.image.image_height},
        {"feature_stride", c.image.feature_stride},
        {"feature_channels", c.image.feature_channels},
        {"focal", c.image.focal},
        {"camera_height", c.image.camera_height},
        {"camera_ring_radius", c.image.camera_ring_radius},
        {"ground_z", c.image.ground_z},
        {"ground_radius", c.image.ground_radius},
        {"object_range", c.image.object_range},
        {"max_box_height", c.image.max_box_height}}},
      {"pyramid_strides", c.pyramid_strides},
      {"bev_stride", c.bev_stride},
      {"ground_z", c.ground_z},
      {"nms", {{"iou_threshold", c.nms.iou_threshold}, {"per_class", c.nms.per_class}, {"min_score", c.nms.min_score}}},
      {"tta", {{"yaw_rotations", c.tta.yaw_rotations}, {"global_scales", c.tta.global_scales}, {"flip_x", c.tta.flip_x}}},
      {"wbf",
       {{"cluster_iou", c.wbf.cluster_iou},
        {"model_weights", c.wbf.model_weights},
        {"min_cluster_confidence", c.wbf.min_cluster_confidence}}},
      {"eval",
       {{"dist_thresholds", c.eval.dist_thresholds},
        {"min_recall", c.eval.min_recall},
        {"min_precision", c.eval.min_precision},
        {"tp_threshold", c.eval.tp_threshold},
        {"classes", classes},
        {"include_attributes", c.eval.include_attributes}}},
      {"fade", {{"total_epochs", c.fade.total_epochs}, {"fade_start_epoch", c.fade.fade_start_epoch}}},
      {"seed", c.seed},
  };
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  Section voxel("voxel."), bev("bev."), bins("depth_bins."), image("image."), nms("nms."), tta("tta."), wbf("wbf."),
      eval("eval."), fade("fade."), root("");
  voxel.bind("vx", c.voxel.vx).bind("vy", c.voxel.vy).bind("vz", c.voxel.vz);
  voxel.bind("x_min", c.voxel.x_min).bind("x_max", c.voxel.x_max).bind("y_min", c.voxel.y_min);
  voxel.bind("y_max", c.voxel.y_max).bind("z_min", c.voxel.z_min).bind("z_max", c.voxel.z_max);
  bev.bind("x_min", c.bev.x_min).bind("x_max", c.bev.x_max).bind("y_min", c.bev.y_min).bind("y_max", c.bev.y_max);
  bev.bind("cell_size", c.bev.cell_size).bind("channels", c.bev.channels);
  bins.bind("d_min", c.depth_bins.d_min).bind("d_max", c.depth_bins.d_max).bind("num_bins", c.depth_bins.num_bins);
  image.bind("num_cameras", c.image.num_cameras)
      .bind("image_width", c.image.image_width)
      .bind("image_height", c.image.image_height)
      .bind("feature_stride", c.image.feature_stride)
      .bind("feature_channels", c.image.feature_channels)
      .bind("focal", c.image.focal)
      .bind("camera_height", c.image.camera_height)
      .bind("camera_ring_radius", c.image.camera_ring_radius)
      .bind("ground_z", c.image.ground_z)
      .bind("ground_radius", c.image.ground_radius)
      .bind("object_range", c.image.object_range)
      .bind("max_box_height", c.image.max_box_height);
  nms.bind("iou_threshold", c.nms.iou_threshold).bind("per_class", c.nms.per_class).bind("min_score", c.nms.min_score);
  tta.bind("yaw_rotations", c.tta.yaw_rotations).bind("global_scales", c.tta.global_scales).bind("flip_x", c.tta.flip_x);
  wbf.bind("cluster_iou", c.wbf.cluster_iou)
      .bind("model_weights", c.wbf.model_weights)
      .bind("min_cluster_confidence", c.wbf.min_cluster_confidence);
  eval.bind("dist_thresholds", c.eval.dist_thresholds)
      .bind("min_recall", c.eval.min_recall)
      .bind("min_precision", c.eval.min_precision)
      .bind("tp_threshold", c.eval.tp_threshold)
      .bind("include_attributes", c.eval.include_attributes)
      .custom("classes", [&](const json& v) { c.eval.classes = classes_from(v); });
  fade.bind("total_epochs", c.fade.total_epochs).bind("fade_start_epoch", c.fade.fade_start_epoch);

  auto sub = [](const Section& s) { return [&s](const json& v) { s.read(v); }; };
  root.custom("voxel", sub(voxel))
      .custom("bev", sub(bev))
      .custom("depth_bins", sub(bins))
      .custom("image", sub(image))
      .custom("nms", sub(nms))
      .custom("tta", sub(tta))
      .custom("wbf", sub(wbf))
      .custom("eval", sub(eval))
      .custom("fade", sub(fade))
      .bind("pyramid_strides", c.pyramid_strides)
      .bind("bev_stride", c.bev_stride)
      .bind("ground_z", c.ground_z)
      .bind("seed", c.seed);
  root.read(j);
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) { return io::decode_file(path, config_from_json); }

}  // namespace simplebev
