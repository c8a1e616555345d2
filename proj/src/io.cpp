#include "simplebev/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "simplebev/encoding.hpp"

namespace simplebev::io {

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw DataError(std::string("expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw DataError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::int64_t integer(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) throw DataError(std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::string text(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_array() || v.size() != N) throw DataError(std::string("field '") + key + "' must have " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) {
    if (!v[i].is_number()) throw DataError(std::string("field '") + key + "' must hold numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

void check_header(const json& j, const char* kind) {
  if (!j.is_object()) throw DataError("document must be an object");
  if (integer(j, "format_version") != kFormatVersion)
    throw DataError("unsupported format_version " + field(j, "format_version").dump());
  if (text(j, "kind") != kind) throw DataError("expected kind '" + std::string(kind) + "', got '" + text(j, "kind") + "'");
}

json header(const char* kind) { return json{{"format_version", kFormatVersion}, {"kind", kind}}; }

template <int Rank>
json encode_tensor(const Tensor<Rank>& t) {
  std::vector<Index> shape(t.dimensions().begin(), t.dimensions().end());
  return encode_array(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())), shape);
}

template <int Rank>
Tensor<Rank> decode_tensor(const json& j) {
  const std::vector<Index> shape = array_shape(j);
  if (shape.size() != Rank) throw DataError("array rank " + std::to_string(shape.size()) + ", expected " + std::to_string(Rank));
  const std::vector<double> values = decode_array(j, shape);
  Eigen::array<Index, Rank> dims;
  for (int i = 0; i < Rank; ++i) dims[i] = shape[i];
  Tensor<Rank> t(dims);
  std::copy(values.begin(), values.end(), t.data());
  return t;
}

json bev_spec_to_json(const BevGridSpec& s) {
  return {{"x_min", s.x_min}, {"x_max", s.x_max}, {"y_min", s.y_min},
          {"y_max", s.y_max}, {"cell_size", s.cell_size}, {"channels", s.channels}};
}

BevGridSpec bev_spec_from_json(const json& j) {
  BevGridSpec s;
  s.x_min = number(j, "x_min");
  s.x_max = number(j, "x_max");
  s.y_min = number(j, "y_min");
  s.y_max = number(j, "y_max");
  s.cell_size = number(j, "cell_size");
  s.channels = static_cast<int>(integer(j, "channels"));
  return s;
}

json errors_to_json(const TpErrors& e) {
  return {{"ATE", e.ate}, {"ASE", e.ase}, {"AOE", e.aoe}, {"AVE", e.ave}, {"AAE", e.aae}};
}

std::string threshold_key(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

}  // namespace

json encode_array(std::span<const double> values, const std::vector<Index>& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  require(n == static_cast<Index>(values.size()), "encode_array: shape does not match value count");
  return {{"shape", shape}, {"dtype", "float32le"}, {"data", base64_encode(pack_f32le(values))}};
}

std::vector<Index> array_shape(const json& j) {
  const json& s = field(j, "shape");
  if (!s.is_array()) throw DataError("array shape must be a list");
  std::vector<Index> shape;
  for (const json& d : s) {
    if (!d.is_number_integer() || d.get<std::int64_t>() < 0) throw DataError("array shape entries must be non-negative integers");
    shape.push_back(d.get<Index>());
  }
  return shape;
}

std::vector<double> decode_array(const json& j, const std::vector<Index>& expected_shape) {
  if (text(j, "dtype") != "float32le") throw DataError("unsupported dtype '" + text(j, "dtype") + "'");
  const std::vector<Index> shape = array_shape(j);
  if (shape != expected_shape) throw DataError("array shape does not match");
  std::vector<double> values = unpack_f32le(base64_decode(text(j, "data")));
  Index n = 1;
  for (Index d : shape) n *= d;
  if (static_cast<Index>(values.size()) != n) throw DataError("array payload has " + std::to_string(values.size()) + " values, shape needs " + std::to_string(n));
  return values;
}

json box_to_json(const Box3D& b) {
  json j{{"translation", {b.center.x(), b.center.y(), b.center.z()}},
         {"size", {b.size.x(), b.size.y(), b.size.z()}},
         {"yaw", b.yaw},
         {"velocity", {b.velocity.x(), b.velocity.y()}},
         {"detection_name", class_name(b.label)},
         {"detection_score", b.score}};
  if (!b.attribute.empty()) j["attribute_name"] = b.attribute;
  return j;
}

Box3D box_from_json(const json& j) {
  Box3D b;
  b.center = vec<3>(j, "translation");
  b.size = vec<3>(j, "size");
  b.yaw = number(j, "yaw");
  b.velocity = vec<2>(j, "velocity");
  const std::string name = text(j, "detection_name");
  const auto cls = class_from_name(name);
  if (!cls) throw DataError("unknown detection_name '" + name + "'");
  b.label = *cls;
  b.score = number(j, "detection_score");
  if (j.contains("attribute_name")) b.attribute = text(j, "attribute_name");
  try {
    b.validate();
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  return b;
}

json camera_to_json(const CameraModel& c) {
  const Eigen::Matrix3d& r = c.cam_from_lidar().rotation();
  const Eigen::Vector3d& t = c.cam_from_lidar().translation();
  json rot = json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) rot.push_back(r(i, k));
  return {{"fx", c.fx()},       {"fy", c.fy()},         {"cx", c.cx()},
          {"cy", c.cy()},       {"width", c.width()},   {"height", c.height()},
          {"cam_from_lidar", {{"rotation", rot}, {"translation", {t.x(), t.y(), t.z()}}}}};
}

CameraModel camera_from_json(const json& j) {
  const json& ext = field(j, "cam_from_lidar");
  const Eigen::Matrix<double, 9, 1> rv = vec<9>(ext, "rotation");
  Eigen::Matrix3d r;
  r << rv[0], rv[1], rv[2], rv[3], rv[4], rv[5], rv[6], rv[7], rv[8];
  try {
    return CameraModel(number(j, "fx"), number(j, "fy"), number(j, "cx"), number(j, "cy"),
                       static_cast<int>(integer(j, "width")), static_cast<int>(integer(j, "height")),
                       RigidTransformd(r, vec<3>(ext, "translation")));
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
}

json scene_to_json(const Scene& s) {
  json j = header("scene");
  j["sample_id"] = s.sample_id;
  j["points"] = encode_array(std::span<const double>(s.points.points.data(), static_cast<std::size_t>(s.points.points.size())),
                             {s.points.size(), 4});
  j["cameras"] = json::array();
  for (const CameraModel& c : s.cameras) j["cameras"].push_back(camera_to_json(c));
  j["boxes"] = json::array();
  for (const Box3D& b : s.boxes) j["boxes"].push_back(box_to_json(b));
  j["features"] = json::array();
  for (const FeatureImage& f : s.features) j["features"].push_back({{"stride", f.stride}, {"data", encode_tensor(f.data)}});
  return j;
}

Scene scene_from_json(const json& j) {
  check_header(j, "scene");
  Scene s;
  s.sample_id = text(j, "sample_id");
  const json& pts = field(j, "points");
  const std::vector<Index> shape = array_shape(pts);
  if (shape.size() != 2 || shape[1] != 4) throw DataError("points must have shape [N, 4]");
  const std::vector<double> values = decode_array(pts, shape);
  PointCloud::Matrix m(shape[0], 4);
  std::copy(values.begin(), values.end(), m.data());
  s.points = PointCloud(std::move(m));

  const json& cams = field(j, "cameras");
  if (!cams.is_array()) throw DataError("'cameras' must be a list");
  for (const json& c : cams) s.cameras.push_back(camera_from_json(c));
  const json& boxes = field(j, "boxes");
  if (!boxes.is_array()) throw DataError("'boxes' must be a list");
  for (const json& b : boxes) s.boxes.push_back(box_from_json(b));
  if (j.contains("features")) {
    const json& feats = j["features"];
    if (!feats.is_array()) throw DataError("'features' must be a list");
    for (const json& f : feats) {
      FeatureImage img;
      img.stride = static_cast<int>(integer(f, "stride"));
      img.data = decode_tensor<3>(field(f, "data"));
      s.features.push_back(std::move(img));
    }
  }
  if (s.cameras.empty()) throw DataError("scene has no cameras");
  if (!s.features.empty() && s.features.size() != s.cameras.size())
    throw DataError("scene needs one feature map per camera");
  return s;
}

json detections_to_json(const std::vector<DetectionSet>& sets) {
  json j = header("detections");
  j["samples"] = json::array();
  for (const DetectionSet& s : sets) {
    json boxes = json::array();
    for (const Box3D& b : s.boxes) boxes.push_back(box_to_json(b));
    j["samples"].push_back({{"sample_id", s.sample_id}, {"boxes", boxes}});
  }
  return j;
}

std::vector<DetectionSet> detections_from_json(const json& j) {
  check_header(j, "detections");
  const json& samples = field(j, "samples");
  if (!samples.is_array()) throw DataError("'samples' must be a list");
  std::vector<DetectionSet> out;
  for (const json& s : samples) {
    DetectionSet d;
    d.sample_id = text(s, "sample_id");
    const json& boxes = field(s, "boxes");
    if (!boxes.is_array()) throw DataError("'boxes' must be a list");
    for (const json& b : boxes) d.boxes.push_back(box_from_json(b));
    out.push_back(std::move(d));
  }
  return out;
}

json bev_grid_to_json(const BevGrid& g) {
  json j = header("bev_grid");
  j["spec"] = bev_spec_to_json(g.spec);
  j["data"] = encode_tensor(g.data);
  return j;
}

BevGrid bev_grid_from_json(const json& j) {
  check_header(j, "bev_grid");
  BevGrid g;
  g.spec = bev_spec_from_json(field(j, "spec"));
  g.data = decode_tensor<3>(field(j, "data"));
  if (g.size_x() != g.spec.size_x() || g.size_y() != g.spec.size_y() || g.channels() != g.spec.channels)
    throw DataError("grid data shape does not match its spec");
  return g;
}

json diagnostics_to_json(const PipelineDiagnostics& d) {
  json checksums = json::object();
  json order = json::array();
  for (const auto& [stage, h] : d.checksums) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    checksums[stage] = buf;
    order.push_back(stage);
  }
  return {{"mask_coverage", d.mask_coverage},
          {"mask_pixels", d.mask_pixels},
          {"occupied_voxels", d.occupied_voxels},
          {"camera_occupied_cells", d.camera_occupied_cells},
          {"lidar_occupied_cells", d.lidar_occupied_cells},
          {"stages", order},
          {"checksums", checksums}};
}

json report_to_json(const EvalResult& r, const EvalConfig& cfg) {
  json j = header("eval_report");
  j["mAP"] = r.map;
  j["NDS"] = r.nds;
  j["tp_errors"] = errors_to_json(r.mean_tp);
  j["dist_thresholds"] = cfg.dist_thresholds;
  json per_class = json::object();
  for (const auto& [cls, cr] : r.per_class) {
    json ap = json::object();
    for (const auto& [t, v] : cr.ap) ap[threshold_key(t)] = v;
    per_class[std::string(class_name(cls))] = {
        {"n_gt", cr.n_gt}, {"ap", ap}, {"mean_ap", cr.mean_ap}, {"tp_errors", errors_to_json(cr.tp)}};
  }
  j["per_class"] = per_class;
  return j;
}

json record_to_json(const TtaRecord& r) {
  return {{"yaw_rotation", r.yaw_rotation}, {"scale", r.scale}, {"flip_x", r.flip_x}};
}

TtaRecord record_from_json(const json& j) {
  TtaRecord r;
  r.yaw_rotation = number(j, "yaw_rotation");
  r.scale = number(j, "scale");
  const json& f = field(j, "flip_x");
  if (!f.is_boolean()) throw DataError("field 'flip_x' must be a boolean");
  r.flip_x = f.get<bool>();
  if (!(r.scale > 0)) throw DataError("record scale must be positive");
  return r;
}

json database_to_json(const GtDatabase& db) {
  json j = header("gt_database");
  j["entries"] = json::array();
  for (const auto& [cls, list] : db.entries)
    for (const GtEntry& e : list)
      j["entries"].push_back(
          {{"box", box_to_json(e.box)},
           {"points", encode_array(std::span<const double>(e.local_points.points.data(),
                                                           static_cast<std::size_t>(e.local_points.points.size())),
                                   {e.local_points.size(), 4})}});
  return j;
}

GtDatabase database_from_json(const json& j) {
  check_header(j, "gt_database");
  GtDatabase db;
  const json& entries = field(j, "entries");
  if (!entries.is_array()) throw DataError("'entries' must be a list");
  for (const json& e : entries) {
    GtEntry entry;
    entry.box = box_from_json(field(e, "box"));
    const json& pts = field(e, "points");
    const std::vector<Index> shape = array_shape(pts);
    if (shape.size() != 2 || shape[1] != 4) throw DataError("points must have shape [N, 4]");
    const std::vector<double> values = decode_array(pts, shape);
    PointCloud::Matrix m(shape[0], 4);
    std::copy(values.begin(), values.end(), m.data());
    entry.local_points = PointCloud(std::move(m));
    db.entries[entry.box.label].push_back(std::move(entry));
  }
  return db;
}

json paste_report_to_json(const PasteReport& r) {
  json per_class = json::object();
  for (const auto& [cls, n] : r.requested)
    per_class[std::string(class_name(cls))] = {
        {"requested", n}, {"sampled", r.sampled.at(cls)}, {"accepted", r.accepted.at(cls)}};
  return {{"per_class", per_class}, {"points_added", r.points_added}};
}

std::string to_text(const json& j) { return j.dump(2) + "\n"; }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    const std::size_t offset = std::min<std::size_t>(e.byte, content.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(content.begin(), content.begin() + static_cast<std::ptrdiff_t>(offset > 0 ? offset - 1 : 0), '\n'));
    throw DataError(path.string() + ":" + std::to_string(line) + ": parse error at byte " + std::to_string(e.byte));
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw DataError(path.string() + ": write failed");
}

Scene read_scene_file(const std::filesystem::path& path) { return decode_file(path, scene_from_json); }

void write_scene_file(const std::filesystem::path& path, const Scene& s) { write_text_file(path, to_text(scene_to_json(s))); }

std::vector<DetectionSet> read_detection_file(const std::filesystem::path& path) {
  return decode_file(path, detections_from_json);
}

void write_detection_file(const std::filesystem::path& path, const std::vector<DetectionSet>& sets) {
  write_text_file(path, to_text(detections_to_json(sets)));
}

}  // namespace simplebev::io
