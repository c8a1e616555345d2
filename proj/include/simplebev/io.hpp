#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "simplebev/augment.hpp"
#include "simplebev/boxes.hpp"
#include "simplebev/ensemble.hpp"
#include "simplebev/lift_splat.hpp"
#include "simplebev/metrics.hpp"
#include "simplebev/pipeline.hpp"
#include "simplebev/scene.hpp"

namespace simplebev::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

// Bulk arrays: {"shape": [...], "dtype": "float32le", "data": "<base64>"}.
json encode_array(std::span<const double> values, const std::vector<Index>& shape);
std::vector<double> decode_array(const json& j, const std::vector<Index>& expected_shape);
std::vector<Index> array_shape(const json& j);

json box_to_json(const Box3D& b);
Box3D box_from_json(const json& j);

json camera_to_json(const CameraModel& c);
CameraModel camera_from_json(const json& j);

json scene_to_json(const Scene& s);
Scene scene_from_json(const json& j);

json detections_to_json(const std::vector<DetectionSet>& sets);
std::vector<DetectionSet> detections_from_json(const json& j);

json bev_grid_to_json(const BevGrid& g);
BevGrid bev_grid_from_json(const json& j);

json diagnostics_to_json(const PipelineDiagnostics& d);

json report_to_json(const EvalResult& r, const EvalConfig& cfg);

json record_to_json(const TtaRecord& r);
TtaRecord record_from_json(const json& j);

json database_to_json(const GtDatabase& db);
GtDatabase database_from_json(const json& j);

json paste_report_to_json(const PasteReport& r);

// Serialization used for every file this library writes: 2-space indent,
// trailing newline.
std::string to_text(const json& j);

// Reads and parses a JSON document. Parse failures become DataError with the
// path and byte offset.
json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Runs `fn(j)` and rethrows any schema failure as DataError prefixed with the path.
template <typename Fn>
auto decode_file(const std::filesystem::path& path, Fn&& fn) {
  const json j = read_json_file(path);
  try {
    return fn(j);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const ContractError& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Scene read_scene_file(const std::filesystem::path& path);
void write_scene_file(const std::filesystem::path& path, const Scene& s);
std::vector<DetectionSet> read_detection_file(const std::filesystem::path& path);
void write_detection_file(const std::filesystem::path& path, const std::vector<DetectionSet>& sets);

}  // namespace simplebev::io
