#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "criteria.hpp"
#include "simplebev/config.hpp"
#include "simplebev/io.hpp"
#include "simplebev/pipeline.hpp"

namespace simplebev::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

PipelineConfig load(const Globals& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

const std::string& need_out(const Globals& g, const char* cmd) {
  if (g.out.empty()) throw UsageError(std::string(cmd) + ": --out is required");
  return g.out;
}

PasteQuota parse_quota(const std::vector<std::string>& items) {
  PasteQuota q;
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--quota expects class=count, got '" + item + "'");
    const auto cls = class_from_name(item.substr(0, eq));
    if (!cls) throw UsageError("--quota: unknown class '" + item.substr(0, eq) + "'");
    int n = 0;
    try {
      std::size_t pos = 0;
      n = std::stoi(item.substr(eq + 1), &pos);
      if (pos != item.size() - eq - 1 || n < 0) throw std::invalid_argument("count");
    } catch (const std::exception&) {
      throw UsageError("--quota: bad count in '" + item + "'");
    }
    q[*cls] = n;
  }
  return q;
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Samples of several detection files aligned by sample id, in the order of the first file.
std::vector<std::vector<DetectionSet>> align_samples(const std::vector<std::vector<DetectionSet>>& files,
                                                     const std::vector<std::string>& paths) {
  std::vector<std::vector<DetectionSet>> out;
  if (files.empty()) return out;
  for (std::size_t f = 1; f < files.size(); ++f)
    if (files[f].size() != files[0].size())
      throw DataError(paths[f] + ": sample count differs from " + paths[0]);
  for (const DetectionSet& s : files[0]) {
    std::vector<DetectionSet> group;
    for (std::size_t f = 0; f < files.size(); ++f) {
      const auto it = std::find_if(files[f].begin(), files[f].end(),
                                   [&](const DetectionSet& d) { return d.sample_id == s.sample_id; });
      if (it == files[f].end()) throw DataError(paths[f] + ": missing sample " + s.sample_id);
      group.push_back(*it);
    }
    out.push_back(std::move(group));
  }
  return out;
}

json records_to_json(const std::vector<TtaRecord>& records) {
  json j{{"format_version", io::kFormatVersion}, {"kind", "tta_records"}, {"records", json::array()}};
  for (const TtaRecord& r : records) j["records"].push_back(io::record_to_json(r));
  return j;
}

std::vector<TtaRecord> records_from_json(const json& j) {
  if (!j.is_object() || j.value("kind", "") != "tta_records" || !j.contains("records") || !j["records"].is_array())
    throw DataError("not a tta_records document");
  if (j.value("format_version", 0) != io::kFormatVersion) throw DataError("unsupported format_version");
  std::vector<TtaRecord> out;
  for (const json& r : j["records"]) out.push_back(io::record_from_json(r));
  return out;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LiDAR-camera BEV fusion core: grids, box post-processing and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  app.add_option("--config", g.config, "Pipeline config (JSON)");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output file");

  // synth
  auto* synth = app.add_subcommand("synth", "Write synthetic scene files");
  int objects = 12, points = 20000, count = 1;
  std::string out_dir, gt_out;
  synth->add_option("--objects", objects, "Boxes per scene")->capture_default_str();
  synth->add_option("--points", points, "LiDAR points per scene")->capture_default_str();
  synth->add_option("--count", count, "Number of scenes (seeds seed .. seed+count-1)")->capture_default_str();
  synth->add_option("--out-dir", out_dir, "Directory for scene_<seed>.json files");
  synth->add_option("--gt-out", gt_out, "Also write ground truth as a detection file");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run both branches and write the fused BEV grid");
  std::string scene_path, camera_out, lidar_out;
  pipe->add_option("--scene", scene_path, "Scene file (default: synthesize from --seed)");
  pipe->add_option("--objects", objects, "Boxes when synthesizing")->capture_default_str();
  pipe->add_option("--points", points, "Points when synthesizing")->capture_default_str();
  pipe->add_option("--camera-out", camera_out, "Camera-BEV grid output");
  pipe->add_option("--lidar-out", lidar_out, "LiDAR-BEV grid output");

  // nms
  auto* nms_cmd = app.add_subcommand("nms", "Greedy rotated-box NMS on a detection file");
  std::string in_path;
  std::optional<double> nms_iou, min_score;
  bool class_agnostic = false;
  nms_cmd->add_option("--in", in_path, "Detection file")->required();
  nms_cmd->add_option("--iou", nms_iou, "IoU threshold");
  nms_cmd->add_option("--min-score", min_score, "Drop boxes below this score");
  nms_cmd->add_flag("--class-agnostic", class_agnostic, "Suppress across classes");

  // tta
  auto* tta = app.add_subcommand("tta", "Test-time augmentation");
  tta->require_subcommand(1);
  auto* expand = tta->add_subcommand("expand", "Write one transformed scene per TTA variant");
  std::string records_path;
  expand->add_option("--scene", scene_path, "Scene file")->required();
  expand->add_option("--out-dir", out_dir, "Directory for variant files and records.json")->required();
  auto* collapse = tta->add_subcommand("collapse", "Map variant detections back and pool them");
  std::vector<std::string> inputs;
  collapse->add_option("--in", inputs, "Detection files, one per record, in record order")->required();
  collapse->add_option("--records", records_path, "records.json written by expand")->required();

  // wbf
  auto* wbf_cmd = app.add_subcommand("wbf", "Weighted box fusion over detection files");
  std::vector<double> weights;
  std::optional<double> cluster_iou;
  wbf_cmd->add_option("--in", inputs, "Detection files")->required();
  wbf_cmd->add_option("--weights", weights, "One weight per input file");
  wbf_cmd->add_option("--iou", cluster_iou, "Cluster IoU threshold");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "mAP / NDS of predictions against ground truth");
  std::string pred_path, gt_path, format = "json";
  eval_cmd->add_option("--pred", pred_path, "Prediction detection file")->required();
  eval_cmd->add_option("--gt", gt_path, "Ground-truth detection file")->required();
  eval_cmd->add_option("--format", format, "Report format for --out")->check(CLI::IsMember({"json", "text"}));

  // paste
  auto* paste_cmd = app.add_subcommand("paste", "GT-paste augmentation of a scene file");
  std::string db_path, db_out;
  std::vector<std::string> db_scenes, quota_items;
  std::optional<int> epoch;
  paste_cmd->add_option("--in", in_path, "Scene file")->required();
  paste_cmd->add_option("--db", db_path, "GT database file");
  paste_cmd->add_option("--db-scenes", db_scenes, "Build the database from these scene files");
  paste_cmd->add_option("--db-out", db_out, "Write the database built from --db-scenes");
  paste_cmd->add_option("--quota", quota_items, "Per-class quota, e.g. car=2");
  paste_cmd->add_option("--epoch", epoch, "Training epoch; pasting is skipped once the fade starts");

  // selftest
  auto* selftest = app.add_subcommand("selftest", "Run the acceptance criteria");
  std::string work_dir;
  selftest->add_option("--work-dir", work_dir, "Scratch directory for the end-to-end checks");

  std::vector<std::string> argv_store{"simplebev"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const PipelineConfig cfg = load(g);

    if (synth->parsed()) {
      if (count < 1 || objects < 0 || points < 0) throw UsageError("synth: counts must be non-negative");
      if (count > 1 && out_dir.empty()) throw UsageError("synth: --count > 1 needs --out-dir");
      if (out_dir.empty()) need_out(g, "synth");
      std::vector<DetectionSet> gts;
      for (int i = 0; i < count; ++i) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
        const Scene s = synth_scene(seed, objects, points, cfg.image);
        const fs::path path = out_dir.empty() ? fs::path(g.out) : fs::path(out_dir) / ("scene_" + std::to_string(seed) + ".json");
        io::write_scene_file(path, s);
        gts.push_back(s.ground_truth());
        out << path.string() << ": " << s.points.size() << " points, " << s.boxes.size() << " boxes\n";
      }
      if (!gt_out.empty()) io::write_detection_file(gt_out, gts);
      return kExitOk;
    }

    if (pipe->parsed()) {
      const Scene scene = scene_path.empty() ? synth_scene(cfg.seed, objects, points, cfg.image) : io::read_scene_file(scene_path);
      const PipelineOutput res = run_pipeline(scene, cfg);
      json grid = io::bev_grid_to_json(res.fused);
      grid["sample_id"] = scene.sample_id;
      grid["diagnostics"] = io::diagnostics_to_json(res.diagnostics);
      if (!g.out.empty()) io::write_text_file(g.out, io::to_text(grid));
      if (!camera_out.empty()) io::write_text_file(camera_out, io::to_text(io::bev_grid_to_json(res.camera)));
      if (!lidar_out.empty()) io::write_text_file(lidar_out, io::to_text(io::bev_grid_to_json(res.lidar)));
      out << "fused grid " << res.fused.size_x() << "x" << res.fused.size_y() << "x" << res.fused.channels()
          << " (camera " << res.camera.channels() << ", lidar " << res.lidar.channels() << ")\n";
      for (const auto& [name, h] : res.diagnostics.checksums) out << "  " << name << " " << hex(h) << "\n";
      return kExitOk;
    }

    if (nms_cmd->parsed()) {
      NmsOptions opt = cfg.nms;
      if (nms_iou) opt.iou_threshold = *nms_iou;
      if (min_score) opt.min_score = *min_score;
      if (class_agnostic) opt.per_class = false;
      std::vector<DetectionSet> sets = io::read_detection_file(in_path);
      std::size_t before = 0, after = 0;
      for (DetectionSet& s : sets) {
        before += s.boxes.size();
        s = nms(s, opt);
        after += s.boxes.size();
      }
      io::write_detection_file(need_out(g, "nms"), sets);
      out << "nms: kept " << after << " of " << before << " boxes\n";
      return kExitOk;
    }

    if (expand->parsed()) {
      const Scene scene = io::read_scene_file(scene_path);
      const std::vector<TtaVariant> variants = tta_expand(scene, cfg.tta);
      std::vector<TtaRecord> records;
      for (std::size_t k = 0; k < variants.size(); ++k) {
        io::write_scene_file(fs::path(out_dir) / ("variant_" + std::to_string(k) + ".json"), variants[k].scene);
        records.push_back(variants[k].record);
      }
      io::write_text_file(fs::path(out_dir) / "records.json", io::to_text(records_to_json(records)));
      out << "tta: wrote " << variants.size() << " variants to " << out_dir << "\n";
      return kExitOk;
    }

    if (collapse->parsed()) {
      const std::vector<TtaRecord> records = io::decode_file(records_path, records_from_json);
      if (records.size() != inputs.size())
        throw UsageError("tta collapse: " + std::to_string(inputs.size()) + " inputs for " +
                         std::to_string(records.size()) + " records");
      std::vector<std::vector<DetectionSet>> files;
      for (const std::string& p : inputs) files.push_back(io::read_detection_file(p));
      std::vector<DetectionSet> result;
      for (const auto& group : align_samples(files, inputs)) result.push_back(tta_collapse(group, records));
      io::write_detection_file(need_out(g, "tta collapse"), result);
      return kExitOk;
    }

    if (wbf_cmd->parsed()) {
      WbfConfig wc = cfg.wbf;
      if (!weights.empty()) wc.model_weights = weights;
      if (cluster_iou) wc.cluster_iou = *cluster_iou;
      if (!wc.model_weights.empty() && wc.model_weights.size() != inputs.size())
        throw UsageError("wbf: need one weight per input file");
      std::vector<std::vector<DetectionSet>> files;
      for (const std::string& p : inputs) files.push_back(io::read_detection_file(p));
      std::vector<DetectionSet> result;
      for (const auto& group : align_samples(files, inputs)) result.push_back(wbf(group, wc));
      io::write_detection_file(need_out(g, "wbf"), result);
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      const auto preds = io::read_detection_file(pred_path);
      const auto gts = io::read_detection_file(gt_path);
      const EvalResult r = evaluate(preds, gts, cfg.eval);
      if (!g.out.empty())
        io::write_text_file(g.out, format == "text" ? format_report_table(r, cfg.eval) : io::to_text(io::report_to_json(r, cfg.eval)));
      char line[64];
      std::snprintf(line, sizeof line, "mAP: %.3f NDS: %.3f\n", r.map, r.nds);
      out << line;
      return kExitOk;
    }

    if (paste_cmd->parsed()) {
      if (db_path.empty() == db_scenes.empty()) throw UsageError("paste: give exactly one of --db or --db-scenes");
      const Scene scene = io::read_scene_file(in_path);
      GtDatabase db;
      if (!db_path.empty()) {
        db = io::decode_file(db_path, io::database_from_json);
      } else {
        std::vector<Scene> sources;
        for (const std::string& p : db_scenes) sources.push_back(io::read_scene_file(p));
        db = build_database(sources);
        if (!db_out.empty()) io::write_text_file(db_out, io::to_text(io::database_to_json(db)));
      }
      const PasteQuota quota = parse_quota(quota_items);
      if (epoch && (*epoch < 0 || *epoch >= cfg.fade.total_epochs))
        throw UsageError("paste: --epoch outside [0, fade.total_epochs)");
      const bool enabled = !epoch || paste_enabled(*epoch, cfg.fade);
      PasteResult res = enabled ? paste(scene, db, quota, cfg.seed) : PasteResult{scene, {}};
      io::write_scene_file(need_out(g, "paste"), res.scene);
      json report = io::paste_report_to_json(res.report);
      report["enabled"] = enabled;
      out << report.dump() << "\n";
      return kExitOk;
    }

    if (selftest->parsed()) {
      const fs::path dir = work_dir.empty() ? fs::temp_directory_path() / "simplebev-selftest" : fs::path(work_dir);
      auto runner = [](const std::vector<std::string>& a) {
        std::ostringstream sink;
        return cli_main(a, sink, sink);
      };
      bool all = true;
      for (const auto& r : acceptance::run_all(runner, dir)) {
        out << acceptance::format_line(r) << "\n";
        all = all && r.pass;
      }
      return all ? kExitOk : kExitData;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    // DataError, PipelineError, contract violations from file contents.
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int cli_main(const std::vector<std::string>& args) { return cli_main(args, std::cout, std::cerr); }

int cli_main(int argc, char** argv) { return cli_main(std::vector<std::string>(argv + 1, argv + argc)); }

}  // namespace simplebev::cli
