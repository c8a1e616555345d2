#include "simplebev/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>

#include "simplebev/types.hpp"

namespace simplebev {

void EvalConfig::validate() const {
  require(!dist_thresholds.empty(), "EvalConfig: need at least one distance threshold");
  for (std::size_t i = 0; i < dist_thresholds.size(); ++i) {
    require(dist_thresholds[i] > 0, "EvalConfig: thresholds must be positive");
    require(i == 0 || dist_thresholds[i] > dist_thresholds[i - 1], "EvalConfig: thresholds must be ascending");
  }
  require(min_recall >= 0 && min_recall < 1, "EvalConfig: min_recall must be in [0, 1)");
  require(min_precision >= 0 && min_precision < 1, "EvalConfig: min_precision must be in [0, 1)");
  require(tp_threshold > 0, "EvalConfig: tp_threshold must be positive");
  require(!classes.empty(), "EvalConfig: class list is empty");
}

namespace {

double center_distance(const Box3D& a, const Box3D& b) { return (a.center.head<2>() - b.center.head<2>()).norm(); }

std::vector<std::size_t> indices_of(const DetectionSet& s, DetectionClass cls) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.boxes.size(); ++i)
    if (s.boxes[i].label == cls) out.push_back(i);
  return out;
}

}  // namespace

std::vector<Match> match(const DetectionSet& preds, const DetectionSet& gts, double threshold, DetectionClass cls) {
  std::vector<std::size_t> order = indices_of(preds, cls);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds.boxes[a].score > preds.boxes[b].score; });
  const std::vector<std::size_t> gt_idx = indices_of(gts, cls);
  std::vector<bool> taken(gt_idx.size(), false);

  std::vector<Match> out;
  out.reserve(order.size());
  for (std::size_t p : order) {
    Match m{p, std::nullopt, preds.boxes[p].score};
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < gt_idx.size(); ++k) {
      if (taken[k]) continue;
      const double d = center_distance(preds.boxes[p], gts.boxes[gt_idx[k]]);
      if (d < best) {
        best = d;
        best_k = k;
      }
    }
    if (best <= threshold) {
      taken[best_k] = true;
      m.gt = gt_idx[best_k];
    }
    out.push_back(m);
  }
  return out;
}

double average_precision(std::span<const Decision> decisions, std::size_t n_gt, double min_recall,
                         double min_precision) {
  if (n_gt == 0 || decisions.empty()) return 0.0;
  const std::size_t n = decisions.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += decisions[i].true_positive ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
  }

  // Piecewise-linear precision over the 101-point recall grid; precision is
  // held at its first value below the first recall and is 0 past the last.
  constexpr int kGrid = 100;
  const int first = static_cast<int>(std::lround(kGrid * min_recall)) + 1;
  double num = 0.0, den = 0.0;
  std::size_t j = 0;
  for (int i = first; i <= kGrid; ++i) {
    const double r = static_cast<double>(i) / kGrid;
    double p;
    if (r < recall.front()) {
      p = precision.front();
    } else if (r > recall.back()) {
      p = 0.0;
    } else {
      while (j + 1 < n && recall[j + 1] <= r) ++j;
      p = j + 1 == n ? precision[j]
                     : precision[j] + (precision[j + 1] - precision[j]) * (r - recall[j]) / (recall[j + 1] - recall[j]);
    }
    num += std::max(0.0, p - min_precision);
    den += 1.0 - min_precision;
  }
  return std::clamp(num / den, 0.0, 1.0);
}

TpErrors tp_errors(std::span<const MatchedPair> pairs, DetectionClass cls, bool include_attributes) {
  if (pairs.empty()) return TpErrors::all_ones();
  const double period = cls == DetectionClass::kBarrier ? std::numbers::pi : 2.0 * std::numbers::pi;
  TpErrors e;
  std::size_t attr_total = 0, attr_correct = 0;
  for (const MatchedPair& mp : pairs) {
    const Box3D &p = *mp.pred, &g = *mp.gt;
    e.ate += center_distance(p, g);
    const double inter = p.size.cwiseMin(g.size).prod();
    e.ase += 1.0 - inter / (p.volume() + g.volume() - inter);
    e.aoe += std::abs(std::remainder(p.yaw - g.yaw, period));
    e.ave += (p.velocity - g.velocity).norm();
    if (!g.attribute.empty()) {
      ++attr_total;
      attr_correct += p.attribute == g.attribute ? 1 : 0;
    }
  }
  const double n = static_cast<double>(pairs.size());
  e.ate /= n;
  e.ase /= n;
  e.aoe /= n;
  e.ave /= n;
  e.aae = (include_attributes && attr_total > 0)
              ? 1.0 - static_cast<double>(attr_correct) / static_cast<double>(attr_total)
              : 0.0;
  return e;
}

double nds(double map, const TpErrors& mean_errors) {
  double tp_score = 0.0;
  for (double e : mean_errors.as_array()) tp_score += 1.0 - std::min(1.0, e);
  return (5.0 * map + tp_score) / 10.0;
}

EvalResult evaluate(std::span<const DetectionSet> preds, std::span<const DetectionSet> gts, const EvalConfig& cfg) {
  cfg.validate();
  // Samples are visited in sample-id order, so results do not depend on the
  // order of either input.
  std::map<std::string, const DetectionSet*> gt_by_id, pred_by_id;
  for (const DetectionSet& g : gts)
    if (!gt_by_id.emplace(g.sample_id, &g).second) throw DataError("duplicate ground-truth sample " + g.sample_id);
  for (const DetectionSet& p : preds) {
    if (!gt_by_id.count(p.sample_id)) throw DataError("predictions for unknown sample " + p.sample_id);
    if (!pred_by_id.emplace(p.sample_id, &p).second) throw DataError("duplicate prediction sample " + p.sample_id);
  }
  const DetectionSet empty;

  EvalResult result;
  for (DetectionClass cls : cfg.classes) {
    std::size_t n_gt = 0;
    for (const auto& [id, g] : gt_by_id) n_gt += indices_of(*g, cls).size();
    if (n_gt == 0) continue;

    ClassResult cr;
    cr.n_gt = n_gt;
    std::vector<MatchedPair> tp_pairs;
    auto collect = [&](double threshold, std::vector<MatchedPair>* pairs) {
      std::vector<Decision> decisions;
      for (const auto& [id, g] : gt_by_id) {
        const auto it = pred_by_id.find(id);
        const DetectionSet& p = it == pred_by_id.end() ? empty : *it->second;
        for (const Match& m : match(p, *g, threshold, cls)) {
          decisions.push_back({m.score, m.gt.has_value()});
          if (pairs && m.gt) pairs->push_back({&p.boxes[m.pred], &g->boxes[*m.gt]});
        }
      }
      std::stable_sort(decisions.begin(), decisions.end(),
                       [](const Decision& a, const Decision& b) { return a.score > b.score; });
      return decisions;
    };

    double ap_sum = 0.0;
    for (double t : cfg.dist_thresholds) {
      const auto decisions = collect(t, nullptr);
      const double ap = average_precision(decisions, n_gt, cfg.min_recall, cfg.min_precision);
      cr.ap[t] = ap;
      ap_sum += ap;
    }
    cr.mean_ap = ap_sum / static_cast<double>(cfg.dist_thresholds.size());
    collect(cfg.tp_threshold, &tp_pairs);
    cr.tp = tp_errors(tp_pairs, cls, cfg.include_attributes);
    result.per_class.emplace(cls, std::move(cr));
  }

  if (!result.per_class.empty()) {
    const double n = static_cast<double>(result.per_class.size());
    for (const auto& [cls, cr] : result.per_class) {
      result.map += cr.mean_ap;
      result.mean_tp.ate += cr.tp.ate;
      result.mean_tp.ase += cr.tp.ase;
      result.mean_tp.aoe += cr.tp.aoe;
      result.mean_tp.ave += cr.tp.ave;
      result.mean_tp.aae += cr.tp.aae;
    }
    result.map /= n;
    result.mean_tp.ate /= n;
    result.mean_tp.ase /= n;
    result.mean_tp.aoe /= n;
    result.mean_tp.ave /= n;
    result.mean_tp.aae /= n;
  } else {
    result.mean_tp = TpErrors::all_ones();
  }
  result.nds = nds(result.map, result.mean_tp);
  return result;
}

std::string format_report_table(const EvalResult& r, const EvalConfig& cfg) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "mAP: %.3f\nNDS: %.3f\n\n", r.map, r.nds);
  out += buf;

  // One row shaped like the usual per-class comparison tables (percent).
  out += "   mAP    NDS";
  for (DetectionClass c : cfg.classes) {
    std::snprintf(buf, sizeof buf, " %8.*s", static_cast<int>(class_abbrev(c).size()), class_abbrev(c).data());
    out += buf;
  }
  out += "\n";
  std::snprintf(buf, sizeof buf, "%6.1f %6.1f", 100.0 * r.map, 100.0 * r.nds);
  out += buf;
  for (DetectionClass c : cfg.classes) {
    const auto it = r.per_class.find(c);
    if (it == r.per_class.end()) {
      out += "        -";
    } else {
      std::snprintf(buf, sizeof buf, " %8.1f", 100.0 * it->second.mean_ap);
      out += buf;
    }
  }
  out += "\n\n";

  out += "class                  n_gt";
  for (double t : cfg.dist_thresholds) {
    char label[24];
    std::snprintf(label, sizeof label, "AP@%g", t);
    std::snprintf(buf, sizeof buf, "  %6s", label);
    out += buf;
  }
  out += "     AP    ATE    ASE    AOE    AVE    AAE\n";
  for (const auto& [c, cr] : r.per_class) {
    std::snprintf(buf, sizeof buf, "%-20.*s %6zu", static_cast<int>(class_name(c).size()), class_name(c).data(),
                  cr.n_gt);
    out += buf;
    for (double t : cfg.dist_thresholds) {
      std::snprintf(buf, sizeof buf, "  %6.3f", cr.ap.at(t));
      out += buf;
    }
    std::snprintf(buf, sizeof buf, " %6.3f %6.3f %6.3f %6.3f %6.3f %6.3f\n", cr.mean_ap, cr.tp.ate, cr.tp.ase,
                  cr.tp.aoe, cr.tp.ave, cr.tp.aae);
    out += buf;
  }
  return out;
}

}  // namespace simplebev
