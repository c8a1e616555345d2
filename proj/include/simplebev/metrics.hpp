#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simplebev/boxes.hpp"

namespace simplebev {

struct EvalConfig {
  std::vector<double> dist_thresholds{0.5, 1.0, 2.0, 4.0};
  double min_recall = 0.1;
  double min_precision = 0.1;
  double tp_threshold = 2.0;
  std::vector<DetectionClass> classes{all_classes().begin(), all_classes().end()};
  bool include_attributes = false;

  void validate() const;
};

struct TpErrors {
  double ate = 0.0;  // m
  double ase = 0.0;  // 1 - aligned IoU
  double aoe = 0.0;  // rad
  double ave = 0.0;  // m/s
  double aae = 0.0;  // 1 - attribute accuracy

  std::array<double, 5> as_array() const { return {ate, ase, aoe, ave, aae}; }
  static TpErrors all_ones() { return {1.0, 1.0, 1.0, 1.0, 1.0}; }
};

struct Match {
  std::size_t pred = 0;           // index into DetectionSet::boxes
  std::optional<std::size_t> gt;  // matched ground truth, if any
  double score = 0.0;
};

// Predictions of `cls`, highest score first (ties: lower index), each matched
// to the nearest unmatched same-class ground truth within `threshold` meters
// of BEV center distance.
std::vector<Match> match(const DetectionSet& preds, const DetectionSet& gts, double threshold, DetectionClass cls);

struct Decision {
  double score = 0.0;
  bool true_positive = false;
};

// Decisions must already be in evaluation order (score descending). Returns 0
// when n_gt == 0.
double average_precision(std::span<const Decision> decisions, std::size_t n_gt, double min_recall = 0.1,
                         double min_precision = 0.1);

struct MatchedPair {
  const Box3D* pred = nullptr;
  const Box3D* gt = nullptr;
};

TpErrors tp_errors(std::span<const MatchedPair> pairs, DetectionClass cls, bool include_attributes = false);

double nds(double map, const TpErrors& mean_errors);

struct ClassResult {
  std::size_t n_gt = 0;
  std::map<double, double> ap;  // threshold -> AP
  double mean_ap = 0.0;
  TpErrors tp;
};

struct EvalResult {
  std::map<DetectionClass, ClassResult> per_class;  // classes with n_gt > 0
  double map = 0.0;
  TpErrors mean_tp;
  double nds = 0.0;
};

// Evaluates predictions against ground truth over all samples in `gts`.
// Predictions for unknown sample ids raise DataError; samples without
// predictions count as empty.
EvalResult evaluate(std::span<const DetectionSet> preds, std::span<const DetectionSet> gts, const EvalConfig& cfg);

// Plain-text table: mAP, NDS, then threshold-averaged AP per class.
std::string format_report_table(const EvalResult& r, const EvalConfig& cfg);

}  // namespace simplebev
