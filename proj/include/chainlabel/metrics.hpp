#ifndef CHAINLABEL_METRICS_HPP
#define CHAINLABEL_METRICS_HPP

#include "chainlabel/data.hpp"
#include "chainlabel/model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace chainlabel {

struct OverallMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int empty_truth_skipped = 0;
};

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  long support = 0;  // ground-truth occurrences
};

struct PerClassMetrics {
  double precision = 0.0;  // unweighted mean over all vocabulary classes
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ClassMetrics> per_class;
};

struct MetricsReport {
  int k = 0;
  int map_n = 0;
  double c_p = 0.0, c_r = 0.0, c_f1 = 0.0;
  double o_p = 0.0, o_r = 0.0, o_f1 = 0.0;
  double map = 0.0;
  std::vector<ClassMetrics> per_class;
  int empty_truth_skipped = 0;
};

/// Pooled precision/recall: intersections and list sizes are summed over all
/// images before dividing. Images with an empty truth set are excluded and
/// counted. Prediction and truth ids must match exactly.
OverallMetrics overall_metrics(const std::vector<Prediction>& preds, const Dataset& truth);

/// Per-class counts with the zero-denominator convention (0/0 := 0), averaged
/// uniformly over every label in `vocab`.
PerClassMetrics per_class_metrics(const std::vector<Prediction>& preds, const Dataset& truth,
                                  const std::vector<std::string>& vocab);

/// Mean average precision over each image's top-N ranking:
/// AP = (1/min(N, |truth|)) * sum_r rel(r) * precision@r. Ranked lists longer
/// than N are truncated; duplicates are an error; empty-truth images are
/// excluded.
double map_at_n(const std::vector<Prediction>& preds, const Dataset& truth, int n);

/// Bundles the full suite; the class table covers the union of truth and
/// predicted label strings.
MetricsReport evaluate_predictions(const std::vector<Prediction>& preds, const Dataset& truth,
                                   int k, int map_n);

std::string report_to_json(const MetricsReport& report);

/// Cosine similarity of a query against every real-label embedding row
/// (END/START excluded), best first, ties by label id. Ids in `exclude` are
/// omitted. Throws on a zero-norm query.
std::vector<std::pair<int, double>> nearest_labels(const Vec& query, const ModelParams& p,
                                                   int m, const std::vector<int>& exclude);

}  // namespace chainlabel

#endif  // CHAINLABEL_METRICS_HPP
