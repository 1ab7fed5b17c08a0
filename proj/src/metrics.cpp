#include "chainlabel/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace chainlabel {

namespace {

using TruthMap = std::map<std::string, std::set<std::string>>;

TruthMap align(const std::vector<Prediction>& preds, const Dataset& truth) {
  TruthMap by_id;
  for (const auto& ex : truth.examples) {
    by_id.emplace(ex.id, std::set<std::string>(ex.labels.begin(), ex.labels.end()));
  }
  if (preds.size() != by_id.size()) {
    throw std::invalid_argument("metrics: prediction/truth id mismatch");
  }
  std::set<std::string> pred_ids;
  for (const auto& p : preds) {
    if (!pred_ids.insert(p.id).second || by_id.count(p.id) == 0) {
      throw std::invalid_argument("metrics: prediction/truth id mismatch");
    }
    std::set<std::string> seen(p.labels.begin(), p.labels.end());
    if (seen.size() != p.labels.size()) {
      throw std::invalid_argument("metrics: duplicate label in prediction for id " + p.id);
    }
  }
  return by_id;
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

OverallMetrics overall_metrics(const std::vector<Prediction>& preds, const Dataset& truth) {
  const TruthMap by_id = align(preds, truth);
  long hit = 0, predicted = 0, actual = 0;
  OverallMetrics m;
  for (const auto& p : preds) {
    const auto& t = by_id.at(p.id);
    if (t.empty()) {
      ++m.empty_truth_skipped;
      continue;
    }
    predicted += static_cast<long>(p.labels.size());
    actual += static_cast<long>(t.size());
    for (const auto& l : p.labels) hit += t.count(l);
  }
  m.precision = predicted > 0 ? static_cast<double>(hit) / predicted : 0.0;
  m.recall = actual > 0 ? static_cast<double>(hit) / actual : 0.0;
  m.f1 = f1_of(m.precision, m.recall);
  return m;
}

PerClassMetrics per_class_metrics(const std::vector<Prediction>& preds, const Dataset& truth,
                                  const std::vector<std::string>& vocab) {
  const TruthMap by_id = align(preds, truth);
  std::map<std::string, long> tp, fp, fn;
  for (const auto& p : preds) {
    const auto& t = by_id.at(p.id);
    if (t.empty()) continue;
    for (const auto& l : p.labels) {
      if (t.count(l)) {
        ++tp[l];
      } else {
        ++fp[l];
      }
    }
    std::set<std::string> predicted(p.labels.begin(), p.labels.end());
    for (const auto& l : t) {
      if (!predicted.count(l)) ++fn[l];
    }
  }

  PerClassMetrics out;
  double psum = 0.0, rsum = 0.0;
  for (const auto& label : vocab) {
    const long t = tp.count(label) ? tp.at(label) : 0;
    const long f_pos = fp.count(label) ? fp.at(label) : 0;
    const long f_neg = fn.count(label) ? fn.at(label) : 0;
    ClassMetrics cm;
    cm.label = label;
    cm.precision = t + f_pos > 0 ? static_cast<double>(t) / (t + f_pos) : 0.0;
    cm.recall = t + f_neg > 0 ? static_cast<double>(t) / (t + f_neg) : 0.0;
    cm.support = t + f_neg;
    psum += cm.precision;
    rsum += cm.recall;
    out.per_class.push_back(std::move(cm));
  }
  if (!vocab.empty()) {
    out.precision = psum / static_cast<double>(vocab.size());
    out.recall = rsum / static_cast<double>(vocab.size());
  }
  out.f1 = f1_of(out.precision, out.recall);
  return out;
}

double map_at_n(const std::vector<Prediction>& preds, const Dataset& truth, int n) {
  if (n < 1) throw std::invalid_argument("map_at_n: N must be >= 1");
  const TruthMap by_id = align(preds, truth);
  double ap_sum = 0.0;
  long included = 0;
  for (const auto& p : preds) {
    const auto& t = by_id.at(p.id);
    if (t.empty()) continue;
    ++included;
    const std::size_t len = std::min<std::size_t>(p.labels.size(), static_cast<std::size_t>(n));
    long hits = 0;
    double ap = 0.0;
    for (std::size_t r = 0; r < len; ++r) {
      if (t.count(p.labels[r])) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
    }
    ap /= static_cast<double>(std::min<long>(n, static_cast<long>(t.size())));
    ap_sum += ap;
  }
  return included > 0 ? ap_sum / static_cast<double>(included) : 0.0;
}

MetricsReport evaluate_predictions(const std::vector<Prediction>& preds, const Dataset& truth,
                                   int k, int map_n) {
  std::set<std::string> vocab;
  for (const auto& ex : truth.examples) vocab.insert(ex.labels.begin(), ex.labels.end());
  for (const auto& p : preds) vocab.insert(p.labels.begin(), p.labels.end());

  const OverallMetrics o = overall_metrics(preds, truth);
  const PerClassMetrics c =
      per_class_metrics(preds, truth, {vocab.begin(), vocab.end()});

  MetricsReport r;
  r.k = k;
  r.map_n = map_n;
  r.o_p = o.precision;
  r.o_r = o.recall;
  r.o_f1 = o.f1;
  r.c_p = c.precision;
  r.c_r = c.recall;
  r.c_f1 = c.f1;
  r.map = map_at_n(preds, truth, map_n);
  r.per_class = c.per_class;
  r.empty_truth_skipped = o.empty_truth_skipped;
  return r;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["k"] = report.k;
  j["N"] = report.map_n;
  j["C_P"] = report.c_p;
  j["C_R"] = report.c_r;
  j["C_F1"] = report.c_f1;
  j["O_P"] = report.o_p;
  j["O_R"] = report.o_r;
  j["O_F1"] = report.o_f1;
  j["MAP"] = report.map;
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& cm : report.per_class) {
    per_class.push_back({{"label", cm.label},
                         {"precision", cm.precision},
                         {"recall", cm.recall},
                         {"support", cm.support}});
  }
  j["per_class"] = std::move(per_class);
  j["empty_truth_skipped"] = report.empty_truth_skipped;
  return j.dump();
}

std::vector<std::pair<int, double>> nearest_labels(const Vec& query, const ModelParams& p,
                                                   int m, const std::vector<int>& exclude) {
  const Hyper h = p.hyper();
  if (query.size() != h.embed_dim) {
    throw std::invalid_argument("nearest_labels: query dim mismatch");
  }
  const double qn = query.norm();
  if (qn == 0.0) throw std::invalid_argument("nearest_labels: zero-norm query");

  std::set<int> skip(exclude.begin(), exclude.end());
  std::vector<std::pair<int, double>> sims;
  for (int id = 0; id < h.vocab_size; ++id) {
    if (skip.count(id)) continue;
    const Vec row = p.embed.row(id).transpose();
    const double rn = row.norm();
    const double sim = rn == 0.0 ? 0.0 : query.dot(row) / (qn * rn);
    sims.emplace_back(id, sim);
  }
  if (m > static_cast<int>(sims.size())) {
    throw std::invalid_argument("nearest_labels: m exceeds available labels");
  }
  std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  sims.resize(static_cast<std::size_t>(m));
  return sims;
}

}  // namespace chainlabel
