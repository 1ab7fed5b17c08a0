#ifndef CHAINLABEL_DATA_HPP
#define CHAINLABEL_DATA_HPP

#include "chainlabel/numerics.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace chainlabel {

/// One image record: a precomputed feature vector plus its label set.
/// Labels are stored sorted and duplicate-free.
struct Example {
  std::string id;
  Vec features;
  std::vector<std::string> labels;
};

struct Dataset {
  std::vector<Example> examples;

  Index feature_dim() const {
    return examples.empty() ? 0 : examples.front().features.size();
  }
};

/// Label string <-> dense id map. Real labels occupy 0..K-1 in sorted-string
/// order; id K is the reserved END token and K+1 the reserved START token,
/// neither of which has a string.
class LabelVocab {
 public:
  LabelVocab() = default;

  /// Builds from the distinct labels of a dataset (sorted).
  static LabelVocab from_dataset(const Dataset& ds);

  /// Builds from an explicit id-ordered label list (checkpoint round-trip).
  static LabelVocab from_labels(std::vector<std::string> labels);

  int id(const std::string& label) const;  // throws on unknown label
  const std::string& label(int id) const;  // real labels only
  bool contains(const std::string& label) const;

  int size() const { return static_cast<int>(id_to_label_.size()); }
  int end_id() const { return size(); }
  int start_id() const { return size() + 1; }

  const std::vector<std::string>& labels() const { return id_to_label_; }

 private:
  std::vector<std::string> id_to_label_;
  std::unordered_map<std::string, int> label_to_id_;
};

/// Generator settings for the planted co-occurrence benchmark. Each group has
/// one dominant label carried by a feature block and `contexts_per_group`
/// context labels that appear with probability `co_prob` but leave no trace
/// in the features.
struct SynthConfig {
  int groups = 4;
  int contexts_per_group = 2;
  double co_prob = 0.9;
  Index feature_dim = 16;
  double signal = 1.0;
  double noise_sigma = 0.3;
  int per_group = 200;
  std::uint64_t seed = 42;
};

std::string synth_dominant_label(int group);
std::string synth_context_label(int group, int index);

/// Deterministic synthetic dataset: features = signal * one-hot group block
/// + N(0, sigma^2) noise on every dimension; labels = dominant plus each
/// context independently with probability co_prob.
Dataset synth_generate(const SynthConfig& cfg);

/// JSON Lines dataset file: one {"id", "features", "labels"} object per line.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

/// One decoded image: ranked labels plus the path log-probability.
struct Prediction {
  std::string id;
  std::vector<std::string> labels;  // ranked, best first
  double log_prob = 0.0;
};

/// Prediction file: JSONL {"id", "labels", "log_prob"}.
std::vector<Prediction> load_predictions(const std::string& path);
void save_predictions(const std::vector<Prediction>& preds, const std::string& path);

}  // namespace chainlabel

#endif  // CHAINLABEL_DATA_HPP
