#include "chainlabel/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace chainlabel {

using nlohmann::json;

LabelVocab LabelVocab::from_dataset(const Dataset& ds) {
  std::set<std::string> distinct;
  for (const auto& ex : ds.examples) {
    distinct.insert(ex.labels.begin(), ex.labels.end());
  }
  return from_labels({distinct.begin(), distinct.end()});
}

LabelVocab LabelVocab::from_labels(std::vector<std::string> labels) {
  LabelVocab v;
  v.id_to_label_ = std::move(labels);
  for (int i = 0; i < static_cast<int>(v.id_to_label_.size()); ++i) {
    auto [it, inserted] = v.label_to_id_.emplace(v.id_to_label_[i], i);
    if (!inserted) {
      throw std::invalid_argument("vocabulary has duplicate label: " + v.id_to_label_[i]);
    }
  }
  return v;
}

int LabelVocab::id(const std::string& label) const {
  auto it = label_to_id_.find(label);
  if (it == label_to_id_.end()) {
    throw std::invalid_argument("unknown label: " + label);
  }
  return it->second;
}

const std::string& LabelVocab::label(int id) const {
  if (id < 0 || id >= size()) {
    throw std::invalid_argument("label id out of range: " + std::to_string(id));
  }
  return id_to_label_[static_cast<std::size_t>(id)];
}

bool LabelVocab::contains(const std::string& label) const {
  return label_to_id_.count(label) > 0;
}

std::string synth_dominant_label(int group) {
  return "g" + std::to_string(group) + "_dom";
}

std::string synth_context_label(int group, int index) {
  return "g" + std::to_string(group) + "_ctx" + std::to_string(index);
}

Dataset synth_generate(const SynthConfig& cfg) {
  if (cfg.groups < 1 || cfg.contexts_per_group < 0 || cfg.per_group < 1) {
    throw std::invalid_argument("synth_generate: invalid counts");
  }
  if (!(cfg.co_prob > 0.0 && cfg.co_prob <= 1.0)) {
    throw std::invalid_argument("synth_generate: co_prob must be in (0, 1]");
  }
  if (cfg.noise_sigma < 0.0) {
    throw std::invalid_argument("synth_generate: noise_sigma must be >= 0");
  }
  if (cfg.feature_dim < cfg.groups) {
    throw std::invalid_argument("synth_generate: feature_dim must be >= groups");
  }

  Rng rng(cfg.seed);
  const Index block = cfg.feature_dim / cfg.groups;

  Dataset ds;
  ds.examples.reserve(static_cast<std::size_t>(cfg.groups) * cfg.per_group);
  for (int g = 0; g < cfg.groups; ++g) {
    for (int e = 0; e < cfg.per_group; ++e) {
      Example ex;
      ex.id = "g" + std::to_string(g) + "_e" + std::to_string(e);
      ex.labels.push_back(synth_dominant_label(g));
      for (int c = 0; c < cfg.contexts_per_group; ++c) {
        if (rng.bernoulli(cfg.co_prob)) {
          ex.labels.push_back(synth_context_label(g, c));
        }
      }
      std::sort(ex.labels.begin(), ex.labels.end());
      ex.features = Vec::Zero(cfg.feature_dim);
      ex.features.segment(g * block, block).setConstant(cfg.signal);
      for (Index d = 0; d < cfg.feature_dim; ++d) {
        ex.features[d] += rng.normal(0.0, cfg.noise_sigma);
      }
      ds.examples.push_back(std::move(ex));
    }
  }
  return ds;
}

namespace {

json parse_line(const std::string& line, std::size_t lineno, const std::string& path) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed JSON line");
  }
  return j;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset file: " + path);
  }
  Dataset ds;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  Index dim = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json j = parse_line(line, lineno, path);
    if (!j.contains("id") || !j.contains("features") || !j.contains("labels") ||
        !j["id"].is_string() || !j["features"].is_array() || !j["labels"].is_array()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected fields id/features/labels");
    }
    Example ex;
    ex.id = j["id"].get<std::string>();
    if (!seen_ids.insert(ex.id).second) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": duplicate id " + ex.id);
    }
    const auto& feats = j["features"];
    ex.features = Vec(static_cast<Index>(feats.size()));
    for (std::size_t i = 0; i < feats.size(); ++i) {
      if (!feats[i].is_number()) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-numeric feature");
      }
      const double v = feats[i].get<double>();
      if (!std::isfinite(v)) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-finite feature");
      }
      ex.features[static_cast<Index>(i)] = v;
    }
    if (dim < 0) {
      dim = ex.features.size();
    } else if (ex.features.size() != dim) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": feature dim mismatch");
    }
    std::set<std::string> labels;
    for (const auto& l : j["labels"]) {
      if (!l.is_string()) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-string label");
      }
      labels.insert(l.get<std::string>());
    }
    ex.labels.assign(labels.begin(), labels.end());
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path);
  }
  for (const auto& ex : ds.examples) {
    json j;
    j["id"] = ex.id;
    j["features"] = std::vector<double>(ex.features.data(), ex.features.data() + ex.features.size());
    j["labels"] = ex.labels;
    out << j.dump() << "\n";
  }
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open prediction file: " + path);
  }
  std::vector<Prediction> preds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json j = parse_line(line, lineno, path);
    if (!j.contains("id") || !j.contains("labels")) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected fields id/labels");
    }
    Prediction p;
    p.id = j["id"].get<std::string>();
    for (const auto& l : j["labels"]) {
      p.labels.push_back(l.get<std::string>());
    }
    p.log_prob = j.value("log_prob", 0.0);
    preds.push_back(std::move(p));
  }
  return preds;
}

void save_predictions(const std::vector<Prediction>& preds, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path);
  }
  for (const auto& p : preds) {
    json j;
    j["id"] = p.id;
    j["labels"] = p.labels;
    j["log_prob"] = p.log_prob;
    out << j.dump() << "\n";
  }
}

}  // namespace chainlabel
