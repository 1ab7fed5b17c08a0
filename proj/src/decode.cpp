#include "chainlabel/decode.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace chainlabel {

namespace {

struct Expansion {
  Vec next_state;
  Vec log_probs;  // over ids 0..K, masked entries -inf
};

/// Runs one recurrence step for a path and returns the next-label
/// distribution. Masked: already-emitted labels, plus END while the path is
/// shorter than min_len.
Expansion expand(const PredictionPath& path, const Vec& image, const ModelParams& p,
                 const Hyper& h, int min_len) {
  const Index input = path.labels.empty() ? h.start_id() : path.labels.back();
  const LstmOut step = lstm_step(path.state, embed_label(input, p), p);
  const Vec joint = joint_project(step.output, image, p);

  std::vector<int> masked(path.labels.begin(), path.labels.end());
  if (static_cast<int>(path.labels.size()) < min_len) {
    masked.push_back(static_cast<int>(h.end_id()));
  }
  const Vec scores = score_labels(joint, p, masked);
  if (prob_checks_enabled()) check_prob_vector(softmax(scores));

  Expansion e;
  e.next_state = step.state;
  e.log_probs = log_softmax(scores);
  return e;
}

/// Token ranking: log-prob descending, ties to the smallest id.
std::vector<int> top_tokens(const Vec& log_probs, int n) {
  std::vector<int> ids;
  ids.reserve(log_probs.size());
  for (Index i = 0; i < log_probs.size(); ++i) {
    if (log_probs[i] != -std::numeric_limits<double>::infinity()) {
      ids.push_back(static_cast<int>(i));
    }
  }
  const auto better = [&](int a, int b) {
    if (log_probs[a] != log_probs[b]) return log_probs[a] > log_probs[b];
    return a < b;
  };
  if (static_cast<int>(ids.size()) > n) {
    std::partial_sort(ids.begin(), ids.begin() + n, ids.end(), better);
    ids.resize(n);
  } else {
    std::sort(ids.begin(), ids.end(), better);
  }
  return ids;
}

/// Path ordering: log-prob descending, then lexicographically smaller label
/// sequence (which also puts shorter prefixes first).
bool path_before(const PredictionPath& a, const PredictionPath& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return std::lexicographical_compare(a.labels.begin(), a.labels.end(),
                                      b.labels.begin(), b.labels.end());
}

void sort_paths(std::vector<PredictionPath>& paths) {
  std::sort(paths.begin(), paths.end(), path_before);
}

PredictionPath terminate(PredictionPath path, double end_log_prob) {
  path.log_prob += end_log_prob;
  path.terminated = true;
  path.state = Vec();
  return path;
}

}  // namespace

void BeamConfig::validate(int vocab_size) const {
  if (beam_width < 1) throw std::invalid_argument("beam: beam_width must be >= 1");
  if (top_paths < 1 || top_paths > beam_width) {
    throw std::invalid_argument("beam: top_paths must be in [1, beam_width]");
  }
  const int cap = max_len < 0 ? vocab_size : max_len;
  if (min_len < 0 || min_len > cap) {
    throw std::invalid_argument("beam: need 0 <= min_len <= max_len");
  }
  if (min_len > vocab_size) {
    throw std::invalid_argument("beam: min_len exceeds the vocabulary");
  }
}

std::vector<PredictionPath> beam_search(const Vec& image, const ModelParams& p,
                                        const BeamConfig& cfg) {
  const Hyper h = p.hyper();
  cfg.validate(static_cast<int>(h.vocab_size));
  const int max_len = cfg.max_len < 0 ? static_cast<int>(h.vocab_size) : cfg.max_len;
  const int end_id = static_cast<int>(h.end_id());

  std::vector<PredictionPath> beam;
  std::vector<PredictionPath> candidates;

  // Paths at the length cap retire immediately with END's log-probability
  // appended; everything else stays searchable.
  const auto admit = [&](PredictionPath path) {
    if (static_cast<int>(path.labels.size()) >= max_len) {
      const Expansion e = expand(path, image, p, h, cfg.min_len);
      candidates.push_back(terminate(std::move(path), e.log_probs[end_id]));
    } else {
      beam.push_back(std::move(path));
    }
  };

  PredictionPath root;
  root.state = Vec::Zero(h.state_dim);
  admit(std::move(root));

  while (!beam.empty()) {
    if (static_cast<int>(candidates.size()) >= cfg.top_paths) {
      sort_paths(candidates);
      if (beam.front().log_prob < candidates[cfg.top_paths - 1].log_prob) {
        break;  // no extension can beat the current answer set
      }
    }

    std::vector<PredictionPath> continuations;
    for (const PredictionPath& path : beam) {
      const Expansion e = expand(path, image, p, h, cfg.min_len);
      for (int token : top_tokens(e.log_probs, cfg.beam_width)) {
        PredictionPath next;
        next.labels = path.labels;
        next.log_prob = path.log_prob + e.log_probs[token];
        if (token == end_id) {
          next.terminated = true;
          candidates.push_back(std::move(next));
        } else {
          next.labels.push_back(token);
          next.state = e.next_state;
          continuations.push_back(std::move(next));
        }
      }
    }

    sort_paths(continuations);
    if (static_cast<int>(continuations.size()) > cfg.beam_width) {
      continuations.resize(cfg.beam_width);
    }

    beam.clear();
    for (PredictionPath& path : continuations) {
      admit(std::move(path));
    }
  }

  sort_paths(candidates);
  if (static_cast<int>(candidates.size()) > cfg.top_paths) {
    candidates.resize(cfg.top_paths);
  }
  return candidates;
}

PredictionPath greedy_decode(const Vec& image, const ModelParams& p, const BeamConfig& cfg) {
  const Hyper h = p.hyper();
  cfg.validate(static_cast<int>(h.vocab_size));
  const int max_len = cfg.max_len < 0 ? static_cast<int>(h.vocab_size) : cfg.max_len;
  const int end_id = static_cast<int>(h.end_id());

  PredictionPath path;
  path.state = Vec::Zero(h.state_dim);
  while (true) {
    if (static_cast<int>(path.labels.size()) >= max_len) {
      const Expansion last = expand(path, image, p, h, cfg.min_len);
      return terminate(std::move(path), last.log_probs[end_id]);
    }
    const Expansion e = expand(path, image, p, h, cfg.min_len);
    const int best = top_tokens(e.log_probs, 1).front();
    if (best == end_id) {
      return terminate(std::move(path), e.log_probs[end_id]);
    }
    path.labels.push_back(best);
    path.log_prob += e.log_probs[best];
    path.state = e.next_state;
  }
}

std::vector<int> predict_topk(const Vec& image, const ModelParams& p, int k,
                              const BeamConfig& cfg) {
  if (k < 1) throw std::invalid_argument("predict_topk: k must be >= 1");
  BeamConfig run = cfg;
  run.top_paths = 1;
  const std::vector<PredictionPath> paths = beam_search(image, p, run);
  if (paths.empty()) {
    throw std::logic_error("predict_topk: beam search returned no candidates");
  }
  std::vector<int> labels = paths.front().labels;
  if (cfg.min_len > 0 && static_cast<int>(labels.size()) > k) {
    labels.resize(k);
  }
  return labels;
}

}  // namespace chainlabel
