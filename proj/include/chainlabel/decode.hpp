#ifndef CHAINLABEL_DECODE_HPP
#define CHAINLABEL_DECODE_HPP

#include "chainlabel/model.hpp"

#include <vector>

namespace chainlabel {

/// An inference hypothesis: real label ids in emission order plus the
/// cumulative log-probability of every step taken, including the END step.
struct PredictionPath {
  std::vector<int> labels;
  double log_prob = 0.0;
  bool terminated = false;
  Vec state;  // recurrent state after consuming the path; dropped once terminated
};

struct BeamConfig {
  int beam_width = 5;
  int min_len = 0;    // END is masked until this many labels are emitted
  int max_len = -1;   // hard cap on real labels; -1 means the vocabulary size
  int top_paths = 1;

  void validate(int vocab_size) const;
};

/// Argmax decoding: at each step picks the single most probable unmasked
/// label (ties to the smallest id), stopping at END or, at max_len, by
/// appending END's log-probability. Identical to beam_search at width 1.
PredictionPath greedy_decode(const Vec& image, const ModelParams& p, const BeamConfig& cfg);

/// Beam search over prediction paths. Every intermediate path is extended by
/// its beam_width most probable unmasked next tokens; the beam_width best
/// continuations survive, END-continuations move to the candidate set, and
/// survivors at max_len are force-terminated with END's log-probability.
/// Stops once the best intermediate path scores below the top_paths-th best
/// candidate. Returns up to top_paths candidates, best first.
std::vector<PredictionPath> beam_search(const Vec& image, const ModelParams& p,
                                        const BeamConfig& cfg);

/// Ranked labels for metric computation: the best beam candidate's labels in
/// emission order, truncated to the first k when a minimum length is set and
/// returned whole when min_len is 0 (the no-minimum-length mode, where the
/// path may hold fewer than k labels).
std::vector<int> predict_topk(const Vec& image, const ModelParams& p, int k,
                              const BeamConfig& cfg);

}  // namespace chainlabel

#endif  // CHAINLABEL_DECODE_HPP
