#ifndef CHAINLABEL_BASELINE_HPP
#define CHAINLABEL_BASELINE_HPP

#include "chainlabel/baseline_params.hpp"
#include "chainlabel/train.hpp"

#include <vector>

namespace chainlabel {

struct BaselineFitResult {
  BaselineParams params;
  LabelVocab vocab;
  std::vector<EpochStats> history;
  int examples_skipped = 0;
};

/// kBce: K independent logistic outputs (sigmoid + binary cross-entropy),
/// the default. kSoftmax: one multinomial softmax over all labels with the
/// example's label set as a uniform target distribution.
enum class BaselineLoss { kBce, kSoftmax };

/// Trains the flat comparison model on the image features with the same
/// optimizer, shuffles, and weight-decay rule as the recurrent head. No
/// recurrence, no label conditioning.
BaselineFitResult baseline_fit(const Dataset& ds, Hyper hyper, const TrainConfig& cfg,
                               BaselineLoss loss = BaselineLoss::kBce);

/// Per-label sigmoid scores.
Vec baseline_scores(const Vec& features, const BaselineParams& p);

/// Top-k label ids by descending sigmoid score, ties by ascending id.
std::vector<int> baseline_topk(const Vec& features, const BaselineParams& p, int k);

}  // namespace chainlabel

#endif  // CHAINLABEL_BASELINE_HPP
