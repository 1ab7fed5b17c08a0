#ifndef CHAINLABEL_TRAIN_HPP
#define CHAINLABEL_TRAIN_HPP

#include "chainlabel/data.hpp"
#include "chainlabel/model.hpp"

#include <cstdint>
#include <vector>

namespace chainlabel {

struct TrainConfig {
  double learning_rate = 1e-3;
  double rms_decay = 0.9;     // running-average coefficient for squared grads
  double momentum = 0.9;      // velocity coefficient applied on top of rmsprop
  double epsilon = 1e-6;
  double weight_decay = 1e-4; // weight matrices only
  double dropout_rate = 0.5;  // projection-layer inputs
  int batch_size = 16;
  int epochs = 10;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Label ids sorted most-frequent-first over a training set, ties broken by
/// ascending label string (equivalently ascending id, since ids follow
/// sorted strings).
struct LabelOrder {
  std::vector<int> ids;
};

LabelOrder order_labels(const Dataset& ds, const LabelVocab& vocab);

/// Sorts an example's label ids by the global order and appends END.
std::vector<int> build_target_sequence(const std::vector<int>& label_ids,
                                       const LabelOrder& order, int end_id);

/// -(1/T) * sum_t log p_t[target_t]; weight decay is applied in the update
/// step, not here.
double sequence_loss(const ForwardTrace& trace, const std::vector<int>& targets);

/// Per-parameter running squared-gradient cache and momentum velocity,
/// aligned with param_blocks order.
struct OptimizerState {
  std::vector<Eigen::ArrayXd> cache;
  std::vector<Eigen::ArrayXd> velocity;
  long step = 0;

  static OptimizerState zeros(ModelParams& p);
};

/// rmsprop with momentum: cache <- rho*cache + (1-rho)*g^2 (g augmented with
/// weight decay on decayable blocks); velocity <- mu*velocity +
/// lr*g/(sqrt(cache)+eps); theta <- theta - velocity. Throws "diverged" on a
/// non-finite gradient.
void rmsprop_update(ModelParams& params, const Gradients& grads, OptimizerState& state,
                    const TrainConfig& cfg);

/// Entrywise kernel behind rmsprop_update, shared with the baseline trainer.
void rmsprop_block(double* theta, const double* grad, Eigen::ArrayXd& cache,
                   Eigen::ArrayXd& velocity, Index size, bool decay,
                   const TrainConfig& cfg);

/// Deterministic per-epoch shuffle used by the trainer; epoch is 1-based.
std::vector<std::size_t> epoch_permutation(std::uint64_t seed, int epoch, std::size_t n);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  int examples_skipped = 0;
};

struct FitResult {
  ModelParams params;
  LabelVocab vocab;
  LabelOrder order;
  std::vector<EpochStats> history;
  int examples_skipped = 0;
};

/// Full training loop: Glorot init, frequency-ordered target sequences,
/// teacher forcing with dropout, per-batch mean gradients in fixed example
/// order, rmsprop updates. Examples with empty label sets are skipped and
/// counted. Bit-identical results for identical seed and config.
FitResult fit(const Dataset& ds, Hyper hyper, const TrainConfig& cfg);

}  // namespace chainlabel

#endif  // CHAINLABEL_TRAIN_HPP
