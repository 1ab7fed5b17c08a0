#include "chainlabel/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

namespace chainlabel {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0 || epsilon <= 0.0) {
    throw std::invalid_argument("train config: learning_rate and epsilon must be > 0");
  }
  if (rms_decay < 0.0 || rms_decay >= 1.0 || momentum < 0.0 || momentum >= 1.0 ||
      dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("train config: rms_decay, momentum, dropout_rate must be in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("train config: weight_decay must be >= 0");
  if (batch_size < 1 || epochs < 1) {
    throw std::invalid_argument("train config: batch_size and epochs must be >= 1");
  }
}

LabelOrder order_labels(const Dataset& ds, const LabelVocab& vocab) {
  if (ds.examples.empty()) throw std::invalid_argument("order_labels: empty dataset");
  std::vector<long> counts(static_cast<std::size_t>(vocab.size()), 0);
  for (const auto& ex : ds.examples) {
    for (const auto& l : ex.labels) {
      ++counts[static_cast<std::size_t>(vocab.id(l))];
    }
  }
  LabelOrder order;
  order.ids.resize(counts.size());
  std::iota(order.ids.begin(), order.ids.end(), 0);
  // Ids follow sorted label strings, so id ascending == string ascending.
  std::stable_sort(order.ids.begin(), order.ids.end(), [&](int a, int b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return a < b;
  });
  return order;
}

std::vector<int> build_target_sequence(const std::vector<int>& label_ids,
                                       const LabelOrder& order, int end_id) {
  std::vector<int> position(order.ids.size());
  for (std::size_t i = 0; i < order.ids.size(); ++i) {
    position[static_cast<std::size_t>(order.ids[i])] = static_cast<int>(i);
  }
  std::vector<int> seq = label_ids;
  for (int id : seq) {
    if (id < 0 || id >= static_cast<int>(order.ids.size())) {
      throw std::invalid_argument("build_target_sequence: unknown label id");
    }
  }
  std::sort(seq.begin(), seq.end(),
            [&](int a, int b) { return position[a] < position[b]; });
  seq.push_back(end_id);
  return seq;
}

double sequence_loss(const ForwardTrace& trace, const std::vector<int>& targets) {
  if (trace.steps.size() != targets.size()) {
    throw std::invalid_argument("sequence_loss: trace/target length mismatch");
  }
  double nll = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    nll -= std::log(trace.steps[t].probs[targets[t]]);
  }
  return nll / static_cast<double>(targets.size());
}

OptimizerState OptimizerState::zeros(ModelParams& p) {
  OptimizerState s;
  for (const auto& b : param_blocks(p)) {
    s.cache.emplace_back(Eigen::ArrayXd::Zero(b.size));
    s.velocity.emplace_back(Eigen::ArrayXd::Zero(b.size));
  }
  return s;
}

void rmsprop_block(double* theta, const double* grad, Eigen::ArrayXd& cache,
                   Eigen::ArrayXd& velocity, Index size, bool decay,
                   const TrainConfig& cfg) {
  if (cache.size() != size || velocity.size() != size) {
    throw std::invalid_argument("rmsprop: optimizer state shape mismatch");
  }
  for (Index i = 0; i < size; ++i) {
    double g = grad[i];
    if (!std::isfinite(g)) throw std::runtime_error("diverged: non-finite gradient");
    if (decay) g += cfg.weight_decay * theta[i];
    cache[i] = cfg.rms_decay * cache[i] + (1.0 - cfg.rms_decay) * g * g;
    velocity[i] = cfg.momentum * velocity[i] +
                  cfg.learning_rate * g / (std::sqrt(cache[i]) + cfg.epsilon);
    theta[i] -= velocity[i];
  }
}

void rmsprop_update(ModelParams& params, const Gradients& grads, OptimizerState& state,
                    const TrainConfig& cfg) {
  auto pb = param_blocks(params);
  auto gb = param_blocks(grads);
  if (state.cache.size() != pb.size()) {
    throw std::invalid_argument("rmsprop_update: optimizer state shape mismatch");
  }
  for (std::size_t b = 0; b < pb.size(); ++b) {
    if (pb[b].size != gb[b].size) {
      throw std::invalid_argument("rmsprop_update: shape mismatch");
    }
    rmsprop_block(pb[b].data, gb[b].data, state.cache[b], state.velocity[b], pb[b].size,
                  pb[b].decay, cfg);
  }
  ++state.step;
}

std::vector<std::size_t> epoch_permutation(std::uint64_t seed, int epoch, std::size_t n) {
  Rng rng(mix64(mix64(seed, 2), static_cast<std::uint64_t>(epoch)));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  return perm;
}

namespace {

void accumulate(Gradients& acc, const Gradients& g) {
  auto ab = param_blocks(acc);
  auto gb = param_blocks(g);
  for (std::size_t b = 0; b < ab.size(); ++b) {
    for (Index i = 0; i < ab[b].size; ++i) ab[b].data[i] += gb[b].data[i];
  }
}

void scale(Gradients& g, double s) {
  for (auto& b : param_blocks(g)) {
    for (Index i = 0; i < b.size; ++i) b.data[i] *= s;
  }
}

}  // namespace

FitResult fit(const Dataset& ds, Hyper hyper, const TrainConfig& cfg) {
  cfg.validate();
  LabelVocab vocab = LabelVocab::from_dataset(ds);
  if (vocab.size() == 0) throw std::invalid_argument("fit: empty vocabulary");

  if (hyper.vocab_size != 0 && hyper.vocab_size != vocab.size()) {
    throw std::invalid_argument("fit: hyper vocab_size disagrees with dataset");
  }
  hyper.vocab_size = vocab.size();
  if (hyper.image_dim != 0 && hyper.image_dim != ds.feature_dim()) {
    throw std::invalid_argument("fit: hyper image_dim disagrees with dataset");
  }
  hyper.image_dim = ds.feature_dim();
  hyper.validate();

  const LabelOrder order = order_labels(ds, vocab);

  struct Item {
    const Example* ex;
    std::vector<int> targets;
  };
  std::vector<Item> items;
  int skipped = 0;
  for (const auto& ex : ds.examples) {
    if (ex.labels.empty()) {
      ++skipped;
      continue;
    }
    std::vector<int> ids;
    ids.reserve(ex.labels.size());
    for (const auto& l : ex.labels) ids.push_back(vocab.id(l));
    items.push_back({&ex, build_target_sequence(ids, order, vocab.end_id())});
  }
  if (items.empty()) throw std::invalid_argument("fit: no trainable examples");
  if (skipped > 0) {
    std::fprintf(stderr, "fit: skipped %d example(s) with empty label sets\n", skipped);
  }

  Rng init_rng(mix64(cfg.seed, 1));
  FitResult result;
  result.params = ModelParams::init(hyper, init_rng);
  result.vocab = std::move(vocab);
  result.order = order;
  result.examples_skipped = skipped;

  OptimizerState opt = OptimizerState::zeros(result.params);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng drop_rng(mix64(mix64(cfg.seed, 3), static_cast<std::uint64_t>(epoch)));
    const auto perm = epoch_permutation(cfg.seed, epoch, items.size());
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < perm.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(perm.size(), start + cfg.batch_size);
      Gradients batch_grads = ModelParams::zeros(hyper);
      for (std::size_t k = start; k < stop; ++k) {
        const Item& item = items[perm[k]];
        const ForwardTrace trace =
            forward_sequence(item.ex->features, item.targets, result.params, Mode::kTrain,
                             cfg.dropout_rate, &drop_rng);
        const double loss = sequence_loss(trace, item.targets);
        if (!std::isfinite(loss)) throw std::runtime_error("diverged: non-finite loss");
        epoch_loss += loss;
        accumulate(batch_grads, backward_sequence(trace, item.ex->features, result.params));
      }
      scale(batch_grads, 1.0 / static_cast<double>(stop - start));
      rmsprop_update(result.params, batch_grads, opt, cfg);
    }

    result.history.push_back({epoch, epoch_loss / static_cast<double>(items.size()), skipped});
  }
  return result;
}

}  // namespace chainlabel
