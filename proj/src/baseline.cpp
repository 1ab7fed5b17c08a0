#include "chainlabel/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace chainlabel {

namespace {

// Stable binary cross-entropy: softplus(s) - y*s.
double bce(double score, double target) {
  const double sp = std::max(score, 0.0) + std::log1p(std::exp(-std::abs(score)));
  return sp - target * score;
}

}  // namespace

BaselineFitResult baseline_fit(const Dataset& ds, Hyper hyper, const TrainConfig& cfg,
                               BaselineLoss loss_kind) {
  cfg.validate();
  LabelVocab vocab = LabelVocab::from_dataset(ds);
  if (vocab.size() == 0) throw std::invalid_argument("baseline_fit: empty vocabulary");
  if (hyper.vocab_size != 0 && hyper.vocab_size != vocab.size()) {
    throw std::invalid_argument("baseline_fit: hyper vocab_size disagrees with dataset");
  }
  if (hyper.image_dim != 0 && hyper.image_dim != ds.feature_dim()) {
    throw std::invalid_argument("baseline_fit: hyper image_dim disagrees with dataset");
  }
  const Index k = vocab.size();
  const Index d = ds.feature_dim();
  if (d < 1) throw std::invalid_argument("baseline_fit: empty feature vectors");

  struct Item {
    const Example* ex;
    Vec targets;  // K-dim 0/1
  };
  std::vector<Item> items;
  int skipped = 0;
  for (const auto& ex : ds.examples) {
    if (ex.labels.empty()) {
      ++skipped;
      continue;
    }
    Vec y = Vec::Zero(k);
    for (const auto& l : ex.labels) y[vocab.id(l)] = 1.0;
    items.push_back({&ex, std::move(y)});
  }
  if (items.empty()) throw std::invalid_argument("baseline_fit: no trainable examples");
  if (skipped > 0) {
    std::fprintf(stderr, "baseline_fit: skipped %d example(s) with empty label sets\n", skipped);
  }

  Rng init_rng(mix64(cfg.seed, 1));
  BaselineFitResult result;
  result.params.weight = glorot_init(k, d, init_rng);
  result.params.bias = Vec::Zero(k);
  result.vocab = std::move(vocab);
  result.examples_skipped = skipped;

  Eigen::ArrayXd w_cache = Eigen::ArrayXd::Zero(k * d);
  Eigen::ArrayXd w_vel = Eigen::ArrayXd::Zero(k * d);
  Eigen::ArrayXd b_cache = Eigen::ArrayXd::Zero(k);
  Eigen::ArrayXd b_vel = Eigen::ArrayXd::Zero(k);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto perm = epoch_permutation(cfg.seed, epoch, items.size());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < perm.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(perm.size(), start + cfg.batch_size);
      Mat gw = Mat::Zero(k, d);
      Vec gb = Vec::Zero(k);
      for (std::size_t i = start; i < stop; ++i) {
        const Item& item = items[perm[i]];
        const Vec scores = result.params.weight * item.ex->features + result.params.bias;
        double loss = 0.0;
        Vec delta;
        if (loss_kind == BaselineLoss::kBce) {
          for (Index c = 0; c < k; ++c) loss += bce(scores[c], item.targets[c]);
          delta = sigmoid(scores) - item.targets;
        } else {
          const Vec target = item.targets / item.targets.sum();  // uniform over true labels
          const Vec logp = log_softmax(scores);
          for (Index c = 0; c < k; ++c) loss -= target[c] * logp[c];
          delta = softmax(scores) - target;
        }
        if (!std::isfinite(loss)) throw std::runtime_error("diverged: non-finite loss");
        epoch_loss += loss;
        gw += delta * item.ex->features.transpose();
        gb += delta;
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      gw *= inv;
      gb *= inv;
      rmsprop_block(result.params.weight.data(), gw.data(), w_cache, w_vel, k * d, true, cfg);
      rmsprop_block(result.params.bias.data(), gb.data(), b_cache, b_vel, k, false, cfg);
    }
    result.history.push_back({epoch, epoch_loss / static_cast<double>(items.size()), skipped});
  }
  return result;
}

Vec baseline_scores(const Vec& features, const BaselineParams& p) {
  if (features.size() != p.weight.cols()) {
    throw std::invalid_argument("baseline_scores: feature dim mismatch");
  }
  return sigmoid(p.weight * features + p.bias);
}

std::vector<int> baseline_topk(const Vec& features, const BaselineParams& p, int k) {
  const int vocab = static_cast<int>(p.weight.rows());
  if (k < 1 || k > vocab) {
    throw std::invalid_argument("baseline_topk: k must be in [1, vocab_size]");
  }
  const Vec scores = baseline_scores(features, p);
  std::vector<int> ids(vocab);
  std::iota(ids.begin(), ids.end(), 0);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  ids.resize(k);
  return ids;
}

}  // namespace chainlabel
