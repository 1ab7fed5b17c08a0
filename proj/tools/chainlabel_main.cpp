// chainlabel: label-chain multi-label prediction over precomputed image
// features. Subcommands: synth, train, predict, evaluate, nn, order.

#include "chainlabel/baseline.hpp"
#include "chainlabel/checkpoint.hpp"
#include "chainlabel/decode.hpp"
#include "chainlabel/metrics.hpp"
#include "chainlabel/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using chainlabel::Index;
using chainlabel::Vec;
using nlohmann::json;

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  in >> j;
  if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
  return j;
}

json section(const json& cfg, const char* name) {
  return cfg.contains(name) && cfg[name].is_object() ? cfg[name] : json::object();
}

// Flag beats config file beats default.
template <typename T>
T pick(const CLI::Option* opt, const T& flag_value, const json& sec, const char* key, T dflt) {
  if (opt != nullptr && opt->count() > 0) return flag_value;
  if (sec.contains(key)) return sec[key].get<T>();
  return dflt;
}

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value, const json& sec,
                           const json& cfg) {
  if (opt != nullptr && opt->count() > 0) return flag_value;
  if (sec.contains("seed")) return sec["seed"].get<std::uint64_t>();
  if (cfg.contains("seed")) return cfg["seed"].get<std::uint64_t>();
  if (const char* env = std::getenv("CHAINLABEL_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 42;
}

void echo_config(const std::string& command, const json& resolved) {
  json j;
  j["command"] = command;
  j["config"] = resolved;
  std::cout << j.dump() << "\n";
}

chainlabel::TrainConfig train_config_from(const json& cfg, const json& tsec) {
  chainlabel::TrainConfig tc;
  tc.learning_rate = tsec.value("learning_rate", tc.learning_rate);
  tc.rms_decay = tsec.value("rms_decay", tc.rms_decay);
  tc.momentum = tsec.value("momentum", tc.momentum);
  tc.epsilon = tsec.value("epsilon", tc.epsilon);
  tc.weight_decay = tsec.value("weight_decay", tc.weight_decay);
  tc.dropout_rate = tsec.value("dropout_rate", tc.dropout_rate);
  tc.batch_size = tsec.value("batch_size", tc.batch_size);
  tc.epochs = tsec.value("epochs", tc.epochs);
  (void)cfg;
  return tc;
}

json train_config_json(const chainlabel::TrainConfig& tc) {
  return {{"learning_rate", tc.learning_rate}, {"rms_decay", tc.rms_decay},
          {"momentum", tc.momentum},           {"epsilon", tc.epsilon},
          {"weight_decay", tc.weight_decay},   {"dropout_rate", tc.dropout_rate},
          {"batch_size", tc.batch_size},       {"epochs", tc.epochs},
          {"seed", tc.seed}};
}

int run_synth(const std::string& config_path, const std::string& out,
              const CLI::Option* seed_opt, std::uint64_t seed_flag) {
  const json cfg = load_config_file(config_path);
  const json sec = section(cfg, "synth");
  chainlabel::SynthConfig sc;
  sc.groups = sec.value("groups", sc.groups);
  sc.contexts_per_group = sec.value("contexts_per_group", sc.contexts_per_group);
  sc.co_prob = sec.value("co_prob", sc.co_prob);
  sc.feature_dim = sec.value("feature_dim", sc.feature_dim);
  sc.signal = sec.value("signal", sc.signal);
  sc.noise_sigma = sec.value("noise_sigma", sc.noise_sigma);
  sc.per_group = sec.value("per_group", sc.per_group);
  sc.seed = resolve_seed(seed_opt, seed_flag, sec, cfg);

  echo_config("synth", {{"groups", sc.groups},
                        {"contexts_per_group", sc.contexts_per_group},
                        {"co_prob", sc.co_prob},
                        {"feature_dim", sc.feature_dim},
                        {"signal", sc.signal},
                        {"noise_sigma", sc.noise_sigma},
                        {"per_group", sc.per_group},
                        {"seed", sc.seed},
                        {"out", out}});

  chainlabel::save_dataset(chainlabel::synth_generate(sc), out);
  std::cout << json{{"written", out}}.dump() << "\n";
  return 0;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"label-chain multi-label prediction"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic co-occurrence dataset");
  std::string synth_config, synth_out;
  std::uint64_t synth_seed = 0;
  synth->add_option("--config", synth_config, "JSON config file");
  synth->add_option("--out", synth_out, "output dataset (JSONL)")->required();
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "generator seed");

  // train
  auto* train = app.add_subcommand("train", "train the recurrent head or the baseline");
  std::string train_data, train_config, train_out, train_history;
  bool train_baseline = false;
  std::uint64_t train_seed = 0;
  int train_epochs = 0, train_batch = 0;
  double train_lr = 0.0, train_dropout = 0.0;
  Index train_embed = 0, train_state = 0;
  train->add_option("--data", train_data, "training dataset (JSONL)")->required();
  train->add_option("--config", train_config, "JSON config file");
  train->add_option("--out", train_out, "output checkpoint (JSON)")->required();
  train->add_flag("--baseline", train_baseline, "train the flat no-RNN baseline");
  std::string train_baseline_loss = "bce";
  train->add_option("--baseline-loss", train_baseline_loss, "baseline loss: bce or softmax")
      ->check(CLI::IsMember({"bce", "softmax"}));
  train->add_option("--history", train_history, "write epoch stats to this JSONL file");
  auto* train_seed_opt = train->add_option("--seed", train_seed, "training seed");
  auto* train_epochs_opt = train->add_option("--epochs", train_epochs, "epochs");
  auto* train_batch_opt = train->add_option("--batch-size", train_batch, "batch size");
  auto* train_lr_opt = train->add_option("--learning-rate", train_lr, "learning rate");
  auto* train_dropout_opt = train->add_option("--dropout", train_dropout, "dropout rate");
  auto* train_embed_opt = train->add_option("--embed-dim", train_embed, "label embedding dim");
  auto* train_state_opt = train->add_option("--state-dim", train_state, "recurrent state dim");

  // predict
  auto* predict = app.add_subcommand("predict", "decode ranked labels for a dataset");
  std::string pred_model, pred_data, pred_out;
  int pred_k = 3, pred_min_len = 0, pred_beam = 5, pred_max_len = -1;
  predict->add_option("--model", pred_model, "checkpoint file")->required();
  predict->add_option("--data", pred_data, "dataset with features (JSONL)")->required();
  predict->add_option("--k", pred_k, "ranked labels per image")->required();
  predict->add_option("--min-len", pred_min_len, "minimum path length (END masked below it)");
  predict->add_option("--beam", pred_beam, "beam width");
  predict->add_option("--max-len", pred_max_len, "maximum path length (-1: vocabulary size)");
  predict->add_option("--out", pred_out, "output predictions (JSONL)")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against ground truth");
  std::string eval_pred, eval_truth, eval_out;
  int eval_k = 3, eval_map_n = 3;
  evaluate->add_option("--pred", eval_pred, "predictions (JSONL)")->required();
  evaluate->add_option("--truth", eval_truth, "ground-truth dataset (JSONL)")->required();
  evaluate->add_option("--k", eval_k, "k used for the predictions")->required();
  evaluate->add_option("--map-n", eval_map_n, "N for MAP@N");
  evaluate->add_option("--out", eval_out, "output report (JSON)");

  // nn
  auto* nn = app.add_subcommand("nn", "nearest labels in the embedding space");
  std::string nn_model, nn_label;
  int nn_m = 5;
  nn->add_option("--model", nn_model, "checkpoint file")->required();
  nn->add_option("--label", nn_label, "query label")->required();
  nn->add_option("--m", nn_m, "neighbor count");

  // order
  auto* order = app.add_subcommand("order", "print the frequency label order");
  std::string order_data;
  order->add_option("--data", order_data, "dataset (JSONL)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (synth->parsed()) {
    return run_synth(synth_config, synth_out, synth_seed_opt, synth_seed);
  }

  if (train->parsed()) {
    const json cfg = load_config_file(train_config);
    const json tsec = section(cfg, "train");
    const json hsec = section(cfg, "hyper");
    chainlabel::TrainConfig tc = train_config_from(cfg, tsec);
    tc.seed = resolve_seed(train_seed_opt, train_seed, tsec, cfg);
    tc.epochs = pick(train_epochs_opt, train_epochs, tsec, "epochs", tc.epochs);
    tc.batch_size = pick(train_batch_opt, train_batch, tsec, "batch_size", tc.batch_size);
    tc.learning_rate = pick(train_lr_opt, train_lr, tsec, "learning_rate", tc.learning_rate);
    tc.dropout_rate = pick(train_dropout_opt, train_dropout, tsec, "dropout_rate", tc.dropout_rate);

    chainlabel::Hyper hyper;
    hyper.embed_dim = pick(train_embed_opt, train_embed, hsec, "embed_dim", hyper.embed_dim);
    hyper.state_dim = pick(train_state_opt, train_state, hsec, "state_dim", hyper.state_dim);

    echo_config("train", {{"data", train_data},
                          {"out", train_out},
                          {"baseline", train_baseline},
                          {"baseline_loss", train_baseline_loss},
                          {"embed_dim", hyper.embed_dim},
                          {"state_dim", hyper.state_dim},
                          {"train", train_config_json(tc)}});

    const chainlabel::Dataset ds = chainlabel::load_dataset(train_data);

    std::vector<chainlabel::EpochStats> history;
    chainlabel::Checkpoint ck;
    if (train_baseline) {
      const auto loss_kind = train_baseline_loss == "softmax"
                                 ? chainlabel::BaselineLoss::kSoftmax
                                 : chainlabel::BaselineLoss::kBce;
      auto fitres = chainlabel::baseline_fit(ds, hyper, tc, loss_kind);
      ck.hyper.vocab_size = fitres.vocab.size();
      ck.hyper.embed_dim = hyper.embed_dim;
      ck.hyper.state_dim = hyper.state_dim;
      ck.hyper.image_dim = ds.feature_dim();
      ck.vocab = fitres.vocab.labels();
      ck.label_order = chainlabel::order_labels(ds, fitres.vocab).ids;
      ck.baseline = std::move(fitres.params);
      history = std::move(fitres.history);
    } else {
      auto fitres = chainlabel::fit(ds, hyper, tc);
      ck.hyper = fitres.params.hyper();
      ck.vocab = fitres.vocab.labels();
      ck.label_order = fitres.order.ids;
      ck.params = std::move(fitres.params);
      history = std::move(fitres.history);
    }

    std::ofstream hist_out;
    if (!train_history.empty()) {
      hist_out.open(train_history);
      if (!hist_out) throw std::runtime_error("cannot open history file: " + train_history);
    }
    for (const auto& e : history) {
      const json line = {{"epoch", e.epoch},
                         {"mean_loss", e.mean_loss},
                         {"examples_skipped", e.examples_skipped}};
      std::cout << line.dump() << "\n";
      if (hist_out.is_open()) hist_out << line.dump() << "\n";
    }
    chainlabel::save_checkpoint(ck, train_out);
    std::cout << json{{"checkpoint", train_out}}.dump() << "\n";
    return 0;
  }

  if (predict->parsed()) {
    echo_config("predict", {{"model", pred_model},
                            {"data", pred_data},
                            {"k", pred_k},
                            {"min_len", pred_min_len},
                            {"beam", pred_beam},
                            {"max_len", pred_max_len},
                            {"out", pred_out}});
    const chainlabel::Checkpoint ck = chainlabel::load_checkpoint(pred_model);
    const chainlabel::Dataset ds = chainlabel::load_dataset(pred_data);
    if (!ds.examples.empty() && ds.feature_dim() != ck.hyper.image_dim) {
      throw std::runtime_error("predict: dataset feature dim disagrees with checkpoint");
    }
    const chainlabel::LabelVocab vocab = chainlabel::LabelVocab::from_labels(ck.vocab);

    std::vector<chainlabel::Prediction> preds;
    preds.reserve(ds.examples.size());
    for (const auto& ex : ds.examples) {
      chainlabel::Prediction out;
      out.id = ex.id;
      if (ck.params) {
        chainlabel::BeamConfig bc;
        bc.beam_width = pred_beam;
        bc.min_len = pred_min_len;
        bc.max_len = pred_max_len;
        bc.top_paths = 1;
        const auto paths = chainlabel::beam_search(ex.features, *ck.params, bc);
        const auto& best = paths.front();
        std::vector<int> ids = best.labels;
        if (pred_min_len > 0 && static_cast<int>(ids.size()) > pred_k) ids.resize(pred_k);
        for (int id : ids) out.labels.push_back(vocab.label(id));
        out.log_prob = best.log_prob;
      } else {
        const Vec scores = chainlabel::baseline_scores(ex.features, *ck.baseline);
        for (int id : chainlabel::baseline_topk(ex.features, *ck.baseline, pred_k)) {
          out.labels.push_back(vocab.label(id));
          out.log_prob += std::log(scores[id]);
        }
      }
      preds.push_back(std::move(out));
    }
    chainlabel::save_predictions(preds, pred_out);
    std::cout << json{{"written", pred_out}, {"images", preds.size()}}.dump() << "\n";
    return 0;
  }

  if (evaluate->parsed()) {
    echo_config("evaluate", {{"pred", eval_pred},
                             {"truth", eval_truth},
                             {"k", eval_k},
                             {"map_n", eval_map_n},
                             {"out", eval_out}});
    const auto preds = chainlabel::load_predictions(eval_pred);
    const auto truth = chainlabel::load_dataset(eval_truth);
    const auto report = chainlabel::evaluate_predictions(preds, truth, eval_k, eval_map_n);
    const std::string text = chainlabel::report_to_json(report);
    if (!eval_out.empty()) {
      std::ofstream out(eval_out);
      if (!out) throw std::runtime_error("cannot open report file: " + eval_out);
      out << text << "\n";
    }
    std::cout << text << "\n";
    return 0;
  }

  if (nn->parsed()) {
    echo_config("nn", {{"model", nn_model}, {"label", nn_label}, {"m", nn_m}});
    const chainlabel::Checkpoint ck = chainlabel::load_checkpoint(nn_model);
    if (!ck.params) throw std::runtime_error("nn: checkpoint has no recurrent-head params");
    const chainlabel::LabelVocab vocab = chainlabel::LabelVocab::from_labels(ck.vocab);
    const int id = vocab.id(nn_label);
    const Vec query = chainlabel::embed_label(id, *ck.params);
    json neighbors = json::array();
    for (const auto& [nid, sim] : chainlabel::nearest_labels(query, *ck.params, nn_m, {id})) {
      neighbors.push_back({{"label", vocab.label(nid)}, {"similarity", sim}});
    }
    std::cout << json{{"label", nn_label}, {"neighbors", neighbors}}.dump() << "\n";
    return 0;
  }

  if (order->parsed()) {
    echo_config("order", {{"data", order_data}});
    const auto ds = chainlabel::load_dataset(order_data);
    const auto vocab = chainlabel::LabelVocab::from_dataset(ds);
    const auto lo = chainlabel::order_labels(ds, vocab);
    json names = json::array();
    for (int id : lo.ids) names.push_back(vocab.label(id));
    std::cout << json{{"order", names}}.dump() << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
