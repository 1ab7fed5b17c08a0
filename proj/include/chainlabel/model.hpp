#ifndef CHAINLABEL_MODEL_HPP
#define CHAINLABEL_MODEL_HPP

#include "chainlabel/numerics.hpp"

#include <string>
#include <vector>

namespace chainlabel {

/// Model dimensions. `vocab_size` counts real labels only; the embedding
/// table carries two extra rows for the reserved END (id K) and START
/// (id K+1) tokens.
struct Hyper {
  Index vocab_size = 0;  // K
  Index embed_dim = 64;  // d_e
  Index state_dim = 512; // d_r
  Index image_dim = 0;   // d_i

  Index end_id() const { return vocab_size; }
  Index start_id() const { return vocab_size + 1; }

  void validate() const;
};

/// All learned tensors of the recurrent head.
///
/// `embed` doubles as the scoring matrix: row k is both the input embedding
/// of label k and its scoring weight vector. Rows K (END) and K+1 (START)
/// are reserved; START is never scored.
struct ModelParams {
  Mat embed;                    // (K+2) x d_e

  Mat cell_rec, cell_in;        // d_r x d_r, d_r x d_e  (cell candidate)
  Mat igate_rec, igate_in;      // input gate
  Mat fgate_rec, fgate_in;      // forget gate
  Mat ogate_rec, ogate_in;      // output gate
  Vec cell_bias, igate_bias, fgate_bias, ogate_bias;  // d_r each

  Mat proj_state;               // d_e x d_r
  Mat proj_image;               // d_e x d_i
  Vec proj_bias;                // d_e

  static ModelParams zeros(const Hyper& h);

  /// Glorot init for every matrix, zero biases except forget-gate bias = 1.
  /// Matrices are drawn in declaration order for reproducibility.
  static ModelParams init(const Hyper& h, Rng& rng);

  Hyper hyper() const;
  void validate(const Hyper& h) const;
};

/// Gradients share the parameter layout exactly.
using Gradients = ModelParams;

/// Flat, entrywise view over one parameter tensor; `decay` marks tensors
/// subject to weight decay (weight matrices only — the embedding table and
/// all biases are exempt).
struct ParamBlock {
  const char* name;
  double* data;
  Index size;
  bool decay;
};

std::vector<ParamBlock> param_blocks(ModelParams& p);

struct ConstParamBlock {
  const char* name;
  const double* data;
  Index size;
  bool decay;
};

std::vector<ConstParamBlock> param_blocks(const ModelParams& p);

/// One recorded timestep of a teacher-forced forward pass.
struct StepTrace {
  int input_id = 0;   // label id fed at this step (START at t=1)
  Vec embed_in;       // embedding of input_id
  Vec in_gate, forget_gate, out_gate;  // sigmoid activations
  Vec cell_cand;      // relu cell candidate
  Vec state;          // r(t)
  Vec output;         // o(t) = out_gate .* r(t)
  Vec joint;          // shared-space embedding from o(t) and the image
  Vec scores;         // K+1 scores, masked entries = -inf
  Vec probs;          // softmax of scores, masked entries = exact 0
  Vec drop_state, drop_image;  // inverted-dropout masks; empty in inference
};

struct ForwardTrace {
  std::vector<int> targets;  // the label sequence, END last
  std::vector<StepTrace> steps;
};

enum class Mode { kInfer, kTrain };

/// Row `id` of the embedding table (0 <= id <= K+1).
Vec embed_label(Index id, const ModelParams& p);

struct LstmOut {
  Vec state;   // r(t)
  Vec output;  // o(t)
  Vec in_gate, forget_gate, out_gate;
  Vec cell_cand;
};

/// One recurrence step: three sigmoid gates, relu cell candidate,
/// r(t) = f .* r(t-1) + i .* cand, o(t) = out_gate .* r(t).
LstmOut lstm_step(const Vec& prev_state, const Vec& in, const ModelParams& p);

/// Projects the recurrent output and the image into the embedding space:
/// relu(proj_state * o + proj_image * image + proj_bias). The mask overloads
/// apply inverted-dropout masks to the two inputs first.
Vec joint_project(const Vec& output, const Vec& image, const ModelParams& p);
Vec joint_project(const Vec& output, const Vec& image, const ModelParams& p,
                  const Vec& mask_state, const Vec& mask_image);

/// Scores every label 0..K (END included, START excluded) against the joint
/// embedding; ids listed in `masked` are set to -inf.
Vec score_labels(const Vec& joint, const ModelParams& p, const std::vector<int>& masked);

/// Teacher-forced pass over a full label sequence (END-terminated, no
/// repeated real labels). Step t feeds the embedding of the previous label
/// (START at t=1) and scores with the START token plus all previously
/// consumed labels masked. In train mode, fresh dropout masks are drawn from
/// `rng` at every step.
ForwardTrace forward_sequence(const Vec& image, const std::vector<int>& seq,
                              const ModelParams& p, Mode mode,
                              double dropout_rate = 0.0, Rng* rng = nullptr);

/// Mean negative log-likelihood of the trace's own targets.
double trace_loss(const ForwardTrace& trace);

/// Exact gradients of trace_loss with respect to every parameter,
/// accumulated backward through time. Dropout masks recorded in the trace
/// are honored.
Gradients backward_sequence(const ForwardTrace& trace, const Vec& image, const ModelParams& p);

/// Central-difference verification of backward_sequence on a dropout-free
/// loss. Returns the max over parameter entries of
/// |analytic - numeric| / max(1e-7, |analytic| + |numeric|); the floor keeps
/// near-zero entries from amplifying double-precision FD noise.
double finite_diff_check(const Vec& image, const std::vector<int>& seq,
                         const ModelParams& p, double eps);

}  // namespace chainlabel

#endif  // CHAINLABEL_MODEL_HPP
