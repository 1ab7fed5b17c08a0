#include "chainlabel/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace chainlabel {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void Hyper::validate() const {
  if (vocab_size < 2) throw std::invalid_argument("hyper: vocab_size must be >= 2");
  if (embed_dim < 1 || state_dim < 1 || image_dim < 1) {
    throw std::invalid_argument("hyper: embed_dim, state_dim, image_dim must be >= 1");
  }
}

ModelParams ModelParams::zeros(const Hyper& h) {
  h.validate();
  ModelParams p;
  p.embed = Mat::Zero(h.vocab_size + 2, h.embed_dim);
  p.cell_rec = Mat::Zero(h.state_dim, h.state_dim);
  p.cell_in = Mat::Zero(h.state_dim, h.embed_dim);
  p.igate_rec = Mat::Zero(h.state_dim, h.state_dim);
  p.igate_in = Mat::Zero(h.state_dim, h.embed_dim);
  p.fgate_rec = Mat::Zero(h.state_dim, h.state_dim);
  p.fgate_in = Mat::Zero(h.state_dim, h.embed_dim);
  p.ogate_rec = Mat::Zero(h.state_dim, h.state_dim);
  p.ogate_in = Mat::Zero(h.state_dim, h.embed_dim);
  p.cell_bias = Vec::Zero(h.state_dim);
  p.igate_bias = Vec::Zero(h.state_dim);
  p.fgate_bias = Vec::Zero(h.state_dim);
  p.ogate_bias = Vec::Zero(h.state_dim);
  p.proj_state = Mat::Zero(h.embed_dim, h.state_dim);
  p.proj_image = Mat::Zero(h.embed_dim, h.image_dim);
  p.proj_bias = Vec::Zero(h.embed_dim);
  return p;
}

ModelParams ModelParams::init(const Hyper& h, Rng& rng) {
  ModelParams p = zeros(h);
  p.embed = glorot_init(h.vocab_size + 2, h.embed_dim, rng);
  p.cell_rec = glorot_init(h.state_dim, h.state_dim, rng);
  p.cell_in = glorot_init(h.state_dim, h.embed_dim, rng);
  p.igate_rec = glorot_init(h.state_dim, h.state_dim, rng);
  p.igate_in = glorot_init(h.state_dim, h.embed_dim, rng);
  p.fgate_rec = glorot_init(h.state_dim, h.state_dim, rng);
  p.fgate_in = glorot_init(h.state_dim, h.embed_dim, rng);
  p.ogate_rec = glorot_init(h.state_dim, h.state_dim, rng);
  p.ogate_in = glorot_init(h.state_dim, h.embed_dim, rng);
  p.proj_state = glorot_init(h.embed_dim, h.state_dim, rng);
  p.proj_image = glorot_init(h.embed_dim, h.image_dim, rng);
  p.fgate_bias.setOnes();  // retain state early in training
  return p;
}

Hyper ModelParams::hyper() const {
  Hyper h;
  h.vocab_size = embed.rows() - 2;
  h.embed_dim = embed.cols();
  h.state_dim = cell_rec.rows();
  h.image_dim = proj_image.cols();
  return h;
}

void ModelParams::validate(const Hyper& h) const {
  h.validate();
  auto check = [](const char* name, bool ok) {
    if (!ok) throw std::invalid_argument(std::string("params: bad shape for ") + name);
  };
  check("embed", embed.rows() == h.vocab_size + 2 && embed.cols() == h.embed_dim);
  check("cell_rec", cell_rec.rows() == h.state_dim && cell_rec.cols() == h.state_dim);
  check("cell_in", cell_in.rows() == h.state_dim && cell_in.cols() == h.embed_dim);
  check("igate_rec", igate_rec.rows() == h.state_dim && igate_rec.cols() == h.state_dim);
  check("igate_in", igate_in.rows() == h.state_dim && igate_in.cols() == h.embed_dim);
  check("fgate_rec", fgate_rec.rows() == h.state_dim && fgate_rec.cols() == h.state_dim);
  check("fgate_in", fgate_in.rows() == h.state_dim && fgate_in.cols() == h.embed_dim);
  check("ogate_rec", ogate_rec.rows() == h.state_dim && ogate_rec.cols() == h.state_dim);
  check("ogate_in", ogate_in.rows() == h.state_dim && ogate_in.cols() == h.embed_dim);
  check("cell_bias", cell_bias.size() == h.state_dim);
  check("igate_bias", igate_bias.size() == h.state_dim);
  check("fgate_bias", fgate_bias.size() == h.state_dim);
  check("ogate_bias", ogate_bias.size() == h.state_dim);
  check("proj_state", proj_state.rows() == h.embed_dim && proj_state.cols() == h.state_dim);
  check("proj_image", proj_image.rows() == h.embed_dim && proj_image.cols() == h.image_dim);
  check("proj_bias", proj_bias.size() == h.embed_dim);
  ModelParams& self = const_cast<ModelParams&>(*this);
  for (const auto& b : param_blocks(self)) {
    for (Index i = 0; i < b.size; ++i) {
      if (!std::isfinite(b.data[i])) {
        throw std::invalid_argument(std::string("params: non-finite entry in ") + b.name);
      }
    }
  }
}

std::vector<ParamBlock> param_blocks(ModelParams& p) {
  return {
      {"embed", p.embed.data(), p.embed.size(), false},
      {"cell_rec", p.cell_rec.data(), p.cell_rec.size(), true},
      {"cell_in", p.cell_in.data(), p.cell_in.size(), true},
      {"igate_rec", p.igate_rec.data(), p.igate_rec.size(), true},
      {"igate_in", p.igate_in.data(), p.igate_in.size(), true},
      {"fgate_rec", p.fgate_rec.data(), p.fgate_rec.size(), true},
      {"fgate_in", p.fgate_in.data(), p.fgate_in.size(), true},
      {"ogate_rec", p.ogate_rec.data(), p.ogate_rec.size(), true},
      {"ogate_in", p.ogate_in.data(), p.ogate_in.size(), true},
      {"cell_bias", p.cell_bias.data(), p.cell_bias.size(), false},
      {"igate_bias", p.igate_bias.data(), p.igate_bias.size(), false},
      {"fgate_bias", p.fgate_bias.data(), p.fgate_bias.size(), false},
      {"ogate_bias", p.ogate_bias.data(), p.ogate_bias.size(), false},
      {"proj_state", p.proj_state.data(), p.proj_state.size(), true},
      {"proj_image", p.proj_image.data(), p.proj_image.size(), true},
      {"proj_bias", p.proj_bias.data(), p.proj_bias.size(), false},
  };
}

std::vector<ConstParamBlock> param_blocks(const ModelParams& p) {
  std::vector<ConstParamBlock> out;
  auto blocks = param_blocks(const_cast<ModelParams&>(p));
  out.reserve(blocks.size());
  for (const auto& b : blocks) {
    out.push_back({b.name, b.data, b.size, b.decay});
  }
  return out;
}

Vec embed_label(Index id, const ModelParams& p) {
  if (id < 0 || id >= p.embed.rows()) {
    throw std::invalid_argument("embed_label: id out of range");
  }
  return p.embed.row(id).transpose();
}

LstmOut lstm_step(const Vec& prev_state, const Vec& in, const ModelParams& p) {
  if (prev_state.size() != p.cell_rec.cols() || in.size() != p.cell_in.cols()) {
    throw std::invalid_argument("lstm_step: shape mismatch");
  }
  LstmOut out;
  out.cell_cand = relu(p.cell_rec * prev_state + p.cell_in * in + p.cell_bias);
  out.in_gate = sigmoid(p.igate_rec * prev_state + p.igate_in * in + p.igate_bias);
  out.forget_gate = sigmoid(p.fgate_rec * prev_state + p.fgate_in * in + p.fgate_bias);
  out.out_gate = sigmoid(p.ogate_rec * prev_state + p.ogate_in * in + p.ogate_bias);
  out.state = out.forget_gate.cwiseProduct(prev_state) + out.in_gate.cwiseProduct(out.cell_cand);
  out.output = out.out_gate.cwiseProduct(out.state);
  return out;
}

Vec joint_project(const Vec& output, const Vec& image, const ModelParams& p) {
  if (output.size() != p.proj_state.cols() || image.size() != p.proj_image.cols()) {
    throw std::invalid_argument("joint_project: shape mismatch");
  }
  return relu(p.proj_state * output + p.proj_image * image + p.proj_bias);
}

Vec joint_project(const Vec& output, const Vec& image, const ModelParams& p,
                  const Vec& mask_state, const Vec& mask_image) {
  if (mask_state.size() != output.size() || mask_image.size() != image.size()) {
    throw std::invalid_argument("joint_project: mask shape mismatch");
  }
  return joint_project(mask_state.cwiseProduct(output).eval(),
                       mask_image.cwiseProduct(image).eval(), p);
}

Vec score_labels(const Vec& joint, const ModelParams& p, const std::vector<int>& masked) {
  if (joint.size() != p.embed.cols()) {
    throw std::invalid_argument("score_labels: shape mismatch");
  }
  const Index scorable = p.embed.rows() - 1;  // labels 0..K, START excluded
  Vec scores = p.embed.topRows(scorable) * joint;
  for (int id : masked) {
    if (id < 0 || id >= scorable) {
      throw std::invalid_argument("score_labels: masked id out of range");
    }
    scores[id] = kNegInf;
  }
  if (scores.maxCoeff() == kNegInf) {
    throw std::invalid_argument("empty support");
  }
  return scores;
}

namespace {

Vec draw_dropout_mask(Index n, double keep, Rng& rng) {
  Vec m(n);
  const double scale = 1.0 / keep;
  for (Index i = 0; i < n; ++i) {
    m[i] = rng.bernoulli(keep) ? scale : 0.0;
  }
  return m;
}

void validate_sequence(const std::vector<int>& seq, Index vocab_size, Index end_id) {
  if (seq.empty()) throw std::invalid_argument("forward_sequence: empty label sequence");
  if (seq.back() != end_id) throw std::invalid_argument("forward_sequence: sequence must end in END");
  std::unordered_set<int> seen;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
    const int id = seq[i];
    if (id == end_id) throw std::invalid_argument("forward_sequence: END not last");
    if (id < 0 || id >= vocab_size) {
      throw std::invalid_argument("forward_sequence: label id out of range");
    }
    if (!seen.insert(id).second) {
      throw std::invalid_argument("forward_sequence: repeated label in sequence");
    }
  }
}

}  // namespace

ForwardTrace forward_sequence(const Vec& image, const std::vector<int>& seq,
                              const ModelParams& p, Mode mode,
                              double dropout_rate, Rng* rng) {
  const Hyper h = p.hyper();
  validate_sequence(seq, h.vocab_size, h.end_id());
  if (image.size() != h.image_dim) {
    throw std::invalid_argument("forward_sequence: image dim mismatch");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("forward_sequence: dropout_rate must be in [0, 1)");
  }
  const bool use_dropout = mode == Mode::kTrain && dropout_rate > 0.0;
  if (use_dropout && rng == nullptr) {
    throw std::invalid_argument("forward_sequence: dropout requires an rng");
  }

  ForwardTrace trace;
  trace.targets = seq;
  trace.steps.reserve(seq.size());

  Vec state = Vec::Zero(h.state_dim);
  std::vector<int> masked;  // START plus consumed labels
  masked.reserve(seq.size());

  for (std::size_t t = 0; t < seq.size(); ++t) {
    StepTrace st;
    st.input_id = t == 0 ? static_cast<int>(h.start_id()) : seq[t - 1];
    st.embed_in = embed_label(st.input_id, p);

    LstmOut step = lstm_step(state, st.embed_in, p);
    st.cell_cand = std::move(step.cell_cand);
    st.in_gate = std::move(step.in_gate);
    st.forget_gate = std::move(step.forget_gate);
    st.out_gate = std::move(step.out_gate);
    st.state = std::move(step.state);
    st.output = std::move(step.output);

    if (use_dropout) {
      const double keep = 1.0 - dropout_rate;
      st.drop_state = draw_dropout_mask(h.state_dim, keep, *rng);
      st.drop_image = draw_dropout_mask(h.image_dim, keep, *rng);
      st.joint = joint_project(st.output, image, p, st.drop_state, st.drop_image);
    } else {
      st.joint = joint_project(st.output, image, p);
    }

    st.scores = score_labels(st.joint, p, masked);
    st.probs = softmax(st.scores);
    check_prob_vector(st.probs);

    state = st.state;
    if (t + 1 < seq.size()) masked.push_back(seq[t]);
    trace.steps.push_back(std::move(st));
  }
  return trace;
}

double trace_loss(const ForwardTrace& trace) {
  if (trace.steps.empty() || trace.steps.size() != trace.targets.size()) {
    throw std::invalid_argument("trace_loss: trace/target length mismatch");
  }
  double nll = 0.0;
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    nll -= std::log(trace.steps[t].probs[trace.targets[t]]);
  }
  return nll / static_cast<double>(trace.steps.size());
}

Gradients backward_sequence(const ForwardTrace& trace, const Vec& image, const ModelParams& p) {
  const Hyper h = p.hyper();
  if (trace.steps.empty() || trace.steps.size() != trace.targets.size()) {
    throw std::invalid_argument("backward_sequence: trace/target length mismatch");
  }
  if (image.size() != h.image_dim) {
    throw std::invalid_argument("backward_sequence: image dim mismatch");
  }
  for (const auto& st : trace.steps) {
    if (st.state.size() != h.state_dim || st.joint.size() != h.embed_dim ||
        st.scores.size() != h.vocab_size + 1) {
      throw std::invalid_argument("backward_sequence: trace/params shape mismatch");
    }
  }

  Gradients g = ModelParams::zeros(h);
  const double inv_t = 1.0 / static_cast<double>(trace.steps.size());
  const Index scorable = h.vocab_size + 1;

  Vec d_state_next = Vec::Zero(h.state_dim);  // dL/dr(t) from steps after t
  for (std::size_t ti = trace.steps.size(); ti-- > 0;) {
    const StepTrace& st = trace.steps[ti];
    const Vec r_prev = ti == 0 ? Vec(Vec::Zero(h.state_dim)) : trace.steps[ti - 1].state;

    // Softmax cross-entropy: masked entries carry exact-zero probability and
    // are never targets, so their score gradient is exactly 0.
    Vec d_scores = st.probs;
    d_scores[trace.targets[ti]] -= 1.0;
    d_scores *= inv_t;

    g.embed.topRows(scorable) += d_scores * st.joint.transpose();
    Vec d_joint = p.embed.topRows(scorable).transpose() * d_scores;

    // joint = relu(z)
    Vec d_z = (st.joint.array() > 0.0).select(d_joint.array(), 0.0).matrix();

    const bool dropped = st.drop_state.size() > 0;
    const Vec masked_out = dropped ? Vec(st.drop_state.cwiseProduct(st.output)) : st.output;
    const Vec masked_img = dropped ? Vec(st.drop_image.cwiseProduct(image)) : image;
    g.proj_state += d_z * masked_out.transpose();
    g.proj_image += d_z * masked_img.transpose();
    g.proj_bias += d_z;

    Vec d_output = p.proj_state.transpose() * d_z;
    if (dropped) d_output = d_output.cwiseProduct(st.drop_state);

    // o = out_gate .* r
    const Vec d_ogate = d_output.cwiseProduct(st.state);
    Vec d_state = d_state_next + d_output.cwiseProduct(st.out_gate);

    // r = forget .* r_prev + in .* cand
    const Vec d_fgate = d_state.cwiseProduct(r_prev);
    const Vec d_igate = d_state.cwiseProduct(st.cell_cand);
    const Vec d_cand = d_state.cwiseProduct(st.in_gate);
    Vec d_state_prev = d_state.cwiseProduct(st.forget_gate);

    // Pre-activation gradients; relu'(x) read off the stored activation.
    const Vec da_o = d_ogate.cwiseProduct(st.out_gate.cwiseProduct((1.0 - st.out_gate.array()).matrix()));
    const Vec da_f = d_fgate.cwiseProduct(st.forget_gate.cwiseProduct((1.0 - st.forget_gate.array()).matrix()));
    const Vec da_i = d_igate.cwiseProduct(st.in_gate.cwiseProduct((1.0 - st.in_gate.array()).matrix()));
    const Vec da_c = (st.cell_cand.array() > 0.0).select(d_cand.array(), 0.0).matrix();

    g.ogate_rec += da_o * r_prev.transpose();
    g.ogate_in += da_o * st.embed_in.transpose();
    g.ogate_bias += da_o;
    g.fgate_rec += da_f * r_prev.transpose();
    g.fgate_in += da_f * st.embed_in.transpose();
    g.fgate_bias += da_f;
    g.igate_rec += da_i * r_prev.transpose();
    g.igate_in += da_i * st.embed_in.transpose();
    g.igate_bias += da_i;
    g.cell_rec += da_c * r_prev.transpose();
    g.cell_in += da_c * st.embed_in.transpose();
    g.cell_bias += da_c;

    d_state_prev += p.ogate_rec.transpose() * da_o + p.fgate_rec.transpose() * da_f +
                    p.igate_rec.transpose() * da_i + p.cell_rec.transpose() * da_c;

    const Vec d_embed_in = p.ogate_in.transpose() * da_o + p.fgate_in.transpose() * da_f +
                           p.igate_in.transpose() * da_i + p.cell_in.transpose() * da_c;
    g.embed.row(st.input_id) += d_embed_in.transpose();

    d_state_next = std::move(d_state_prev);
  }
  return g;
}

double finite_diff_check(const Vec& image, const std::vector<int>& seq,
                         const ModelParams& p, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("finite_diff_check: eps must be > 0");

  ModelParams work = p;
  const auto loss_at = [&]() {
    return trace_loss(forward_sequence(image, seq, work, Mode::kInfer));
  };

  Gradients analytic = backward_sequence(forward_sequence(image, seq, work, Mode::kInfer),
                                         image, work);

  double worst = 0.0;
  auto grad_blocks = param_blocks(analytic);
  auto work_blocks = param_blocks(work);
  for (std::size_t b = 0; b < work_blocks.size(); ++b) {
    for (Index i = 0; i < work_blocks[b].size; ++i) {
      double& theta = work_blocks[b].data[i];
      const double saved = theta;
      theta = saved + eps;
      const double up = loss_at();
      theta = saved - eps;
      const double down = loss_at();
      theta = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = grad_blocks[b].data[i];
      // The guard floor sits at the central-difference noise scale,
      // ulp(loss)/(2*eps) ~ 1e-11, divided by the 1e-4 tolerance: entries
      // smaller than 1e-7 are compared on that absolute scale instead of
      // drowning in roundoff.
      const double rel = std::abs(a - numeric) / std::max(1e-7, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace chainlabel
