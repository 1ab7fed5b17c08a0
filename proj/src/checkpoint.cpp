#include "chainlabel/checkpoint.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace chainlabel {

using nlohmann::json;

namespace {

json matrix_to_json(const Mat& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      data.push_back(m(r, c));
    }
  }
  j["data"] = std::move(data);
  return j;
}

json vector_to_json(const Vec& v) {
  Mat m(v.size(), 1);
  m.col(0) = v;
  return matrix_to_json(m);
}

Mat matrix_from_json(const json& j, const char* name, Index rows, Index cols) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw std::runtime_error(std::string("checkpoint: malformed tensor ") + name);
  }
  if (j["rows"].get<Index>() != rows || j["cols"].get<Index>() != cols) {
    throw std::runtime_error(std::string("checkpoint: shape mismatch for ") + name);
  }
  const auto& data = j["data"];
  if (static_cast<Index>(data.size()) != rows * cols) {
    throw std::runtime_error(std::string("checkpoint: data length mismatch for ") + name);
  }
  Mat m(rows, cols);
  std::size_t k = 0;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c, ++k) {
      if (!data[k].is_number()) {
        throw std::runtime_error(std::string("checkpoint: non-finite value in ") + name);
      }
      const double v = data[k].get<double>();
      if (!std::isfinite(v)) {
        throw std::runtime_error(std::string("checkpoint: non-finite value in ") + name);
      }
      m(r, c) = v;
    }
  }
  return m;
}

Vec vector_from_json(const json& j, const char* name, Index size) {
  return matrix_from_json(j, name, size, 1).col(0);
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  json j;
  j["format_version"] = ck.format_version;
  j["hyper"] = {{"vocab_size", ck.hyper.vocab_size},
                {"embed_dim", ck.hyper.embed_dim},
                {"state_dim", ck.hyper.state_dim},
                {"image_dim", ck.hyper.image_dim}};
  j["vocab"] = ck.vocab;
  j["label_order"] = ck.label_order;
  if (ck.params) {
    const ModelParams& p = *ck.params;
    json params;
    params["embed"] = matrix_to_json(p.embed);
    params["cell_rec"] = matrix_to_json(p.cell_rec);
    params["cell_in"] = matrix_to_json(p.cell_in);
    params["igate_rec"] = matrix_to_json(p.igate_rec);
    params["igate_in"] = matrix_to_json(p.igate_in);
    params["fgate_rec"] = matrix_to_json(p.fgate_rec);
    params["fgate_in"] = matrix_to_json(p.fgate_in);
    params["ogate_rec"] = matrix_to_json(p.ogate_rec);
    params["ogate_in"] = matrix_to_json(p.ogate_in);
    params["cell_bias"] = vector_to_json(p.cell_bias);
    params["igate_bias"] = vector_to_json(p.igate_bias);
    params["fgate_bias"] = vector_to_json(p.fgate_bias);
    params["ogate_bias"] = vector_to_json(p.ogate_bias);
    params["proj_state"] = matrix_to_json(p.proj_state);
    params["proj_image"] = matrix_to_json(p.proj_image);
    params["proj_bias"] = vector_to_json(p.proj_bias);
    j["params"] = std::move(params);
  }
  if (ck.baseline) {
    json bp;
    bp["weight"] = matrix_to_json(ck.baseline->weight);
    bp["bias"] = vector_to_json(ck.baseline->bias);
    j["baseline_params"] = std::move(bp);
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open checkpoint file for writing: " + path);
  }
  out << j.dump() << "\n";
}

namespace {

Checkpoint parse_checkpoint(const json& j) {
  Checkpoint ck;
  ck.format_version = j.value("format_version", 0);
  if (ck.format_version != 1) {
    throw std::runtime_error("checkpoint: unsupported format_version");
  }
  const auto& hj = j.at("hyper");
  ck.hyper.vocab_size = hj.at("vocab_size").get<Index>();
  ck.hyper.embed_dim = hj.at("embed_dim").get<Index>();
  ck.hyper.state_dim = hj.at("state_dim").get<Index>();
  ck.hyper.image_dim = hj.at("image_dim").get<Index>();
  ck.hyper.validate();
  ck.vocab = j.at("vocab").get<std::vector<std::string>>();
  if (static_cast<Index>(ck.vocab.size()) != ck.hyper.vocab_size) {
    throw std::runtime_error("checkpoint: vocab length disagrees with hyper");
  }
  ck.label_order = j.value("label_order", std::vector<int>{});
  const Hyper& h = ck.hyper;
  if (j.contains("params")) {
    const auto& pj = j["params"];
    ModelParams p;
    p.embed = matrix_from_json(pj.at("embed"), "embed", h.vocab_size + 2, h.embed_dim);
    p.cell_rec = matrix_from_json(pj.at("cell_rec"), "cell_rec", h.state_dim, h.state_dim);
    p.cell_in = matrix_from_json(pj.at("cell_in"), "cell_in", h.state_dim, h.embed_dim);
    p.igate_rec = matrix_from_json(pj.at("igate_rec"), "igate_rec", h.state_dim, h.state_dim);
    p.igate_in = matrix_from_json(pj.at("igate_in"), "igate_in", h.state_dim, h.embed_dim);
    p.fgate_rec = matrix_from_json(pj.at("fgate_rec"), "fgate_rec", h.state_dim, h.state_dim);
    p.fgate_in = matrix_from_json(pj.at("fgate_in"), "fgate_in", h.state_dim, h.embed_dim);
    p.ogate_rec = matrix_from_json(pj.at("ogate_rec"), "ogate_rec", h.state_dim, h.state_dim);
    p.ogate_in = matrix_from_json(pj.at("ogate_in"), "ogate_in", h.state_dim, h.embed_dim);
    p.cell_bias = vector_from_json(pj.at("cell_bias"), "cell_bias", h.state_dim);
    p.igate_bias = vector_from_json(pj.at("igate_bias"), "igate_bias", h.state_dim);
    p.fgate_bias = vector_from_json(pj.at("fgate_bias"), "fgate_bias", h.state_dim);
    p.ogate_bias = vector_from_json(pj.at("ogate_bias"), "ogate_bias", h.state_dim);
    p.proj_state = matrix_from_json(pj.at("proj_state"), "proj_state", h.embed_dim, h.state_dim);
    p.proj_image = matrix_from_json(pj.at("proj_image"), "proj_image", h.embed_dim, h.image_dim);
    p.proj_bias = vector_from_json(pj.at("proj_bias"), "proj_bias", h.embed_dim);
    p.validate(h);
    ck.params = std::move(p);
  }
  if (j.contains("baseline_params")) {
    const auto& bj = j["baseline_params"];
    BaselineParams bp;
    bp.weight = matrix_from_json(bj.at("weight"), "baseline weight", h.vocab_size, h.image_dim);
    bp.bias = vector_from_json(bj.at("bias"), "baseline bias", h.vocab_size);
    ck.baseline = std::move(bp);
  }
  if (!ck.params && !ck.baseline) {
    throw std::runtime_error("checkpoint: neither params nor baseline_params present");
  }
  return ck;
}

}  // namespace

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint file: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: invalid JSON: " + std::string(e.what()));
  }
  try {
    return parse_checkpoint(j);
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: malformed document: " + std::string(e.what()));
  }
}

}  // namespace chainlabel
