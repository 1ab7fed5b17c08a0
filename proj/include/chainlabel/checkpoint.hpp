#ifndef CHAINLABEL_CHECKPOINT_HPP
#define CHAINLABEL_CHECKPOINT_HPP

#include "chainlabel/baseline_params.hpp"
#include "chainlabel/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace chainlabel {

/// On-disk model bundle. A file carries the recurrent head under "params",
/// the independent-logistic comparison model under "baseline_params", or
/// both. Matrices are stored row-major; loading re-validates every shape
/// against "hyper" and rejects non-finite values.
struct Checkpoint {
  int format_version = 1;
  Hyper hyper;
  std::vector<std::string> vocab;      // real label strings in id order
  std::vector<int> label_order;        // training-frequency order of ids
  std::optional<ModelParams> params;
  std::optional<BaselineParams> baseline;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace chainlabel

#endif  // CHAINLABEL_CHECKPOINT_HPP
