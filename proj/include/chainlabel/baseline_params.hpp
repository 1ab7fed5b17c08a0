#ifndef CHAINLABEL_BASELINE_PARAMS_HPP
#define CHAINLABEL_BASELINE_PARAMS_HPP

#include "chainlabel/numerics.hpp"

namespace chainlabel {

/// K independent logistic classifiers over image features.
struct BaselineParams {
  Mat weight;  // K x d_i
  Vec bias;    // K
};

}  // namespace chainlabel

#endif  // CHAINLABEL_BASELINE_PARAMS_HPP
