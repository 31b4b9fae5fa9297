#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "obnn/model.hpp"

namespace obnn {

/// Layer plan for synthetic models. Weighted hidden layers get a BN_SIGN
/// appended automatically.
///   conv1d:<filters>:<kernel>[:<stride>[:same|valid]]
///   conv2d:<filters>:<kh>:<kw>[:<stride>[:same|valid]]
///   fc:<units>   pool:<window>   out:<classes>
struct PlanStep {
  LayerKind kind = LayerKind::kFc;
  std::uint32_t a = 0;  // filters / units / window / classes
  std::uint32_t kh = 0;
  std::uint32_t kw = 0;
  std::uint32_t stride = 1;
  Padding padding = Padding::kSame;
};

/// Parses "16x2" (1D) or "8x8x1" (2D).
Shape parse_shape(std::string_view text);
/// Comma separated steps, e.g. "conv1d:4:3,pool:2,fc:16,out:3".
std::vector<PlanStep> parse_plan(std::string_view text);

/// Deterministic random ternary model. Each weight is zero with probability
/// `sparsity` (every row keeps at least one nonzero); thresholds are uniform
/// in [0, Lv + 1].
Model random_model(const Shape& input, const std::vector<PlanStep>& plan, double sparsity,
                   std::uint64_t seed);

/// Uniform random encoded input for a model.
Bits random_input(const Model& model, std::uint64_t seed);

}  // namespace obnn
