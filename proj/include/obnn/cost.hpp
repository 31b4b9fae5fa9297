#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obnn/compiler.hpp"
#include "obnn/model.hpp"

namespace obnn {

/// Analytic non-XOR cost of one CONV layer, taking an N-input popcount as N
/// gates. 1D: h1 positions, h2 input channels, g filters, kernel c.
std::int64_t conv1d_cost(std::int64_t h1, std::int64_t h2, std::int64_t g, std::int64_t c);
/// 2D: h1 x h2 positions, h3 input channels, g filters, o1 x o2 kernel.
std::int64_t conv2d_cost(std::int64_t h1, std::int64_t h2, std::int64_t h3, std::int64_t g,
                         std::int64_t o1, std::int64_t o2);

/// m CONV layers sharing a filter count and kernel, followed by an optional
/// pooling window (1 = none). 'same' padding keeps positions fixed inside a
/// subset.
struct ConvSubset {
  std::int64_t layers = 1;
  std::int64_t filters = 1;
  std::int64_t kernel_h = 1;
  std::int64_t kernel_w = 1;  // 2D only
  std::int64_t pool = 1;
  friend bool operator==(const ConvSubset&, const ConvSubset&) = default;
};

/// Input dims: 1D h1 x h2 (positions x channels), 2D h1 x h2 x h3.
struct ArchDescriptor {
  int dim = 1;
  std::int64_t h1 = 0;
  std::int64_t h2 = 0;
  std::int64_t h3 = 1;
  std::vector<ConvSubset> subsets;
  friend bool operator==(const ArchDescriptor&, const ArchDescriptor&) = default;
};

/// Input dims of one CONV layer, derived by chaining through the subsets.
struct LayerDims {
  std::size_t subset = 0;
  std::int64_t h1 = 0;
  std::int64_t h2 = 0;
  std::int64_t h3 = 1;
  std::int64_t filters = 0;
  std::int64_t kernel_h = 0;
  std::int64_t kernel_w = 1;
};

/// Throws ValidationError on non-positive parameters or pools that do not
/// divide the positions.
std::vector<LayerDims> layer_dims(const ArchDescriptor& arch);

struct LayerCostEntry {
  std::size_t layer = 0;
  std::size_t subset = 0;
  std::int64_t analytic = 0;
  std::optional<std::int64_t> measured;
};

struct CostReport {
  std::vector<LayerCostEntry> per_layer;
  std::vector<std::int64_t> subset_totals;
  std::int64_t total = 0;
};

CostReport model_cost(const ArchDescriptor& arch);

/// Fills `measured` with the popcount non-XOR count of each CONV layer of a
/// model compiled from the same architecture.
void attach_measured(CostReport& report, const IoMap& io);

/// Plan string for synth::random_model ("conv1d:g:c,...,pool:p,...").
std::string arch_plan(const ArchDescriptor& arch);
/// Input shape matching the architecture.
Shape arch_input(const ArchDescriptor& arch);
/// Groups a model's leading CONV layers into subsets split at pooling layers
/// and at filter/kernel changes. Stops at the first FC layer.
ArchDescriptor arch_from_model(const Model& model);

std::string arch_to_json(const ArchDescriptor& arch);
ArchDescriptor arch_from_json(const std::string& text);

enum class Move { kHalveKernel, kDoubleKernel, kAddLayer };
std::string to_string(Move move);
Move parse_move(const std::string& text);

struct Variant {
  std::string name;
  ArchDescriptor arch;
};

struct SkippedVariant {
  std::string name;
  std::string reason;
};

struct Exploration {
  std::vector<Variant> variants;
  std::vector<SkippedVariant> skipped;
};

/// Applies each move to every subset at once and then to each subset alone.
/// Kernel size and layer count are set by the move; filter counts are then
/// re-solved subset by subset so that every subset keeps its baseline cost
/// exactly, following the channel chain. A variant without an integer
/// solution is recorded in `skipped`. 1D kernels halve or double; 2D kernels
/// shrink or grow by one per axis.
Exploration enumerate_equal_cost_variants(const ArchDescriptor& arch, const std::vector<Move>& moves,
                                          std::size_t limit);

struct LinkReport {
  std::vector<std::size_t> unit_fan_in;  // Lv per weight row, all weighted layers
  std::int64_t dense = 0;                // sum of L over popcount instances
  std::int64_t sparse = 0;               // sum of Lv over popcount instances
  double saved_fraction = 0.0;
  std::int64_t projected_before = 0;  // LBA upper bound, dense
  std::int64_t projected_after = 0;   // LBA upper bound, pruned
};

/// Conv rows are weighted by their output position count.
LinkReport link_reduction_report(const Model& model);

}  // namespace obnn
