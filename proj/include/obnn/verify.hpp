#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obnn/model.hpp"
#include "obnn/obc.hpp"

namespace obnn {

struct Mismatch {
  ObcKind obc = ObcKind::kLayerwiseAccum;
  std::size_t trial = 0;
  std::string stage;  // "compiled" or "garbled"
  std::size_t layer = 0;
  std::size_t unit = 0;
  std::string where;  // unit coordinates, e.g. "position 3, channel 1"
};

struct VerifyReport {
  std::size_t trials = 0;
  std::size_t checks = 0;
  std::vector<Mismatch> mismatches;
  bool passed() const { return mismatches.empty(); }
};

struct VerifyOptions {
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  std::vector<ObcKind> kinds{std::begin(kAllObcKinds), std::end(kAllObcKinds)};
  /// Fault injection: compile with the first BN_SIGN threshold inverted.
  bool corrupt_threshold = false;
  /// Stop recording after this many mismatches.
  std::size_t max_mismatches = 16;
};

/// Checks, per trial and OBC kind, that every BN_SIGN / MAXPOOL activation and
/// class score of the compiled circuit equals the reference inference, and
/// that the garbled evaluation decodes to the same scores.
VerifyReport verify_model(const Model& model, const VerifyOptions& opts);

/// Human-readable position of a flat activation index.
std::string unit_coordinates(const Shape& shape, std::size_t index);

}  // namespace obnn
