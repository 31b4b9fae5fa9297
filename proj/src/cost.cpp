#include "obnn/cost.hpp"

#include <nlohmann/json.hpp>

#include "obnn/error.hpp"

namespace obnn {

std::int64_t conv1d_cost(std::int64_t h1, std::int64_t h2, std::int64_t g, std::int64_t c) {
  return h1 * g * c * h2;
}

std::int64_t conv2d_cost(std::int64_t h1, std::int64_t h2, std::int64_t h3, std::int64_t g,
                         std::int64_t o1, std::int64_t o2) {
  return h1 * h2 * g * h3 * o1 * o2;
}

std::vector<LayerDims> layer_dims(const ArchDescriptor& arch) {
  if (arch.dim != 1 && arch.dim != 2) throw ValidationError("arch: dim must be 1 or 2");
  if (arch.h1 < 1 || arch.h2 < 1 || arch.h3 < 1) throw ValidationError("arch: input dims must be >= 1");
  std::vector<LayerDims> out;
  std::int64_t h1 = arch.h1;
  std::int64_t h2 = arch.h2;
  std::int64_t ch = arch.dim == 1 ? arch.h2 : arch.h3;
  for (std::size_t z = 0; z < arch.subsets.size(); ++z) {
    const ConvSubset& s = arch.subsets[z];
    const std::string where = "arch subset " + std::to_string(z) + ": ";
    if (s.layers < 1 || s.filters < 1 || s.kernel_h < 1 || s.kernel_w < 1 || s.pool < 1) {
      throw ValidationError(where + "parameters must be >= 1");
    }
    for (std::int64_t m = 0; m < s.layers; ++m) {
      LayerDims d;
      d.subset = z;
      d.h1 = h1;
      d.h2 = arch.dim == 1 ? ch : h2;
      d.h3 = arch.dim == 1 ? 1 : ch;
      d.filters = s.filters;
      d.kernel_h = s.kernel_h;
      d.kernel_w = arch.dim == 1 ? 1 : s.kernel_w;
      out.push_back(d);
      ch = s.filters;
    }
    if (h1 % s.pool != 0 || (arch.dim == 2 && h2 % s.pool != 0)) {
      throw ValidationError(where + "pool " + std::to_string(s.pool) + " does not divide positions");
    }
    h1 /= s.pool;
    if (arch.dim == 2) h2 /= s.pool;
  }
  return out;
}

namespace {

std::int64_t layer_cost(int dim, const LayerDims& d) {
  return dim == 1 ? conv1d_cost(d.h1, d.h2, d.filters, d.kernel_h)
                  : conv2d_cost(d.h1, d.h2, d.h3, d.filters, d.kernel_h, d.kernel_w);
}

}  // namespace

CostReport model_cost(const ArchDescriptor& arch) {
  const std::vector<LayerDims> dims = layer_dims(arch);
  CostReport r;
  r.subset_totals.assign(arch.subsets.size(), 0);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const std::int64_t c = layer_cost(arch.dim, dims[i]);
    r.per_layer.push_back(LayerCostEntry{i, dims[i].subset, c, std::nullopt});
    r.subset_totals[dims[i].subset] += c;
    r.total += c;
  }
  return r;
}

void attach_measured(CostReport& report, const IoMap& io) {
  std::size_t k = 0;
  for (const LayerCost& l : io.layers) {
    if (l.kind != LayerKind::kConv1d && l.kind != LayerKind::kConv2d) continue;
    if (k >= report.per_layer.size()) throw ValidationError("attach_measured: more CONV layers than the report");
    report.per_layer[k++].measured = l.popcount;
  }
  if (k != report.per_layer.size()) throw ValidationError("attach_measured: CONV layer count differs");
}

std::string arch_plan(const ArchDescriptor& arch) {
  layer_dims(arch);
  std::string plan;
  auto add = [&](const std::string& step) {
    if (!plan.empty()) plan += ',';
    plan += step;
  };
  for (const ConvSubset& s : arch.subsets) {
    for (std::int64_t m = 0; m < s.layers; ++m) {
      if (arch.dim == 1) {
        add("conv1d:" + std::to_string(s.filters) + ":" + std::to_string(s.kernel_h) + ":1:same");
      } else {
        add("conv2d:" + std::to_string(s.filters) + ":" + std::to_string(s.kernel_h) + ":" +
            std::to_string(s.kernel_w) + ":1:same");
      }
    }
    if (s.pool > 1) add("pool:" + std::to_string(s.pool));
  }
  return plan;
}

Shape arch_input(const ArchDescriptor& arch) {
  Shape s;
  s.dim = arch.dim;
  s.h1 = static_cast<std::uint32_t>(arch.h1);
  s.h2 = static_cast<std::uint32_t>(arch.h2);
  s.h3 = arch.dim == 1 ? 1 : static_cast<std::uint32_t>(arch.h3);
  return s;
}

ArchDescriptor arch_from_model(const Model& model) {
  validate(model);
  ArchDescriptor a;
  a.dim = model.input.dim;
  a.h1 = model.input.h1;
  a.h2 = model.input.h2;
  a.h3 = model.input.dim == 1 ? 1 : model.input.h3;
  bool open = false;  // the last subset can still take CONV layers
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& l = model.layers[i];
    if (l.kind == LayerKind::kFc || l.kind == LayerKind::kOutput) break;
    if (l.kind == LayerKind::kMaxPool) {
      if (a.subsets.empty()) throw ValidationError("arch_from_model: pooling before any CONV layer");
      a.subsets.back().pool *= l.pool;
      open = false;
      continue;
    }
    if (l.kind != LayerKind::kConv1d && l.kind != LayerKind::kConv2d) continue;
    if (l.stride != 1 || l.padding != Padding::kSame) {
      throw ValidationError("arch_from_model: layer " + std::to_string(i) +
                            ": only stride 1 'same' convolutions fit the cost model");
    }
    ConvSubset s;
    s.filters = l.filters;
    s.kernel_h = l.kernel_h;
    s.kernel_w = l.kind == LayerKind::kConv2d ? l.kernel_w : 1;
    if (open && a.subsets.back().filters == s.filters && a.subsets.back().kernel_h == s.kernel_h &&
        a.subsets.back().kernel_w == s.kernel_w) {
      ++a.subsets.back().layers;
    } else {
      a.subsets.push_back(s);
      open = true;
    }
  }
  layer_dims(a);
  return a;
}

std::string arch_to_json(const ArchDescriptor& arch) {
  nlohmann::json subsets = nlohmann::json::array();
  for (const ConvSubset& s : arch.subsets) {
    nlohmann::json kernel = arch.dim == 1 ? nlohmann::json::array({s.kernel_h})
                                          : nlohmann::json::array({s.kernel_h, s.kernel_w});
    subsets.push_back({{"layers", s.layers}, {"filters", s.filters}, {"kernel", kernel}, {"pool", s.pool}});
  }
  nlohmann::json input = arch.dim == 1 ? nlohmann::json::array({arch.h1, arch.h2})
                                       : nlohmann::json::array({arch.h1, arch.h2, arch.h3});
  nlohmann::json j = {{"dim", arch.dim}, {"input", input}, {"subsets", subsets}, {"plan", arch_plan(arch)}};
  return j.dump();
}

ArchDescriptor arch_from_json(const std::string& text) {
  ArchDescriptor a;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    a.dim = j.at("dim").get<int>();
    const auto& in = j.at("input");
    if (in.size() != static_cast<std::size_t>(a.dim + 1)) throw ParseError("arch: input needs dim + 1 entries");
    a.h1 = in.at(0).get<std::int64_t>();
    a.h2 = in.at(1).get<std::int64_t>();
    if (a.dim == 2) a.h3 = in.at(2).get<std::int64_t>();
    for (const auto& s : j.at("subsets")) {
      ConvSubset c;
      c.layers = s.value("layers", std::int64_t{1});
      c.filters = s.at("filters").get<std::int64_t>();
      const auto& k = s.at("kernel");
      if (k.size() != static_cast<std::size_t>(a.dim)) throw ParseError("arch: kernel needs dim entries");
      c.kernel_h = k.at(0).get<std::int64_t>();
      if (a.dim == 2) c.kernel_w = k.at(1).get<std::int64_t>();
      c.pool = s.value("pool", std::int64_t{1});
      a.subsets.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("arch json: ") + e.what());
  }
  layer_dims(a);
  return a;
}

std::string to_string(Move move) {
  switch (move) {
    case Move::kHalveKernel: return "halve_kernel";
    case Move::kDoubleKernel: return "double_kernel";
    case Move::kAddLayer: return "add_layer";
  }
  return "?";
}

Move parse_move(const std::string& text) {
  for (Move m : {Move::kHalveKernel, Move::kDoubleKernel, Move::kAddLayer}) {
    if (text == to_string(m)) return m;
  }
  throw ParseError("unknown move '" + text + "'");
}

namespace {

/// Cost of a subset with m layers of g filters fed by `ch` channels.
std::int64_t subset_cost(std::int64_t positions, std::int64_t kernel, std::int64_t m, std::int64_t ch,
                         std::int64_t g) {
  return positions * kernel * g * (ch + (m - 1) * g);
}

/// Smallest g >= 1 with subset_cost == target, if one exists. The cost is
/// strictly increasing in g.
std::optional<std::int64_t> solve_filters(std::int64_t positions, std::int64_t kernel, std::int64_t m,
                                          std::int64_t ch, std::int64_t target) {
  std::int64_t lo = 1;
  std::int64_t hi = 1;
  while (subset_cost(positions, kernel, m, ch, hi) < target) {
    hi *= 2;
    if (hi > (std::int64_t{1} << 31)) return std::nullopt;
  }
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (subset_cost(positions, kernel, m, ch, mid) < target) lo = mid + 1;
    else hi = mid;
  }
  if (subset_cost(positions, kernel, m, ch, lo) != target) return std::nullopt;
  return lo;
}

/// Applies a move to one subset's shape; returns a reason when it cannot.
std::optional<std::string> apply_move(int dim, Move move, ConvSubset& s) {
  switch (move) {
    case Move::kHalveKernel:
      if (dim == 1) {
        if (s.kernel_h % 2 != 0) return "kernel " + std::to_string(s.kernel_h) + " is odd";
        s.kernel_h /= 2;
      } else {
        if (s.kernel_h < 2 || s.kernel_w < 2) return "kernel already 1 on an axis";
        --s.kernel_h;
        --s.kernel_w;
      }
      return std::nullopt;
    case Move::kDoubleKernel:
      if (dim == 1) {
        s.kernel_h *= 2;
      } else {
        ++s.kernel_h;
        ++s.kernel_w;
      }
      return std::nullopt;
    case Move::kAddLayer:
      ++s.layers;
      return std::nullopt;
  }
  return "unknown move";
}

/// Re-solves filter counts from subset `first` on so that each subset keeps
/// its baseline cost; the subsets before `first` are untouched.
std::optional<std::string> rebalance(const ArchDescriptor& base, ArchDescriptor& v, std::size_t first) {
  const CostReport want = model_cost(base);
  std::int64_t positions = base.dim == 1 ? base.h1 : base.h1 * base.h2;
  std::int64_t ch = base.dim == 1 ? base.h2 : base.h3;
  for (std::size_t z = 0; z < v.subsets.size(); ++z) {
    ConvSubset& s = v.subsets[z];
    if (z >= first) {
      const auto g = solve_filters(positions, s.kernel_h * s.kernel_w, s.layers, ch, want.subset_totals[z]);
      if (!g) return "subset " + std::to_string(z) + ": no integer filter count keeps cost " +
                     std::to_string(want.subset_totals[z]);
      s.filters = *g;
    }
    ch = s.filters;
    positions /= base.dim == 1 ? s.pool : s.pool * s.pool;
  }
  return std::nullopt;
}

}  // namespace

Exploration enumerate_equal_cost_variants(const ArchDescriptor& arch, const std::vector<Move>& moves,
                                          std::size_t limit) {
  layer_dims(arch);
  ArchDescriptor base = arch;
  if (base.dim == 1) {
    for (ConvSubset& s : base.subsets) s.kernel_w = 1;
  }
  Exploration out;
  auto attempt = [&](Move move, std::optional<std::size_t> only) {
    std::string name = to_string(move) + (only ? "@" + std::to_string(*only) : "@all");
    ArchDescriptor v = base;
    for (std::size_t z = 0; z < v.subsets.size(); ++z) {
      if (only && z != *only) continue;
      if (auto why = apply_move(v.dim, move, v.subsets[z])) {
        out.skipped.push_back({name, "subset " + std::to_string(z) + ": " + *why});
        return;
      }
    }
    if (auto why = rebalance(base, v, only.value_or(0))) {
      out.skipped.push_back({name, *why});
      return;
    }
    if (model_cost(v).total != model_cost(base).total) {
      out.skipped.push_back({name, "cost changed"});
      return;
    }
    if (out.variants.size() < limit) out.variants.push_back({name, v});
  };
  for (Move m : moves) attempt(m, std::nullopt);
  if (base.subsets.size() > 1) {
    for (Move m : moves) {
      for (std::size_t z = 0; z < base.subsets.size(); ++z) attempt(m, z);
    }
  }
  if (arch.dim == 1) {
    for (Variant& v : out.variants) {
      for (ConvSubset& s : v.arch.subsets) s.kernel_w = 1;
    }
  }
  return out;
}

LinkReport link_reduction_report(const Model& model) {
  const std::vector<Shape> shapes = validate(model);
  LinkReport r;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& l = model.layers[i];
    if (!l.weighted()) continue;
    const Shape& out = shapes[i + 1];
    const std::int64_t positions =
        l.kind == LayerKind::kConv1d ? out.h1
        : l.kind == LayerKind::kConv2d ? std::int64_t{out.h1} * out.h2
                                       : 1;
    for (std::size_t u = 0; u < l.weights.units; ++u) {
      const std::size_t lv = l.weights.row_nonzero(u);
      r.unit_fan_in.push_back(lv);
      r.dense += positions * static_cast<std::int64_t>(l.weights.fan_in);
      r.sparse += positions * static_cast<std::int64_t>(lv);
    }
  }
  r.saved_fraction = r.dense == 0 ? 0.0 : 1.0 - static_cast<double>(r.sparse) / static_cast<double>(r.dense);
  r.projected_before = r.dense;
  r.projected_after = r.sparse;
  return r;
}

}  // namespace obnn
