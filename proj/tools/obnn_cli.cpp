#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "obnn/compiler.hpp"
#include "obnn/cost.hpp"
#include "obnn/crypto.hpp"
#include "obnn/error.hpp"
#include "obnn/obc.hpp"
#include "obnn/session.hpp"
#include "obnn/synth.hpp"
#include "obnn/transport.hpp"
#include "obnn/verify.hpp"

using json = nlohmann::json;
using namespace obnn;

namespace {

constexpr int kExitVerify = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNetwork = 3;

ObcKind obc_from(const std::string& name) {
  const auto k = parse_obc_kind(name);
  if (!k) throw ParseError("unknown OBC kind '" + name + "' (expected ta, blb or lba)");
  return *k;
}

std::vector<ObcKind> obc_list(const std::vector<std::string>& names) {
  if (names.empty()) return {std::begin(kAllObcKinds), std::end(kAllObcKinds)};
  std::vector<ObcKind> out;
  for (const auto& n : names) out.push_back(obc_from(n));
  return out;
}

OtKind ot_from(const std::string& name) {
  if (name == "simplest") return OtKind::kSimplest;
  if (name == "stub") return OtKind::kInsecureStub;
  throw ParseError("unknown OT provider '" + name + "' (expected simplest or stub)");
}

Seed garbling_seed(std::uint64_t seed) {
  std::string tag = "obnn-garble:" + std::to_string(seed);
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(tag.data()), tag.size()));
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

json layer_json(const LayerCost& l) {
  return {{"layer", l.layer},       {"kind", std::string(to_string(l.kind))},
          {"nonxor", l.total()},    {"popcount", l.popcount},
          {"comparator", l.comparator}, {"pool", l.pool},
          {"units", l.units},       {"popcount_inputs", l.popcount_inputs}};
}

/// Popcount bound over all weighted layers for the chosen OBC kind.
json bound_check(const IoMap& io, ObcKind kind) {
  std::int64_t pop = 0;
  std::int64_t lower = 0;
  std::int64_t upper = 0;
  for (const LayerCost& l : io.layers) {
    if (l.units == 0 || l.popcount_inputs == 0) continue;
    pop += l.popcount;
    switch (kind) {
      case ObcKind::kLayerwiseAccum:
        upper += l.popcount_inputs;
        lower += l.popcount_inputs - l.units * bit_length(static_cast<std::uint64_t>(l.max_fan_in));
        break;
      case ObcKind::kBitLengthBound:
        upper += static_cast<std::int64_t>(std::floor(1.71 * static_cast<double>(l.popcount_inputs)));
        break;
      case ObcKind::kTreeAdder:
        upper += 2 * l.popcount_inputs;
        break;
    }
  }
  lower = std::max<std::int64_t>(lower, 0);
  return {{"popcount", pop}, {"lower", lower}, {"upper", upper}, {"ok", pop >= lower && pop <= upper}};
}

json compile_report(const CompiledModel& cm, ObcKind kind) {
  const GateCount g = count_gates(cm.circuit);
  json layers = json::array();
  for (const LayerCost& l : cm.io.layers) layers.push_back(layer_json(l));
  return {{"obc", std::string(to_string(kind))},
          {"layers", layers},
          {"total", g.nonxor},
          {"xor", g.xor_gates},
          {"inputs", g.inputs},
          {"outputs", g.outputs},
          {"bound_check", bound_check(cm.io, kind)}};
}

void print_compile_table(const json& r) {
  std::cout << "obc " << r["obc"].get<std::string>() << "\n";
  std::cout << std::left << std::setw(7) << "layer" << std::setw(10) << "kind" << std::setw(12) << "nonxor"
            << std::setw(10) << "units" << "inputs\n";
  for (const auto& l : r["layers"]) {
    std::cout << std::setw(7) << l["layer"].get<int>() << std::setw(10) << l["kind"].get<std::string>()
              << std::setw(12) << l["nonxor"].get<std::int64_t>() << std::setw(10)
              << l["units"].get<std::int64_t>() << l["popcount_inputs"].get<std::int64_t>() << "\n";
  }
  std::cout << "total " << r["total"].get<std::int64_t>() << "  xor " << r["xor"].get<std::int64_t>()
            << "  bound_ok " << (r["bound_check"]["ok"].get<bool>() ? "yes" : "no") << "\n";
}

json session_json(const SessionReport& r) { return json::parse(to_json(r)); }

struct Common {
  std::string model;
  std::string input;
  std::string obc = "lba";
  std::string format;  // empty: the command's default
  std::optional<std::uint64_t> seed;

  std::string fmt(const char* fallback) const { return format.empty() ? fallback : format; }
};

void add_seed(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Deterministic seed")->envname("OBNN_SEED");
}

void add_format(CLI::App* cmd, Common& c, const std::string& def) {
  cmd->add_option("--format", c.format, "Output format: json, csv or table (default " + def + ")")
      ->check(CLI::IsMember({"json", "csv", "table"}));
}

// ---------------------------------------------------------------------------

int cmd_compile(const Common& c, const std::string& out_path) {
  const Model m = read_model_file(c.model);
  const ObcKind kind = obc_from(c.obc);
  const CompiledModel cm = compile_model(m, kind);
  std::string path = out_path;
  if (path.empty()) path = std::filesystem::path(c.model).replace_extension(".circ").string();
  write_text(path, serialize_circuit(cm.circuit));
  json r = compile_report(cm, kind);
  r["circuit"] = path;
  if (c.fmt("json") == "table") print_compile_table(r);
  else std::cout << r.dump(2) << "\n";
  return 0;
}

int cmd_count(const Common& c, const std::vector<std::string>& kinds, std::optional<std::size_t> n) {
  json out = json::array();
  for (ObcKind kind : obc_list(kinds)) {
    if (n) {
      const GateCount g = count_gates(build_popcount_circuit(kind, *n));
      out.push_back({{"obc", std::string(to_string(kind))}, {"n", *n}, {"nonxor", g.nonxor}, {"xor", g.xor_gates}});
    } else {
      out.push_back(compile_report(compile_model(read_model_file(c.model), kind), kind));
    }
  }
  const std::string format = c.fmt("json");
  if (format == "csv") {
    std::cout << "obc,nonxor,xor\n";
    for (const auto& r : out) {
      std::cout << r["obc"].get<std::string>() << ',' << (r.contains("nonxor") ? r["nonxor"] : r["total"]) << ','
                << r["xor"] << "\n";
    }
  } else if (format == "table" && !n) {
    for (const auto& r : out) print_compile_table(r);
  } else {
    std::cout << out.dump(2) << "\n";
  }
  return 0;
}

struct BenchRow {
  std::size_t n;
  ObcKind kind;
  GateCount gates;
  std::int64_t lower;
  std::int64_t upper;
  std::uint64_t bytes;
  std::int64_t wall_us;
};

BenchRow bench_one(std::size_t n, ObcKind kind, OtKind ot, std::uint64_t seed) {
  const Circuit circuit = build_popcount_circuit(kind, n);
  BenchRow row{n, kind, count_gates(circuit), 0, 0, 0, 0};
  switch (kind) {
    case ObcKind::kTreeAdder: {
      // Closed form (exact for powers of two) and the two-inputs-per-AND ceiling.
      row.lower = ta_count_formula(static_cast<std::int64_t>(n)).value;
      row.upper = 2 * (static_cast<std::int64_t>(n) - 1);
      break;
    }
    case ObcKind::kBitLengthBound: {
      const GateBounds b = blb_bounds(static_cast<std::int64_t>(n));
      row.lower = b.lower;
      row.upper = b.upper;
      break;
    }
    case ObcKind::kLayerwiseAccum: {
      const GateBounds b = lba_bounds(static_cast<std::int64_t>(n));
      row.lower = b.lower;
      row.upper = b.upper;
      break;
    }
  }
  std::mt19937_64 rng(seed ^ (n * 31 + static_cast<std::size_t>(kind)));
  Bits x(n);
  for (auto& v : x) v = rng() & 1;
  SessionOptions opts;
  opts.ot = ot;
  TcpListener listener("127.0.0.1", 0);
  auto garbler = std::async(std::launch::async, [&] {
    auto ch = listener.accept();
    return run_garbler(*ch, circuit, {}, opts);
  });
  const auto start = std::chrono::steady_clock::now();
  auto ch = tcp_connect("127.0.0.1", listener.port());
  const EvaluatorResult r = run_evaluator(*ch, circuit, x, opts);
  const SessionReport g = garbler.get();
  row.wall_us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start).count();
  row.bytes = g.bytes_sent + g.bytes_received;
  std::uint64_t got = 0;
  for (std::size_t k = 0; k < r.outputs.size(); ++k) got |= std::uint64_t{r.outputs[k]} << k;
  std::uint64_t want = 0;
  for (auto v : x) want += v;
  if (got != want) throw ProtocolError("bench: garbled popcount " + std::to_string(got) + " != " + std::to_string(want));
  return row;
}

int cmd_bench(const Common& c, const std::vector<std::size_t>& ns, const std::vector<std::string>& kinds,
              const std::string& ot) {
  const OtKind otk = ot_from(ot);
  std::vector<BenchRow> rows;
  for (std::size_t n : ns) {
    if (n < 1) throw ParseError("bench-obc: n must be >= 1");
    for (ObcKind kind : obc_list(kinds)) rows.push_back(bench_one(n, kind, otk, c.seed.value_or(1)));
  }
  const std::string format = c.fmt("csv");
  if (format == "json") {
    json out = json::array();
    for (const auto& r : rows) {
      out.push_back({{"n", r.n}, {"kind", std::string(to_string(r.kind))}, {"nonxor", r.gates.nonxor},
                     {"xor", r.gates.xor_gates}, {"lower_bound", r.lower}, {"upper_bound", r.upper},
                     {"bytes", r.bytes}, {"wall_us", r.wall_us}});
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  const char* sep = format == "csv" ? "," : "\t";
  std::cout << "n" << sep << "kind" << sep << "nonxor" << sep << "xor" << sep << "lower_bound" << sep
            << "upper_bound" << sep << "bytes" << sep << "wall_us\n";
  for (const auto& r : rows) {
    std::cout << r.n << sep << to_string(r.kind) << sep << r.gates.nonxor << sep << r.gates.xor_gates << sep
              << r.lower << sep << r.upper << sep << r.bytes << sep << r.wall_us << "\n";
  }
  return 0;
}

int cmd_infer(const Common& c, const std::string& role, const std::string& addr, const std::string& ot) {
  if (role == "local" && !addr.empty()) throw ParseError("infer: --addr is not used with --role local");
  if (role != "local" && addr.empty()) throw ParseError("infer: --role " + role + " needs --addr host:port");
  const Model m = read_model_file(c.model);
  const CompiledModel cm = compile_model(m, obc_from(c.obc));
  SessionOptions opts;
  opts.ot = ot_from(ot);
  if (c.seed) opts.seed = garbling_seed(*c.seed);

  auto load_input = [&] {
    if (c.input.empty()) throw ParseError("infer: --input is required for role " + role);
    return read_input_file(c.input, m.input.size());
  };
  auto result_json = [&](const EvaluatorResult& r) {
    const std::vector<std::int64_t> scores = decode_scores(cm.io, r.outputs);
    return json{{"scores", scores}, {"argmax", argmax(scores)}, {"session", session_json(r.report)}};
  };

  json out;
  if (role == "local") {
    const Bits x = load_input();
    auto [gch, ech] = memory_channel_pair();
    auto g = std::async(std::launch::async, [&, ch = gch.get()] { return run_garbler(*ch, cm.circuit, cm.io.garbler_bits, opts); });
    EvaluatorResult r;
    try {
      r = run_evaluator(*ech, cm.circuit, x, opts);
    } catch (...) {
      ech.reset();
      g.wait();
      throw;
    }
    out = result_json(r);
    out["garbler_session"] = session_json(g.get());
  } else if (role == "garbler") {
    const auto [host, port] = parse_address(addr);
    TcpListener listener(host, port);
    std::cerr << "garbler listening on " << host << ":" << listener.port() << "\n";
    auto ch = listener.accept();
    out = {{"session", session_json(run_garbler(*ch, cm.circuit, cm.io.garbler_bits, opts))}};
  } else if (role == "evaluator") {
    const Bits x = load_input();
    const auto [host, port] = parse_address(addr);
    auto ch = tcp_connect(host, port);
    out = result_json(run_evaluator(*ch, cm.circuit, x, opts));
  } else {
    throw ParseError("infer: unknown role '" + role + "'");
  }
  if (c.fmt("json") == "table") {
    if (out.contains("scores")) {
      std::cout << "scores";
      for (const auto& s : out["scores"]) std::cout << ' ' << s;
      std::cout << "\nargmax " << out["argmax"] << "\n";
    }
    const auto& s = out["session"];
    std::cout << "nonxor " << s["nonxor"] << "  bytes_sent " << s["bytes_sent"] << "  bytes_received "
              << s["bytes_received"] << "  rounds " << s["rounds"] << "  wall_ms " << s["wall_ms"] << "\n";
  } else {
    std::cout << out.dump(2) << "\n";
  }
  return 0;
}

int cmd_verify(const Common& c, std::size_t trials, bool corrupt, const std::vector<std::string>& kinds) {
  const Model m = read_model_file(c.model);
  VerifyOptions opts;
  opts.trials = trials;
  opts.seed = c.seed.value_or(1);
  opts.corrupt_threshold = corrupt;
  opts.kinds = obc_list(kinds);
  if (trials == 0) std::cerr << "warning: --trials 0 checks nothing; reporting a vacuous pass\n";
  const VerifyReport r = verify_model(m, opts);
  json mism = json::array();
  for (const Mismatch& x : r.mismatches) {
    mism.push_back({{"obc", std::string(to_string(x.obc))}, {"trial", x.trial}, {"stage", x.stage},
                    {"layer", x.layer}, {"unit", x.unit}, {"where", x.where}});
  }
  const json out = {{"passed", r.passed()}, {"trials", r.trials}, {"checks", r.checks}, {"mismatches", mism}};
  if (c.fmt("json") == "table") {
    std::cout << (r.passed() ? "PASS" : "FAIL") << " trials=" << r.trials << " checks=" << r.checks << "\n";
    for (const Mismatch& x : r.mismatches) {
      std::cout << "  " << to_string(x.obc) << " trial " << x.trial << " " << x.stage << ": layer " << x.layer
                << " unit " << x.unit << " (" << x.where << ")\n";
    }
  } else {
    std::cout << out.dump(2) << "\n";
  }
  return r.passed() ? 0 : kExitVerify;
}

int cmd_gen_model(const Common& c, const std::string& shape, std::string plan, const std::string& arch_path,
                  std::uint32_t classes, double sparsity, const std::string& out) {
  Shape input;
  if (!arch_path.empty()) {
    if (!plan.empty() || !shape.empty()) throw ParseError("gen-model: --arch excludes --shape and --plan");
    const ArchDescriptor a = arch_from_json(read_text(arch_path));
    input = arch_input(a);
    plan = arch_plan(a) + ",out:" + std::to_string(classes);
  } else {
    if (plan.empty() || shape.empty()) throw ParseError("gen-model: needs --shape and --plan, or --arch");
    input = parse_shape(shape);
  }
  if (sparsity < 0.0 || sparsity >= 1.0) throw ParseError("gen-model: --sparsity must be in [0, 1)");
  const Model m = random_model(input, parse_plan(plan), sparsity, c.seed.value_or(1));
  write_model_file(out, m);
  std::cout << json{{"model", out}, {"input", to_string(m.input)}, {"layers", m.layers.size()},
                    {"link_reduced", m.link_reduced()}}.dump() << "\n";
  return 0;
}

int cmd_gen_input(const Common& c, const std::string& out) {
  const Model m = read_model_file(c.model);
  const Bits x = random_input(m, c.seed.value_or(1));
  write_input_file(out, x);
  std::cout << json{{"input", out}, {"bits", x.size()}}.dump() << "\n";
  return 0;
}

int cmd_explore(const Common& c, const std::string& arch_path, const std::vector<std::string>& move_names,
                std::size_t limit, const std::string& csv_path) {
  ArchDescriptor arch;
  if (!arch_path.empty()) arch = arch_from_json(read_text(arch_path));
  else if (!c.model.empty()) arch = arch_from_model(read_model_file(c.model));
  else throw ParseError("explore: needs --arch or --model");
  std::vector<Move> moves;
  for (const auto& n : move_names) moves.push_back(parse_move(n));
  if (moves.empty()) moves = {Move::kHalveKernel, Move::kDoubleKernel, Move::kAddLayer};
  const std::int64_t base = model_cost(arch).total;
  const Exploration e = enumerate_equal_cost_variants(arch, moves, limit);

  std::ostringstream csv;
  csv << "variant,total_cost,delta\n" << "baseline," << base << ",0\n";
  json variants = json::array();
  for (const Variant& v : e.variants) {
    const std::int64_t t = model_cost(v.arch).total;
    csv << v.name << ',' << t << ',' << (t - base) << "\n";
    variants.push_back({{"name", v.name}, {"total_cost", t}, {"arch", json::parse(arch_to_json(v.arch))}});
  }
  json skipped = json::array();
  for (const auto& s : e.skipped) skipped.push_back({{"name", s.name}, {"reason", s.reason}});
  if (!csv_path.empty()) write_text(csv_path, csv.str());

  const std::string format = c.fmt("json");
  if (format == "csv") {
    std::cout << csv.str();
  } else if (format == "table") {
    std::cout << csv.str();
    for (const auto& s : e.skipped) std::cout << "skipped " << s.name << ": " << s.reason << "\n";
  } else {
    std::cout << json{{"baseline", {{"total_cost", base}, {"arch", json::parse(arch_to_json(arch))}}},
                      {"variants", variants},
                      {"skipped", skipped}}.dump(2)
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oblivious inference for binarized neural networks over garbled circuits"};
  app.require_subcommand(1);
  Common c;
  std::string out_path;
  std::vector<std::string> kinds;
  std::vector<std::size_t> ns{250, 500, 1000, 2000};
  std::optional<std::size_t> count_n;
  std::string ot = "simplest";
  std::string role = "local";
  std::string addr;
  std::size_t trials = 50;
  bool corrupt = false;
  std::string shape;
  std::string plan;
  std::string arch;
  std::uint32_t classes = 2;
  double sparsity = 0.0;
  std::vector<std::string> moves;
  std::size_t limit = 64;
  std::string csv_path;

  auto* compile = app.add_subcommand("compile", "Compile a model to a CIRC v1 circuit and report gate counts");
  compile->add_option("--model", c.model, "FBNN model file")->required();
  compile->add_option("--obc", c.obc, "Popcount builder: ta, blb or lba")->capture_default_str();
  compile->add_option("--out", out_path, "Circuit output path (default: model path with .circ)");
  add_format(compile, c, "json");

  auto* count = app.add_subcommand("count", "Gate counts of a model or of a standalone popcount");
  count->add_option("--model", c.model, "FBNN model file");
  count->add_option("--n", count_n, "Popcount length instead of a model");
  count->add_option("--obc", kinds, "Builders (default: all)")->delimiter(',');
  add_format(count, c, "json");

  auto* bench = app.add_subcommand("bench-obc", "Popcount gate counts and loopback session traffic");
  bench->add_option("--n", ns, "Comma separated lengths")->delimiter(',')->capture_default_str();
  bench->add_option("--obc", kinds, "Builders (default: all)")->delimiter(',');
  bench->add_option("--ot", ot, "OT provider: simplest or stub")->capture_default_str();
  add_seed(bench, c);
  add_format(bench, c, "csv");

  auto* infer = app.add_subcommand("infer", "Oblivious inference as garbler, evaluator or both locally");
  infer->add_option("--model", c.model, "FBNN model file (the evaluator needs the same architecture)")->required();
  infer->add_option("--input", c.input, "Bit-packed input activations (evaluator, local)");
  infer->add_option("--obc", c.obc, "Popcount builder: ta, blb or lba")->capture_default_str();
  infer->add_option("--role", role, "local, garbler or evaluator")
      ->check(CLI::IsMember({"local", "garbler", "evaluator"}))
      ->capture_default_str();
  infer->add_option("--addr", addr, "host:port the garbler listens on and the evaluator connects to");
  infer->add_option("--ot", ot, "OT provider: simplest or stub")->capture_default_str();
  add_seed(infer, c);
  add_format(infer, c, "json");

  auto* verify = app.add_subcommand("verify", "Check plain, compiled and garbled inference agree");
  verify->add_option("--model", c.model, "FBNN model file")->required();
  verify->add_option("--trials", trials, "Random inputs per builder")->capture_default_str();
  verify->add_option("--obc", kinds, "Builders (default: all)")->delimiter(',');
  verify->add_flag("--corrupt-threshold", corrupt, "Fault injection: compile with one threshold inverted");
  add_seed(verify, c);
  add_format(verify, c, "json");

  auto* gen_model = app.add_subcommand("gen-model", "Write a deterministic random ternary model");
  gen_model->add_option("--shape", shape, "Input shape, e.g. 16x2 or 8x8x1");
  gen_model->add_option("--plan", plan, "Layer plan, e.g. conv1d:4:3,pool:2,fc:16,out:3");
  gen_model->add_option("--arch", arch, "Architecture JSON (as emitted by explore)");
  gen_model->add_option("--classes", classes, "Output classes with --arch")->capture_default_str();
  gen_model->add_option("--sparsity", sparsity, "Probability of a zero weight")->capture_default_str();
  gen_model->add_option("--out", out_path, "Output FBNN path")->required();
  add_seed(gen_model, c);

  auto* gen_input = app.add_subcommand("gen-input", "Write a deterministic random input for a model");
  gen_input->add_option("--model", c.model, "FBNN model file")->required();
  gen_input->add_option("--out", out_path, "Output path")->required();
  add_seed(gen_input, c);

  auto* explore = app.add_subcommand("explore", "Enumerate architecture variants with equal analytic cost");
  explore->add_option("--arch", arch, "Architecture JSON");
  explore->add_option("--model", c.model, "FBNN model whose CONV stack is explored");
  explore->add_option("--moves", moves, "halve_kernel, double_kernel, add_layer")->delimiter(',');
  explore->add_option("--limit", limit, "Maximum variants")->capture_default_str();
  explore->add_option("--csv", csv_path, "Also write the cost table here");
  add_format(explore, c, "json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*compile) return cmd_compile(c, out_path);
    if (*count) {
      if (c.model.empty() == !count_n) throw ParseError("count: give exactly one of --model and --n");
      return cmd_count(c, kinds, count_n);
    }
    if (*bench) return cmd_bench(c, ns, kinds, ot);
    if (*infer) return cmd_infer(c, role, addr, ot);
    if (*verify) return cmd_verify(c, trials, corrupt, kinds);
    if (*gen_model) return cmd_gen_model(c, shape, plan, arch, classes, sparsity, out_path);
    if (*gen_input) return cmd_gen_input(c, out_path);
    if (*explore) return cmd_explore(c, arch, moves, limit, csv_path);
  } catch (const ProtocolError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNetwork;
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNetwork;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
