#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <future>

#include "obnn/compiler.hpp"
#include "obnn/cost.hpp"
#include "obnn/crypto.hpp"
#include "obnn/error.hpp"
#include "obnn/model.hpp"
#include "obnn/obc.hpp"
#include "obnn/session.hpp"
#include "obnn/synth.hpp"
#include "obnn/transport.hpp"
#include "obnn/verify.hpp"

namespace py = pybind11;
using namespace obnn;

namespace {

ObcKind obc_from(const std::string& name) {
  const auto k = parse_obc_kind(name);
  if (!k) throw ParseError("unknown OBC kind '" + name + "'");
  return *k;
}

OtKind ot_from(const std::string& name) {
  if (name == "simplest") return OtKind::kSimplest;
  if (name == "stub") return OtKind::kInsecureStub;
  throw ParseError("unknown OT provider '" + name + "'");
}

py::dict layer_dict(const LayerCost& l) {
  py::dict d;
  d["layer"] = l.layer;
  d["kind"] = std::string(to_string(l.kind));
  d["nonxor"] = l.total();
  d["popcount"] = l.popcount;
  d["comparator"] = l.comparator;
  d["pool"] = l.pool;
  d["units"] = l.units;
  d["popcount_inputs"] = l.popcount_inputs;
  return d;
}

py::dict report_dict(const SessionReport& r) {
  py::dict d;
  d["nonxor"] = r.nonxor;
  d["xor"] = r.xor_gates;
  d["bytes_sent"] = r.bytes_sent;
  d["bytes_received"] = r.bytes_received;
  d["rounds"] = r.rounds;
  d["table_bytes"] = r.table_bytes;
  d["wall_ms"] = r.wall_ms;
  return d;
}

py::dict compile_report(const Model& m, const std::string& obc) {
  const CompiledModel cm = compile_model(m, obc_from(obc));
  const GateCount g = count_gates(cm.circuit);
  py::list layers;
  for (const LayerCost& l : cm.io.layers) layers.append(layer_dict(l));
  py::dict d;
  d["obc"] = obc;
  d["layers"] = layers;
  d["total"] = g.nonxor;
  d["xor"] = g.xor_gates;
  return d;
}

/// Both parties in one process over an in-memory channel.
py::dict garbled_infer(const Model& m, const std::vector<int>& input, const std::string& obc, const std::string& ot) {
  const CompiledModel cm = compile_model(m, obc_from(obc));
  const Bits x = encode_input(input);
  if (x.size() != m.input.size()) throw ValidationError("input has " + std::to_string(x.size()) + " values, model expects " + std::to_string(m.input.size()));
  SessionOptions opts;
  opts.ot = ot_from(ot);
  EvaluatorResult r;
  SessionReport g;
  {
    py::gil_scoped_release release;
    auto [gch, ech] = memory_channel_pair();
    auto fut = std::async(std::launch::async, [&, ch = gch.get()] { return run_garbler(*ch, cm.circuit, cm.io.garbler_bits, opts); });
    try {
      r = run_evaluator(*ech, cm.circuit, x, opts);
    } catch (...) {
      ech.reset();
      fut.wait();
      throw;
    }
    g = fut.get();
  }
  const std::vector<std::int64_t> scores = decode_scores(cm.io, r.outputs);
  py::dict d;
  d["scores"] = scores;
  d["argmax"] = argmax(scores);
  d["evaluator"] = report_dict(r.report);
  d["garbler"] = report_dict(g);
  return d;
}

py::dict verify(const Model& m, std::size_t trials, std::uint64_t seed) {
  VerifyOptions opts;
  opts.trials = trials;
  opts.seed = seed;
  VerifyReport r;
  {
    py::gil_scoped_release release;
    r = verify_model(m, opts);
  }
  py::list mism;
  for (const Mismatch& x : r.mismatches) {
    mism.append(py::make_tuple(std::string(to_string(x.obc)), x.trial, x.stage, x.layer, x.unit, x.where));
  }
  py::dict d;
  d["passed"] = r.passed();
  d["checks"] = r.checks;
  d["mismatches"] = mism;
  return d;
}

py::list explore(const std::string& arch_json, const std::vector<std::string>& moves, std::size_t limit) {
  std::vector<Move> ms;
  for (const auto& n : moves) ms.push_back(parse_move(n));
  const Exploration e = enumerate_equal_cost_variants(arch_from_json(arch_json), ms, limit);
  py::list out;
  for (const Variant& v : e.variants) out.append(py::make_tuple(v.name, model_cost(v.arch).total, arch_to_json(v.arch)));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Oblivious inference for binarized neural networks over garbled circuits";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<StructuralError>(m, "StructuralError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());

  py::class_<Model>(m, "Model")
      .def_static("load", [](const std::string& path) { return read_model_file(path); }, py::arg("path"))
      .def_static("from_bytes", [](const py::bytes& b) {
            const std::string s = b;
            return parse_model(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
          }, py::arg("data"))
      .def_static("random", [](const std::string& shape, const std::string& plan, double sparsity, std::uint64_t seed) {
            return random_model(parse_shape(shape), parse_plan(plan), sparsity, seed);
          }, py::arg("shape"), py::arg("plan"), py::arg("sparsity") = 0.0, py::arg("seed") = 1)
      .def("to_bytes", [](const Model& self) {
            const auto v = serialize_model(self);
            return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
          })
      .def("save", [](const Model& self, const std::string& path) { write_model_file(path, self); }, py::arg("path"))
      .def_property_readonly("input_shape", [](const Model& self) { return to_string(self.input); })
      .def_property_readonly("input_size", [](const Model& self) { return self.input.size(); })
      .def_property_readonly("layer_count", [](const Model& self) { return self.layers.size(); })
      .def_property_readonly("class_count", &Model::class_count)
      .def_property_readonly("link_reduced", &Model::link_reduced)
      .def("__repr__", [](const Model& self) {
        return "<Model input=" + to_string(self.input) + " layers=" + std::to_string(self.layers.size()) + ">";
      });

  m.def("popcount_gates", [](const std::string& obc, std::size_t n) {
        const GateCount g = count_gates(build_popcount_circuit(obc_from(obc), n));
        return py::make_tuple(g.nonxor, g.xor_gates);
      }, py::arg("obc"), py::arg("n"), "(nonxor, xor) of an n-input popcount circuit");
  m.def("lba_bounds", [](std::int64_t n) { const GateBounds b = lba_bounds(n); return py::make_tuple(b.lower, b.upper); }, py::arg("n"));
  m.def("blb_bounds", [](std::int64_t n) { const GateBounds b = blb_bounds(n); return py::make_tuple(b.lower, b.upper); }, py::arg("n"));
  m.def("compile_report", &compile_report, py::arg("model"), py::arg("obc") = "lba");
  m.def("plain_infer", [](const Model& model, const std::vector<int>& input) { return plain_infer(model, input); },
        py::arg("model"), py::arg("input"), "Class scores of the reference inference; input values are -1 or +1");
  m.def("garbled_infer", &garbled_infer, py::arg("model"), py::arg("input"), py::arg("obc") = "lba",
        py::arg("ot") = "simplest");
  m.def("verify", &verify, py::arg("model"), py::arg("trials") = 10, py::arg("seed") = 1);
  m.def("quantize_threshold", &quantize_threshold, py::arg("gamma"), py::arg("beta"), py::arg("lv"));
  m.def("conv1d_cost", &conv1d_cost, py::arg("h1"), py::arg("h2"), py::arg("g"), py::arg("c"));
  m.def("conv2d_cost", &conv2d_cost, py::arg("h1"), py::arg("h2"), py::arg("h3"), py::arg("g"), py::arg("o1"), py::arg("o2"));
  m.def("arch_cost", [](const std::string& arch_json) { return model_cost(arch_from_json(arch_json)).total; }, py::arg("arch_json"));
  m.def("explore", &explore, py::arg("arch_json"),
        py::arg("moves") = std::vector<std::string>{"halve_kernel", "double_kernel", "add_layer"}, py::arg("limit") = 64,
        "List of (name, total_cost, arch_json) equal-cost variants");
}
