// Python bindings. Histories cross the boundary as JSON text; the package
// wrapper turns dicts into text.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "statecheck/adya.h"
#include "statecheck/error.h"
#include "statecheck/harness.h"
#include "statecheck/history_io.h"
#include "statecheck/search.h"

namespace py = pybind11;
using namespace statecheck;

namespace {

IsolationLevel level_arg(const std::string& text) {
  auto level = parse_isolation_level(text);
  if (!level) throw Error(ErrorCode::kInvalidArgument, "unknown level '" + text + "'");
  return *level;
}

py::dict verdict_dict(const Workload& w, const Verdict& v) {
  py::dict out;
  out["outcome"] = std::string(to_string(v.outcome));
  out["satisfied"] = v.satisfied();
  out["diagnosis"] = v.diagnosis;
  if (v.satisfied()) out["witness"] = serialize_witness(witness_from_verdict(w, v));
  return out;
}

}  // namespace

PYBIND11_MODULE(_statecheck, m) {
  m.doc() = "Black-box checker for isolation levels and session guarantees";

  py::register_exception<Error>(m, "StatecheckError");

  m.def("normalize", [](const std::string& text) { return serialize_history(parse_history(text)); },
        "Parse a history and return its canonical JSON.");
  m.def("digest", [](const std::string& text) { return history_digest(parse_history(text)); });

  m.def(
      "check_isolation",
      [](const std::string& text, const std::string& level, std::uint64_t node_limit) {
        const Workload w = Workload::from_raw(parse_history(text));
        SearchBudget b = budget_from_env();
        b.node_limit = node_limit;
        return verdict_dict(w, check_isolation(w, level_arg(level), b));
      },
      py::arg("history"), py::arg("level"), py::arg("node_limit") = SearchBudget{}.node_limit);

  m.def(
      "check_session",
      [](const std::string& text, const std::string& guarantees, std::uint64_t node_limit) {
        const Workload w = Workload::from_raw(parse_history(text));
        SearchBudget b = budget_from_env();
        b.node_limit = node_limit;
        return verdict_dict(w, check_session(w, parse_guarantee_set(guarantees), b));
      },
      py::arg("history"), py::arg("guarantees"), py::arg("node_limit") = SearchBudget{}.node_limit);

  m.def(
      "pl_check",
      [](const std::string& text, const std::string& level) {
        const Workload w = Workload::from_raw(parse_history(text));
        auto pl = parse_pl_level(level);
        if (!pl) throw Error(ErrorCode::kInvalidArgument, "unknown PL level '" + level + "'");
        return pl_check(w, *pl).holds;
      },
      py::arg("history"), py::arg("level"));

  m.def(
      "phenomena",
      [](const std::string& text) {
        const Workload w = Workload::from_raw(parse_history(text));
        const PhenomenaReport r = least_phenomena(w, nullptr).second;
        py::dict out;
        out["G0"] = r.g0;
        out["G1a"] = r.g1a;
        out["G1b"] = r.g1b;
        out["G1c"] = r.g1c;
        out["G1"] = r.g1();
        out["G-single"] = r.gsingle;
        out["G2"] = r.g2;
        return out;
      },
      py::arg("history"));

  m.def(
      "generate",
      [](std::size_t sessions, std::size_t txns, std::size_t ops, std::size_t keys, double read_fraction,
         std::uint64_t seed, const std::string& level) {
        GenParams p;
        p.sessions = sessions;
        p.max_txns = txns;
        p.max_ops = ops;
        p.keys = keys;
        p.read_fraction = read_fraction;
        p.seed = seed;
        validate(p);
        if (level.empty()) return serialize_history(generate_workload(p));
        if (level == "cc") return serialize_history(simulate_causal(generate_skeleton(p), seed));
        return serialize_history(simulate_level(generate_skeleton(p), level_arg(level), seed));
      },
      py::arg("sessions") = 2, py::arg("txns") = 3, py::arg("ops") = 3, py::arg("keys") = 2,
      py::arg("read_fraction") = 0.5, py::arg("seed") = 0, py::arg("level") = "");

  m.def(
      "crosscheck",
      [](std::size_t txns, std::size_t ops, std::size_t keys, std::size_t sessions, const std::vector<std::string>& levels) {
        std::vector<CrossLevel> parsed;
        for (const auto& l : levels) {
          auto c = parse_cross_level(l);
          if (!c) throw Error(ErrorCode::kInvalidArgument, "unknown crosscheck level '" + l + "'");
          parsed.push_back(*c);
        }
        return report_to_json(crosscheck_family({txns, ops, keys, sessions}, parsed));
      },
      py::arg("txns"), py::arg("ops"), py::arg("keys"), py::arg("sessions"), py::arg("levels"));
}
