// statecheck: check histories against isolation levels and session
// guarantees, query the graph oracle, generate workloads, cross-validate.
//
// Exit codes: 0 satisfied, 1 violated, 2 usage or input error, 3 budget
// exceeded.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "statecheck/adya.h"
#include "statecheck/error.h"
#include "statecheck/harness.h"
#include "statecheck/history_io.h"
#include "statecheck/search.h"
#include "statecheck/session_tests.h"

namespace sc = statecheck;

namespace {

constexpr int kExitSatisfied = 0;
constexpr int kExitViolated = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;

int exit_for(sc::Outcome o) {
  switch (o) {
    case sc::Outcome::kSatisfied: return kExitSatisfied;
    case sc::Outcome::kViolated: return kExitViolated;
    case sc::Outcome::kBudgetExceeded: return kExitBudget;
  }
  return kExitUsage;
}

std::string join(const sc::Workload& w, const std::vector<sc::TxnIndex>& order) {
  std::string out = "[";
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) out += ",";
    out += w.txn(order[i]).id;
  }
  return out + "]";
}

std::string describe_vo(const sc::Workload& w, const sc::VersionOrder& vo) {
  std::string out;
  for (sc::KeyIndex k = 0; k < vo.chains.size(); ++k) {
    if (!out.empty()) out += " ";
    out += w.key_name(k) + ":" + join(w, vo.chains[k]);
  }
  return out.empty() ? "(no writes)" : out;
}

struct CheckArgs {
  std::string input;
  std::string level;
  std::string guarantees;
  std::string witness_out;
  std::string replay;
  std::optional<std::uint64_t> budget;
};

int replay_witness(const sc::Workload& w, const CheckArgs& a) {
  const sc::WitnessFile wf = sc::load_witness(a.replay);
  std::string why;
  if (!a.level.empty()) {
    const auto level = sc::parse_isolation_level(a.level);
    if (!wf.order) throw sc::Error(sc::ErrorCode::kWitnessInvalid, "witness has no \"order\"");
    if (!sc::verify_isolation_witness(w, *level, sc::resolve_order(w, *wf.order), &why)) {
      std::cout << "witness rejected\n";
      std::cerr << why << "\n";
      return kExitViolated;
    }
    std::cout << "witness replays: " << sc::to_string(*level) << " satisfied\n";
    return kExitSatisfied;
  }
  const sc::GuaranteeSet g = sc::parse_guarantee_set(a.guarantees);
  for (sc::SessionIndex se = 0; se < w.session_count(); ++se) {
    const std::string& sid = w.session(se).id;
    auto it = wf.per_session.find(sid);
    if (it == wf.per_session.end()) {
      throw sc::Error(sc::ErrorCode::kWitnessInvalid, "witness has no order for session " + sid);
    }
    if (!sc::verify_session_witness(w, g, se, sc::resolve_order(w, it->second), &why)) {
      std::cout << "witness rejected\n";
      std::cerr << "session " << sid << ": " << why << "\n";
      return kExitViolated;
    }
  }
  std::cout << "witness replays: " << sc::to_string(g) << " satisfied\n";
  return kExitSatisfied;
}

int cmd_check(const CheckArgs& a) {
  const sc::Workload w = sc::Workload::from_raw(sc::load_history(a.input));
  if (!a.level.empty() && !sc::parse_isolation_level(a.level)) {
    throw sc::Error(sc::ErrorCode::kInvalidArgument, "unknown level '" + a.level + "'");
  }
  if (!a.replay.empty()) return replay_witness(w, a);

  sc::SearchBudget budget = sc::budget_from_env();
  if (a.budget) budget.node_limit = *a.budget;
  sc::Verdict v;
  std::string what;
  if (!a.level.empty()) {
    const auto level = *sc::parse_isolation_level(a.level);
    v = sc::check_isolation(w, level, budget);
    what = std::string(sc::to_string(level));
  } else {
    const sc::GuaranteeSet g = sc::parse_guarantee_set(a.guarantees);
    v = sc::check_session(w, g, budget);
    what = sc::to_string(g);
  }
  std::cout << what << ": " << sc::to_string(v.outcome) << "\n";
  if (v.satisfied()) {
    if (v.witness) std::cout << "witness " << join(w, *v.witness) << "\n";
    for (const auto& [se, order] : v.per_session) {
      std::cout << "witness " << w.session(se).id << " " << join(w, order) << "\n";
    }
    if (!a.witness_out.empty()) {
      sc::save_text(a.witness_out, sc::serialize_witness(sc::witness_from_verdict(w, v)));
    }
  } else if (!v.diagnosis.empty()) {
    std::cerr << v.diagnosis << "\n";
  }
  return exit_for(v.outcome);
}

struct OracleArgs {
  std::string input;
  bool phenomena = false;
  std::string pl;
  std::string version_order = "enumerate";
  std::string timestamps;  // supplied | derived | enumerated
};

void print_report(const sc::PhenomenaReport& r) {
  auto b = [](bool v) { return v ? "true" : "false"; };
  std::cout << "G0=" << b(r.g0) << "\n"
            << "G1a=" << b(r.g1a) << "\n"
            << "G1b=" << b(r.g1b) << "\n"
            << "G1c=" << b(r.g1c) << "\n"
            << "G1=" << b(r.g1()) << "\n"
            << "G-single=" << b(r.gsingle) << "\n"
            << "G2=" << b(r.g2) << "\n";
  if (r.gsia) std::cout << "G-SIa=" << b(*r.gsia) << "\n";
  if (r.gsib) std::cout << "G-SIb=" << b(*r.gsib) << "\n";
}

bool report_holds(const sc::PhenomenaReport& r, sc::PlLevel level) {
  switch (level) {
    case sc::PlLevel::kPl1: return !r.g0;
    case sc::PlLevel::kPl2: return !r.g1();
    case sc::PlLevel::kPl2Plus: return !r.g1() && !r.gsingle;
    case sc::PlLevel::kPl3: return !r.g1() && !r.g2;
    case sc::PlLevel::kSi:
      if (!r.gsia) throw sc::Error(sc::ErrorCode::kMissingTimestamps, "SI needs start/commit points");
      return !r.g1() && !r.gsi();
    case sc::PlLevel::kStrict: break;
  }
  throw sc::Error(sc::ErrorCode::kInvalidArgument, "strict needs --version-order enumerate");
}

int cmd_oracle(const OracleArgs& a) {
  const sc::Workload w = sc::Workload::from_raw(sc::load_history(a.input));
  std::optional<sc::PlLevel> level;
  if (!a.pl.empty()) {
    level = sc::parse_pl_level(a.pl);
    if (!level) throw sc::Error(sc::ErrorCode::kInvalidArgument, "unknown PL level '" + a.pl + "'");
  }
  const std::optional<sc::Timestamps> supplied = sc::supplied_timestamps(w);

  if (a.version_order.rfind("derive:", 0) == 0) {
    // A single version order taken from a witness file.
    const sc::WitnessFile wf = sc::load_witness(a.version_order.substr(7));
    sc::VersionOrder vo;
    std::optional<sc::Timestamps> ts = supplied;
    if (wf.version_order) {
      vo = sc::resolve_version_order(w, *wf.version_order);
    } else if (wf.order) {
      const sc::Execution e = sc::build_execution(w, *wf.order);
      vo = sc::derive_version_order(e);
      if (!ts) ts = sc::assign_timestamps(e);
    } else {
      throw sc::Error(sc::ErrorCode::kWitnessInvalid, "witness has neither order nor version order");
    }
    if (wf.timestamps) {
      sc::Timestamps t;
      t.start.assign(w.txn_count(), 0);
      t.commit.assign(w.txn_count(), 0);
      for (const auto& [id, p] : *wf.timestamps) {
        auto idx = w.find_txn(id);
        if (!idx) throw sc::Error(sc::ErrorCode::kWitnessInvalid, "unknown transaction '" + id + "'");
        t.start[*idx] = p.start;
        t.commit[*idx] = p.commit;
      }
      ts = t;
    }
    const sc::PhenomenaReport r = sc::detect_all(w, vo, ts ? &*ts : nullptr);
    std::cout << "version order " << describe_vo(w, vo) << "\n";
    if (a.phenomena) {
      print_report(r);
      return r.g0 || r.g1() || r.g2 || r.gsi() ? kExitViolated : kExitSatisfied;
    }
    const bool holds = report_holds(r, *level);
    std::cout << a.pl << ": " << (holds ? "holds" : "fails") << "\n";
    return holds ? kExitSatisfied : kExitViolated;
  }
  if (a.version_order != "enumerate") {
    throw sc::Error(sc::ErrorCode::kInvalidArgument,
                    "--version-order takes derive:<witness> or enumerate");
  }

  if (a.phenomena) {
    const auto [vo, r] = sc::least_phenomena(w, supplied ? &*supplied : nullptr);
    std::cout << "version order " << describe_vo(w, vo) << "\n";
    print_report(r);
    return r.g0 || r.g1() || r.g2 || r.gsi() ? kExitViolated : kExitSatisfied;
  }

  sc::TimestampSource source = supplied ? sc::TimestampSource::kSupplied : sc::TimestampSource::kDerived;
  if (a.timestamps == "supplied") {
    source = sc::TimestampSource::kSupplied;
  } else if (a.timestamps == "derived") {
    source = sc::TimestampSource::kDerived;
  } else if (a.timestamps == "enumerated") {
    source = sc::TimestampSource::kEnumerated;
  } else if (!a.timestamps.empty()) {
    throw sc::Error(sc::ErrorCode::kInvalidArgument, "--timestamps takes supplied, derived or enumerated");
  }
  const sc::PlResult r = sc::pl_check(w, *level, source);
  std::cout << a.pl << ": " << (r.holds ? "holds" : "fails") << "\n";
  if (r.holds && r.vo) std::cout << "version order " << describe_vo(w, *r.vo) << "\n";
  if (r.holds && r.ts) {
    std::cout << "timestamps";
    for (sc::TxnIndex t = 0; t < w.txn_count(); ++t) {
      std::cout << " " << w.txn(t).id << "=" << r.ts->start[t] << "/" << r.ts->commit[t];
    }
    std::cout << "\n";
  }
  return r.holds ? kExitSatisfied : kExitViolated;
}

struct GenerateArgs {
  sc::GenParams params;
  std::string level;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  sc::RawHistory h;
  if (a.level.empty()) {
    h = sc::generate_workload(a.params);
  } else if (a.level == "cc") {
    h = sc::simulate_causal(sc::generate_skeleton(a.params), a.params.seed);
  } else {
    const auto level = sc::parse_isolation_level(a.level);
    if (!level) throw sc::Error(sc::ErrorCode::kInvalidArgument, "unknown level '" + a.level + "'");
    h = sc::simulate_level(sc::generate_skeleton(a.params), *level, a.params.seed);
  }
  const std::string text = sc::serialize_history(h);
  if (a.out.empty() || a.out == "-") {
    std::cout << text;
  } else {
    sc::save_text(a.out, text);
  }
  return kExitSatisfied;
}

struct CrossArgs {
  std::string bounds;
  std::optional<std::size_t> random;
  std::uint64_t seed = 1;
  std::size_t max_txns = 6;
  std::string levels = "ser,si,rc,ru,psi,psia,cc4";
  std::string out;
  bool mutate = false;
};

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::size_t end = comma == std::string::npos ? text.size() : comma;
    out.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

int cmd_crosscheck(const CrossArgs& a) {
  std::vector<sc::CrossLevel> levels;
  for (const std::string& name : split(a.levels)) {
    auto l = sc::parse_cross_level(name);
    if (!l) throw sc::Error(sc::ErrorCode::kInvalidArgument, "unknown crosscheck level '" + name + "'");
    levels.push_back(*l);
  }
  sc::CrossOptions opts;
  opts.budget = sc::budget_from_env();
  opts.mutate = a.mutate;
  sc::CrossReport report;
  if (a.random) {
    report = sc::crosscheck(sc::random_corpus(*a.random, a.seed, a.max_txns), levels, opts);
  } else {
    sc::SmallBounds b;
    if (!a.bounds.empty()) {
      const auto parts = split(a.bounds);
      if (parts.size() != 4) {
        throw sc::Error(sc::ErrorCode::kInvalidArgument, "--bounds takes txns,ops,keys,sessions");
      }
      try {
        b = {std::stoul(parts[0]), std::stoul(parts[1]), std::stoul(parts[2]), std::stoul(parts[3])};
      } catch (const std::exception&) {
        throw sc::Error(sc::ErrorCode::kInvalidArgument, "--bounds takes four positive integers");
      }
    }
    report = sc::crosscheck_family(b, levels, opts);
  }
  const std::string json = sc::report_to_json(report);
  if (!a.out.empty()) sc::save_text(a.out, json);
  std::cout << "cases " << report.cases << ", agreements " << report.agreements << ", disagreements "
            << report.disagreements.size() << ", budget exceeded " << report.budget_exceeded
            << ", witness failures " << report.witness_failures << ", construction failures "
            << report.construction_failures << "\n";
  for (const sc::Disagreement& d : report.disagreements) {
    std::cout << "disagreement " << d.digest << " " << d.level << ": checker " << d.checker
              << ", oracle " << d.oracle << "\n";
  }
  for (const std::string& note : report.failure_notes) std::cerr << note << "\n";
  if (!report.disagreements.empty() || report.witness_failures || report.construction_failures) {
    return kExitViolated;
  }
  return report.budget_exceeded ? kExitBudget : kExitSatisfied;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Client-centric checker for transactional histories"};
  app.require_subcommand(1);

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Check a history against a level or session guarantees");
  check_cmd->add_option("input", check.input, "History JSON")->required();
  auto* level_opt = check_cmd->add_option("--level", check.level, "ser, sser, si, rc, ru, sc or psi");
  auto* g_opt = check_cmd->add_option("--guarantees", check.guarantees, "Comma-separated rmw, mr, mw, wfr, cc");
  level_opt->excludes(g_opt);
  check_cmd->add_option("--witness", check.witness_out, "Write the witness here on success");
  check_cmd->add_option("--budget", check.budget, "Node limit for workloads beyond the exhaustive size");
  check_cmd->add_option("--replay", check.replay, "Verify this witness instead of searching");

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Query the dependency-graph oracle");
  oracle_cmd->add_option("input", oracle.input, "History JSON")->required();
  auto* ph_opt = oracle_cmd->add_flag("--phenomena", oracle.phenomena, "Report every phenomenon");
  auto* pl_opt = oracle_cmd->add_option("--pl", oracle.pl, "pl1, pl2, pl2plus, pl3, si or strict");
  ph_opt->excludes(pl_opt);
  oracle_cmd->add_option("--version-order", oracle.version_order, "derive:<witness> or enumerate");
  oracle_cmd->add_option("--timestamps", oracle.timestamps, "supplied, derived or enumerated");

  GenerateArgs gen;
  std::size_t txns = 3;
  std::size_t ops = 3;
  auto* gen_cmd = app.add_subcommand("generate", "Generate a random workload");
  gen_cmd->add_option("--sessions", gen.params.sessions, "Number of sessions");
  gen_cmd->add_option("--txns", txns, "Maximum transactions per session");
  gen_cmd->add_option("--ops", ops, "Maximum operations per transaction");
  gen_cmd->add_option("--keys", gen.params.keys, "Number of keys");
  gen_cmd->add_option("--read-frac", gen.params.read_fraction, "Fraction of reads");
  gen_cmd->add_option("--level", gen.level, "Make the output satisfy this level (or cc)");
  gen_cmd->add_option("--seed", gen.params.seed, "Random seed");
  gen_cmd->add_option("-o,--out", gen.out, "Output path (stdout when omitted)");

  CrossArgs cross;
  auto* cross_cmd = app.add_subcommand("crosscheck", "Compare checker verdicts against the oracle");
  auto* bounds_opt = cross_cmd->add_option("--bounds", cross.bounds, "txns,ops,keys,sessions of the family");
  auto* random_opt = cross_cmd->add_option("--random", cross.random, "Number of random workloads");
  bounds_opt->excludes(random_opt);
  cross_cmd->add_option("--seed", cross.seed, "First seed of the random corpus");
  cross_cmd->add_option("--max-txns", cross.max_txns, "Transactions per random workload");
  cross_cmd->add_option("--levels", cross.levels, "Comma-separated ser, si, rc, ru, psi, psia, cc4");
  cross_cmd->add_option("-o,--out", cross.out, "Report path");
  cross_cmd->add_flag("--mutate", cross.mutate, "Flip one read before checking");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*check_cmd) {
      if (check.level.empty() == check.guarantees.empty()) {
        std::cerr << "check needs exactly one of --level or --guarantees\n";
        return kExitUsage;
      }
      return cmd_check(check);
    }
    if (*oracle_cmd) {
      if (!oracle.phenomena && oracle.pl.empty()) {
        std::cerr << "oracle needs --phenomena or --pl\n";
        return kExitUsage;
      }
      return cmd_oracle(oracle);
    }
    if (*gen_cmd) {
      gen.params.max_txns = txns;
      gen.params.max_ops = ops;
      return cmd_generate(gen);
    }
    return cmd_crosscheck(cross);
  } catch (const sc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == sc::ErrorCode::kBudgetExceeded ? kExitBudget : kExitUsage;
  }
}
