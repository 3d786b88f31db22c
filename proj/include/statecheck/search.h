#pragma once

// Existential search for executions satisfying an isolation level or a set
// of session guarantees, plus the constructive executions built from
// history graphs.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "statecheck/adya.h"
#include "statecheck/commit_tests.h"
#include "statecheck/model.h"
#include "statecheck/session_tests.h"

namespace statecheck {

/// Up to `max_exhaustive` transactions the search is exact and unbounded.
/// Beyond that it stops after `node_limit` placements and reports
/// kBudgetExceeded unless it reached a verdict first.
struct SearchBudget {
  std::size_t max_exhaustive = 8;
  std::uint64_t node_limit = 1'000'000;
};

/// Default budget, with max_exhaustive overridden by STATECHECK_BUDGET when
/// it holds a positive integer.
SearchBudget budget_from_env();

enum class Outcome : std::uint8_t { kSatisfied, kViolated, kBudgetExceeded };
std::string_view to_string(Outcome o);

struct Verdict {
  Outcome outcome = Outcome::kViolated;
  /// Isolation levels: the witness execution order.
  std::optional<std::vector<TxnIndex>> witness;
  /// Session guarantees: one witness order per session.
  std::map<SessionIndex, std::vector<TxnIndex>> per_session;
  /// For a violation, the failing clause at the deepest rejected prefix.
  std::string diagnosis;
  std::uint64_t nodes = 0;

  bool satisfied() const { return outcome == Outcome::kSatisfied; }
};

/// Replays a total order through the level's commit test for every
/// transaction. On failure `why` names the first failing clause.
bool verify_isolation_witness(const Workload& w, IsolationLevel level,
                              const std::vector<TxnIndex>& order, std::string* why = nullptr);
/// Replays a total order through the set's session tests for every
/// transaction of session `se`.
bool verify_session_witness(const Workload& w, const GuaranteeSet& g, SessionIndex se,
                            const std::vector<TxnIndex>& order, std::string* why = nullptr);

/// Some execution passes the commit test for every transaction. Prefixes
/// are abandoned as soon as the newly placed transaction fails its test:
/// every commit test only reads states up to the transaction's own state,
/// so the outcome is fixed at placement.
Verdict check_isolation(const Workload& w, IsolationLevel level, const SearchBudget& b = {});
/// Full permutation enumeration without pruning; reference for the above.
Verdict check_isolation_unpruned(const Workload& w, IsolationLevel level);

/// For every session, some execution passes the set's session tests for all
/// of that session's transactions.
Verdict check_session(const Workload& w, const GuaranteeSet& g, const SearchBudget& b = {});
Verdict check_session_unpruned(const Workload& w, const GuaranteeSet& g);

/// Topological sort of the DSG (ww, wr, rw edges). Ties go to the smaller
/// transaction id. Throws kCyclicGraph.
Execution construct_ser_execution(const AdyaHistory& h);
/// Topological sort of the logical-order graph: start edges, plus i -> j
/// whenever i start-precedes some k with k rw-> j. Needs h.ts; throws
/// kMissingTimestamps or kCyclicGraph.
Execution construct_si_execution(const AdyaHistory& h);
/// Topological sort of the ww/wr edges only. Throws kCyclicGraph.
Execution construct_psi_execution(const AdyaHistory& h);

/// Rebuilds each session's witness as a causal execution: updates keep the
/// witness's relative order; each read-only transaction is placed right
/// after max(its operations' sf, its session predecessor's state). Throws
/// kWitnessInvalid when a supplied witness fails preread or a rebuilt order
/// fails the causal test.
std::map<SessionIndex, std::vector<TxnIndex>> construct_cc_execution(
    const Workload& w, const std::map<SessionIndex, std::vector<TxnIndex>>& witnesses);

enum class DependencyMode : std::uint8_t { kPerSiteSi, kDepSet };

/// kPerSiteSi: the number of transactions ordered before t; kDepSet: |DEP(t)|.
std::vector<std::size_t> count_dependencies(const Execution& e, DependencyMode mode);

}  // namespace statecheck
