#pragma once

// History-graph oracle: version orders, direct serialization graphs,
// phenomena, PL-level predicates, start/commit assignment, and the
// visibility/arbitration axioms for parallel snapshot isolation.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "statecheck/model.h"

namespace statecheck {

/// Per-key total order over the key's writers, oldest first. The initial
/// value is the implicit zeroth version of every key.
struct VersionOrder {
  std::vector<std::vector<TxnIndex>> chains;

  /// Position of t's version in the chain of `key`, or nullopt.
  std::optional<std::size_t> position(KeyIndex key, TxnIndex t) const;
  friend bool operator==(const VersionOrder&, const VersionOrder&) = default;
};

/// Versions ordered by the execution order of their writers.
VersionOrder derive_version_order(const Execution& e);

/// prod over keys of (writers of k)!, saturating at UINT64_MAX.
std::uint64_t version_order_count(const Workload& w);

/// Calls `fn` for every version order, keys varying slowest-first in key
/// index order and each chain in lexicographic permutation order of the
/// writers' ids. Stops early when `fn` returns false. Throws
/// kBudgetExceeded when the count exceeds `limit`.
void for_each_version_order(const Workload& w, const std::function<bool(const VersionOrder&)>& fn,
                            std::uint64_t limit = 1'000'000);
std::vector<VersionOrder> enumerate_version_orders(const Workload& w,
                                                   std::uint64_t limit = 1'000'000);

/// Start and commit points per transaction; all 2n values distinct.
struct Timestamps {
  std::vector<std::int64_t> start;
  std::vector<std::int64_t> commit;

  friend bool operator==(const Timestamps&, const Timestamps&) = default;
};

/// Ranks carried by the workload, or nullopt when any transaction lacks them.
std::optional<Timestamps> supplied_timestamps(const Workload& w);

/// Walks the states of a total execution. At state i the producer of state i
/// gets the next commit point, then every transaction that has not started
/// and for which the state is complete with a write-disjoint delta up to its
/// parent gets a start point, in execution order. A transaction that never
/// qualifies starts immediately before its own commit.
Timestamps assign_timestamps(const Execution& e);

enum class EdgeKind : std::uint8_t { kWw, kWr, kRw, kStart };
std::string_view to_string(EdgeKind kind);

struct ConflictEdge {
  EdgeKind kind = EdgeKind::kWw;
  TxnIndex from = 0;
  TxnIndex to = 0;
  std::optional<KeyIndex> key;  // absent for start edges

  friend bool operator==(const ConflictEdge&, const ConflictEdge&) = default;
};

enum class GraphFlavor : std::uint8_t { kDsg, kSsg };

struct SerializationGraph {
  std::size_t nodes = 0;
  std::vector<ConflictEdge> edges;
  GraphFlavor flavor = GraphFlavor::kDsg;

  bool has_edge(EdgeKind kind, TxnIndex from, TxnIndex to) const;
};

/// A workload together with a version order and optional event points.
struct AdyaHistory {
  const Workload* workload = nullptr;
  VersionOrder vo;
  std::optional<Timestamps> ts;
};

SerializationGraph build_dsg(const Workload& w, const VersionOrder& vo);
SerializationGraph build_ssg(const Workload& w, const VersionOrder& vo, const Timestamps& ts);

enum class Phenomenon : std::uint8_t { kG0, kG1a, kG1b, kG1c, kG2, kGSingle, kGSIa, kGSIb };
std::string_view to_string(Phenomenon p);

/// G1a: a read of a value no transaction in the workload writes.
/// G1b: a read of the reader's own value ahead of its own write.
/// Cycle phenomena ignore start edges; G-SIa and G-SIb need an SSG and
/// throw kMissingTimestamps on a DSG.
bool detect(const SerializationGraph& g, Phenomenon p, const Workload& w);

struct PhenomenaReport {
  bool g0 = false;
  bool g1a = false;
  bool g1b = false;
  bool g1c = false;
  bool g2 = false;
  bool gsingle = false;
  std::optional<bool> gsia;
  std::optional<bool> gsib;

  bool g1() const { return g1a || g1b || g1c; }
  bool gsi() const { return gsia.value_or(false) || gsib.value_or(false); }
};

PhenomenaReport detect_all(const Workload& w, const VersionOrder& vo, const Timestamps* ts);

/// Version order minimizing (G0, G1, G-single, G2) lexicographically over
/// every version order; the first such order in enumeration order wins.
std::pair<VersionOrder, PhenomenaReport> least_phenomena(const Workload& w, const Timestamps* ts,
                                                         std::uint64_t limit = 1'000'000);

enum class PlLevel : std::uint8_t { kPl1, kPl2, kPl2Plus, kPl3, kSi, kStrict };
std::string_view to_string(PlLevel level);
/// pl1, pl2, pl2plus, pl3, si, strict
std::optional<PlLevel> parse_pl_level(std::string_view text);

/// How the SI predicate obtains start/commit points.
///   kSupplied: the workload's ranks, for every version order.
///   kDerived: for every execution e, the version order and the points
///             assign_timestamps derives from e.
///   kEnumerated: every version order with every interleaving of start and
///             commit events.
enum class TimestampSource : std::uint8_t { kSupplied, kDerived, kEnumerated };

struct OracleLimits {
  std::uint64_t max_version_orders = 1'000'000;
  std::size_t max_derived_txns = 8;
  std::size_t max_enumerated_txns = 4;
};

struct PlResult {
  bool holds = false;
  std::optional<VersionOrder> vo;
  std::optional<Timestamps> ts;
};

/// PL-1 = no G0; PL-2 = no G1; PL-2+ = no G1, no G-single; PL-3 = no G1, no
/// G2; SI = no G1, no G-SI; strict = no G1 and DSG plus start edges acyclic
/// (supplied ranks only). Each is existential over version orders.
PlResult pl_check(const Workload& w, PlLevel level,
                  TimestampSource source = TimestampSource::kDerived,
                  const OracleLimits& limits = {});

/// Visibility (vis[i][j]: i is visible to j) and arbitration (a total order).
struct VisAr {
  std::vector<std::vector<bool>> vis;
  std::vector<TxnIndex> ar;
};

/// Evaluates INT, EXT, TRANSVIS and NOCONFLICT, plus vis within ar. On
/// failure `why` names the first violated axiom.
bool psi_axiomatic_check(const Workload& w, const VisAr& va, std::string* why = nullptr);

/// Some VisAr passing psi_axiomatic_check, found by exhaustive search over
/// arbitration orders and transitive visibility relations within them.
/// Throws kBudgetExceeded when the workload has more than `cap` transactions.
std::optional<VisAr> find_vis_ar(const Workload& w, std::size_t cap = 6);

/// ar = execution order; vis(i, j) iff i is in DEP(j).
VisAr construct_vis_ar(const Execution& e);

}  // namespace statecheck
