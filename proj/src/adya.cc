#include "statecheck/adya.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>

#include "statecheck/commit_tests.h"
#include "statecheck/error.h"

namespace statecheck {

std::optional<std::size_t> VersionOrder::position(KeyIndex key, TxnIndex t) const {
  const auto& chain = chains[key];
  auto it = std::find(chain.begin(), chain.end(), t);
  if (it == chain.end()) return std::nullopt;
  return static_cast<std::size_t>(it - chain.begin());
}

VersionOrder derive_version_order(const Execution& e) {
  const auto& w = e.workload();
  VersionOrder vo;
  vo.chains.assign(w.key_count(), {});
  for (TxnIndex t : e.order()) {
    for (KeyIndex k : w.txn(t).write_set) vo.chains[k].push_back(t);
  }
  return vo;
}

std::uint64_t version_order_count(const Workload& w) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 1;
  for (KeyIndex k = 0; k < w.key_count(); ++k) {
    for (std::uint64_t i = 2; i <= w.writers_of(k).size(); ++i) {
      if (total > kMax / i) return kMax;
      total *= i;
    }
  }
  return total;
}

namespace {

// Writers of every key, sorted by transaction id.
std::vector<std::vector<TxnIndex>> sorted_writers(const Workload& w) {
  std::vector<std::size_t> rank(w.txn_count());
  const auto& lex = w.lexicographic_order();
  for (std::size_t i = 0; i < lex.size(); ++i) rank[lex[i]] = i;
  std::vector<std::vector<TxnIndex>> out(w.key_count());
  for (KeyIndex k = 0; k < w.key_count(); ++k) {
    out[k] = w.writers_of(k);
    std::sort(out[k].begin(), out[k].end(),
              [&rank](TxnIndex a, TxnIndex b) { return rank[a] < rank[b]; });
  }
  return out;
}

}  // namespace

void for_each_version_order(const Workload& w, const std::function<bool(const VersionOrder&)>& fn,
                            std::uint64_t limit) {
  if (version_order_count(w) > limit) {
    throw Error(ErrorCode::kBudgetExceeded, "version-order space exceeds " + std::to_string(limit));
  }
  std::vector<std::size_t> rank(w.txn_count());
  const auto& lex = w.lexicographic_order();
  for (std::size_t i = 0; i < lex.size(); ++i) rank[lex[i]] = i;
  auto cmp = [&rank](TxnIndex a, TxnIndex b) { return rank[a] < rank[b]; };

  VersionOrder vo;
  vo.chains = sorted_writers(w);
  const std::size_t keys = vo.chains.size();
  for (;;) {
    if (!fn(vo)) return;
    // Odometer: the last key varies fastest.
    std::size_t k = keys;
    for (;;) {
      if (k == 0) return;
      --k;
      if (std::next_permutation(vo.chains[k].begin(), vo.chains[k].end(), cmp)) break;
    }
  }
}

std::vector<VersionOrder> enumerate_version_orders(const Workload& w, std::uint64_t limit) {
  std::vector<VersionOrder> out;
  for_each_version_order(w, [&out](const VersionOrder& vo) {
    out.push_back(vo);
    return true;
  }, limit);
  return out;
}

std::optional<Timestamps> supplied_timestamps(const Workload& w) {
  if (!w.has_ranks()) return std::nullopt;
  Timestamps ts;
  for (const Transaction& t : w.transactions()) {
    ts.start.push_back(t.ranks->start);
    ts.commit.push_back(t.ranks->commit);
  }
  return ts;
}

namespace {

bool intersects(const std::vector<KeyIndex>& a, const std::vector<KeyIndex>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

}  // namespace

Timestamps assign_timestamps(const Execution& e) {
  const auto& w = e.workload();
  const std::size_t n = w.txn_count();
  constexpr std::int64_t kUnset = -1;
  Timestamps ts{std::vector<std::int64_t>(n, kUnset), std::vector<std::int64_t>(n, kUnset)};
  std::int64_t next = 0;
  for (std::size_t i = 0; i <= e.size(); ++i) {
    if (i > 0) {
      const TxnIndex t = e.order()[i - 1];
      if (ts.start[t] == kUnset) ts.start[t] = next++;
      ts.commit[t] = next++;
    }
    for (std::size_t pos = i; pos < e.size(); ++pos) {
      const TxnIndex t = e.order()[pos];
      if (ts.start[t] != kUnset) continue;
      const std::size_t parent = e.parent_of(t);
      if (!complete(e, t, i)) continue;
      if (intersects(state_delta(e.states()[i], e.states()[parent]), w.txn(t).write_set)) continue;
      ts.start[t] = next++;
    }
  }
  return ts;
}

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::kWw: return "ww";
    case EdgeKind::kWr: return "wr";
    case EdgeKind::kRw: return "rw";
    case EdgeKind::kStart: return "start";
  }
  return "?";
}

bool SerializationGraph::has_edge(EdgeKind kind, TxnIndex from, TxnIndex to) const {
  return std::any_of(edges.begin(), edges.end(), [&](const ConflictEdge& edge) {
    return edge.kind == kind && edge.from == from && edge.to == to;
  });
}

SerializationGraph build_dsg(const Workload& w, const VersionOrder& vo) {
  SerializationGraph g;
  g.nodes = w.txn_count();
  g.flavor = GraphFlavor::kDsg;
  for (KeyIndex k = 0; k < w.key_count(); ++k) {
    const auto& chain = vo.chains[k];
    for (std::size_t i = 1; i < chain.size(); ++i) {
      g.edges.push_back({EdgeKind::kWw, chain[i - 1], chain[i], k});
    }
  }
  for (TxnIndex t = 0; t < w.txn_count(); ++t) {
    const Transaction& txn = w.txn(t);
    for (std::size_t i = 0; i < txn.ops.size(); ++i) {
      const Operation& op = txn.ops[i];
      if (!op.is_read() || txn.is_internal_read(i)) continue;
      const auto& chain = vo.chains[op.key];
      std::size_t next = 0;
      if (op.value.is_written()) {
        // A read of the reader's own version (G1b) gets no wr self edge
        // but still anti-depends on the next version.
        if (op.value.writer != t) g.edges.push_back({EdgeKind::kWr, op.value.writer, t, op.key});
        next = *vo.position(op.key, op.value.writer) + 1;
      } else if (op.value.is_unresolved()) {
        continue;
      }
      if (next < chain.size() && chain[next] != t) {
        g.edges.push_back({EdgeKind::kRw, t, chain[next], op.key});
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const ConflictEdge& a, const ConflictEdge& b) {
    return std::tie(a.from, a.to, a.kind, a.key) < std::tie(b.from, b.to, b.kind, b.key);
  });
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

SerializationGraph build_ssg(const Workload& w, const VersionOrder& vo, const Timestamps& ts) {
  SerializationGraph g = build_dsg(w, vo);
  g.flavor = GraphFlavor::kSsg;
  for (TxnIndex i = 0; i < w.txn_count(); ++i) {
    for (TxnIndex j = 0; j < w.txn_count(); ++j) {
      if (i != j && ts.commit[i] < ts.start[j]) {
        g.edges.push_back({EdgeKind::kStart, i, j, std::nullopt});
      }
    }
  }
  return g;
}

std::string_view to_string(Phenomenon p) {
  switch (p) {
    case Phenomenon::kG0: return "G0";
    case Phenomenon::kG1a: return "G1a";
    case Phenomenon::kG1b: return "G1b";
    case Phenomenon::kG1c: return "G1c";
    case Phenomenon::kG2: return "G2";
    case Phenomenon::kGSingle: return "G-single";
    case Phenomenon::kGSIa: return "G-SIa";
    case Phenomenon::kGSIb: return "G-SIb";
  }
  return "?";
}

namespace {

using Reach = std::vector<std::vector<bool>>;

constexpr unsigned bit(EdgeKind k) { return 1u << static_cast<unsigned>(k); }

// reach[a][b]: b is reachable from a by one or more edges whose kind is in mask.
Reach reachability(const SerializationGraph& g, unsigned mask) {
  const std::size_t n = g.nodes;
  std::vector<std::vector<TxnIndex>> adj(n);
  for (const ConflictEdge& edge : g.edges) {
    if (mask & bit(edge.kind)) adj[edge.from].push_back(edge.to);
  }
  Reach reach(n, std::vector<bool>(n, false));
  std::vector<TxnIndex> stack;
  for (TxnIndex s = 0; s < n; ++s) {
    stack.assign(adj[s].begin(), adj[s].end());
    while (!stack.empty()) {
      const TxnIndex v = stack.back();
      stack.pop_back();
      if (reach[s][v]) continue;
      reach[s][v] = true;
      for (TxnIndex u : adj[v]) {
        if (!reach[s][u]) stack.push_back(u);
      }
    }
  }
  return reach;
}

// Some edge of kind in `closing` from u to v such that v reaches u via `path`.
bool closes_cycle(const SerializationGraph& g, unsigned closing, unsigned path) {
  const Reach reach = reachability(g, path);
  return std::any_of(g.edges.begin(), g.edges.end(), [&](const ConflictEdge& edge) {
    return (closing & bit(edge.kind)) && (edge.from == edge.to || reach[edge.to][edge.from]);
  });
}

constexpr unsigned kDep = bit(EdgeKind::kWw) | bit(EdgeKind::kWr);
constexpr unsigned kDsgAll = kDep | bit(EdgeKind::kRw);

bool has_g1a(const Workload& w) {
  for (const Transaction& txn : w.transactions()) {
    for (const Operation& op : txn.ops) {
      if (op.is_read() && op.value.is_unresolved()) return true;
    }
  }
  return false;
}

bool has_g1b(const Workload& w) {
  for (TxnIndex t = 0; t < w.txn_count(); ++t) {
    const Transaction& txn = w.txn(t);
    for (std::size_t i = 0; i < txn.ops.size(); ++i) {
      const Operation& op = txn.ops[i];
      if (op.is_read() && op.value.is_written() && op.value.writer == t &&
          !txn.is_internal_read(i)) {
        return true;
      }
    }
  }
  return false;
}

void require_ssg(const SerializationGraph& g, Phenomenon p) {
  if (g.flavor != GraphFlavor::kSsg) {
    throw Error(ErrorCode::kMissingTimestamps,
                std::string(to_string(p)) + " needs start and commit points");
  }
}

}  // namespace

bool detect(const SerializationGraph& g, Phenomenon p, const Workload& w) {
  switch (p) {
    case Phenomenon::kG0:
      return closes_cycle(g, bit(EdgeKind::kWw), bit(EdgeKind::kWw));
    case Phenomenon::kG1a:
      return has_g1a(w);
    case Phenomenon::kG1b:
      return has_g1b(w);
    case Phenomenon::kG1c:
      return closes_cycle(g, kDep, kDep);
    case Phenomenon::kG2:
      return closes_cycle(g, bit(EdgeKind::kRw), kDsgAll);
    case Phenomenon::kGSingle:
      return closes_cycle(g, bit(EdgeKind::kRw), kDep);
    case Phenomenon::kGSIa:
      require_ssg(g, p);
      return std::any_of(g.edges.begin(), g.edges.end(), [&g](const ConflictEdge& edge) {
        return (edge.kind == EdgeKind::kWw || edge.kind == EdgeKind::kWr) &&
               !g.has_edge(EdgeKind::kStart, edge.from, edge.to);
      });
    case Phenomenon::kGSIb:
      require_ssg(g, p);
      return closes_cycle(g, bit(EdgeKind::kRw), kDep | bit(EdgeKind::kStart));
  }
  return false;
}

PhenomenaReport detect_all(const Workload& w, const VersionOrder& vo, const Timestamps* ts) {
  PhenomenaReport r;
  const SerializationGraph g = ts ? build_ssg(w, vo, *ts) : build_dsg(w, vo);
  r.g0 = detect(g, Phenomenon::kG0, w);
  r.g1a = detect(g, Phenomenon::kG1a, w);
  r.g1b = detect(g, Phenomenon::kG1b, w);
  r.g1c = detect(g, Phenomenon::kG1c, w);
  r.g2 = detect(g, Phenomenon::kG2, w);
  r.gsingle = detect(g, Phenomenon::kGSingle, w);
  if (ts) {
    r.gsia = detect(g, Phenomenon::kGSIa, w);
    r.gsib = detect(g, Phenomenon::kGSIb, w);
  }
  return r;
}

std::pair<VersionOrder, PhenomenaReport> least_phenomena(const Workload& w, const Timestamps* ts,
                                                         std::uint64_t limit) {
  std::optional<std::pair<VersionOrder, PhenomenaReport>> best;
  auto score = [](const PhenomenaReport& r) { return std::tuple(r.g0, r.g1(), r.gsingle, r.g2); };
  for_each_version_order(w, [&](const VersionOrder& vo) {
    PhenomenaReport r = detect_all(w, vo, ts);
    if (!best || score(r) < score(best->second)) best.emplace(vo, r);
    return score(best->second) != std::tuple(false, false, false, false);
  }, limit);
  return *best;
}

std::string_view to_string(PlLevel level) {
  switch (level) {
    case PlLevel::kPl1: return "PL-1";
    case PlLevel::kPl2: return "PL-2";
    case PlLevel::kPl2Plus: return "PL-2+";
    case PlLevel::kPl3: return "PL-3";
    case PlLevel::kSi: return "PL-SI";
    case PlLevel::kStrict: return "PL-SS";
  }
  return "?";
}

std::optional<PlLevel> parse_pl_level(std::string_view text) {
  if (text == "pl1") return PlLevel::kPl1;
  if (text == "pl2") return PlLevel::kPl2;
  if (text == "pl2plus") return PlLevel::kPl2Plus;
  if (text == "pl3") return PlLevel::kPl3;
  if (text == "si") return PlLevel::kSi;
  if (text == "strict") return PlLevel::kStrict;
  return std::nullopt;
}

namespace {

bool si_free(const Workload& w, const VersionOrder& vo, const Timestamps& ts) {
  const SerializationGraph g = build_ssg(w, vo, ts);
  return !detect(g, Phenomenon::kG1c, w) && !detect(g, Phenomenon::kGSIa, w) &&
         !detect(g, Phenomenon::kGSIb, w);
}

// Calls fn for every assignment of distinct start/commit points with
// start < commit per transaction.
bool for_each_interleaving(std::size_t n, const std::function<bool(const Timestamps&)>& fn) {
  Timestamps ts{std::vector<std::int64_t>(n, -1), std::vector<std::int64_t>(n, -1)};
  std::function<bool(std::int64_t)> rec = [&](std::int64_t next) -> bool {
    if (next == static_cast<std::int64_t>(2 * n)) return fn(ts);
    for (std::size_t t = 0; t < n; ++t) {
      if (ts.start[t] < 0) {
        ts.start[t] = next;
        if (!rec(next + 1)) return false;
        ts.start[t] = -1;
      } else if (ts.commit[t] < 0) {
        ts.commit[t] = next;
        if (!rec(next + 1)) return false;
        ts.commit[t] = -1;
      }
    }
    return true;
  };
  return rec(0);
}

PlResult pl_si(const Workload& w, TimestampSource source, const OracleLimits& limits) {
  PlResult result;
  const bool g1_static = has_g1a(w) || has_g1b(w);
  if (g1_static) return result;
  switch (source) {
    case TimestampSource::kSupplied: {
      auto ts = supplied_timestamps(w);
      if (!ts) throw Error(ErrorCode::kMissingTimestamps, "workload carries no start/commit ranks");
      for_each_version_order(w, [&](const VersionOrder& vo) {
        if (!si_free(w, vo, *ts)) return true;
        result = {true, vo, *ts};
        return false;
      }, limits.max_version_orders);
      return result;
    }
    case TimestampSource::kDerived: {
      if (w.txn_count() > limits.max_derived_txns) {
        throw Error(ErrorCode::kBudgetExceeded, "derived SI oracle is capped at " +
                                                    std::to_string(limits.max_derived_txns) +
                                                    " transactions");
      }
      std::vector<TxnIndex> order = w.lexicographic_order();
      std::vector<std::size_t> rank(w.txn_count());
      for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
      auto cmp = [&rank](TxnIndex a, TxnIndex b) { return rank[a] < rank[b]; };
      do {
        const Execution e = build_execution(w, order);
        VersionOrder vo = derive_version_order(e);
        Timestamps ts = assign_timestamps(e);
        if (si_free(w, vo, ts)) return {true, std::move(vo), std::move(ts)};
      } while (std::next_permutation(order.begin(), order.end(), cmp));
      return result;
    }
    case TimestampSource::kEnumerated: {
      if (w.txn_count() > limits.max_enumerated_txns) {
        throw Error(ErrorCode::kBudgetExceeded, "enumerated SI oracle is capped at " +
                                                    std::to_string(limits.max_enumerated_txns) +
                                                    " transactions");
      }
      for_each_version_order(w, [&](const VersionOrder& vo) {
        return for_each_interleaving(w.txn_count(), [&](const Timestamps& ts) {
          if (!si_free(w, vo, ts)) return true;
          result = {true, vo, ts};
          return false;
        });
      }, limits.max_version_orders);
      return result;
    }
  }
  return result;
}

}  // namespace

PlResult pl_check(const Workload& w, PlLevel level, TimestampSource source,
                  const OracleLimits& limits) {
  if (level == PlLevel::kSi) return pl_si(w, source, limits);

  std::optional<Timestamps> ts;
  if (level == PlLevel::kStrict) {
    ts = supplied_timestamps(w);
    if (!ts) throw Error(ErrorCode::kMissingTimestamps, "strict level needs start/commit ranks");
  }
  const bool g1_static = has_g1a(w) || has_g1b(w);
  PlResult result;
  for_each_version_order(w, [&](const VersionOrder& vo) {
    const SerializationGraph g = ts ? build_ssg(w, vo, *ts) : build_dsg(w, vo);
    bool ok = false;
    switch (level) {
      case PlLevel::kPl1:
        ok = !detect(g, Phenomenon::kG0, w);
        break;
      case PlLevel::kPl2:
        ok = !g1_static && !detect(g, Phenomenon::kG1c, w);
        break;
      case PlLevel::kPl2Plus:
        ok = !g1_static && !detect(g, Phenomenon::kG1c, w) && !detect(g, Phenomenon::kGSingle, w);
        break;
      case PlLevel::kPl3:
        ok = !g1_static && !detect(g, Phenomenon::kG1c, w) && !detect(g, Phenomenon::kG2, w);
        break;
      case PlLevel::kStrict:
        ok = !g1_static && !closes_cycle(g, kDsgAll | bit(EdgeKind::kStart),
                                         kDsgAll | bit(EdgeKind::kStart));
        break;
      case PlLevel::kSi:
        break;
    }
    if (!ok) return true;
    result = {true, vo, ts};
    return false;
  }, limits.max_version_orders);
  return result;
}

bool psi_axiomatic_check(const Workload& w, const VisAr& va, std::string* why) {
  auto fail = [why](std::string text) {
    if (why) *why = std::move(text);
    return false;
  };
  const std::size_t n = w.txn_count();
  if (va.ar.size() != n || va.vis.size() != n) return fail("AR is not a total order over the workload");
  std::vector<std::size_t> pos(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (va.ar[i] >= n || pos[va.ar[i]] != n) return fail("AR is not a total order over the workload");
    pos[va.ar[i]] = i;
  }
  for (TxnIndex a = 0; a < n; ++a) {
    for (TxnIndex b = 0; b < n; ++b) {
      if (va.vis[a][b] && pos[a] >= pos[b]) return fail("VIS is not contained in AR");
    }
  }
  // INT
  for (const Transaction& txn : w.transactions()) {
    for (std::size_t i = 0; i < txn.ops.size(); ++i) {
      if (!txn.ops[i].is_read()) continue;
      for (std::size_t j = i; j-- > 0;) {
        if (txn.ops[j].key != txn.ops[i].key) continue;
        if (!(txn.ops[j].value == txn.ops[i].value)) {
          return fail("INT fails for " + describe_op(w, txn.ops[i]) + " in " + txn.id);
        }
        break;
      }
    }
  }
  // EXT
  for (TxnIndex t = 0; t < n; ++t) {
    const Transaction& txn = w.txn(t);
    std::vector<bool> seen(w.key_count(), false);
    for (const Operation& op : txn.ops) {
      if (seen[op.key]) continue;
      seen[op.key] = true;
      if (!op.is_read()) continue;
      std::optional<TxnIndex> latest;
      for (TxnIndex s : w.writers_of(op.key)) {
        if (s == t || !va.vis[s][t]) continue;
        if (!latest || pos[s] > pos[*latest]) latest = s;
      }
      const bool ok = latest ? op.value.is_written() && op.value.writer == *latest
                             : op.value.is_bottom();
      if (!ok) return fail("EXT fails for " + describe_op(w, op) + " in " + txn.id);
    }
  }
  // TRANSVIS
  for (TxnIndex a = 0; a < n; ++a) {
    for (TxnIndex b = 0; b < n; ++b) {
      if (!va.vis[a][b]) continue;
      for (TxnIndex c = 0; c < n; ++c) {
        if (va.vis[b][c] && !va.vis[a][c]) {
          return fail("TRANSVIS fails: " + w.txn(a).id + " -> " + w.txn(b).id + " -> " + w.txn(c).id);
        }
      }
    }
  }
  // NOCONFLICT
  for (TxnIndex a = 0; a < n; ++a) {
    for (TxnIndex b = a + 1; b < n; ++b) {
      if (intersects(w.txn(a).write_set, w.txn(b).write_set) && !va.vis[a][b] && !va.vis[b][a]) {
        return fail("NOCONFLICT fails for " + w.txn(a).id + " and " + w.txn(b).id);
      }
    }
  }
  return true;
}

std::optional<VisAr> find_vis_ar(const Workload& w, std::size_t cap) {
  const std::size_t n = w.txn_count();
  if (n > cap) {
    throw Error(ErrorCode::kBudgetExceeded,
                "visibility search is capped at " + std::to_string(cap) + " transactions");
  }
  std::vector<TxnIndex> ar = w.lexicographic_order();
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[ar[i]] = i;
  auto cmp = [&rank](TxnIndex a, TxnIndex b) { return rank[a] < rank[b]; };

  VisAr va;
  va.vis.assign(n, std::vector<bool>(n, false));
  do {
    va.ar = ar;
    // Pairs (ar[i], ar[j]) with i < j; conflicting writers are forced into VIS.
    std::vector<std::pair<TxnIndex, TxnIndex>> free_pairs;
    std::vector<std::pair<TxnIndex, TxnIndex>> forced;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool conflict = intersects(w.txn(ar[i]).write_set, w.txn(ar[j]).write_set);
        (conflict ? forced : free_pairs).emplace_back(ar[i], ar[j]);
      }
    }
    const std::uint64_t subsets = std::uint64_t{1} << free_pairs.size();
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
      for (auto& row : va.vis) std::fill(row.begin(), row.end(), false);
      for (auto [a, b] : forced) va.vis[a][b] = true;
      for (std::size_t p = 0; p < free_pairs.size(); ++p) {
        if (mask >> p & 1u) va.vis[free_pairs[p].first][free_pairs[p].second] = true;
      }
      if (psi_axiomatic_check(w, va)) return va;
    }
  } while (std::next_permutation(ar.begin(), ar.end(), cmp));
  return std::nullopt;
}

VisAr construct_vis_ar(const Execution& e) {
  const std::size_t n = e.workload().txn_count();
  const DependSets deps = compute_depends(e);
  VisAr va;
  va.ar = e.order();
  va.vis.assign(n, std::vector<bool>(n, false));
  for (TxnIndex t : e.order()) {
    for (TxnIndex d : deps.dep[t]) va.vis[d][t] = true;
  }
  return va;
}

}  // namespace statecheck
