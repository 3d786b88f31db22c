#include "statecheck/search.h"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <queue>

#include "statecheck/error.h"

namespace statecheck {

SearchBudget budget_from_env() {
  SearchBudget b;
  if (const char* env = std::getenv("STATECHECK_BUDGET")) {
    std::size_t value = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec == std::errc() && ptr == end && value > 0) b.max_exhaustive = value;
  }
  return b;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kSatisfied: return "satisfied";
    case Outcome::kViolated: return "violated";
    case Outcome::kBudgetExceeded: return "budget exceeded";
  }
  return "?";
}

namespace {

std::string order_text(const Workload& w, const std::vector<TxnIndex>& order) {
  std::string out = "[";
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) out += ", ";
    out += w.txn(order[i]).id;
  }
  return out + "]";
}

std::vector<std::size_t> lex_rank(const Workload& w) {
  std::vector<std::size_t> rank(w.txn_count());
  const auto& lex = w.lexicographic_order();
  for (std::size_t i = 0; i < lex.size(); ++i) rank[lex[i]] = i;
  return rank;
}

std::span<const TxnIndex> session_predecessors(const Workload& w, TxnIndex t) {
  const Session& s = w.session(w.txn(t).session);
  return std::span<const TxnIndex>(s.txns.data(), w.txn(t).session_position);
}

std::size_t min_last(const Execution& e, TxnIndex t) {
  std::size_t out = e.parent_of(t);
  for (std::size_t i = 0; i < e.workload().txn(t).ops.size(); ++i) {
    out = std::min(out, candidate_read_states(e, t, i).last);
  }
  return out;
}

// The clauses of the sequential-consistency test that mention t as the later
// transaction of a session pair; all other clauses are checked when their
// own later transaction is placed.
bool sc_placement(const Execution& e, TxnIndex t, std::string* why) {
  const auto& w = e.workload();
  for (std::size_t i = 0; i < w.txn(t).ops.size(); ++i) {
    if (candidate_read_states(e, t, i).empty) {
      if (why) *why = "PREREAD failed for " + describe_op(w, w.txn(t).ops[i]) + " in " + w.txn(t).id;
      return false;
    }
  }
  if (!internal_read_consistency(e, t)) {
    if (why) *why = "internal read consistency failed in " + w.txn(t).id;
    return false;
  }
  const std::size_t bound = min_last(e, t);
  for (TxnIndex prior : session_predecessors(w, t)) {
    if (!e.contains(prior)) {
      if (why) *why = "session clause failed: " + w.txn(prior).id + " precedes " + w.txn(t).id + " in its session but is not placed before it";
      return false;
    }
    if (!w.txn(t).ops.empty() && e.state_of(prior) > bound) {
      if (why) {
        *why = "session clause failed: some operation of " + w.txn(t).id +
               " reads only from states before s_" + w.txn(prior).id;
      }
      return false;
    }
  }
  return true;
}

class IsolationSearch {
 public:
  IsolationSearch(const Workload& w, IsolationLevel level, const SearchBudget& b)
      : w_(w), level_(level), bounded_(w.txn_count() > b.max_exhaustive),
        node_limit_(b.node_limit), e_(w) {}

  Verdict run() {
    Verdict v;
    const bool found = dfs();
    v.nodes = nodes_;
    if (found) {
      v.outcome = Outcome::kSatisfied;
      v.witness = e_.order();
    } else if (budget_hit_) {
      v.outcome = Outcome::kBudgetExceeded;
      v.diagnosis = "search stopped after " + std::to_string(nodes_) + " placements";
    } else {
      v.outcome = Outcome::kViolated;
      v.diagnosis = diagnosis_;
    }
    return v;
  }

 private:
  bool placement_ok(TxnIndex t, std::string* why) {
    switch (level_) {
      case IsolationLevel::kSc:
        return sc_placement(e_, t, why);
      case IsolationLevel::kPsi:
        extend_depends(e_, deps_);
        if (why) {
          *why = explain_commit_test(level_, e_, t);
          return why->empty();
        }
        return ct_psi(e_, t, deps_);
      default:
        if (why) {
          *why = explain_commit_test(level_, e_, t);
          return why->empty();
        }
        return commit_test(level_, e_, t);
    }
  }

  bool dfs() {
    if (e_.is_total()) {
      std::string why;
      if (!verify_isolation_witness(w_, level_, e_.order(), &why)) {
        throw Error(ErrorCode::kWitnessInvalid, "search produced an invalid witness: " + why);
      }
      return true;
    }
    for (TxnIndex t : w_.lexicographic_order()) {
      if (e_.contains(t)) continue;
      if (bounded_ && nodes_ >= node_limit_) {
        budget_hit_ = true;
        return false;
      }
      ++nodes_;
      e_.append(t);
      bool ok = placement_ok(t, nullptr);
      if (!ok && e_.size() > deepest_) {
        deepest_ = e_.size();
        std::string why;
        placement_ok(t, &why);
        std::vector<TxnIndex> prefix(e_.order().begin(), e_.order().end() - 1);
        diagnosis_ = "no execution satisfies " + std::string(to_string(level_)) +
                     "; deepest rejected prefix " + order_text(w_, prefix) + " + " + w_.txn(t).id +
                     ": " + why;
      }
      if (ok && dfs()) return true;
      e_.pop_back();
      if (budget_hit_) return false;
    }
    return false;
  }

  const Workload& w_;
  IsolationLevel level_;
  bool bounded_;
  std::uint64_t node_limit_;
  Execution e_;
  DependSets deps_;
  std::uint64_t nodes_ = 0;
  bool budget_hit_ = false;
  std::size_t deepest_ = 0;
  std::string diagnosis_;
};

bool preread_scope_is_global(const GuaranteeSet& g) {
  return g.contains(SessionGuarantee::kWfr) || g.contains(SessionGuarantee::kCc);
}

// Clauses of the session tests whose outcome is fixed once x is placed.
// Every check here is implied by the full test on any completion, so a
// failure rules out the whole subtree.
bool session_placement_ok(const GuaranteeSet& g, const Execution& e, SessionIndex se, TxnIndex x,
                          std::string* why) {
  const auto& w = e.workload();
  const Transaction& tx = w.txn(x);
  const bool in_session = tx.session == se;
  auto fail = [why](std::string text) {
    if (why) *why = std::move(text);
    return false;
  };

  if ((in_session || preread_scope_is_global(g)) && !preread(e, x)) {
    for (std::size_t i = 0; i < tx.ops.size(); ++i) {
      if (candidate_read_states(e, x, i).empty) {
        return fail("PREREAD failed for " + describe_op(w, tx.ops[i]) + " in " + tx.id);
      }
    }
  }
  const bool needs_irc = g.contains(SessionGuarantee::kMr) || g.contains(SessionGuarantee::kCc);
  if (in_session && needs_irc && !internal_read_consistency(e, x)) {
    return fail("internal read consistency failed in " + tx.id);
  }
  if (g.contains(SessionGuarantee::kCc)) {
    for (TxnIndex prior : session_predecessors(w, x)) {
      if (!e.contains(prior)) {
        return fail("CC: " + w.txn(prior).id + " precedes " + tx.id + " in session " +
                    w.session(tx.session).id + " but is ordered after it");
      }
    }
  }
  if ((g.contains(SessionGuarantee::kCc) || g.contains(SessionGuarantee::kRmw)) && in_session) {
    const bool cc = g.contains(SessionGuarantee::kCc);
    const std::size_t bound = min_last(e, x);
    for (TxnIndex prior : session_predecessors(w, x)) {
      if (!cc && !w.txn(prior).is_update()) continue;
      if (!e.contains(prior) || (!tx.ops.empty() && e.state_of(prior) > bound)) {
        return fail(std::string(cc ? "CC" : "RMW") + ": some operation of " + tx.id +
                    " reads only from states before s_" + w.txn(prior).id);
      }
    }
  }
  if (g.contains(SessionGuarantee::kMw) && tx.is_update()) {
    for (TxnIndex prior : session_predecessors(w, x)) {
      if (w.txn(prior).is_update() && !e.contains(prior)) {
        return fail("MW: update " + w.txn(prior).id + " precedes " + tx.id + " in session " +
                    w.session(tx.session).id + " but is ordered after it");
      }
    }
  }
  if (g.contains(SessionGuarantee::kWfr) && tx.is_update()) {
    for (TxnIndex prior : session_predecessors(w, x)) {
      const Transaction& pt = w.txn(prior);
      for (std::size_t i = 0; i < pt.ops.size(); ++i) {
        const Operation& op = pt.ops[i];
        if (!op.is_read() || pt.is_internal_read(i) || !op.value.is_written()) continue;
        const TxnIndex writer = op.value.writer;
        if (writer == x || !e.contains(writer)) {
          return fail("WFR: sf of " + describe_op(w, op) + " in " + pt.id +
                      " does not precede s_" + tx.id);
        }
      }
    }
  }
  if (g.contains(SessionGuarantee::kMr) && in_session) {
    const Session& s = w.session(se);
    const auto pos = tx.session_position;
    for (std::size_t j = 0; j < s.txns.size(); ++j) {
      const TxnIndex other = s.txns[j];
      if (j == pos || !e.contains(other) || !preread(e, other)) continue;
      const TxnIndex later = j > pos ? other : x;
      const TxnIndex earlier = j > pos ? x : other;
      for (std::size_t a = 0; a < w.txn(later).ops.size(); ++a) {
        const std::size_t sl = candidate_read_states(e, later, a).last;
        for (std::size_t b = 0; b < w.txn(earlier).ops.size(); ++b) {
          if (sl < candidate_read_states(e, earlier, b).first) {
            return fail("MR: sl of " + describe_op(w, w.txn(later).ops[a]) + " in " +
                        w.txn(later).id + " precedes sf of " +
                        describe_op(w, w.txn(earlier).ops[b]) + " in " + w.txn(earlier).id);
          }
        }
      }
    }
  }
  return true;
}

class SessionSearch {
 public:
  SessionSearch(const Workload& w, const GuaranteeSet& g, SessionIndex se, bool bounded,
                std::uint64_t node_limit)
      : w_(w), g_(g), se_(se), bounded_(bounded), node_limit_(node_limit), e_(w) {}

  Outcome run() { return dfs() ? Outcome::kSatisfied : budget_hit_ ? Outcome::kBudgetExceeded : Outcome::kViolated; }
  const std::vector<TxnIndex>& witness() const { return witness_; }
  const std::string& diagnosis() const { return diagnosis_; }
  std::uint64_t nodes() const { return nodes_; }

 private:
  bool dfs() {
    if (e_.is_total()) {
      std::string why;
      if (verify_session_witness(w_, g_, se_, e_.order(), &why)) {
        witness_ = e_.order();
        return true;
      }
      record(why);
      return false;
    }
    for (TxnIndex t : w_.lexicographic_order()) {
      if (e_.contains(t)) continue;
      if (bounded_ && nodes_ >= node_limit_) {
        budget_hit_ = true;
        return false;
      }
      ++nodes_;
      e_.append(t);
      bool ok = session_placement_ok(g_, e_, se_, t, nullptr);
      if (!ok && e_.size() > deepest_) {
        std::string why;
        session_placement_ok(g_, e_, se_, t, &why);
        record(why);
      }
      if (ok && dfs()) return true;
      e_.pop_back();
      if (budget_hit_) return false;
    }
    return false;
  }

  void record(const std::string& why) {
    if (e_.size() <= deepest_ && !diagnosis_.empty()) return;
    deepest_ = e_.size();
    diagnosis_ = "session " + w_.session(se_).id + ": no execution satisfies " + to_string(g_) +
                 "; deepest rejected prefix " + order_text(w_, e_.order()) + ": " + why;
  }

  const Workload& w_;
  const GuaranteeSet& g_;
  SessionIndex se_;
  bool bounded_;
  std::uint64_t node_limit_;
  Execution e_;
  std::uint64_t nodes_ = 0;
  bool budget_hit_ = false;
  std::size_t deepest_ = 0;
  std::string diagnosis_;
  std::vector<TxnIndex> witness_;
};

template <typename Fn>
bool for_each_permutation(const Workload& w, Fn&& fn) {
  std::vector<TxnIndex> order = w.lexicographic_order();
  const auto rank = lex_rank(w);
  auto cmp = [&rank](TxnIndex a, TxnIndex b) { return rank[a] < rank[b]; };
  do {
    if (fn(order)) return true;
  } while (std::next_permutation(order.begin(), order.end(), cmp));
  return false;
}

void require_guarantees(const GuaranteeSet& g) {
  if (g.empty()) throw Error(ErrorCode::kInvalidArgument, "empty guarantee set");
}

}  // namespace

bool verify_isolation_witness(const Workload& w, IsolationLevel level,
                              const std::vector<TxnIndex>& order, std::string* why) {
  const Execution e = build_execution(w, order);
  for (TxnIndex t : order) {
    std::string text = explain_commit_test(level, e, t);
    if (!text.empty()) {
      if (why) *why = std::move(text);
      return false;
    }
  }
  return true;
}

bool verify_session_witness(const Workload& w, const GuaranteeSet& g, SessionIndex se,
                            const std::vector<TxnIndex>& order, std::string* why) {
  require_guarantees(g);
  const Execution e = build_execution(w, order);
  for (TxnIndex t : w.session(se).txns) {
    std::string text = explain_session_test(g, e, se, t);
    if (!text.empty()) {
      if (why) *why = std::move(text);
      return false;
    }
  }
  return true;
}

Verdict check_isolation(const Workload& w, IsolationLevel level, const SearchBudget& b) {
  if (level == IsolationLevel::kSser && !w.has_ranks()) {
    throw Error(ErrorCode::kMissingTimestamps,
                "strict serializability needs start/commit ranks on every transaction");
  }
  return IsolationSearch(w, level, b).run();
}

Verdict check_isolation_unpruned(const Workload& w, IsolationLevel level) {
  Verdict v;
  std::string first_failure;
  const bool found = for_each_permutation(w, [&](const std::vector<TxnIndex>& order) {
    ++v.nodes;
    std::string why;
    if (verify_isolation_witness(w, level, order, &why)) {
      v.witness = order;
      return true;
    }
    if (first_failure.empty()) first_failure = order_text(w, order) + ": " + why;
    return false;
  });
  v.outcome = found ? Outcome::kSatisfied : Outcome::kViolated;
  if (!found) {
    v.diagnosis = "no execution satisfies " + std::string(to_string(level)) + "; first order " +
                  first_failure;
  }
  return v;
}

Verdict check_session(const Workload& w, const GuaranteeSet& g, const SearchBudget& b) {
  require_guarantees(g);
  Verdict v;
  v.outcome = Outcome::kSatisfied;
  const bool bounded = w.txn_count() > b.max_exhaustive;
  std::string budget_note;
  for (SessionIndex se = 0; se < w.session_count(); ++se) {
    SessionSearch search(w, g, se, bounded, b.node_limit);
    const Outcome outcome = search.run();
    v.nodes += search.nodes();
    if (outcome == Outcome::kSatisfied) {
      v.per_session[se] = search.witness();
    } else if (outcome == Outcome::kViolated) {
      v.outcome = Outcome::kViolated;
      v.per_session.clear();
      v.diagnosis = search.diagnosis();
      return v;
    } else {
      v.outcome = Outcome::kBudgetExceeded;
      budget_note = "search for session " + w.session(se).id + " stopped after " +
                    std::to_string(search.nodes()) + " placements";
    }
  }
  if (v.outcome == Outcome::kBudgetExceeded) {
    v.per_session.clear();
    v.diagnosis = budget_note;
  }
  return v;
}

Verdict check_session_unpruned(const Workload& w, const GuaranteeSet& g) {
  require_guarantees(g);
  Verdict v;
  v.outcome = Outcome::kSatisfied;
  for (SessionIndex se = 0; se < w.session_count(); ++se) {
    std::string first_failure;
    const bool found = for_each_permutation(w, [&](const std::vector<TxnIndex>& order) {
      ++v.nodes;
      std::string why;
      if (verify_session_witness(w, g, se, order, &why)) {
        v.per_session[se] = order;
        return true;
      }
      if (first_failure.empty()) first_failure = order_text(w, order) + ": " + why;
      return false;
    });
    if (!found) {
      v.outcome = Outcome::kViolated;
      v.per_session.clear();
      v.diagnosis = "session " + w.session(se).id + ": no execution satisfies " + to_string(g) +
                    "; first order " + first_failure;
      return v;
    }
  }
  return v;
}

namespace {

Execution topological_execution(const Workload& w, const std::vector<std::vector<bool>>& edge,
                                 std::string_view what) {
  const std::size_t n = w.txn_count();
  const auto rank = lex_rank(w);
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (edge[a][b]) ++indegree[b];
    }
  }
  auto later = [&rank](TxnIndex a, TxnIndex b) { return rank[a] > rank[b]; };
  std::priority_queue<TxnIndex, std::vector<TxnIndex>, decltype(later)> ready(later);
  for (TxnIndex t = 0; t < n; ++t) {
    if (indegree[t] == 0) ready.push(t);
  }
  Execution e(w);
  while (!ready.empty()) {
    const TxnIndex t = ready.top();
    ready.pop();
    e.append(t);
    for (TxnIndex b = 0; b < n; ++b) {
      if (edge[t][b] && --indegree[b] == 0) ready.push(b);
    }
  }
  if (!e.is_total()) {
    throw Error(ErrorCode::kCyclicGraph, std::string(what) + " has a cycle");
  }
  return e;
}

std::vector<std::vector<bool>> edge_matrix(const SerializationGraph& g,
                                           std::initializer_list<EdgeKind> kinds) {
  std::vector<std::vector<bool>> m(g.nodes, std::vector<bool>(g.nodes, false));
  for (const ConflictEdge& edge : g.edges) {
    if (std::find(kinds.begin(), kinds.end(), edge.kind) != kinds.end() && edge.from != edge.to) {
      m[edge.from][edge.to] = true;
    }
  }
  return m;
}

const Workload& history_workload(const AdyaHistory& h) {
  if (!h.workload) throw Error(ErrorCode::kInvalidArgument, "history has no workload");
  return *h.workload;
}

}  // namespace

Execution construct_ser_execution(const AdyaHistory& h) {
  const Workload& w = history_workload(h);
  const SerializationGraph g = build_dsg(w, h.vo);
  return topological_execution(w, edge_matrix(g, {EdgeKind::kWw, EdgeKind::kWr, EdgeKind::kRw}),
                               "DSG");
}

Execution construct_si_execution(const AdyaHistory& h) {
  const Workload& w = history_workload(h);
  if (!h.ts) throw Error(ErrorCode::kMissingTimestamps, "SI construction needs start/commit points");
  const SerializationGraph g = build_ssg(w, h.vo, *h.ts);
  const auto start = edge_matrix(g, {EdgeKind::kStart});
  const auto rw = edge_matrix(g, {EdgeKind::kRw});
  const std::size_t n = w.txn_count();
  auto logical = start;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (!start[i][k]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (rw[k][j] && i != j) logical[i][j] = true;
      }
    }
  }
  return topological_execution(w, logical, "logical-order graph");
}

Execution construct_psi_execution(const AdyaHistory& h) {
  const Workload& w = history_workload(h);
  const SerializationGraph g = build_dsg(w, h.vo);
  return topological_execution(w, edge_matrix(g, {EdgeKind::kWw, EdgeKind::kWr}),
                               "dependency graph");
}

std::map<SessionIndex, std::vector<TxnIndex>> construct_cc_execution(
    const Workload& w, const std::map<SessionIndex, std::vector<TxnIndex>>& witnesses) {
  std::map<SessionIndex, std::vector<TxnIndex>> out;
  for (const auto& [se, order] : witnesses) {
    const Execution e = build_execution(w, order);
    if (!preread(e, e.order())) {
      throw Error(ErrorCode::kWitnessInvalid,
                  "witness for session " + w.session(se).id + " fails PREREAD");
    }
    std::vector<TxnIndex> updates;
    std::vector<std::size_t> update_pos(w.txn_count(), 0);
    for (TxnIndex t : order) {
      if (w.txn(t).is_update()) {
        updates.push_back(t);
        update_pos[t] = updates.size();  // state count after applying t
      }
    }
    // anchor[t]: number of updates applied before read-only t in the rebuilt order.
    std::vector<std::size_t> anchor(w.txn_count(), 0);
    for (const Session& s : w.sessions()) {
      for (std::size_t j = 0; j < s.txns.size(); ++j) {
        const TxnIndex t = s.txns[j];
        if (w.txn(t).is_update()) continue;
        std::size_t a = 0;
        for (std::size_t i = 0; i < w.txn(t).ops.size(); ++i) {
          const std::size_t sf = candidate_read_states(e, t, i).first;
          if (sf > 0) a = std::max(a, update_pos[*e.producer(sf)]);
        }
        if (j > 0) {
          const TxnIndex prev = s.txns[j - 1];
          a = std::max(a, w.txn(prev).is_update() ? update_pos[prev] : anchor[prev]);
        }
        anchor[t] = a;
      }
    }
    std::vector<std::vector<TxnIndex>> groups(updates.size() + 1);
    for (TxnIndex t : order) {
      if (!w.txn(t).is_update()) groups[anchor[t]].push_back(t);
    }
    std::vector<TxnIndex> rebuilt;
    std::vector<bool> emitted(w.txn_count(), false);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      // Within a group keep witness order, but never ahead of a read-only
      // session predecessor from the same group.
      auto& group = groups[g];
      while (!group.empty()) {
        auto it = std::find_if(group.begin(), group.end(), [&](TxnIndex t) {
          const auto preds = session_predecessors(w, t);
          return preds.empty() || w.txn(preds.back()).is_update() || emitted[preds.back()] ||
                 anchor[preds.back()] != g;
        });
        if (it == group.end()) it = group.begin();
        emitted[*it] = true;
        rebuilt.push_back(*it);
        group.erase(it);
      }
      if (g < updates.size()) {
        emitted[updates[g]] = true;
        rebuilt.push_back(updates[g]);
      }
    }
    std::string why;
    if (!verify_session_witness(w, {SessionGuarantee::kCc}, se, rebuilt, &why)) {
      throw Error(ErrorCode::kWitnessInvalid, "rebuilt execution for session " + w.session(se).id +
                                                  " fails the causal test: " + why);
    }
    out[se] = std::move(rebuilt);
  }
  return out;
}

std::vector<std::size_t> count_dependencies(const Execution& e, DependencyMode mode) {
  const auto& w = e.workload();
  std::vector<std::size_t> counts(w.txn_count(), 0);
  if (mode == DependencyMode::kPerSiteSi) {
    for (std::size_t pos = 0; pos < e.size(); ++pos) counts[e.order()[pos]] = pos;
    return counts;
  }
  const DependSets deps = compute_depends(e);
  for (TxnIndex t : e.order()) counts[t] = deps.dep[t].size();
  return counts;
}

}  // namespace statecheck
