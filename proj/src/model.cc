#include "statecheck/model.h"

#include <algorithm>
#include <map>
#include <set>

#include "statecheck/error.h"

namespace statecheck {

bool Transaction::writes(KeyIndex key) const {
  return std::binary_search(write_set.begin(), write_set.end(), key);
}

bool Transaction::is_internal_read(std::size_t op_index) const {
  const Operation& op = ops[op_index];
  if (!op.is_read()) return false;
  for (std::size_t i = 0; i < op_index; ++i) {
    if (ops[i].is_write() && ops[i].key == op.key) return true;
  }
  return false;
}

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kInvalidWorkload, where + ": " + what);
}

std::string locate(const RawSession& s, const RawTransaction& t, std::size_t op) {
  return "session '" + s.id + "' transaction '" + t.id + "' op " + std::to_string(op);
}

}  // namespace

Workload Workload::from_raw(const RawHistory& raw) {
  Workload w;
  std::set<std::string> session_ids;

  auto key_of = [&w](const std::string& name) {
    auto [it, inserted] = w.key_lookup_.try_emplace(name, static_cast<KeyIndex>(w.keys_.size()));
    if (inserted) w.keys_.push_back(name);
    return it->second;
  };

  // First pass: structure, keys and the write registry.
  std::map<std::pair<KeyIndex, std::string>, TxnIndex> written;
  for (const RawSession& rs : raw.sessions) {
    if (rs.id.empty()) invalid("session", "empty session id");
    if (!session_ids.insert(rs.id).second) invalid("session '" + rs.id + "'", "duplicate session id");
    Session session{rs.id, {}};
    const auto session_index = static_cast<SessionIndex>(w.sessions_.size());
    for (const RawTransaction& rt : rs.transactions) {
      const std::string where = "session '" + rs.id + "' transaction '" + rt.id + "'";
      if (rt.id.empty()) invalid(where, "empty transaction id");
      const auto t = static_cast<TxnIndex>(w.txns_.size());
      if (!w.txn_lookup_.emplace(rt.id, t).second) invalid(where, "duplicate transaction id");
      if (rt.start.has_value() != rt.commit.has_value()) {
        invalid(where, "start and commit must be given together");
      }
      Transaction txn;
      txn.id = rt.id;
      txn.session = session_index;
      txn.session_position = static_cast<std::uint32_t>(session.txns.size());
      if (rt.start) {
        if (*rt.start >= *rt.commit) invalid(where, "start must precede commit");
        txn.ranks = RankPair{*rt.start, *rt.commit};
      }
      for (std::size_t i = 0; i < rt.ops.size(); ++i) {
        const RawOp& ro = rt.ops[i];
        if (ro.key.empty()) invalid(locate(rs, rt, i), "empty key");
        Operation op;
        op.kind = ro.kind;
        op.key = key_of(ro.key);
        op.index = static_cast<std::uint32_t>(i);
        if (ro.kind == OpKind::kWrite) {
          if (!ro.value) invalid(locate(rs, rt, i), "a write cannot install the initial value");
          if (txn.writes(op.key)) {
            invalid(locate(rs, rt, i), "transaction writes key '" + ro.key + "' more than once");
          }
          auto [it, fresh] = written.try_emplace({op.key, *ro.value}, t);
          if (!fresh) {
            invalid(locate(rs, rt, i), "value '" + *ro.value + "' of key '" + ro.key +
                                           "' is already written by another operation");
          }
          op.value = Value::written(t, *ro.value);
          txn.write_set.insert(std::lower_bound(txn.write_set.begin(), txn.write_set.end(), op.key),
                               op.key);
        } else {
          auto pos = std::lower_bound(txn.read_set.begin(), txn.read_set.end(), op.key);
          if (pos == txn.read_set.end() || *pos != op.key) txn.read_set.insert(pos, op.key);
        }
        txn.ops.push_back(std::move(op));
      }
      session.txns.push_back(t);
      w.txns_.push_back(std::move(txn));
    }
    w.sessions_.push_back(std::move(session));
  }

  // Second pass: resolve read values against the registry.
  std::size_t flat = 0;
  for (const RawSession& rs : raw.sessions) {
    for (const RawTransaction& rt : rs.transactions) {
      Transaction& txn = w.txns_[flat++];
      for (std::size_t i = 0; i < txn.ops.size(); ++i) {
        Operation& op = txn.ops[i];
        if (!op.is_read()) continue;
        const auto& raw_value = rt.ops[i].value;
        if (!raw_value) {
          op.value = Value::bottom();
        } else if (auto it = written.find({op.key, *raw_value}); it != written.end()) {
          op.value = Value::written(it->second, *raw_value);
        } else {
          op.value = Value::unresolved(*raw_value);
        }
        for (std::size_t j = i; j-- > 0;) {
          const Operation& prior = txn.ops[j];
          if (prior.is_write() && prior.key == op.key) {
            if (!(prior.value == op.value)) {
              invalid(locate(rs, rt, i),
                      "read of '" + w.keys_[op.key] + "' after the transaction's own write must return it");
            }
            break;
          }
        }
      }
    }
  }

  w.writers_.assign(w.keys_.size(), {});
  for (TxnIndex t = 0; t < w.txns_.size(); ++t) {
    for (KeyIndex k : w.txns_[t].write_set) w.writers_[k].push_back(t);
  }
  w.lex_order_.resize(w.txns_.size());
  for (TxnIndex t = 0; t < w.txns_.size(); ++t) w.lex_order_[t] = t;
  std::sort(w.lex_order_.begin(), w.lex_order_.end(),
            [&w](TxnIndex a, TxnIndex b) { return w.txns_[a].id < w.txns_[b].id; });
  return w;
}

RawHistory Workload::to_raw() const {
  RawHistory raw;
  for (const Session& s : sessions_) {
    RawSession rs{s.id, {}};
    for (TxnIndex t : s.txns) {
      const Transaction& txn = txns_[t];
      RawTransaction rt;
      rt.id = txn.id;
      if (txn.ranks) {
        rt.start = txn.ranks->start;
        rt.commit = txn.ranks->commit;
      }
      for (const Operation& op : txn.ops) {
        RawOp ro{op.kind, keys_[op.key], std::nullopt};
        if (!op.value.is_bottom()) ro.value = op.value.raw;
        rt.ops.push_back(std::move(ro));
      }
      rs.transactions.push_back(std::move(rt));
    }
    raw.sessions.push_back(std::move(rs));
  }
  return raw;
}

std::optional<TxnIndex> Workload::find_txn(std::string_view id) const {
  auto it = txn_lookup_.find(std::string(id));
  if (it == txn_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<KeyIndex> Workload::find_key(std::string_view name) const {
  auto it = key_lookup_.find(std::string(name));
  if (it == key_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<SessionIndex> Workload::find_session(std::string_view id) const {
  for (SessionIndex s = 0; s < sessions_.size(); ++s) {
    if (sessions_[s].id == id) return s;
  }
  return std::nullopt;
}

bool Workload::has_ranks() const {
  return std::all_of(txns_.begin(), txns_.end(),
                     [](const Transaction& t) { return t.ranks.has_value(); });
}

bool State::holds(KeyIndex key, const Value& value) const {
  const Version& v = versions[key];
  switch (value.kind) {
    case Value::Kind::kBottom:
      return !v.has_value();
    case Value::Kind::kWritten:
      return v.has_value() && *v == value.writer;
    case Value::Kind::kUnresolved:
      return false;
  }
  return false;
}

State initial_state(const Workload& w) {
  return State{std::vector<Version>(w.key_count()), std::nullopt};
}

State apply_transaction(const Workload& w, const State& s, TxnIndex t) {
  State next = s;
  for (KeyIndex k : w.txn(t).write_set) next.versions[k] = t;
  next.origin = t;
  return next;
}

std::vector<KeyIndex> state_delta(const State& a, const State& b) {
  std::vector<KeyIndex> delta;
  for (KeyIndex k = 0; k < a.versions.size(); ++k) {
    if (a.versions[k] != b.versions[k]) delta.push_back(k);
  }
  return delta;
}

Execution::Execution(const Workload& w)
    : w_(&w), states_{initial_state(w)}, position_(w.txn_count(), -1) {}

std::size_t Execution::state_of(TxnIndex t) const {
  if (!contains(t)) {
    throw Error(ErrorCode::kTransactionNotInExecution,
                "transaction " + (t < w_->txn_count() ? "'" + w_->txn(t).id + "'" : std::to_string(t)) +
                    " is not part of the execution");
  }
  return static_cast<std::size_t>(position_[t]) + 1;
}

void Execution::append(TxnIndex t) {
  if (t >= w_->txn_count() || contains(t)) {
    throw Error(ErrorCode::kNotAPermutation, "transaction placed twice or unknown");
  }
  position_[t] = static_cast<std::int32_t>(order_.size());
  order_.push_back(t);
  states_.push_back(apply_transaction(*w_, states_.back(), t));
}

void Execution::pop_back() {
  position_[order_.back()] = -1;
  order_.pop_back();
  states_.pop_back();
}

Execution build_execution(const Workload& w, std::span<const TxnIndex> order) {
  if (order.size() != w.txn_count()) {
    throw Error(ErrorCode::kNotAPermutation, "order has " + std::to_string(order.size()) +
                                                 " entries but the workload has " +
                                                 std::to_string(w.txn_count()) + " transactions");
  }
  Execution e(w);
  for (TxnIndex t : order) e.append(t);
  return e;
}

Execution build_execution(const Workload& w, const std::vector<std::string>& ids) {
  std::vector<TxnIndex> order;
  order.reserve(ids.size());
  for (const std::string& id : ids) {
    auto t = w.find_txn(id);
    if (!t) throw Error(ErrorCode::kNotAPermutation, "unknown transaction '" + id + "' in order");
    order.push_back(*t);
  }
  return build_execution(w, order);
}

ReadStateSpan candidate_read_states(const Execution& e, TxnIndex t, std::size_t op_index) {
  const Transaction& txn = e.workload().txn(t);
  if (op_index >= txn.ops.size()) {
    throw Error(ErrorCode::kOperationNotInTransaction,
                "operation " + std::to_string(op_index) + " is not part of '" + txn.id + "'");
  }
  const std::size_t parent = e.parent_of(t);
  const Operation& op = txn.ops[op_index];
  if (op.is_write() || txn.is_internal_read(op_index)) return {0, parent, false};

  const auto& states = e.states();
  std::size_t first = 0;
  if (op.value.is_written()) {
    if (!e.contains(op.value.writer)) return {};
    first = e.state_of(op.value.writer);
    if (first > parent) return {};
  } else if (op.value.is_unresolved()) {
    return {};
  }
  if (!states[first].holds(op.key, op.value)) return {};
  std::size_t last = first;
  while (last < parent && states[last + 1].holds(op.key, op.value)) ++last;
  return {first, last, false};
}

std::pair<std::size_t, std::size_t> span_endpoints(const Execution& e, TxnIndex t,
                                                   std::size_t op_index) {
  const ReadStateSpan span = candidate_read_states(e, t, op_index);
  if (span.empty) {
    const auto& w = e.workload();
    throw Error(ErrorCode::kEmptySpan, "no candidate read state for " +
                                           describe_op(w, w.txn(t).ops[op_index]) + " in '" +
                                           w.txn(t).id + "'");
  }
  return {span.first, span.last};
}

bool preread(const Execution& e, TxnIndex t) {
  const auto& ops = e.workload().txn(t).ops;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (candidate_read_states(e, t, i).empty) return false;
  }
  return true;
}

bool preread(const Execution& e, std::span<const TxnIndex> txns) {
  return std::all_of(txns.begin(), txns.end(), [&e](TxnIndex t) { return preread(e, t); });
}

bool preread_all(const Execution& e) { return preread(e, e.order()); }

bool complete(const Execution& e, TxnIndex t, std::size_t state_index) {
  const auto& ops = e.workload().txn(t).ops;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (!candidate_read_states(e, t, i).contains(state_index)) return false;
  }
  // A transaction without operations reads nothing; any state up to its
  // parent qualifies.
  return ops.empty() ? state_index <= e.parent_of(t) : true;
}

bool internal_read_consistency(const Execution& e, TxnIndex t) {
  const auto& ops = e.workload().txn(t).ops;
  std::vector<ReadStateSpan> spans;
  spans.reserve(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    spans.push_back(candidate_read_states(e, t, i));
    if (spans.back().empty) return false;
  }
  for (std::size_t later = 0; later < spans.size(); ++later) {
    for (std::size_t earlier = 0; earlier < later; ++earlier) {
      if (spans[later].last < spans[earlier].first) return false;
    }
  }
  return true;
}

std::string describe_op(const Workload& w, const Operation& op) {
  std::string out = op.is_read() ? "r(" : "w(";
  out += w.key_name(op.key);
  out += ',';
  out += op.value.is_bottom() ? std::string("⊥") : op.value.raw;
  out += ')';
  return out;
}

std::string state_name(const Execution& e, std::size_t index) {
  if (index == 0) return "s0";
  return "s_" + e.workload().txn(e.order()[index - 1]).id;
}

}  // namespace statecheck
