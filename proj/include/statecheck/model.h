#pragma once

// State-based vocabulary: keys, values, operations, transactions, sessions,
// states and executions, plus the read-state predicates every commit and
// session test is built from.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace statecheck {

using TxnIndex = std::uint32_t;
using KeyIndex = std::uint32_t;
using SessionIndex = std::uint32_t;

enum class OpKind : std::uint8_t { kRead, kWrite };

/// A value is identified by the unique transaction that writes it. Reads of
/// values that no transaction in the workload writes are kept as kUnresolved:
/// they are legal input, but no state can ever hold them.
struct Value {
  enum class Kind : std::uint8_t { kBottom, kWritten, kUnresolved };

  Kind kind = Kind::kBottom;
  TxnIndex writer = 0;
  std::string raw;

  static Value bottom() { return {}; }
  static Value written(TxnIndex writer, std::string raw) {
    return {Kind::kWritten, writer, std::move(raw)};
  }
  static Value unresolved(std::string raw) {
    return {Kind::kUnresolved, 0, std::move(raw)};
  }

  bool is_bottom() const { return kind == Kind::kBottom; }
  bool is_written() const { return kind == Kind::kWritten; }
  bool is_unresolved() const { return kind == Kind::kUnresolved; }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::kBottom:
        return true;
      case Kind::kWritten:
        return a.writer == b.writer;
      case Kind::kUnresolved:
        return a.raw == b.raw;
    }
    return false;
  }
};

struct Operation {
  OpKind kind = OpKind::kRead;
  KeyIndex key = 0;
  Value value;
  std::uint32_t index = 0;  // position in the transaction order

  bool is_read() const { return kind == OpKind::kRead; }
  bool is_write() const { return kind == OpKind::kWrite; }
};

/// Start/commit ranks supplied by an external time oracle.
struct RankPair {
  std::int64_t start = 0;
  std::int64_t commit = 0;

  friend bool operator==(const RankPair&, const RankPair&) = default;
};

struct Transaction {
  std::string id;
  std::vector<Operation> ops;
  std::vector<KeyIndex> read_set;   // sorted, unique
  std::vector<KeyIndex> write_set;  // sorted, unique
  SessionIndex session = 0;
  std::uint32_t session_position = 0;
  std::optional<RankPair> ranks;

  bool writes(KeyIndex key) const;
  bool is_update() const { return !write_set.empty(); }
  /// True when an earlier operation of this transaction wrote the key that
  /// operation `op_index` reads.
  bool is_internal_read(std::size_t op_index) const;
};

struct Session {
  std::string id;
  std::vector<TxnIndex> txns;  // session order
};

// Plain mirror of the history file; values are raw strings, nullopt = bottom.
struct RawOp {
  OpKind kind = OpKind::kRead;
  std::string key;
  std::optional<std::string> value;

  friend bool operator==(const RawOp&, const RawOp&) = default;
};

struct RawTransaction {
  std::string id;
  std::optional<std::int64_t> start;
  std::optional<std::int64_t> commit;
  std::vector<RawOp> ops;

  friend bool operator==(const RawTransaction&, const RawTransaction&) = default;
};

struct RawSession {
  std::string id;
  std::vector<RawTransaction> transactions;

  friend bool operator==(const RawSession&, const RawSession&) = default;
};

struct RawHistory {
  std::vector<RawSession> sessions;

  friend bool operator==(const RawHistory&, const RawHistory&) = default;
};

/// An observed workload: sessions partitioning committed transactions.
///
/// Only constructible through from_raw(), which enforces the structural
/// invariants: unique ids, at most one write per key per transaction, unique
/// written values per key, and reads after a transaction's own write of a key
/// returning that write. Transactions are indexed in session order.
class Workload {
 public:
  Workload() = default;

  static Workload from_raw(const RawHistory& raw);
  RawHistory to_raw() const;

  std::size_t txn_count() const { return txns_.size(); }
  std::size_t key_count() const { return keys_.size(); }
  std::size_t session_count() const { return sessions_.size(); }
  bool empty() const { return txns_.empty(); }

  const Transaction& txn(TxnIndex t) const { return txns_[t]; }
  const std::vector<Transaction>& transactions() const { return txns_; }
  const Session& session(SessionIndex s) const { return sessions_[s]; }
  const std::vector<Session>& sessions() const { return sessions_; }
  const std::string& key_name(KeyIndex k) const { return keys_[k]; }

  std::optional<TxnIndex> find_txn(std::string_view id) const;
  std::optional<KeyIndex> find_key(std::string_view name) const;
  std::optional<SessionIndex> find_session(std::string_view id) const;

  /// Writers of a key, in transaction-index order.
  const std::vector<TxnIndex>& writers_of(KeyIndex k) const { return writers_[k]; }

  /// Transaction indices sorted by id; every enumeration uses this order.
  const std::vector<TxnIndex>& lexicographic_order() const { return lex_order_; }

  bool has_ranks() const;

 private:
  std::vector<std::string> keys_;
  std::vector<Transaction> txns_;
  std::vector<Session> sessions_;
  std::vector<std::vector<TxnIndex>> writers_;
  std::vector<TxnIndex> lex_order_;
  std::unordered_map<std::string, TxnIndex> txn_lookup_;
  std::unordered_map<std::string, KeyIndex> key_lookup_;
};

/// Version held by a key in a state: the writing transaction, or nullopt
/// for the initial value.
using Version = std::optional<TxnIndex>;

struct State {
  std::vector<Version> versions;  // one entry per workload key
  std::optional<TxnIndex> origin;  // nullopt for the initial state

  /// True when the state maps `key` to `value`.
  bool holds(KeyIndex key, const Value& value) const;

  friend bool operator==(const State&, const State&) = default;
};

State initial_state(const Workload& w);
State apply_transaction(const Workload& w, const State& s, TxnIndex t);
/// Keys on which two states differ, ascending.
std::vector<KeyIndex> state_delta(const State& a, const State& b);

/// A total order over (a prefix of) the workload's transactions and the
/// states it induces. State 0 is the initial state; the transaction at
/// position i produces state i + 1.
///
/// Holds a pointer to the workload, which must outlive the execution.
class Execution {
 public:
  explicit Execution(const Workload& w);

  const Workload& workload() const { return *w_; }
  const std::vector<TxnIndex>& order() const { return order_; }
  const std::vector<State>& states() const { return states_; }
  std::size_t size() const { return order_.size(); }
  bool is_total() const { return order_.size() == w_->txn_count(); }

  bool contains(TxnIndex t) const {
    return t < position_.size() && position_[t] >= 0;
  }
  /// Index of s_t, the state produced by t.
  std::size_t state_of(TxnIndex t) const;
  /// Index of t's parent state.
  std::size_t parent_of(TxnIndex t) const { return state_of(t) - 1; }
  /// Transaction whose commit produced state `index` (nullopt for s0).
  std::optional<TxnIndex> producer(std::size_t index) const {
    if (index == 0) return std::nullopt;
    return order_[index - 1];
  }

  void append(TxnIndex t);
  void pop_back();

 private:
  const Workload* w_;
  std::vector<TxnIndex> order_;
  std::vector<State> states_;
  std::vector<std::int32_t> position_;
};

Execution build_execution(const Workload& w, std::span<const TxnIndex> order);
Execution build_execution(const Workload& w, const std::vector<std::string>& ids);

/// Contiguous block [first, last] of candidate read states of one operation.
struct ReadStateSpan {
  std::size_t first = 0;
  std::size_t last = 0;
  bool empty = true;

  bool contains(std::size_t index) const {
    return !empty && first <= index && index <= last;
  }
  friend bool operator==(const ReadStateSpan&, const ReadStateSpan&) = default;
};

ReadStateSpan candidate_read_states(const Execution& e, TxnIndex t,
                                    std::size_t op_index);
/// (sf_o, sl_o); throws kEmptySpan when the operation has no candidate state.
std::pair<std::size_t, std::size_t> span_endpoints(const Execution& e, TxnIndex t,
                                                   std::size_t op_index);

bool preread(const Execution& e, TxnIndex t);
bool preread(const Execution& e, std::span<const TxnIndex> txns);
/// PREREAD over every transaction placed in the execution.
bool preread_all(const Execution& e);

bool complete(const Execution& e, TxnIndex t, std::size_t state_index);
bool internal_read_consistency(const Execution& e, TxnIndex t);

// Human-readable names used in diagnostics.
std::string describe_op(const Workload& w, const Operation& op);
std::string state_name(const Execution& e, std::size_t index);

}  // namespace statecheck
