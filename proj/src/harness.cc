#include "statecheck/harness.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"
#include "statecheck/adya.h"
#include "statecheck/error.h"
#include "statecheck/history_io.h"
#include "statecheck/session_tests.h"

namespace statecheck {

std::uint64_t Rng::between(std::uint64_t lo, std::uint64_t hi) {
  const std::uint64_t range = hi - lo + 1;
  if (range == 0) return engine_();
  const std::uint64_t threshold = (0 - range) % range;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x < threshold);
  return lo + x % range;
}

bool Rng::chance(double p) {
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return u < p;
}

void validate(const GenParams& p) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (p.sessions == 0) bad("sessions must be positive");
  if (p.min_txns == 0 || p.min_txns > p.max_txns) bad("transactions per session must be a positive range");
  if (p.min_ops == 0 || p.min_ops > p.max_ops) bad("operations per transaction must be a positive range");
  if (p.keys == 0) bad("keys must be positive");
  if (!(p.read_fraction >= 0.0 && p.read_fraction <= 1.0)) bad("read fraction must lie in [0, 1]");
}

namespace {

std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

// Index of every op in a raw history, with the flag telling whether its
// value is still free to choose.
struct FreeRead {
  std::size_t session;
  std::size_t txn;
  std::size_t op;
};

bool follows_own_write(const RawTransaction& t, std::size_t op) {
  for (std::size_t i = 0; i < op; ++i) {
    if (t.ops[i].kind == OpKind::kWrite && t.ops[i].key == t.ops[op].key) return true;
  }
  return false;
}

std::vector<FreeRead> free_reads(const RawHistory& h) {
  std::vector<FreeRead> out;
  for (std::size_t s = 0; s < h.sessions.size(); ++s) {
    for (std::size_t t = 0; t < h.sessions[s].transactions.size(); ++t) {
      const RawTransaction& txn = h.sessions[s].transactions[t];
      for (std::size_t o = 0; o < txn.ops.size(); ++o) {
        if (txn.ops[o].kind == OpKind::kRead && !follows_own_write(txn, o)) out.push_back({s, t, o});
      }
    }
  }
  return out;
}

}  // namespace

RawHistory generate_skeleton(const GenParams& p) {
  validate(p);
  Rng rng(p.seed);
  std::vector<std::size_t> per_session(p.sessions);
  for (auto& n : per_session) n = rng.between(p.min_txns, p.max_txns);
  const std::size_t total = std::accumulate(per_session.begin(), per_session.end(), std::size_t{0});
  const std::size_t width = std::max<std::size_t>(2, std::to_string(total).size());

  RawHistory h;
  std::size_t next_txn = 1;
  for (std::size_t s = 0; s < p.sessions; ++s) {
    RawSession rs;
    rs.id = "s" + std::to_string(s + 1);
    for (std::size_t i = 0; i < per_session[s]; ++i) {
      RawTransaction rt;
      rt.id = "t" + padded(next_txn++, width);
      const std::size_t ops = rng.between(p.min_ops, p.max_ops);
      std::set<std::string> written;
      for (std::size_t o = 0; o < ops; ++o) {
        const bool is_read = rng.chance(p.read_fraction);
        const std::string key = "k" + std::to_string(rng.between(1, p.keys));
        RawOp op;
        op.key = key;
        if (is_read) {
          op.kind = OpKind::kRead;
          if (written.contains(key)) op.value = rt.id;
        } else {
          if (written.contains(key)) continue;  // a transaction writes a key once
          op.kind = OpKind::kWrite;
          op.value = rt.id;
          written.insert(key);
        }
        rt.ops.push_back(std::move(op));
      }
      rs.transactions.push_back(std::move(rt));
    }
    h.sessions.push_back(std::move(rs));
  }
  return h;
}

RawHistory generate_workload(const GenParams& p) {
  RawHistory h = generate_skeleton(p);
  std::map<std::string, std::vector<std::string>> writers;
  for (const RawSession& s : h.sessions) {
    for (const RawTransaction& t : s.transactions) {
      for (const RawOp& op : t.ops) {
        if (op.kind == OpKind::kWrite) writers[op.key].push_back(t.id);
      }
    }
  }
  // A separate stream so that the skeleton does not depend on read choices.
  Rng rng(p.seed ^ 0x9e3779b97f4a7c15ull);
  for (const FreeRead& fr : free_reads(h)) {
    RawTransaction& txn = h.sessions[fr.session].transactions[fr.txn];
    RawOp& op = txn.ops[fr.op];
    std::vector<std::optional<std::string>> options{std::nullopt};
    for (const std::string& w : writers[op.key]) {
      if (w != txn.id) options.emplace_back(w);
    }
    op.value = options[rng.between(0, options.size() - 1)];
  }
  return h;
}

namespace {

struct FlatTxn {
  std::size_t session;
  std::size_t index;  // within session
  const RawTransaction* raw;
};

std::vector<FlatTxn> flatten(const RawHistory& h) {
  std::vector<FlatTxn> out;
  for (std::size_t s = 0; s < h.sessions.size(); ++s) {
    for (std::size_t t = 0; t < h.sessions[s].transactions.size(); ++t) {
      out.push_back({s, t, &h.sessions[s].transactions[t]});
    }
  }
  return out;
}

std::vector<std::size_t> random_order(const RawHistory& h, const std::vector<FlatTxn>& flat,
                                      bool session_respecting, Rng& rng) {
  std::vector<std::size_t> order(flat.size());
  if (!session_respecting) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    return order;
  }
  std::vector<std::size_t> first(h.sessions.size(), 0);
  for (std::size_t i = 0, s = 0; s < h.sessions.size(); ++s) {
    first[s] = i;
    i += h.sessions[s].transactions.size();
  }
  std::vector<std::size_t> next(h.sessions.size(), 0);
  order.clear();
  std::vector<std::size_t> remaining;
  for (std::size_t s = 0; s < h.sessions.size(); ++s) {
    for (std::size_t k = 0; k < h.sessions[s].transactions.size(); ++k) remaining.push_back(s);
  }
  // Picking a uniformly random remaining slot weights sessions by their
  // remaining length, which makes every interleaving equally likely.
  while (!remaining.empty()) {
    const std::size_t pick = rng.between(0, remaining.size() - 1);
    const std::size_t s = remaining[pick];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    order.push_back(first[s] + next[s]++);
  }
  return order;
}

using Versions = std::map<std::string, std::optional<std::string>>;

enum class ReadPolicy { kParent, kSnapshot, kAny, kCausal };

RawHistory fill_reads(const RawHistory& skeleton, ReadPolicy policy, bool ranks, Rng& rng,
                      std::vector<std::size_t>& order_out) {
  const std::vector<FlatTxn> flat = flatten(skeleton);
  const bool session_respecting = policy == ReadPolicy::kCausal || policy == ReadPolicy::kParent;
  std::vector<std::size_t> order = random_order(skeleton, flat, session_respecting, rng);

  std::vector<Versions> states(1);
  for (std::size_t flat_index : order) {
    Versions next = states.back();
    for (const RawOp& op : flat[flat_index].raw->ops) {
      if (op.kind == OpKind::kWrite) next[op.key] = flat[flat_index].raw->id;
    }
    states.push_back(std::move(next));
  }
  auto version = [&states](std::size_t state, const std::string& key) -> std::optional<std::string> {
    auto it = states[state].find(key);
    return it == states[state].end() ? std::nullopt : it->second;
  };
  auto writes_key = [&](std::size_t flat_index, const std::string& key) {
    for (const RawOp& op : flat[flat_index].raw->ops) {
      if (op.kind == OpKind::kWrite && op.key == key) return true;
    }
    return false;
  };

  RawHistory out = skeleton;
  std::vector<std::size_t> position(flat.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) position[order[pos]] = pos;

  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t fi = order[pos];
    const std::size_t parent = pos;
    RawTransaction& txn = out.sessions[flat[fi].session].transactions[flat[fi].index];
    std::size_t snapshot = parent;
    if (policy == ReadPolicy::kSnapshot) {
      std::vector<std::size_t> valid;
      for (std::size_t s = 0; s <= parent; ++s) {
        bool disjoint = true;
        for (std::size_t between = s; between < parent && disjoint; ++between) {
          for (const RawOp& op : flat[fi].raw->ops) {
            if (op.kind == OpKind::kWrite && writes_key(order[between], op.key)) disjoint = false;
          }
        }
        if (disjoint) valid.push_back(s);
      }
      snapshot = valid[rng.between(0, valid.size() - 1)];
    }
    std::size_t floor = 0;
    if (policy == ReadPolicy::kCausal && flat[fi].index > 0) floor = position[fi - 1] + 1;
    for (std::size_t o = 0; o < txn.ops.size(); ++o) {
      RawOp& op = txn.ops[o];
      if (op.kind != OpKind::kRead || follows_own_write(txn, o)) continue;
      std::size_t state = parent;
      switch (policy) {
        case ReadPolicy::kParent:
          break;
        case ReadPolicy::kSnapshot:
          state = snapshot;
          break;
        case ReadPolicy::kAny:
          state = rng.between(0, parent);
          break;
        case ReadPolicy::kCausal:
          floor = rng.between(floor, parent);
          state = floor;
          break;
      }
      op.value = version(state, op.key);
    }
    if (ranks) {
      txn.start = static_cast<std::int64_t>(2 * pos);
      txn.commit = static_cast<std::int64_t>(2 * pos + 1);
    }
  }
  order_out = order;
  return out;
}

std::vector<TxnIndex> to_txn_order(const Workload& w, const RawHistory& h,
                                   const std::vector<std::size_t>& flat_order) {
  const std::vector<FlatTxn> flat = flatten(h);
  std::vector<TxnIndex> order;
  for (std::size_t fi : flat_order) order.push_back(*w.find_txn(flat[fi].raw->id));
  return order;
}

}  // namespace

RawHistory simulate_level(const RawHistory& skeleton, IsolationLevel level, std::uint64_t seed,
                          int attempts) {
  ReadPolicy policy = ReadPolicy::kAny;
  switch (level) {
    case IsolationLevel::kSer:
    case IsolationLevel::kSser:
    case IsolationLevel::kSc:
      policy = ReadPolicy::kParent;
      break;
    case IsolationLevel::kSi:
    case IsolationLevel::kPsi:
      policy = ReadPolicy::kSnapshot;
      break;
    case IsolationLevel::kRc:
    case IsolationLevel::kRu:
      policy = ReadPolicy::kAny;
      break;
  }
  Rng rng(seed);
  std::string last_failure;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    std::vector<std::size_t> flat_order;
    RawHistory filled = fill_reads(skeleton, policy, level == IsolationLevel::kSser, rng, flat_order);
    const Workload w = Workload::from_raw(filled);
    if (verify_isolation_witness(w, level, to_txn_order(w, filled, flat_order), &last_failure)) {
      return filled;
    }
  }
  throw Error(ErrorCode::kUnfillableSkeleton,
              "no fill satisfied " + std::string(to_string(level)) + ": " + last_failure);
}

RawHistory simulate_causal(const RawHistory& skeleton, std::uint64_t seed, int attempts) {
  Rng rng(seed);
  std::string last_failure;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    std::vector<std::size_t> flat_order;
    RawHistory filled = fill_reads(skeleton, ReadPolicy::kCausal, false, rng, flat_order);
    const Workload w = Workload::from_raw(filled);
    const auto order = to_txn_order(w, filled, flat_order);
    bool ok = true;
    for (SessionIndex se = 0; se < w.session_count() && ok; ++se) {
      ok = verify_session_witness(w, {SessionGuarantee::kCc}, se, order, &last_failure);
    }
    if (ok) return filled;
  }
  throw Error(ErrorCode::kUnfillableSkeleton, "no fill satisfied CC: " + last_failure);
}

namespace {

// Compact form of a small workload: per transaction a list of operations,
// reads carrying -1 for the initial value or the writer's global index.
struct SmallOp {
  bool write;
  int key;
  int value;  // writes: own index; reads: -1 or writer
};
using SmallTxn = std::vector<SmallOp>;

struct Shape {
  std::vector<std::pair<bool, int>> ops;  // (write, key)
};

std::vector<Shape> txn_shapes(const SmallBounds& b) {
  std::vector<Shape> out;
  std::vector<std::pair<bool, int>> cur;
  std::function<void()> rec = [&]() {
    if (!cur.empty()) out.push_back({cur});
    if (cur.size() == b.ops) return;
    for (int write = 0; write < 2; ++write) {
      for (int k = 0; k < static_cast<int>(b.keys); ++k) {
        if (write && std::any_of(cur.begin(), cur.end(),
                                 [k](const auto& op) { return op.first && op.second == k; })) {
          continue;
        }
        cur.emplace_back(write == 1, k);
        rec();
        cur.pop_back();
      }
    }
  };
  rec();
  return out;
}

void partitions(std::size_t n, std::size_t max_parts, std::size_t max_part,
                std::vector<std::size_t>& cur, std::vector<std::vector<std::size_t>>& out) {
  if (n == 0) {
    out.push_back(cur);
    return;
  }
  if (cur.size() == max_parts) return;
  for (std::size_t part = std::min(n, max_part); part >= 1; --part) {
    cur.push_back(part);
    partitions(n - part, max_parts, part, cur, out);
    cur.pop_back();
  }
}

std::vector<int> encode(const std::vector<SmallTxn>& txns) {
  std::vector<int> code;
  for (const SmallTxn& t : txns) {
    code.push_back(static_cast<int>(t.size()));
    for (const SmallOp& op : t) {
      code.push_back(op.write ? 1 : 0);
      code.push_back(op.key);
      code.push_back(op.value);
    }
  }
  return code;
}

// Relabels keys by `keys` and reorders sessions by `sessions` (a permutation
// of equal-length sessions), returning the image's encoding.
std::vector<int> image(const std::vector<SmallTxn>& txns, const std::vector<std::size_t>& sizes,
                       const std::vector<std::size_t>& sessions, const std::vector<int>& keys) {
  std::vector<std::size_t> first(sizes.size(), 0);
  for (std::size_t s = 1; s < sizes.size(); ++s) first[s] = first[s - 1] + sizes[s - 1];
  // new_index[old] for every transaction
  std::vector<int> new_index(txns.size());
  std::vector<std::size_t> order;
  std::size_t next = 0;
  for (std::size_t slot = 0; slot < sessions.size(); ++slot) {
    const std::size_t s = sessions[slot];
    for (std::size_t i = 0; i < sizes[s]; ++i) {
      new_index[first[s] + i] = static_cast<int>(next++);
      order.push_back(first[s] + i);
    }
  }
  std::vector<SmallTxn> out;
  for (std::size_t old : order) {
    SmallTxn t = txns[old];
    for (SmallOp& op : t) {
      op.key = keys[op.key];
      if (op.value >= 0) op.value = new_index[op.value];
    }
    out.push_back(std::move(t));
  }
  return encode(out);
}

RawHistory to_raw(const std::vector<SmallTxn>& txns, const std::vector<std::size_t>& sizes) {
  static const char* kKeys[] = {"x", "y", "z", "u", "v", "w"};
  auto key_name = [](int k) {
    return k < 6 ? std::string(kKeys[k]) : "k" + std::to_string(k);
  };
  RawHistory h;
  std::size_t t = 0;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    RawSession rs;
    rs.id = "s" + std::to_string(s + 1);
    for (std::size_t i = 0; i < sizes[s]; ++i, ++t) {
      RawTransaction rt;
      rt.id = "t" + std::to_string(t + 1);
      for (const SmallOp& op : txns[t]) {
        RawOp ro;
        ro.kind = op.write ? OpKind::kWrite : OpKind::kRead;
        ro.key = key_name(op.key);
        if (op.value >= 0) ro.value = "t" + std::to_string(op.value + 1);
        rt.ops.push_back(std::move(ro));
      }
      rs.transactions.push_back(std::move(rt));
    }
    h.sessions.push_back(std::move(rs));
  }
  return h;
}

template <typename Fn>
void enumerate_family(const SmallBounds& b, bool reduce, Fn&& emit) {
  if (b.txns == 0 || b.ops == 0 || b.keys == 0 || b.sessions == 0) {
    throw Error(ErrorCode::kInvalidArgument, "family bounds must be positive");
  }
  const std::vector<Shape> shapes = txn_shapes(b);
  std::vector<int> identity_keys(b.keys);
  std::iota(identity_keys.begin(), identity_keys.end(), 0);
  std::vector<std::vector<int>> key_perms;
  {
    std::vector<int> p = identity_keys;
    do key_perms.push_back(p); while (std::next_permutation(p.begin(), p.end()));
  }

  for (std::size_t n = 1; n <= b.txns; ++n) {
    std::vector<std::vector<std::size_t>> parts;
    std::vector<std::size_t> cur;
    partitions(n, b.sessions, n, cur, parts);
    for (const auto& sizes : parts) {
      // Session permutations that only exchange equal-length sessions.
      std::vector<std::vector<std::size_t>> session_perms;
      {
        std::vector<std::size_t> p(sizes.size());
        std::iota(p.begin(), p.end(), std::size_t{0});
        do {
          bool ok = true;
          for (std::size_t i = 0; i < p.size(); ++i) ok = ok && sizes[p[i]] == sizes[i];
          if (ok) session_perms.push_back(p);
        } while (std::next_permutation(p.begin(), p.end()));
      }
      std::vector<SmallTxn> txns(n);
      std::vector<std::size_t> shape_of(n, 0);

      std::function<void(std::size_t)> pick_shape;
      std::function<void(std::size_t, std::size_t)> pick_value;
      auto finish = [&]() {
        if (reduce) {
          const std::vector<int> code = encode(txns);
          for (const auto& sp : session_perms) {
            for (const auto& kp : key_perms) {
              if (image(txns, sizes, sp, kp) < code) return;
            }
          }
        }
        emit(txns, sizes);
      };
      pick_value = [&](std::size_t t, std::size_t o) {
        if (t == n) {
          finish();
          return;
        }
        if (o == txns[t].size()) {
          pick_value(t + 1, 0);
          return;
        }
        SmallOp& op = txns[t][o];
        if (op.write) {
          pick_value(t, o + 1);
          return;
        }
        for (std::size_t i = 0; i < o; ++i) {
          if (txns[t][i].write && txns[t][i].key == op.key) {
            op.value = static_cast<int>(t);
            pick_value(t, o + 1);
            return;
          }
        }
        op.value = -1;
        pick_value(t, o + 1);
        for (std::size_t w = 0; w < n; ++w) {
          const bool writes = std::any_of(txns[w].begin(), txns[w].end(), [&](const SmallOp& x) {
            return x.write && x.key == op.key;
          });
          if (!writes) continue;
          op.value = static_cast<int>(w);
          pick_value(t, o + 1);
        }
      };
      pick_shape = [&](std::size_t t) {
        if (t == n) {
          pick_value(0, 0);
          return;
        }
        for (const Shape& shape : shapes) {
          txns[t].clear();
          for (auto [write, key] : shape.ops) {
            txns[t].push_back({write, key, write ? static_cast<int>(t) : -1});
          }
          pick_shape(t + 1);
        }
      };
      pick_shape(0);
    }
  }
}

}  // namespace

void for_each_small_workload(const SmallBounds& b, const std::function<void(const RawHistory&)>& fn) {
  enumerate_family(b, true, [&fn](const std::vector<SmallTxn>& txns,
                                  const std::vector<std::size_t>& sizes) { fn(to_raw(txns, sizes)); });
}

std::vector<RawHistory> enumerate_small_workloads(const SmallBounds& b) {
  std::vector<RawHistory> out;
  for_each_small_workload(b, [&out](const RawHistory& h) { out.push_back(h); });
  return out;
}

std::uint64_t count_small_workloads_unreduced(const SmallBounds& b) {
  std::uint64_t count = 0;
  enumerate_family(b, false, [&count](const auto&, const auto&) { ++count; });
  return count;
}

std::string_view to_string(CrossLevel level) {
  switch (level) {
    case CrossLevel::kSer: return "ser";
    case CrossLevel::kSi: return "si";
    case CrossLevel::kRc: return "rc";
    case CrossLevel::kRu: return "ru";
    case CrossLevel::kPsi: return "psi";
    case CrossLevel::kPsiA: return "psia";
    case CrossLevel::kCc4: return "cc4";
  }
  return "?";
}

std::optional<CrossLevel> parse_cross_level(std::string_view text) {
  for (CrossLevel l : {CrossLevel::kSer, CrossLevel::kSi, CrossLevel::kRc, CrossLevel::kRu,
                       CrossLevel::kPsi, CrossLevel::kPsiA, CrossLevel::kCc4}) {
    if (text == to_string(l)) return l;
  }
  return std::nullopt;
}

void CrossReport::merge(const CrossReport& other) {
  cases += other.cases;
  agreements += other.agreements;
  disagreements.insert(disagreements.end(), other.disagreements.begin(), other.disagreements.end());
  budget_exceeded += other.budget_exceeded;
  witnesses_checked += other.witnesses_checked;
  witness_failures += other.witness_failures;
  constructions_checked += other.constructions_checked;
  construction_failures += other.construction_failures;
  failure_notes.insert(failure_notes.end(), other.failure_notes.begin(), other.failure_notes.end());
}

namespace {

// Changes the value of the first read: the initial value becomes the key's
// first writer (when there is one), any other value becomes the initial one.
RawHistory mutate_first_read(const RawHistory& h) {
  RawHistory out = h;
  std::map<std::string, std::string> first_writer;
  for (const RawSession& s : h.sessions) {
    for (const RawTransaction& t : s.transactions) {
      for (const RawOp& op : t.ops) {
        if (op.kind == OpKind::kWrite) first_writer.try_emplace(op.key, *op.value);
      }
    }
  }
  for (RawSession& s : out.sessions) {
    for (RawTransaction& t : s.transactions) {
      for (std::size_t o = 0; o < t.ops.size(); ++o) {
        RawOp& op = t.ops[o];
        if (op.kind != OpKind::kRead || follows_own_write(t, o)) continue;
        if (op.value) {
          op.value.reset();
        } else {
          auto it = first_writer.find(op.key);
          if (it == first_writer.end()) continue;
          op.value = it->second;
        }
        return out;
      }
    }
  }
  return out;
}

std::string verdict_text(Outcome o) { return std::string(to_string(o)); }

class CaseRunner {
 public:
  CaseRunner(const RawHistory& h, const CrossOptions& opts)
      : h_(h), opts_(opts), w_(Workload::from_raw(h)),
        checked_raw_(opts.mutate ? mutate_first_read(h) : h),
        checked_(Workload::from_raw(checked_raw_)) {}

  void run(CrossLevel level, CrossReport& r) {
    try {
      run_level(level, r);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kBudgetExceeded) throw;
      ++r.budget_exceeded;
    }
  }

 private:
  void note_witness(CrossReport& r, bool ok, const std::string& what) {
    ++r.witnesses_checked;
    if (!ok) {
      ++r.witness_failures;
      r.failure_notes.push_back(history_digest(h_) + " witness: " + what);
    }
  }

  void note_construction(CrossReport& r, const std::function<bool(std::string&)>& attempt,
                         const std::string& what) {
    ++r.constructions_checked;
    std::string why;
    bool ok = false;
    try {
      ok = attempt(why);
    } catch (const Error& err) {
      why = err.what();
    }
    if (!ok) {
      ++r.construction_failures;
      r.failure_notes.push_back(history_digest(h_) + " " + what + ": " + why);
    }
  }

  void compare(CrossReport& r, CrossLevel level, const Verdict& checker, std::optional<bool> oracle,
               const std::string& oracle_text) {
    if (checker.outcome == Outcome::kBudgetExceeded || !oracle) {
      ++r.budget_exceeded;
      return;
    }
    ++r.cases;
    if (checker.satisfied() == *oracle) {
      ++r.agreements;
      return;
    }
    r.disagreements.push_back({history_digest(h_), std::string(to_string(level)),
                               verdict_text(checker.outcome), oracle_text,
                               serialize_history(checked_raw_)});
  }

  Verdict isolation(IsolationLevel level, CrossReport& r) {
    Verdict v = check_isolation(checked_, level, opts_.budget);
    if (v.satisfied()) {
      std::string why;
      note_witness(r, verify_isolation_witness(checked_, level, *v.witness, &why),
                   std::string(to_string(level)) + ": " + why);
    }
    return v;
  }

  void run_level(CrossLevel level, CrossReport& r) {
    switch (level) {
      case CrossLevel::kSer:
        return pl_pair(r, level, IsolationLevel::kSer, PlLevel::kPl3,
                       [](const PlResult& p, const Workload& w) {
                         return construct_ser_execution({&w, *p.vo, std::nullopt});
                       });
      case CrossLevel::kSi:
        return pl_pair(r, level, IsolationLevel::kSi, PlLevel::kSi,
                       [](const PlResult& p, const Workload& w) {
                         return construct_si_execution({&w, *p.vo, p.ts});
                       });
      case CrossLevel::kRc:
        return pl_pair(r, level, IsolationLevel::kRc, PlLevel::kPl2,
                       [](const PlResult& p, const Workload& w) {
                         return construct_psi_execution({&w, *p.vo, std::nullopt});
                       });
      case CrossLevel::kRu:
        return pl_pair(r, level, IsolationLevel::kRu, PlLevel::kPl1, nullptr);
      case CrossLevel::kPsi:
        return pl_pair(r, level, IsolationLevel::kPsi, PlLevel::kPl2Plus,
                       [](const PlResult& p, const Workload& w) {
                         return construct_psi_execution({&w, *p.vo, std::nullopt});
                       });
      case CrossLevel::kPsiA: {
        if (w_.txn_count() > opts_.vis_ar_cap) {
          ++r.budget_exceeded;
          return;
        }
        const Verdict v = isolation(IsolationLevel::kPsi, r);
        const auto found = find_vis_ar(w_, opts_.vis_ar_cap);
        compare(r, level, v, found.has_value(), found ? "visibility found" : "no visibility");
        if (v.satisfied()) {
          note_construction(r, [&](std::string& why) {
            const Execution e = build_execution(checked_, *v.witness);
            return psi_axiomatic_check(checked_, construct_vis_ar(e), &why);
          }, "visibility construction");
        }
        return;
      }
      case CrossLevel::kCc4: {
        const GuaranteeSet cc{SessionGuarantee::kCc};
        const GuaranteeSet four{SessionGuarantee::kRmw, SessionGuarantee::kMr,
                                SessionGuarantee::kMw, SessionGuarantee::kWfr};
        const Verdict vc = check_session(checked_, cc, opts_.budget);
        const Verdict v4 = check_session(w_, four, opts_.budget);
        for (const auto* v : {&vc, &v4}) {
          if (!v->satisfied()) continue;
          const auto& g = v == &vc ? cc : four;
          const auto& w = v == &vc ? checked_ : w_;
          for (const auto& [se, order] : v->per_session) {
            std::string why;
            note_witness(r, verify_session_witness(w, g, se, order, &why), to_string(g) + ": " + why);
          }
        }
        std::optional<bool> oracle;
        if (v4.outcome != Outcome::kBudgetExceeded) oracle = v4.satisfied();
        compare(r, level, vc, oracle, verdict_text(v4.outcome));
        if (v4.satisfied()) {
          note_construction(r, [&](std::string&) {
            construct_cc_execution(w_, v4.per_session);
            return true;
          }, "causal construction");
        }
        return;
      }
    }
  }

  template <typename Construct>
  void pl_pair(CrossReport& r, CrossLevel level, IsolationLevel iso, PlLevel pl,
               Construct construct) {
    const Verdict v = isolation(iso, r);
    const PlResult p = pl_check(w_, pl, TimestampSource::kDerived);
    compare(r, level, v, p.holds, p.holds ? "holds" : "fails");
    if constexpr (!std::is_same_v<Construct, std::nullptr_t>) {
      if (p.holds) {
        note_construction(r, [&](std::string& why) {
          const Execution e = construct(p, w_);
          return verify_isolation_witness(w_, iso, e.order(), &why);
        }, std::string(to_string(iso)) + " construction");
      }
    }
  }

  const RawHistory& h_;
  const CrossOptions& opts_;
  Workload w_;
  RawHistory checked_raw_;
  Workload checked_;
};

}  // namespace

CrossReport crosscheck_case(const RawHistory& h, const std::vector<CrossLevel>& levels,
                            const CrossOptions& opts) {
  CrossReport r;
  CaseRunner runner(h, opts);
  for (CrossLevel level : levels) runner.run(level, r);
  return r;
}

CrossReport crosscheck(const std::vector<RawHistory>& corpus, const std::vector<CrossLevel>& levels,
                       const CrossOptions& opts) {
  CrossReport r;
  for (const RawHistory& h : corpus) r.merge(crosscheck_case(h, levels, opts));
  return r;
}

CrossReport crosscheck_family(const SmallBounds& b, const std::vector<CrossLevel>& levels,
                              const CrossOptions& opts) {
  CrossReport r;
  for_each_small_workload(b, [&](const RawHistory& h) { r.merge(crosscheck_case(h, levels, opts)); });
  return r;
}

std::vector<RawHistory> random_corpus(std::size_t count, std::uint64_t seed, std::size_t max_txns) {
  std::vector<RawHistory> out;
  for (std::size_t i = 0; i < count; ++i) {
    Rng shape(seed + i);
    GenParams p;
    p.sessions = shape.between(1, std::min<std::size_t>(3, max_txns));
    p.min_txns = 1;
    p.max_txns = std::max<std::size_t>(1, max_txns / p.sessions);
    p.min_ops = 1;
    p.max_ops = 3;
    p.keys = shape.between(1, 3);
    p.read_fraction = 0.5;
    p.seed = seed + i;
    // Alternate unconstrained reads with causally simulated ones so both
    // verdicts are well represented.
    out.push_back(i % 2 == 0 ? generate_workload(p) : simulate_causal(generate_skeleton(p), p.seed));
  }
  return out;
}

std::string report_to_json(const CrossReport& r) {
  nlohmann::ordered_json doc;
  doc["cases"] = r.cases;
  doc["agreements"] = r.agreements;
  doc["budget_exceeded"] = r.budget_exceeded;
  doc["witnesses_checked"] = r.witnesses_checked;
  doc["witness_failures"] = r.witness_failures;
  doc["constructions_checked"] = r.constructions_checked;
  doc["construction_failures"] = r.construction_failures;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const Disagreement& d : r.disagreements) {
    nlohmann::ordered_json item;
    item["digest"] = d.digest;
    item["level"] = d.level;
    item["checker"] = d.checker;
    item["oracle"] = d.oracle;
    item["history"] = nlohmann::ordered_json::parse(d.history);
    list.push_back(std::move(item));
  }
  doc["disagreements"] = std::move(list);
  doc["failure_notes"] = r.failure_notes;
  return doc.dump(2) + "\n";
}

}  // namespace statecheck
