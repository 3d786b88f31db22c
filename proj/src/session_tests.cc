#include "statecheck/session_tests.h"

#include <algorithm>
#include <vector>

#include "statecheck/error.h"

namespace statecheck {

std::string_view to_string(SessionGuarantee g) {
  switch (g) {
    case SessionGuarantee::kRmw: return "RMW";
    case SessionGuarantee::kMr: return "MR";
    case SessionGuarantee::kMw: return "MW";
    case SessionGuarantee::kWfr: return "WFR";
    case SessionGuarantee::kCc: return "CC";
  }
  return "?";
}

std::optional<SessionGuarantee> parse_session_guarantee(std::string_view text) {
  if (text == "rmw") return SessionGuarantee::kRmw;
  if (text == "mr") return SessionGuarantee::kMr;
  if (text == "mw") return SessionGuarantee::kMw;
  if (text == "wfr") return SessionGuarantee::kWfr;
  if (text == "cc") return SessionGuarantee::kCc;
  return std::nullopt;
}

GuaranteeSet parse_guarantee_set(std::string_view text) {
  GuaranteeSet set;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find(',', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(begin, end - begin);
    if (!item.empty()) {
      auto g = parse_session_guarantee(item);
      if (!g) throw Error(ErrorCode::kInvalidArgument, "unknown session guarantee '" + std::string(item) + "'");
      set.insert(*g);
    }
    begin = end + 1;
  }
  if (set.empty()) throw Error(ErrorCode::kInvalidArgument, "empty guarantee set");
  return set;
}

std::string to_string(const GuaranteeSet& g) {
  std::string out = "{";
  for (SessionGuarantee item : g) {
    if (out.size() > 1) out += ',';
    out += to_string(item);
  }
  return out + "}";
}

namespace {

struct Spans {
  std::vector<ReadStateSpan> of;  // per operation
};

Spans spans_of(const Execution& e, TxnIndex t) {
  Spans s;
  const auto n = e.workload().txn(t).ops.size();
  s.of.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.of.push_back(candidate_read_states(e, t, i));
  return s;
}

void require_member(const Workload& w, SessionIndex se, TxnIndex t) {
  if (se >= w.session_count() || t >= w.txn_count() || w.txn(t).session != se) {
    throw Error(ErrorCode::kInvalidArgument, "transaction is not part of the session under test");
  }
}

bool preread_placed(const Execution& e, std::span<const TxnIndex> txns, std::string* why) {
  for (TxnIndex t : txns) {
    if (!e.contains(t)) {
      if (why) *why = "PREREAD failed: " + e.workload().txn(t).id + " is not placed";
      return false;
    }
    if (!preread(e, t)) {
      if (why) {
        const auto& w = e.workload();
        for (std::size_t i = 0; i < w.txn(t).ops.size(); ++i) {
          if (candidate_read_states(e, t, i).empty) {
            *why = "PREREAD failed for " + describe_op(w, w.txn(t).ops[i]) + " in " + w.txn(t).id;
            break;
          }
        }
      }
      return false;
    }
  }
  return true;
}

bool preread_session(const Execution& e, SessionIndex se, std::string* why) {
  return preread_placed(e, e.workload().session(se).txns, why);
}

bool preread_everything(const Execution& e, std::string* why) {
  const auto& w = e.workload();
  for (TxnIndex t = 0; t < w.txn_count(); ++t) {
    const TxnIndex one[] = {t};
    if (!preread_placed(e, one, why)) return false;
  }
  return true;
}

bool irc(const Execution& e, TxnIndex t, std::string* why) {
  if (internal_read_consistency(e, t)) return true;
  if (why) *why = "internal read consistency failed in " + e.workload().txn(t).id;
  return false;
}

// Session predecessors of t, in session order.
std::span<const TxnIndex> predecessors(const Workload& w, TxnIndex t) {
  const Session& s = w.session(w.txn(t).session);
  return std::span<const TxnIndex>(s.txns.data(), w.txn(t).session_position);
}

bool check_rmw(const Execution& e, SessionIndex se, TxnIndex t, std::string* why) {
  if (!preread_session(e, se, why)) return false;
  const auto& w = e.workload();
  const Spans spans = spans_of(e, t);
  for (TxnIndex prior : predecessors(w, t)) {
    if (!w.txn(prior).is_update()) continue;
    for (std::size_t i = 0; i < spans.of.size(); ++i) {
      if (e.state_of(prior) > spans.of[i].last) {
        if (why) {
          *why = "RMW: sl of " + describe_op(w, w.txn(t).ops[i]) + " in " + w.txn(t).id +
                 " precedes s_" + w.txn(prior).id;
        }
        return false;
      }
    }
  }
  return true;
}

bool check_mr(const Execution& e, SessionIndex se, TxnIndex t, bool alt, std::string* why) {
  if (!preread_session(e, se, why) || !irc(e, t, why)) return false;
  const auto& w = e.workload();
  const Spans spans = spans_of(e, t);
  for (TxnIndex prior : predecessors(w, t)) {
    const Spans earlier = spans_of(e, prior);
    for (std::size_t i = 0; i < spans.of.size(); ++i) {
      for (std::size_t j = 0; j < earlier.of.size(); ++j) {
        const std::size_t sl = spans.of[i].last;
        const std::size_t sf = earlier.of[j].first;
        const bool ok = alt ? sf <= sl : !(sl < sf);
        if (!ok) {
          if (why) {
            *why = "MR: sl of " + describe_op(w, w.txn(t).ops[i]) + " in " + w.txn(t).id +
                   " precedes sf of " + describe_op(w, w.txn(prior).ops[j]) + " in " + w.txn(prior).id;
          }
          return false;
        }
      }
    }
  }
  return true;
}

bool check_mw(const Execution& e, SessionIndex se, std::string* why) {
  if (!preread_session(e, se, why)) return false;
  const auto& w = e.workload();
  for (const Session& s : w.sessions()) {
    for (std::size_t j = 0; j < s.txns.size(); ++j) {
      const TxnIndex tj = s.txns[j];
      if (!w.txn(tj).is_update()) continue;
      for (std::size_t i = 0; i < j; ++i) {
        const TxnIndex ti = s.txns[i];
        if (!w.txn(ti).is_update()) continue;
        if (!e.contains(ti) || !e.contains(tj) || e.state_of(ti) >= e.state_of(tj)) {
          if (why) {
            *why = "MW: updates " + w.txn(ti).id + " and " + w.txn(tj).id + " of session " + s.id +
                   " are not applied in session order";
          }
          return false;
        }
      }
    }
  }
  return true;
}

bool check_wfr(const Execution& e, std::string* why) {
  if (!preread_everything(e, why)) return false;
  const auto& w = e.workload();
  for (const Session& s : w.sessions()) {
    for (std::size_t j = 0; j < s.txns.size(); ++j) {
      const TxnIndex tj = s.txns[j];
      if (!w.txn(tj).is_update()) continue;
      for (std::size_t i = 0; i < j; ++i) {
        const TxnIndex ti = s.txns[i];
        const Spans spans = spans_of(e, ti);
        for (std::size_t o = 0; o < spans.of.size(); ++o) {
          if (spans.of[o].first >= e.state_of(tj)) {
            if (why) {
              *why = "WFR: sf of " + describe_op(w, w.txn(ti).ops[o]) + " in " + w.txn(ti).id +
                     " does not precede s_" + w.txn(tj).id;
            }
            return false;
          }
        }
      }
    }
  }
  return true;
}

bool check_cc(const Execution& e, SessionIndex se, TxnIndex t, std::string* why) {
  if (!preread_everything(e, why) || !irc(e, t, why)) return false;
  const auto& w = e.workload();
  const Spans spans = spans_of(e, t);
  for (TxnIndex prior : predecessors(w, t)) {
    for (std::size_t i = 0; i < spans.of.size(); ++i) {
      if (e.state_of(prior) > spans.of[i].last) {
        if (why) {
          *why = "CC: sl of " + describe_op(w, w.txn(t).ops[i]) + " in " + w.txn(t).id +
                 " precedes s_" + w.txn(prior).id;
        }
        return false;
      }
    }
  }
  for (const Session& s : w.sessions()) {
    for (std::size_t j = 1; j < s.txns.size(); ++j) {
      if (e.state_of(s.txns[j - 1]) >= e.state_of(s.txns[j])) {
        if (why) {
          *why = "CC: " + w.txn(s.txns[j - 1]).id + " and " + w.txn(s.txns[j]).id +
                 " of session " + s.id + " commit out of session order";
        }
        return false;
      }
    }
  }
  (void)se;
  return true;
}

bool check(SessionGuarantee g, const Execution& e, SessionIndex se, TxnIndex t, std::string* why) {
  require_member(e.workload(), se, t);
  switch (g) {
    case SessionGuarantee::kRmw: return check_rmw(e, se, t, why);
    case SessionGuarantee::kMr: return check_mr(e, se, t, false, why);
    case SessionGuarantee::kMw: return check_mw(e, se, why);
    case SessionGuarantee::kWfr: return check_wfr(e, why);
    case SessionGuarantee::kCc: return check_cc(e, se, t, why);
  }
  return false;
}

}  // namespace

bool st_rmw(const Execution& e, SessionIndex se, TxnIndex t) {
  return check(SessionGuarantee::kRmw, e, se, t, nullptr);
}
bool st_mr(const Execution& e, SessionIndex se, TxnIndex t) {
  return check(SessionGuarantee::kMr, e, se, t, nullptr);
}
bool st_mr_alt(const Execution& e, SessionIndex se, TxnIndex t) {
  require_member(e.workload(), se, t);
  return check_mr(e, se, t, true, nullptr);
}
bool st_mw(const Execution& e, SessionIndex se, TxnIndex t) {
  return check(SessionGuarantee::kMw, e, se, t, nullptr);
}
bool st_wfr(const Execution& e, SessionIndex se, TxnIndex t) {
  return check(SessionGuarantee::kWfr, e, se, t, nullptr);
}
bool st_cc(const Execution& e, SessionIndex se, TxnIndex t) {
  return check(SessionGuarantee::kCc, e, se, t, nullptr);
}

bool session_test(SessionGuarantee g, const Execution& e, SessionIndex se, TxnIndex t) {
  return check(g, e, se, t, nullptr);
}

bool st_set(const GuaranteeSet& g, const Execution& e, SessionIndex se, TxnIndex t) {
  if (g.empty()) throw Error(ErrorCode::kInvalidArgument, "empty guarantee set");
  return std::all_of(g.begin(), g.end(),
                     [&](SessionGuarantee item) { return check(item, e, se, t, nullptr); });
}

bool st_with_isolation(const GuaranteeSet& g, IsolationLevel level, const Execution& e,
                       SessionIndex se, TxnIndex t) {
  return st_set(g, e, se, t) && commit_test(level, e, t);
}

std::string explain_session_test(const GuaranteeSet& g, const Execution& e, SessionIndex se,
                                 TxnIndex t) {
  for (SessionGuarantee item : g) {
    std::string why;
    if (!check(item, e, se, t, &why)) return why;
  }
  return {};
}

}  // namespace statecheck
