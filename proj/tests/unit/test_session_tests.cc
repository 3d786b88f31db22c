#include <gtest/gtest.h>

#include "statecheck/error.h"
#include "statecheck/harness.h"
#include "statecheck/session_tests.h"
#include "test_support.h"

using namespace statecheck;
using namespace testing_support;

namespace {

SessionIndex session_of(const Workload& wl, const std::string& txn_id) {
  return wl.txn(id(wl, txn_id)).session;
}

// True when every execution fails `test` for (se, t).
template <typename Test>
bool fails_everywhere(const Workload& wl, Test test, const std::string& txn_id) {
  std::vector<TxnIndex> order = naive::all_txns(wl);
  do {
    if (test(build_execution(wl, order), session_of(wl, txn_id), id(wl, txn_id))) return false;
  } while (std::next_permutation(order.begin(), order.end()));
  return true;
}

RawHistory flipflop() {
  return history({session("writer", {txn("tw", {w("x", "1")})}),
                  session("reader", {txn("ta", {r("x", std::nullopt)}), txn("tb", {r("x", "1")}),
                                     txn("tc", {r("x", std::nullopt)})})});
}

RawHistory causal_miss(bool fixed) {
  return history({session("se_w", {txn("t1", {w("x", "1")}), txn("t2", {w("y", "1")})}),
                  session("se_r", {txn("t3", {r("y", "1")}),
                                   txn("t4", {r("x", fixed ? std::optional<std::string>("1") : std::nullopt)})})});
}

RawHistory wfr_cycle() {
  return history({session("se1", {txn("a1", {r("y", "1")}), txn("a2", {w("x", "1")})}),
                  session("se2", {txn("b1", {r("x", "1")}), txn("b2", {w("y", "1")})})});
}

}  // namespace

TEST(GuaranteeNames, ParseAndPrint) {
  EXPECT_EQ(parse_guarantee_set("rmw,mr,mw,wfr"),
            (GuaranteeSet{SessionGuarantee::kRmw, SessionGuarantee::kMr, SessionGuarantee::kMw,
                          SessionGuarantee::kWfr}));
  EXPECT_EQ(to_string(GuaranteeSet{SessionGuarantee::kCc}), "{CC}");
  EXPECT_THROW(parse_guarantee_set(""), Error);
  EXPECT_THROW(parse_guarantee_set("mr,bogus"), Error);
}

TEST(StRmw, Examples) {
  const Workload ok = workload({session("s", {txn("t1", {w("x", "1")}), txn("t2", {r("x", "1")})})});
  EXPECT_TRUE(st_rmw(build_execution(ok, ids(ok, {"t1", "t2"})), 0, id(ok, "t2")));

  const Workload stale = workload({session("s", {txn("t1", {w("x", "1")}), txn("t2", {r("x", std::nullopt)})})});
  EXPECT_TRUE(fails_everywhere(stale, st_rmw, "t2"));

  const Workload ro = workload({session("s", {txn("t1", {r("x", std::nullopt)}), txn("t2", {r("y", std::nullopt)})})});
  EXPECT_TRUE(st_rmw(build_execution(ro, ids(ro, {"t1", "t2"})), 0, id(ro, "t2")));
}

TEST(StMr, FlipFlopFailsEverywhere) {
  const Workload wl = Workload::from_raw(flipflop());
  EXPECT_TRUE(fails_everywhere(wl, st_mr, "tc"));
  EXPECT_FALSE(naive::exists_order(wl, naive::mr, wl.session(session_of(wl, "tc")).txns));
}

TEST(StMr, MonotoneReadsPass) {
  const Workload wl = workload({session("writer", {txn("tw", {w("x", "1")})}),
                                session("reader", {txn("ta", {r("x", std::nullopt)}), txn("tb", {r("x", "1")})})});
  const Execution e = build_execution(wl, ids(wl, {"ta", "tw", "tb"}));
  EXPECT_TRUE(st_mr(e, session_of(wl, "tb"), id(wl, "ta")));
  EXPECT_TRUE(st_mr(e, session_of(wl, "tb"), id(wl, "tb")));
}

TEST(StMr, SingleTransactionReducesToIrc) {
  const Workload wl = workload({session("a", {txn("tx", {w("x", "1")}), txn("ty", {w("y", "1")})}),
                                session("b", {txn("t", {r("x", "1"), r("y", std::nullopt)})})});
  std::vector<TxnIndex> order = naive::all_txns(wl);
  do {
    const Execution e = build_execution(wl, order);
    const TxnIndex t = id(wl, "t");
    EXPECT_EQ(st_mr(e, session_of(wl, "t"), t), preread(e, t) && internal_read_consistency(e, t));
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(StMw, Examples) {
  const Workload wl = workload({session("s", {txn("t1", {w("x", "1")}), txn("t2", {w("y", "1")})}),
                                session("r", {txn("t3", {r("x", std::nullopt)})})});
  EXPECT_TRUE(st_mw(build_execution(wl, ids(wl, {"t1", "t2", "t3"})), 0, id(wl, "t1")));
  EXPECT_FALSE(st_mw(build_execution(wl, ids(wl, {"t2", "t1", "t3"})), 0, id(wl, "t1")));
}

TEST(StWfr, CausalityCycleFailsEverywhere) {
  const Workload wl = Workload::from_raw(wfr_cycle());
  EXPECT_TRUE(fails_everywhere(wl, st_wfr, "a1"));
  EXPECT_TRUE(fails_everywhere(wl, st_wfr, "b1"));
}

TEST(StWfr, AcyclicPasses) {
  const Workload wl = workload({session("se1", {txn("a1", {r("y", "1")}), txn("a2", {w("x", "1")})}),
                                session("se2", {txn("b2", {w("y", "1")})})});
  const Execution e = build_execution(wl, ids(wl, {"b2", "a1", "a2"}));
  for (TxnIndex t = 0; t < wl.txn_count(); ++t) EXPECT_TRUE(st_wfr(e, wl.txn(t).session, t));
}

TEST(StWfr, AllWritesInSessionOrder) {
  const Workload wl = workload({session("a", {txn("a1", {w("x", "1")}), txn("a2", {w("x", "2")})}),
                                session("b", {txn("b1", {w("y", "1")})})});
  const Execution e = build_execution(wl, ids(wl, {"a1", "b1", "a2"}));
  for (TxnIndex t = 0; t < wl.txn_count(); ++t) EXPECT_TRUE(st_wfr(e, wl.txn(t).session, t));
}

TEST(StCc, CausalMiss) {
  const Workload miss = Workload::from_raw(causal_miss(false));
  EXPECT_TRUE(fails_everywhere(miss, st_cc, "t4"));

  const Workload fixed = Workload::from_raw(causal_miss(true));
  const Execution e = build_execution(fixed, ids(fixed, {"t1", "t2", "t3", "t4"}));
  for (TxnIndex t = 0; t < fixed.txn_count(); ++t) EXPECT_TRUE(st_cc(e, fixed.txn(t).session, t));
}

TEST(StCc, SerialSingleSession) {
  const Workload wl = workload({session("s", {txn("t1", {w("x", "1")}), txn("t2", {r("x", "1"), w("y", "2")}),
                                              txn("t3", {r("y", "2")})})});
  const Execution e = build_execution(wl, ids(wl, {"t1", "t2", "t3"}));
  for (TxnIndex t = 0; t < 3; ++t) EXPECT_TRUE(st_cc(e, 0, t));
}

TEST(StSet, Examples) {
  const Workload miss = Workload::from_raw(causal_miss(false));
  const GuaranteeSet four{SessionGuarantee::kRmw, SessionGuarantee::kMr, SessionGuarantee::kMw,
                          SessionGuarantee::kWfr};
  std::vector<TxnIndex> order = naive::all_txns(miss);
  const SessionIndex reader = session_of(miss, "t4");
  do {
    const Execution e = build_execution(miss, order);
    EXPECT_FALSE(st_set(four, e, reader, id(miss, "t3")) && st_set(four, e, reader, id(miss, "t4")));
  } while (std::next_permutation(order.begin(), order.end()));
  EXPECT_THROW(st_set({}, build_execution(miss, order), 0, 0), Error);
}

TEST(StWithIsolation, Examples) {
  const Workload serial = workload({session("s", {txn("t1", {w("x", "1")}), txn("t2", {r("x", "1")})})});
  const Execution e = build_execution(serial, ids(serial, {"t1", "t2"}));
  EXPECT_TRUE(st_with_isolation({SessionGuarantee::kCc}, IsolationLevel::kSer, e, 0, 1));

  const Workload bank = Workload::from_raw(banking());
  std::vector<TxnIndex> order = naive::all_txns(bank);
  do {
    const Execution eb = build_execution(bank, order);
    bool all = true;
    for (TxnIndex t = 0; t < bank.txn_count(); ++t) {
      all = all && st_with_isolation({SessionGuarantee::kCc}, IsolationLevel::kSer, eb, bank.txn(t).session, t);
    }
    EXPECT_FALSE(all);
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(ExplainSessionTest, NamesClause) {
  const Workload wl = Workload::from_raw(flipflop());
  const Execution e = build_execution(wl, ids(wl, {"ta", "tw", "tb", "tc"}));
  const std::string why = explain_session_test({SessionGuarantee::kMr}, e, session_of(wl, "tc"), id(wl, "tc"));
  EXPECT_NE(why.find("tc"), std::string::npos);
  EXPECT_EQ(explain_session_test({SessionGuarantee::kMr}, e, session_of(wl, "ta"), id(wl, "ta")), "");
}

// Per-execution properties and agreement with the reference evaluators.
TEST(SessionTests, PropertiesOnFamily) {
  std::size_t checked = 0;
  for (SmallBounds b : {SmallBounds{3, 2, 2, 2}, SmallBounds{3, 1, 2, 3}}) {
    for_each_small_workload(b, [&](const RawHistory& h) {
      const Workload wl = Workload::from_raw(h);
      std::vector<TxnIndex> order = naive::all_txns(wl);
      do {
        const Execution e = build_execution(wl, order);
        bool all_cc = true;
        bool all_sc = true;
        for (TxnIndex t = 0; t < wl.txn_count(); ++t) {
          const SessionIndex se = wl.txn(t).session;
          const bool cc = st_cc(e, se, t);
          ASSERT_EQ(st_mr(e, se, t), st_mr_alt(e, se, t));
          if (cc) {
            ASSERT_TRUE(st_rmw(e, se, t));
            ASSERT_TRUE(st_mr(e, se, t));
            ASSERT_TRUE(st_mw(e, se, t));
            ASSERT_TRUE(st_wfr(e, se, t));
          }
          all_cc = all_cc && cc;
          all_sc = all_sc && ct_sc(e, t);
          if (b.ops == 1) {
            ASSERT_EQ(st_rmw(e, se, t), naive::rmw(wl, order, t));
            ASSERT_EQ(st_mr(e, se, t), naive::mr(wl, order, t));
            ASSERT_EQ(st_mw(e, se, t), naive::mw(wl, order, t));
            ASSERT_EQ(st_wfr(e, se, t), naive::wfr(wl, order, t));
            ASSERT_EQ(cc, naive::cc(wl, order, t));
          }
          ++checked;
        }
        ASSERT_TRUE(!all_cc || all_sc);
      } while (std::next_permutation(order.begin(), order.end()));
    });
  }
  EXPECT_GT(checked, 10000u);
}

TEST(SessionTests, AgreeWithReferenceOnTwoOpTransactions) {
  for_each_small_workload(SmallBounds{2, 2, 2, 2}, [&](const RawHistory& h) {
    const Workload wl = Workload::from_raw(h);
    std::vector<TxnIndex> order = naive::all_txns(wl);
    do {
      const Execution e = build_execution(wl, order);
      for (TxnIndex t = 0; t < wl.txn_count(); ++t) {
        const SessionIndex se = wl.txn(t).session;
        ASSERT_EQ(st_rmw(e, se, t), naive::rmw(wl, order, t));
        ASSERT_EQ(st_mr(e, se, t), naive::mr(wl, order, t));
        ASSERT_EQ(st_mw(e, se, t), naive::mw(wl, order, t));
        ASSERT_EQ(st_wfr(e, se, t), naive::wfr(wl, order, t));
        ASSERT_EQ(st_cc(e, se, t), naive::cc(wl, order, t));
      }
    } while (std::next_permutation(order.begin(), order.end()));
  });
}
