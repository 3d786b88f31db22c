#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "statecheck/error.h"
#include "statecheck/harness.h"
#include "statecheck/history_io.h"
#include "test_support.h"

using namespace statecheck;
using namespace testing_support;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Message of the Error thrown by parse_history, or "" if it parses.
std::string parse_error(const std::string& text) {
  try {
    parse_history(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    return e.what();
  }
  return "";
}

std::string wrap_op(const std::string& op) {
  return R"({"sessions":[{"id":"s","transactions":[{"id":"t","ops":[)" + op + "]}]}]}";
}

}  // namespace

TEST(HistoryIo, FixturesAreCanonical) {
  for (const auto& entry : std::filesystem::directory_iterator(fixture(""))) {
    const std::string text = read_file(entry.path().string());
    EXPECT_EQ(serialize_history(parse_history(text)), text) << entry.path();
  }
}

TEST(HistoryIo, RoundTripOnGeneratedAndFamily) {
  for (const RawHistory& h : random_corpus(200, 17, 6)) {
    const std::string text = serialize_history(h);
    EXPECT_EQ(parse_history(text), h);
    EXPECT_EQ(serialize_history(parse_history(text)), text);
  }
  for (const RawHistory& h : enumerate_small_workloads({2, 2, 2, 2})) {
    EXPECT_EQ(parse_history(serialize_history(h)), h);
  }
}

TEST(HistoryIo, RanksAndBottom) {
  const RawHistory h = history({session("s", {ranked("t1", 0, 3, {w("x", "1"), r("y", std::nullopt)})})});
  const std::string text = serialize_history(h);
  EXPECT_NE(text.find("\"start\": 0"), std::string::npos);
  EXPECT_NE(text.find("\"commit\": 3"), std::string::npos);
  EXPECT_NE(text.find("\"value\": null"), std::string::npos);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(parse_history(text), h);
}

TEST(HistoryIo, FieldOrderIsFixed) {
  const std::string text = serialize_history(history({session("s", {ranked("t", 1, 2, {w("x", "1")})})}));
  const auto at = [&text](const char* field) { return text.find(field); };
  EXPECT_LT(at("\"id\": \"t\""), at("\"start\""));
  EXPECT_LT(at("\"start\""), at("\"commit\""));
  EXPECT_LT(at("\"commit\""), at("\"ops\""));
  EXPECT_LT(at("\"type\""), at("\"key\""));
  EXPECT_LT(at("\"key\""), at("\"value\""));
}

TEST(HistoryIo, MalformedJsonReportsPosition) {
  const std::string msg = parse_error("{\n  \"sessions\": [\n    {,\n");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(HistoryIo, SchemaErrorsNameTheField) {
  EXPECT_NE(parse_error(wrap_op(R"({"type":"q","key":"x","value":null})")).find("sessions[0].transactions[0].ops[0].type"),
            std::string::npos);
  EXPECT_NE(parse_error(wrap_op(R"({"type":"r","value":null})")).find("ops[0]: missing field \"key\""), std::string::npos);
  EXPECT_NE(parse_error(R"({"sessions":[{"transactions":[]}]})").find("sessions[0]: missing field \"id\""), std::string::npos);
  EXPECT_NE(parse_error(R"({"sessions":3})").find("sessions"), std::string::npos);
  EXPECT_FALSE(parse_error("[]").empty());
}

// Well-formed JSON that breaks the workload's structural rules parses but
// is rejected when it becomes a Workload.
TEST(HistoryIo, StructuralErrors) {
  const auto rejected = [](const std::string& text) {
    const RawHistory h = parse_history(text);
    try {
      Workload::from_raw(h);
    } catch (const Error& e) {
      return e.code() == ErrorCode::kInvalidWorkload;
    }
    return false;
  };
  // A write of the initial value, two writes of one key, a repeated raw
  // value, a repeated id, and a start rank without a commit rank.
  EXPECT_TRUE(rejected(wrap_op(R"({"type":"w","key":"x","value":null})")));
  EXPECT_TRUE(rejected(wrap_op(R"({"type":"w","key":"x","value":"1"},{"type":"w","key":"x","value":"2"})")));
  EXPECT_TRUE(rejected(R"({"sessions":[{"id":"s","transactions":[
      {"id":"a","ops":[{"type":"w","key":"x","value":"1"}]},
      {"id":"b","ops":[{"type":"w","key":"x","value":"1"}]}]}]})"));
  EXPECT_TRUE(rejected(R"({"sessions":[{"id":"s","transactions":[
      {"id":"a","ops":[]},{"id":"a","ops":[]}]}]})"));
  EXPECT_TRUE(rejected(R"({"sessions":[{"id":"s","transactions":[{"id":"a","start":1,"ops":[]}]}]})"));
}

TEST(HistoryIo, IntegerValuesReadAsText) {
  const RawHistory h = parse_history(wrap_op(R"({"type":"w","key":"x","value":7})"));
  EXPECT_EQ(h.sessions[0].transactions[0].ops[0].value, std::optional<std::string>("7"));
}

TEST(HistoryIo, LoadReportsMissingFile) {
  EXPECT_THROW(load_history("/nonexistent/history.json"), Error);
}

TEST(Witness, RoundTrip) {
  WitnessFile wf;
  wf.order = std::vector<std::string>{"t0", "t_w1", "t_w2"};
  wf.version_order = std::map<std::string, std::vector<std::string>>{{"x", {"t0", "t_w1"}}, {"y", {"t0", "t_w2"}}};
  wf.timestamps = std::map<std::string, WitnessTimestamps>{{"t0", {0, 1}}, {"t_w1", {2, 4}}, {"t_w2", {3, 5}}};
  EXPECT_EQ(parse_witness(serialize_witness(wf)), wf);

  WitnessFile ps;
  ps.per_session = {{"s1", {"t1", "t2"}}, {"s2", {"t2", "t1"}}};
  const std::string text = serialize_witness(ps);
  EXPECT_NE(text.find("per_session"), std::string::npos);
  EXPECT_EQ(parse_witness(text), ps);
}

TEST(Witness, FromVerdictAndResolve) {
  const Workload wl = Workload::from_raw(banking());
  const Verdict v = check_isolation(wl, IsolationLevel::kSi);
  WitnessFile wf = witness_from_verdict(wl, v);
  ASSERT_TRUE(wf.order.has_value());
  EXPECT_EQ(*wf.order, (std::vector<std::string>{"t0", "t_w1", "t_w2"}));
  EXPECT_EQ(resolve_order(wl, *wf.order), *v.witness);

  const Execution e = build_execution(wl, *v.witness);
  attach_version_order(wl, derive_version_order(e), wf);
  attach_timestamps(wl, assign_timestamps(e), wf);
  const WitnessFile back = parse_witness(serialize_witness(wf));
  EXPECT_EQ(back, wf);
  EXPECT_EQ(resolve_version_order(wl, *back.version_order).chains, derive_version_order(e).chains);
}

TEST(Witness, SessionVerdict) {
  const Workload wl = Workload::from_raw(load_history(fixture("chain.json")));
  const Verdict v = check_session(wl, {SessionGuarantee::kCc});
  const WitnessFile wf = witness_from_verdict(wl, v);
  EXPECT_FALSE(wf.order.has_value());
  EXPECT_EQ(wf.per_session.size(), wl.session_count());
}

TEST(Witness, ResolveRejectsBadOrders) {
  const Workload wl = Workload::from_raw(banking());
  for (const std::vector<std::string>& bad : {std::vector<std::string>{"t0", "t_w1"},
                                              std::vector<std::string>{"t0", "t_w1", "t_w1"},
                                              std::vector<std::string>{"t0", "t_w1", "nobody"}}) {
    try {
      resolve_order(wl, bad);
      ADD_FAILURE() << "accepted a bad order";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kWitnessInvalid);
    }
  }
  EXPECT_THROW(parse_witness("{\"order\": 3}"), Error);
}

TEST(Digest, FormatAndSensitivity) {
  const std::string d = history_digest(banking());
  ASSERT_EQ(d.size(), 16u);
  EXPECT_EQ(d.find_first_not_of("0123456789abcdef"), std::string::npos);
  EXPECT_EQ(d, history_digest(parse_history(serialize_history(banking()))));
  EXPECT_NE(d, history_digest(fractured()));
}

TEST(Digest, IsFnv1aOfCanonicalText) {
  const std::string text = serialize_history(writeskew());
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  EXPECT_EQ(history_digest(writeskew()), buf);
}
