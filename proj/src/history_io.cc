#include "statecheck/history_io.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "statecheck/error.h"

namespace statecheck {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void parse_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kParse, path + ": " + what);
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& err) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t limit = std::min<std::size_t>(err.byte ? err.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + " column " +
                                       std::to_string(column) + ": malformed JSON");
  }
}

const Json& field(const Json& obj, const std::string& path, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) parse_fail(path, std::string("missing field \"") + name + "\"");
  return *it;
}

std::string string_field(const Json& obj, const std::string& path, const char* name) {
  const Json& v = field(obj, path, name);
  if (!v.is_string()) parse_fail(path + "." + name, "expected a string");
  return v.get<std::string>();
}

std::optional<std::int64_t> optional_int(const Json& obj, const std::string& path, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) parse_fail(path + "." + name, "expected an integer");
  return it->get<std::int64_t>();
}

void require_object(const Json& v, const std::string& path) {
  if (!v.is_object()) parse_fail(path, "expected an object");
}

const Json& array_field(const Json& obj, const std::string& path, const char* name) {
  const Json& v = field(obj, path, name);
  if (!v.is_array()) parse_fail(path + "." + name, "expected an array");
  return v;
}

std::vector<std::string> string_array(const Json& v, const std::string& path) {
  if (!v.is_array()) parse_fail(path, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) parse_fail(path + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParse, path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

RawHistory parse_history(std::string_view text) {
  const Json doc = parse_json(text);
  require_object(doc, "$");
  RawHistory h;
  const Json& sessions = array_field(doc, "$", "sessions");
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const std::string sp = "sessions[" + std::to_string(s) + "]";
    require_object(sessions[s], sp);
    RawSession rs;
    rs.id = string_field(sessions[s], sp, "id");
    const Json& txns = array_field(sessions[s], sp, "transactions");
    for (std::size_t t = 0; t < txns.size(); ++t) {
      const std::string tp = sp + ".transactions[" + std::to_string(t) + "]";
      require_object(txns[t], tp);
      RawTransaction rt;
      rt.id = string_field(txns[t], tp, "id");
      rt.start = optional_int(txns[t], tp, "start");
      rt.commit = optional_int(txns[t], tp, "commit");
      const Json& ops = array_field(txns[t], tp, "ops");
      for (std::size_t o = 0; o < ops.size(); ++o) {
        const std::string op_path = tp + ".ops[" + std::to_string(o) + "]";
        require_object(ops[o], op_path);
        RawOp op;
        const std::string type = string_field(ops[o], op_path, "type");
        if (type == "r") {
          op.kind = OpKind::kRead;
        } else if (type == "w") {
          op.kind = OpKind::kWrite;
        } else {
          parse_fail(op_path + ".type", "expected \"r\" or \"w\"");
        }
        op.key = string_field(ops[o], op_path, "key");
        const Json& value = field(ops[o], op_path, "value");
        if (value.is_string()) {
          op.value = value.get<std::string>();
        } else if (value.is_number_integer()) {
          op.value = std::to_string(value.get<std::int64_t>());
        } else if (!value.is_null()) {
          parse_fail(op_path + ".value", "expected a string or null");
        }
        rt.ops.push_back(std::move(op));
      }
      rs.transactions.push_back(std::move(rt));
    }
    h.sessions.push_back(std::move(rs));
  }
  return h;
}

std::string serialize_history(const RawHistory& h) {
  Json doc;
  Json sessions = Json::array();
  for (const RawSession& rs : h.sessions) {
    Json js;
    js["id"] = rs.id;
    Json txns = Json::array();
    for (const RawTransaction& rt : rs.transactions) {
      Json jt;
      jt["id"] = rt.id;
      if (rt.start) jt["start"] = *rt.start;
      if (rt.commit) jt["commit"] = *rt.commit;
      Json ops = Json::array();
      for (const RawOp& op : rt.ops) {
        Json jo;
        jo["type"] = op.kind == OpKind::kRead ? "r" : "w";
        jo["key"] = op.key;
        jo["value"] = op.value ? Json(*op.value) : Json(nullptr);
        ops.push_back(std::move(jo));
      }
      jt["ops"] = std::move(ops);
      txns.push_back(std::move(jt));
    }
    js["transactions"] = std::move(txns);
    sessions.push_back(std::move(js));
  }
  doc["sessions"] = std::move(sessions);
  return doc.dump(2) + "\n";
}

RawHistory load_history(const std::string& path) { return parse_history(read_file(path)); }

void save_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, path + ": cannot write file");
  out << text;
}

WitnessFile parse_witness(std::string_view text) {
  const Json doc = parse_json(text);
  require_object(doc, "$");
  WitnessFile w;
  if (auto it = doc.find("order"); it != doc.end()) w.order = string_array(*it, "order");
  if (auto it = doc.find("per_session"); it != doc.end()) {
    require_object(*it, "per_session");
    for (const auto& [sid, entry] : it->items()) {
      const std::string path = "per_session." + sid;
      require_object(entry, path);
      w.per_session[sid] = string_array(field(entry, path, "order"), path + ".order");
    }
  }
  if (!w.order && w.per_session.empty()) parse_fail("$", "witness needs \"order\" or \"per_session\"");
  if (auto it = doc.find("version_order"); it != doc.end()) {
    require_object(*it, "version_order");
    std::map<std::string, std::vector<std::string>> vo;
    for (const auto& [key, chain] : it->items()) vo[key] = string_array(chain, "version_order." + key);
    w.version_order = std::move(vo);
  }
  if (auto it = doc.find("timestamps"); it != doc.end()) {
    require_object(*it, "timestamps");
    std::map<std::string, WitnessTimestamps> ts;
    for (const auto& [id, entry] : it->items()) {
      const std::string path = "timestamps." + id;
      require_object(entry, path);
      auto start = optional_int(entry, path, "start");
      auto commit = optional_int(entry, path, "commit");
      if (!start || !commit) parse_fail(path, "needs integer \"start\" and \"commit\"");
      ts[id] = {*start, *commit};
    }
    w.timestamps = std::move(ts);
  }
  return w;
}

std::string serialize_witness(const WitnessFile& w) {
  Json doc;
  if (w.order) doc["order"] = *w.order;
  if (!w.per_session.empty()) {
    Json ps = Json::object();
    for (const auto& [sid, order] : w.per_session) ps[sid] = Json{{"order", order}};
    doc["per_session"] = std::move(ps);
  }
  if (w.version_order) {
    Json vo = Json::object();
    for (const auto& [key, chain] : *w.version_order) vo[key] = chain;
    doc["version_order"] = std::move(vo);
  }
  if (w.timestamps) {
    Json ts = Json::object();
    for (const auto& [id, t] : *w.timestamps) ts[id] = Json{{"start", t.start}, {"commit", t.commit}};
    doc["timestamps"] = std::move(ts);
  }
  return doc.dump(2) + "\n";
}

WitnessFile load_witness(const std::string& path) { return parse_witness(read_file(path)); }

WitnessFile witness_from_verdict(const Workload& w, const Verdict& v) {
  auto ids = [&w](const std::vector<TxnIndex>& order) {
    std::vector<std::string> out;
    for (TxnIndex t : order) out.push_back(w.txn(t).id);
    return out;
  };
  WitnessFile out;
  if (v.witness) out.order = ids(*v.witness);
  for (const auto& [se, order] : v.per_session) out.per_session[w.session(se).id] = ids(order);
  return out;
}

void attach_version_order(const Workload& w, const VersionOrder& vo, WitnessFile& out) {
  std::map<std::string, std::vector<std::string>> chains;
  for (KeyIndex k = 0; k < vo.chains.size(); ++k) {
    auto& chain = chains[w.key_name(k)];
    for (TxnIndex t : vo.chains[k]) chain.push_back(w.txn(t).id);
  }
  out.version_order = std::move(chains);
}

void attach_timestamps(const Workload& w, const Timestamps& ts, WitnessFile& out) {
  std::map<std::string, WitnessTimestamps> m;
  for (TxnIndex t = 0; t < w.txn_count(); ++t) m[w.txn(t).id] = {ts.start[t], ts.commit[t]};
  out.timestamps = std::move(m);
}

std::vector<TxnIndex> resolve_order(const Workload& w, const std::vector<std::string>& ids) {
  std::vector<TxnIndex> order;
  std::set<TxnIndex> seen;
  for (const std::string& id : ids) {
    auto t = w.find_txn(id);
    if (!t) throw Error(ErrorCode::kWitnessInvalid, "unknown transaction '" + id + "' in witness");
    if (!seen.insert(*t).second) {
      throw Error(ErrorCode::kWitnessInvalid, "transaction '" + id + "' appears twice in witness");
    }
    order.push_back(*t);
  }
  if (order.size() != w.txn_count()) {
    throw Error(ErrorCode::kWitnessInvalid, "witness order is not a permutation of the workload");
  }
  return order;
}

VersionOrder resolve_version_order(const Workload& w,
                                   const std::map<std::string, std::vector<std::string>>& vo) {
  VersionOrder out;
  out.chains.assign(w.key_count(), {});
  for (const auto& [name, chain] : vo) {
    auto k = w.find_key(name);
    if (!k) throw Error(ErrorCode::kWitnessInvalid, "unknown key '" + name + "' in version order");
    for (const std::string& id : chain) {
      auto t = w.find_txn(id);
      if (!t || !w.txn(*t).writes(*k)) {
        throw Error(ErrorCode::kWitnessInvalid, "'" + id + "' does not write key '" + name + "'");
      }
      out.chains[*k].push_back(*t);
    }
  }
  for (KeyIndex k = 0; k < w.key_count(); ++k) {
    std::vector<TxnIndex> got = out.chains[k];
    std::vector<TxnIndex> want = w.writers_of(k);
    std::sort(got.begin(), got.end());
    if (got != want) {
      throw Error(ErrorCode::kWitnessInvalid,
                  "version order of key '" + w.key_name(k) + "' does not list exactly its writers");
    }
  }
  return out;
}

std::string history_digest(const RawHistory& h) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : serialize_history(h)) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace statecheck
