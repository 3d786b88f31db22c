#pragma once

// JSON encodings of histories and witnesses.
//
// History:  {"sessions":[{"id":..,"transactions":[{"id":..,"start":int?,
//            "commit":int?,"ops":[{"type":"r"|"w","key":..,"value":str|null}]}]}]}
// Witness:  {"order":[..]} or {"per_session":{sid:{"order":[..]}}}, plus
//            optional "version_order" {key:[txn ids]} and
//            "timestamps" {txn id:{"start":int,"commit":int}}.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "statecheck/adya.h"
#include "statecheck/model.h"
#include "statecheck/search.h"

namespace statecheck {

/// Throws kParse with line/column for malformed JSON and the offending field
/// path for schema errors.
RawHistory parse_history(std::string_view text);
/// Canonical form: fixed field order, two-space indent, trailing newline.
std::string serialize_history(const RawHistory& h);

RawHistory load_history(const std::string& path);
void save_text(const std::string& path, const std::string& text);

struct WitnessTimestamps {
  std::int64_t start = 0;
  std::int64_t commit = 0;

  friend bool operator==(const WitnessTimestamps&, const WitnessTimestamps&) = default;
};

struct WitnessFile {
  std::optional<std::vector<std::string>> order;
  std::map<std::string, std::vector<std::string>> per_session;
  std::optional<std::map<std::string, std::vector<std::string>>> version_order;
  std::optional<std::map<std::string, WitnessTimestamps>> timestamps;

  friend bool operator==(const WitnessFile&, const WitnessFile&) = default;
};

WitnessFile parse_witness(std::string_view text);
std::string serialize_witness(const WitnessFile& w);
WitnessFile load_witness(const std::string& path);

/// Witness file for a satisfied verdict.
WitnessFile witness_from_verdict(const Workload& w, const Verdict& v);
void attach_version_order(const Workload& w, const VersionOrder& vo, WitnessFile& out);
void attach_timestamps(const Workload& w, const Timestamps& ts, WitnessFile& out);

/// Resolves ids against the workload; throws kWitnessInvalid on unknown ids
/// or a non-permutation.
std::vector<TxnIndex> resolve_order(const Workload& w, const std::vector<std::string>& ids);
VersionOrder resolve_version_order(const Workload& w,
                                   const std::map<std::string, std::vector<std::string>>& vo);

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string history_digest(const RawHistory& h);

}  // namespace statecheck
