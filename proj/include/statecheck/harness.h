#pragma once

// Workload generation, level-targeted simulation, the exhaustive
// small-workload family, and the checker-versus-oracle cross-validation
// driver.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "statecheck/commit_tests.h"
#include "statecheck/model.h"
#include "statecheck/search.h"

namespace statecheck {

/// mt19937_64 with rejection-sampled bounded integers, so streams match
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [lo, hi].
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi);
  /// True with probability p.
  bool chance(double p);
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[between(0, i - 1)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct GenParams {
  std::size_t sessions = 2;
  std::size_t min_txns = 1;  // per session
  std::size_t max_txns = 3;
  std::size_t min_ops = 1;  // per transaction
  std::size_t max_ops = 3;
  std::size_t keys = 2;
  double read_fraction = 0.5;
  std::uint64_t seed = 0;
};

/// Throws kInvalidArgument unless all counts are positive, ranges are
/// ordered and read_fraction lies in [0, 1].
void validate(const GenParams& p);

/// Sessions "s1".., transactions "t01".. numbered globally in session order,
/// keys "k1"... Every write's raw value is its transaction id; a transaction
/// writes a key at most once. Reads carry no value except reads that follow
/// the transaction's own write of the key, which return that write.
RawHistory generate_skeleton(const GenParams& p);

/// A skeleton whose free reads return the initial value or a uniformly
/// chosen write of the key by another transaction.
RawHistory generate_workload(const GenParams& p);

/// Fills the free reads of a skeleton so that the result satisfies `level`:
/// picks a random order (session-respecting for SC and CC), then resolves
/// reads from states the level allows and replays the order through the
/// checker. SSER additionally gets serial start/commit ranks. Throws
/// kUnfillableSkeleton after `attempts` failed replays.
RawHistory simulate_level(const RawHistory& skeleton, IsolationLevel level, std::uint64_t seed,
                          int attempts = 8);
/// Same for causal consistency.
RawHistory simulate_causal(const RawHistory& skeleton, std::uint64_t seed, int attempts = 8);

struct SmallBounds {
  std::size_t txns = 3;
  std::size_t ops = 2;
  std::size_t keys = 2;
  std::size_t sessions = 2;
};

/// Every workload with 1..txns transactions, each with 1..ops operations
/// over the first `keys` keys, split into at most `sessions` sessions, and
/// every assignment of read values (initial value, or any write of the key
/// including the reader's own later write). Reads after the reader's own
/// write return it. Sessions are listed longest first, and one
/// representative is kept per class under permutations of equal-length
/// sessions and renamings of keys: the one whose encoding is smallest. Taken
/// together this is one workload per class under any session permutation.
void for_each_small_workload(const SmallBounds& b, const std::function<void(const RawHistory&)>& fn);
std::vector<RawHistory> enumerate_small_workloads(const SmallBounds& b);
/// Size of the family before symmetry reduction, sessions longest first.
std::uint64_t count_small_workloads_unreduced(const SmallBounds& b);

enum class CrossLevel : std::uint8_t { kSer, kSi, kRc, kRu, kPsi, kPsiA, kCc4 };
std::string_view to_string(CrossLevel level);
/// ser, si, rc, ru, psi, psia, cc4
std::optional<CrossLevel> parse_cross_level(std::string_view text);

struct Disagreement {
  std::string digest;
  std::string level;
  std::string checker;
  std::string oracle;
  std::string history;  // canonical JSON of the case
};

struct CrossReport {
  std::uint64_t cases = 0;  // agreements + disagreements
  std::uint64_t agreements = 0;
  std::vector<Disagreement> disagreements;
  std::uint64_t budget_exceeded = 0;  // not part of cases
  std::uint64_t witnesses_checked = 0;
  std::uint64_t witness_failures = 0;
  std::uint64_t constructions_checked = 0;
  std::uint64_t construction_failures = 0;
  std::vector<std::string> failure_notes;

  bool clean() const {
    return disagreements.empty() && budget_exceeded == 0 && witness_failures == 0 &&
           construction_failures == 0;
  }
  void merge(const CrossReport& other);
};

struct CrossOptions {
  SearchBudget budget;
  std::size_t vis_ar_cap = 4;  // psia cases above this count as budget exceeded
  /// Flip one read of each case before handing it to the checker; the
  /// oracle still sees the original.
  bool mutate = false;
};

CrossReport crosscheck_case(const RawHistory& h, const std::vector<CrossLevel>& levels,
                            const CrossOptions& opts = {});
CrossReport crosscheck(const std::vector<RawHistory>& corpus, const std::vector<CrossLevel>& levels,
                       const CrossOptions& opts = {});
CrossReport crosscheck_family(const SmallBounds& b, const std::vector<CrossLevel>& levels,
                              const CrossOptions& opts = {});

/// Random workloads of at most `max_txns` transactions over 1-3 sessions,
/// 1-3 operations and 1-3 keys, seeded seed, seed+1, ...
std::vector<RawHistory> random_corpus(std::size_t count, std::uint64_t seed, std::size_t max_txns = 6);

std::string report_to_json(const CrossReport& r);

}  // namespace statecheck
