#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xsum/pattern.hpp"
#include "xsum/summary.hpp"

namespace xsum {

/// One stack entry: a candidate summary path for one pattern node.
struct StackEntry {
  PathId path = kNoPath;
  int node = -1;
  int parent = -1;      // entry in the pattern parent's stack
  int selfparent = -1;  // earlier entry of the same stack that was open at push time
  bool open = true;
  bool alive = true;    // survived the required-children check
  bool erased = false;  // removed by minimization
  std::vector<std::vector<int>> children;  // per pattern child slot
  std::vector<char> has_child;             // per slot: some live child, directly or inherited
  std::vector<char> passthrough;           // per slot: child check is trivially satisfied
};

struct RelpathStats {
  std::size_t entries_pushed = 0;
  std::size_t peak_open_frames = 0;
  std::size_t visits = 0;  // summary nodes visited by the traversal
};

/// Result of the relevant-path computation: per pattern node stacks of
/// entries linked by parent / selfparent pointers.
class RelevantPathForest {
 public:
  const QueryPattern& pattern() const noexcept { return q_; }
  const PathSummary& summary() const noexcept { return *summary_; }
  const std::vector<StackEntry>& entries() const noexcept { return entries_; }
  const StackEntry& entry(int e) const { return entries_.at(static_cast<std::size_t>(e)); }
  const std::vector<int>& stack(int node) const { return stacks_.at(static_cast<std::size_t>(node)); }
  const RelpathStats& stats() const noexcept { return stats_; }

  /// Surviving entries of a pattern node.
  std::vector<int> live(int node) const;
  /// Sorted surviving paths of a pattern node.
  std::vector<PathId> paths(int node) const;
  std::size_t live_entry_count() const;

  /// False for pattern nodes pruned as useless; they are not bound to ids.
  bool bound(int node) const { return !unbound_.at(static_cast<std::size_t>(node)); }
  /// False when a required pattern node has no surviving entry.
  bool satisfiable() const;
  /// Nearest bound proper ancestor node, or -1.
  int bound_parent(int node) const;

  /// Surviving entries of the parent node that entry `e` can pair with.
  std::vector<int> effective_parents(int e) const;
  /// Surviving child entries of `e` in slot `slot`, expanding selfparent
  /// inheritance across descendant edges.
  std::vector<int> effective_children(int e, std::size_t slot) const;

  /// Path pairs (path of bound_parent(node), path of node).
  std::set<std::pair<PathId, PathId>> path_pairs(int node) const;
  /// Paths of bound_parent(node) on which existential `node` always holds.
  std::set<PathId> passthrough_paths(int node) const;

  /// Indented `node: path, path` lines.
  std::string describe() const;

 private:
  friend class RelpathComputation;
  std::vector<int> bound_ancestor_entries(int e) const;

  QueryPattern q_;
  const PathSummary* summary_ = nullptr;
  std::vector<StackEntry> entries_;
  std::vector<std::vector<int>> stacks_;
  std::vector<char> unbound_;
  RelpathStats stats_;
};

struct RelpathOptions {
  bool minimize = true;
};

/// Streams the summary once, matching pattern nodes to paths, then prunes
/// trivial existential and useless for-variable paths. The summary must
/// outlive the returned forest.
RelevantPathForest compute_relevant_paths(const PathSummary& summary, const QueryPattern& q,
                                          RelpathOptions options = {});

/// One tuple per combination; slot i holds the path of pattern node i, or
/// kNoPath for absent optional nodes, pruned nodes and passthrough subtrees.
using PathTuple = std::vector<PathId>;

inline constexpr std::size_t kDefaultTupleCap = 1000000;

/// Sorted, duplicate-free. Throws TupleExplosion beyond `cap` tuples.
std::vector<PathTuple> enumerate_tuples(const RelevantPathForest& forest, std::size_t cap = kDefaultTupleCap);

/// Cap from XSUM_TUPLE_CAP, or the default.
std::size_t tuple_cap_from_env();

/// Shared pruning predicates.
bool implicitly_returned(const QueryPattern& q, int node);
bool useless_candidate(const QueryPattern& q, int node);

}  // namespace xsum
