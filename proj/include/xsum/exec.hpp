#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xsum/pattern.hpp"
#include "xsum/relpaths.hpp"
#include "xsum/store.hpp"

namespace xsum {

/// One stream item. `anchor` is the id used for containment: the element
/// itself, or the owner element of a text or attribute node.
struct IdItem {
  StructuralId id;
  StructuralId anchor;
  PathId path = kNoPath;
  DocKey key;
  const std::string* value = nullptr;
  bool is_value = false;
};

/// Items in non-decreasing key order.
using IdStream = std::vector<IdItem>;

IdStream scan_ids(const PathStore& store, PathId p);
IdStream scan_values(const PathStore& store, PathId p);

/// k-way merge by key. UnsortedInput if an input is out of order.
IdStream merge(const std::vector<IdStream>& inputs);

/// Order-preserving filter on the value column. MissingColumn if an item has
/// no value.
IdStream select(const IdStream& input, const Predicate& pred);

enum class JoinVariant : std::uint8_t {
  Inner,         // (a, d) pairs in descendant order
  Semi,          // each qualifying d once, descendant order
  LeftOuter,     // every a, with each match or with none, ancestor order
  AncestorSemi,  // each a with at least one match once, ancestor order
};

/// Index pair into the outer / inner inputs; d is -1 for a LeftOuter miss
/// and a is -1 for Semi output.
struct JoinPair {
  int a = -1;
  int d = -1;
  friend bool operator==(const JoinPair&, const JoinPair&) = default;
};

/// Optional path-level restriction on joined pairs.
using PathPairFilter = std::function<bool(PathId outer, PathId inner)>;

/// Stack-based structural join. Both inputs sorted by key; the outer input
/// must be element items without repeats. UnsortedInput otherwise.
std::vector<JoinPair> struct_join(const IdStream& outer, const IdStream& inner, Axis axis, JoinVariant variant,
                                  const PathPairFilter& filter = {}, std::size_t* peak_stack = nullptr);

struct DupSafety {
  bool safe = true;
  std::optional<std::pair<PathId, PathId>> witness;  // (ancestor, descendant)
};

/// Safe iff no path of the set is a summary ancestor of another.
DupSafety needs_dup_elim(const std::set<PathId>& paths, const PathSummary& summary);

/// A bound cell of a result row; `present` is false for absent optional nodes.
struct Cell {
  bool present = false;
  IdItem item;
};

struct Table {
  std::vector<int> columns;  // pattern node per column
  std::vector<std::vector<Cell>> rows;
  int order_column = -1;     // pattern node the rows are sorted by, -1 if none
  int column_of(int node) const;
};

struct PlanNode {
  enum class Kind { Scan, ValScan, Merge, Select, StructJoin, Sort, DupElim, Project, Output };
  Kind kind = Kind::Scan;
  int node = -1;  // pattern node (key column for joins and sorts)
  int inner_node = -1;
  PathId path = kNoPath;
  Axis axis = Axis::Desc;
  JoinVariant variant = JoinVariant::Inner;
  Predicate predicate;
  std::vector<int> keep;  // Project: retained pattern nodes
  std::set<std::pair<PathId, PathId>> pairs;
  std::set<PathId> passthrough;
  std::string note;
  std::vector<std::unique_ptr<PlanNode>> children;
};

struct Plan {
  std::unique_ptr<PlanNode> root;
  std::vector<int> output_columns;   // returned pattern nodes in pre-order
  bool null_row_if_empty = false;    // topmost bound node is optional under pruned ancestors
  std::vector<std::string> labels;   // pattern labels, for explain()

  std::string explain() const;
  /// Number of nodes of the given kind.
  std::size_t count(PlanNode::Kind kind) const;
};

struct ExecStats {
  std::uint64_t ids_scanned = 0;
  std::size_t peak_join_stack = 0;
};

/// Unsatisfiable when the pattern root has no relevant path.
Plan build_plan(const QueryPattern& q, const RelevantPathForest& forest, const PathStore& store);

/// Rows sorted by the output columns, duplicate-free. The Output operator
/// checks that property and raises UnsortedInput when a plan without
/// DupElim would break it.
Table execute(const Plan& plan, const PathStore& store, ExecStats* stats = nullptr);

struct QueryOptions {
  bool minimize = true;
};

struct QueryResult {
  Table table;
  std::string explain;
  ExecStats stats;
  bool satisfiable = true;
};

/// Relevant paths, plan and execution in one call; an unsatisfiable pattern
/// yields an empty table.
QueryResult run_query(const PathStore& store, const QueryPattern& q, QueryOptions options = {});

/// `pre,post,depth[,value]` per cell, cells joined by ','; absent cells
/// print as "null".
std::string format_row(const std::vector<Cell>& row);

}  // namespace xsum
