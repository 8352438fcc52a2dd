#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xsum/ingest.hpp"

namespace xsum {

/// Pre-order rank of a summary node; the root is 1, 0 means "none".
using PathId = std::uint32_t;
inline constexpr PathId kNoPath = 0;

/// Cardinality of a summary edge, stored on the child node.
enum class Annotation : std::uint8_t { One = 0, Plus = 1, Star = 2 };

char annotation_symbol(Annotation a);

enum class Encoding : std::uint8_t { Direct, Precomputed };

enum class SummaryFormat { XmlDirect, XmlPrecomputed, BinaryDirect, BinaryPrecomputed };

struct SummaryNode {
  std::string label;
  PathId parent = kNoPath;
  Annotation annotation = Annotation::One;
  std::vector<PathId> children;
  std::uint32_t depth = 1;
  PathId last = kNoPath;  // largest PathId in this node's subtree
};

/// Tree of the distinct root-to-node label paths of a document, with
/// per-edge cardinality annotations. Immutable once built.
class PathSummary {
 public:
  PathSummary() = default;

  /// Nodes given in pre-order with parents; annotation of the root is
  /// forced to One. Recomputes children, depths and subtree bounds.
  static PathSummary from_nodes(std::vector<SummaryNode> nodes_in_preorder);

  std::size_t size() const noexcept { return nodes_.size() - 1; }
  bool empty() const noexcept { return size() == 0; }
  bool contains(PathId p) const noexcept { return p >= 1 && p < nodes_.size(); }

  const SummaryNode& node(PathId p) const;
  const std::string& label(PathId p) const { return node(p).label; }
  PathId parent(PathId p) const { return node(p).parent; }
  Annotation annotation(PathId p) const { return node(p).annotation; }
  std::span<const PathId> children(PathId p) const { return node(p).children; }
  std::uint32_t depth(PathId p) const { return node(p).depth; }

  /// True for "#text" and "@name" summary nodes.
  bool is_value_path(PathId p) const;

  /// O(1) via pre-order subtree bounds.
  bool is_ancestor_or_self(PathId a, PathId d) const;
  bool is_ancestor(PathId a, PathId d) const { return a != d && is_ancestor_or_self(a, d); }

  PathId child(PathId p, std::string_view label) const;
  std::optional<PathId> lookup(std::span<const std::string> labels) const;
  std::vector<std::string> label_path(PathId p) const;

  Encoding encoding() const noexcept { return encoding_; }
  /// Cluster labels; only meaningful under the precomputed encoding.
  std::uint32_t n1(PathId p) const { return n1_.at(p); }
  std::uint32_t nplus(PathId p) const { return nplus_.at(p); }

  /// Copy carrying the 1-partition and +-partition cluster labels.
  PathSummary precompute() const;

  /// True iff every node strictly below `px` down to `py` is annotated One.
  /// `visits`, when given, is incremented once per summary node inspected.
  bool all1(PathId px, PathId py, std::uint64_t* visits = nullptr) const;
  /// Same with One or Plus.
  bool all1orplus(PathId px, PathId py, std::uint64_t* visits = nullptr) const;

  /// Labels in order of first appearance in pre-order.
  const std::vector<std::string>& tag_dictionary() const noexcept { return tags_; }

  friend bool operator==(const PathSummary& a, const PathSummary& b);

 private:
  bool walk_check(PathId px, PathId py, bool allow_plus, std::uint64_t* visits) const;
  void index();

  std::vector<SummaryNode> nodes_{1};
  Encoding encoding_ = Encoding::Direct;
  std::vector<std::uint32_t> n1_;
  std::vector<std::uint32_t> nplus_;
  std::vector<std::string> tags_;
  std::unordered_map<std::string, std::uint32_t> tag_index_;
  std::vector<std::unordered_map<std::string, PathId>> child_index_;

  friend PathSummary deserialize_summary(std::string_view bytes);
};

/// Counters sampled while building; "tracked memory" is frames plus
/// per-frame child counters plus summary nodes.
struct BuildStats {
  std::size_t summary_nodes = 0;
  std::size_t peak_open_frames = 0;
  std::size_t peak_child_counters = 0;
  std::size_t peak_tracked = 0;
  std::size_t events = 0;
};

/// Single-pass summary construction over an event stream.
class SummaryBuilder {
 public:
  void feed(const NodeEvent& ev);
  PathSummary finish();
  const BuildStats& stats() const noexcept { return stats_; }

 private:
  struct Node {
    std::string label;
    std::uint32_t parent;  // index, UINT32_MAX for root
    std::vector<std::uint32_t> children;
    std::unordered_map<std::string, std::uint32_t> by_label;
    std::uint64_t instances = 0;
    std::uint64_t having = 0;  // parent instances with at least one child here
    std::uint64_t max_count = 0;
    std::uint64_t open_count = 0;  // count under the currently open parent instance
  };
  struct Frame {
    std::uint32_t node;
    std::vector<std::uint32_t> touched;
  };

  std::uint32_t child_of(std::uint32_t parent, const std::string& label);
  void count_child(Frame& frame, std::uint32_t child);
  void track();

  std::vector<Node> nodes_;
  std::vector<Frame> frames_;
  std::size_t touched_total_ = 0;
  bool has_root_ = false;
  BuildStats stats_;
};

/// Reads `xml` and builds its direct-encoded summary.
PathSummary build_summary(std::string_view xml, BuildStats* stats = nullptr);

std::string serialize(const PathSummary& summary, SummaryFormat format);
/// Detects binary ("XSUM" magic) or XML input.
PathSummary deserialize_summary(std::string_view bytes);

std::string export_dot(const PathSummary& summary);

struct TagFanIn {
  std::uint32_t fin = 0;
  std::uint64_t count = 0;
};

struct FanInReport {
  std::map<std::string, TagFanIn> tags;
  std::uint64_t total_nodes = 0;
  std::uint32_t max_fin = 0;
  double mf = 0.0;
};

/// Node-weighted mean fan-in over element and attribute tags; #text is
/// excluded. Throws EmptyDocument when the counts sum to zero.
FanInReport fanin_report(const PathSummary& summary, const std::map<std::string, std::uint64_t>& tag_counts);

}  // namespace xsum
