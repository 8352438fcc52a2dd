#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xsum {

enum class Axis : std::uint8_t { Child, Desc };

struct Predicate {
  enum class Kind : std::uint8_t { None, Eq, Contains };
  Kind kind = Kind::None;
  std::string literal;

  bool active() const noexcept { return kind != Kind::None; }
  bool matches(std::string_view value) const;
  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// One node of a tree pattern. Nodes live in a QueryPattern in pre-order;
/// `parent` and `children` hold indices into it.
struct PatternNode {
  std::string label;  // tag, "*", "#text" or "@name"
  Axis axis = Axis::Child;
  bool optional = false;
  bool existential = false;
  bool returned = false;
  Predicate predicate;
  int parent = -1;
  std::vector<int> children;

  bool is_value() const noexcept { return !label.empty() && (label[0] == '#' || label[0] == '@'); }
  /// "*" matches element labels only.
  bool matches_label(std::string_view path_label) const;
};

class QueryPattern {
 public:
  /// Appends a node under `parent` (-1 for the root). Returns its index.
  /// Children must be added in pre-order (after all descendants of earlier
  /// siblings).
  int add(PatternNode node, int parent);

  std::size_t size() const noexcept { return nodes_.size(); }
  const PatternNode& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  PatternNode& node(int i) { return nodes_.at(static_cast<std::size_t>(i)); }
  const std::vector<PatternNode>& nodes() const noexcept { return nodes_; }

  /// True if `i` or one of its descendants is returned.
  bool has_returned_below(int i) const;
  /// True if `i` or one of its descendants carries a predicate.
  bool has_predicate_below(int i) const;
  bool is_ancestor(int a, int d) const;
  /// Index one past the last descendant of `i` (pre-order subtree bound).
  int subtree_end(int i) const;

  /// Throws InvariantViolation when a node breaks the pattern rules.
  void validate() const;

  friend bool operator==(const QueryPattern&, const QueryPattern&);

 private:
  std::vector<PatternNode> nodes_;
};

/// `('/'|'//') step (('/'|'//') step)*`, step = name | '*' | '@name' |
/// 'text()' with predicates `[rel-path (('='|'~') 'literal')?]`.
QueryPattern parse_xpath(std::string_view text);

/// `(node tag=X axis=child|desc [opt] [exist] [ret] [eq="v"|contains="v"] child*)`
QueryPattern parse_pattern(std::string_view text);

/// Canonical s-expression form accepted by parse_pattern.
std::string to_sexpr(const QueryPattern& q);

}  // namespace xsum
