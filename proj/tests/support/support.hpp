#pragma once

// Independent reference implementations used by the tests: a naive DOM with
// a canonical serializer, a brute-force pattern evaluator and a brute-force
// relevant-path oracle, plus seeded random documents and patterns.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "xsum/exec.hpp"
#include "xsum/ingest.hpp"
#include "xsum/pattern.hpp"
#include "xsum/relpaths.hpp"
#include "xsum/summary.hpp"

namespace xsum::testing {

struct DomNode {
  NodeKind kind = NodeKind::ElementStart;  // ElementStart, Attribute or Text
  std::string label;
  std::string value;
  StructuralId id;
  DocKey key;
  int parent = -1;
  std::vector<int> children;  // attributes first, then content, in document order
  std::string direct_text;    // concatenated direct #text children of an element
  PathId path = kNoPath;
};

struct Dom {
  std::vector<DomNode> nodes;  // document order, 0 is the root element

  bool is_element(int i) const { return nodes[static_cast<std::size_t>(i)].kind == NodeKind::ElementStart; }
  bool is_ancestor(int a, int d) const;
};

/// Builds the DOM from the engine's event stream and attaches summary paths.
Dom parse_dom(const std::string& xml, const PathSummary& summary);

/// Canonical form: explicit end tags, attributes in order, escaped values.
std::string serialize_subtree(const Dom& dom, int i);
std::string serialize_roots(const Dom& dom, const std::vector<PathId>& roots);

/// Brute-force summary: distinct label paths with per-edge min/max child
/// counts. Nodes come out in first-appearance pre-order.
PathSummary naive_summary(const std::string& xml);

/// One result cell, comparable across the engine and the naive evaluator.
struct RefCell {
  bool present = false;
  bool is_value = false;
  StructuralId id;
  DocKey key;
  friend bool operator==(const RefCell&, const RefCell&) = default;
};
using RefRow = std::vector<RefCell>;

/// Embedding semantics: optional children left-outer, existential children
/// as filters, projection on the returned nodes (the root when none is
/// returned), sorted and duplicate-free.
std::vector<RefRow> naive_evaluate(const Dom& dom, const QueryPattern& q);
std::vector<RefRow> to_ref_rows(const Table& table);

/// Relevant-path tuples by exhaustive enumeration, minimized by direct
/// application of the trivial / useless definitions.
std::vector<PathTuple> oracle_relevant_paths(const PathSummary& summary, const QueryPattern& q, bool minimize = true);

struct DocGenOptions {
  std::size_t elements = 200;
  int alphabet = 4;  // tags a, b, c, ...
  int max_depth = 6;
  double attr_prob = 0.2;
  double text_prob = 0.4;
};
std::string random_document(std::mt19937_64& rng, const DocGenOptions& opt = {});

struct PatternGenOptions {
  int max_size = 8;
  int alphabet = 4;
  double value_leaf_prob = 0.25;
  double predicate_prob = 0.2;
};
/// Always satisfies QueryPattern::validate.
QueryPattern random_pattern(std::mt19937_64& rng, const PatternGenOptions& opt = {});

double unit(std::mt19937_64& rng);

/// Fixture documents.
extern const char* const kD1;
extern const char* const kD2;

/// Nested-loop structural join over the DOM relation; `node_of` maps
/// (is_value, key) to a DOM node index.
std::vector<JoinPair> brute_join(const Dom& dom, const std::map<std::pair<bool, DocKey>, int>& node_of,
                                 const IdStream& outer, const IdStream& inner, Axis axis, JoinVariant v);

}  // namespace xsum::testing
