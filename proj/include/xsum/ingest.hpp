#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xsum {

/// (pre, post, depth) label of one node.
///
/// Elements number their begin tags and their end tags with two independent
/// 1-based counters. Text and attribute nodes take the pre of the most
/// recently begun element and use post as a 1-based ordinal among the value
/// nodes stamped under that pre, so (pre, post) orders them in document
/// order relative to each other and to elements (see DocKey).
struct StructuralId {
  std::uint32_t pre = 0;
  std::uint32_t post = 0;
  std::uint32_t depth = 0;

  friend bool operator==(const StructuralId&, const StructuralId&) = default;
};

/// Element ancestor test: x.pre < y.pre and x.post > y.post.
constexpr bool ancestor(const StructuralId& x, const StructuralId& y) noexcept {
  return x.pre < y.pre && x.post > y.post;
}

constexpr bool parent(const StructuralId& x, const StructuralId& y) noexcept {
  return ancestor(x, y) && y.depth == x.depth + 1;
}

constexpr bool ancestor_or_self(const StructuralId& x, const StructuralId& y) noexcept {
  return x == y || ancestor(x, y);
}

/// Total document-order key over elements and value nodes.
struct DocKey {
  std::uint32_t pre = 0;
  std::uint32_t sub = 0;  // 0 for elements, value ordinal otherwise

  friend auto operator<=>(const DocKey&, const DocKey&) = default;
};

constexpr DocKey element_key(const StructuralId& id) noexcept { return {id.pre, 0}; }
constexpr DocKey value_key(const StructuralId& id) noexcept { return {id.pre, id.post}; }

enum class NodeKind : std::uint8_t { ElementStart, ElementEnd, Attribute, Text };

inline constexpr std::string_view kTextLabel = "#text";

/// One step of the document walk. `label` is the tag, "@name" or "#text".
/// On ElementStart the id has post == 0 (the end is not known yet); the
/// matching ElementEnd carries the completed id.
struct NodeEvent {
  NodeKind kind = NodeKind::ElementStart;
  std::string label;
  StructuralId id{};
  std::string value;
};

/// Pull parser for the XML subset the engine stores: elements, attributes,
/// character data, CDATA, the five built-in entities and numeric character
/// references. Comments, processing instructions and the DOCTYPE are skipped;
/// whitespace-only text is dropped. Events come out without ids.
class XmlReader {
 public:
  explicit XmlReader(std::string_view input);

  std::optional<NodeEvent> next();

 private:
  void fill();
  void parse_start_tag();
  void parse_end_tag();
  void skip_comment();
  void skip_pi();
  void skip_doctype();
  void read_cdata(std::string& text);
  void flush_text(std::string& text);
  std::string read_name();
  std::string decode(std::string_view raw, std::size_t at) const;
  void skip_ws();
  [[noreturn]] void fail(const std::string& what, std::size_t at) const;

  std::string_view in_;
  std::size_t pos_ = 0;
  std::vector<std::string> open_;
  std::deque<NodeEvent> pending_;
  bool seen_root_ = false;
  bool done_ = false;
};

/// Stamps structural ids onto an event stream. Memory is the open-element
/// stack only.
class IdAssigner {
 public:
  /// Throws MalformedXml when events are not well nested.
  NodeEvent& stamp(NodeEvent& ev);
  std::size_t height() const noexcept { return max_depth_; }
  std::uint32_t element_count() const noexcept { return next_pre_; }

 private:
  struct Open {
    std::uint32_t pre;
    std::uint32_t depth;
  };
  std::vector<Open> stack_;
  std::uint32_t next_pre_ = 0;
  std::uint32_t next_post_ = 0;
  std::uint32_t last_pre_ = 0;
  std::uint32_t value_ordinal_ = 0;
  std::size_t max_depth_ = 0;
};

/// Parser plus id assignment as one pull iterator.
class EventSource {
 public:
  explicit EventSource(std::string_view input) : reader_(input) {}

  std::optional<NodeEvent> next() {
    auto ev = reader_.next();
    if (ev) ids_.stamp(*ev);
    return ev;
  }
  const IdAssigner& ids() const noexcept { return ids_; }

 private:
  XmlReader reader_;
  IdAssigner ids_;
};

/// Parses the whole document into a vector of stamped events.
std::vector<NodeEvent> read_events(std::string_view input);

/// Escapes the five built-in entities.
std::string escape_xml(std::string_view text);

}  // namespace xsum
