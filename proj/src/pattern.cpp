#include "xsum/pattern.hpp"

#include <cctype>
#include <optional>

#include "xsum/error.hpp"

namespace xsum {

bool Predicate::matches(std::string_view value) const {
  switch (kind) {
    case Kind::None: return true;
    case Kind::Eq: return value == literal;
    case Kind::Contains: return value.find(literal) != std::string_view::npos;
  }
  return false;
}

bool PatternNode::matches_label(std::string_view path_label) const {
  if (label == "*") return !path_label.empty() && path_label[0] != '#' && path_label[0] != '@';
  return label == path_label;
}

int QueryPattern::add(PatternNode node, int parent) {
  const int id = static_cast<int>(nodes_.size());
  if (parent < -1 || parent >= id || (parent == -1 && id != 0))
    throw Error(ErrorCode::InvariantViolation, "pattern nodes must be added in pre-order under one root");
  node.parent = parent;
  node.children.clear();
  nodes_.push_back(std::move(node));
  if (parent >= 0) nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

int QueryPattern::subtree_end(int i) const {
  int end = i + 1;
  while (end < static_cast<int>(nodes_.size()) && is_ancestor(i, end)) ++end;
  return end;
}

bool QueryPattern::is_ancestor(int a, int d) const {
  for (int x = node(d).parent; x >= 0; x = node(x).parent)
    if (x == a) return true;
  return false;
}

bool QueryPattern::has_returned_below(int i) const {
  const int end = subtree_end(i);
  for (int j = i; j < end; ++j)
    if (node(j).returned) return true;
  return false;
}

bool QueryPattern::has_predicate_below(int i) const {
  const int end = subtree_end(i);
  for (int j = i; j < end; ++j)
    if (node(j).predicate.active()) return true;
  return false;
}

void QueryPattern::validate() const {
  auto fail = [](int i, const std::string& what) {
    throw Error(ErrorCode::InvariantViolation, "pattern node " + std::to_string(i) + ": " + what);
  };
  if (nodes_.empty()) throw Error(ErrorCode::InvariantViolation, "empty pattern");
  const auto& root = nodes_[0];
  if (root.optional || root.existential) fail(0, "the root cannot be optional or existential");
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    const auto& n = node(i);
    if (n.label.empty()) fail(i, "empty label");
    if (n.returned && n.existential) fail(i, "a returned node cannot be existential");
    for (int a = n.parent; a >= 0; a = node(a).parent) {
      const auto& anc = node(a);
      if (anc.existential && !(n.existential || n.optional))
        fail(i, "descendants of an existential node must be existential or optional");
      if (anc.existential && n.returned) fail(i, "returned node inside an existential subtree");
      if (anc.optional && n.returned && !n.optional) fail(a, "optional node above a non-optional returned node");
    }
    if (n.optional && n.returned) continue;
    if (n.optional) {
      for (int j = i + 1; j < subtree_end(i); ++j)
        if (node(j).returned && !node(j).optional) fail(i, "optional node above a non-optional returned node");
    }
  }
}

bool operator==(const QueryPattern& a, const QueryPattern& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.nodes_[i];
    const auto& y = b.nodes_[i];
    if (x.label != y.label || x.axis != y.axis || x.optional != y.optional || x.existential != y.existential ||
        x.returned != y.returned || !(x.predicate == y.predicate) || x.parent != y.parent)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// XPath subset

namespace {

bool name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || (static_cast<unsigned char>(c) & 0x80);
}
bool name_char(char c) {
  return name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == ':';
}

class XPathParser {
 public:
  explicit XPathParser(std::string_view t) : t_(t) {}

  QueryPattern parse() {
    ws();
    if (at_end()) syntax("empty expression");
    int parent = -1;
    int last = -1;
    while (!at_end()) {
      const Axis axis = slash(true);
      last = step(axis, parent, false);
      parent = last;
      ws();
    }
    q_.node(last).returned = true;
    q_.validate();
    return std::move(q_);
  }

 private:
  bool at_end() const { return pos_ >= t_.size(); }
  char peek(std::size_t k = 0) const { return pos_ + k < t_.size() ? t_[pos_ + k] : '\0'; }
  void ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  [[noreturn]] void syntax(const std::string& what) const {
    throw Error(ErrorCode::SyntaxError, what, pos_);
  }
  [[noreturn]] void unsupported(const std::string& what) const {
    throw Error(ErrorCode::UnsupportedFeature, what, pos_);
  }
  void check_unsupported() const {
    const char c = peek();
    if (c == '|') unsupported("union");
    if (c == '$') unsupported("variables");
    if (c == '(') unsupported("function calls and grouping");
    if (c == '.' && peek(1) == '.') unsupported("parent axis");
    if (c == ':' && peek(1) == ':') unsupported("explicit axes");
  }

  Axis slash(bool required) {
    ws();
    if (peek() == '/') {
      ++pos_;
      if (peek() == '/') {
        ++pos_;
        return Axis::Desc;
      }
      return Axis::Child;
    }
    if (required) {
      check_unsupported();
      syntax("expected '/' or '//'");
    }
    return Axis::Child;
  }

  std::string name() {
    const auto start = pos_;
    if (!name_start(peek())) {
      check_unsupported();
      syntax("expected a name");
    }
    while (!at_end() && name_char(peek()) && !(peek() == ':' && peek(1) == ':')) ++pos_;
    auto n = std::string(t_.substr(start, pos_ - start));
    if (peek() == ':' && peek(1) == ':') unsupported("explicit axes");
    if (peek() == '(') {
      if (n == "text" && peek(1) == ')') {
        pos_ += 2;
        return "#text";
      }
      unsupported("function calls");
    }
    return n;
  }

  int step(Axis axis, int parent, bool existential) {
    ws();
    PatternNode n;
    n.axis = axis;
    n.existential = existential;
    if (peek() == '*') {
      ++pos_;
      n.label = "*";
    } else if (peek() == '@') {
      ++pos_;
      n.label = "@" + name();
    } else {
      n.label = name();
    }
    const int id = q_.add(std::move(n), parent);
    for (;;) {
      ws();
      if (peek() != '[') break;
      ++pos_;
      predicate(id);
    }
    ws();
    if (!at_end() && peek() != '/' && peek() != ']' && peek() != '=' && peek() != '~') {
      check_unsupported();
      syntax("unexpected character '" + std::string(1, peek()) + "'");
    }
    return id;
  }

  void predicate(int owner) {
    ws();
    Axis axis = Axis::Child;
    if (peek() == '.' && peek(1) != '.') {
      ++pos_;
      axis = slash(true);
    } else if (peek() == '/') {
      syntax("predicate paths must be relative");
    }
    int last = step(axis, owner, true);
    for (;;) {
      ws();
      if (peek() != '/') break;
      const Axis a = slash(true);
      last = step(a, last, true);
    }
    ws();
    if (peek() == '=' || peek() == '~') {
      auto& pred = q_.node(last).predicate;
      pred.kind = peek() == '=' ? Predicate::Kind::Eq : Predicate::Kind::Contains;
      ++pos_;
      ws();
      pred.literal = literal();
      ws();
    }
    if (peek() != ']') {
      check_unsupported();
      syntax("expected ']'");
    }
    ++pos_;
  }

  std::string literal() {
    const char quote = peek();
    if (quote != '\'' && quote != '"') syntax("expected a string literal");
    ++pos_;
    const auto start = pos_;
    while (!at_end() && peek() != quote) ++pos_;
    if (at_end()) syntax("unterminated string literal");
    auto s = std::string(t_.substr(start, pos_ - start));
    ++pos_;
    return s;
  }

  std::string_view t_;
  std::size_t pos_ = 0;
  QueryPattern q_;
};

// ---------------------------------------------------------------------------
// S-expressions

class SexprParser {
 public:
  explicit SexprParser(std::string_view t) : t_(t) {}

  QueryPattern parse() {
    ws();
    node(-1);
    ws();
    if (!at_end()) syntax("trailing input after pattern");
    q_.validate();
    return std::move(q_);
  }

 private:
  bool at_end() const { return pos_ >= t_.size(); }
  char peek() const { return at_end() ? '\0' : t_[pos_]; }
  void ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  [[noreturn]] void syntax(const std::string& what) const {
    throw Error(ErrorCode::SyntaxError, what, pos_);
  }

  std::string bare() {
    const auto start = pos_;
    while (!at_end() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != '(' && peek() != ')' &&
           peek() != '=' && peek() != '"')
      ++pos_;
    if (start == pos_) syntax("expected a word");
    return std::string(t_.substr(start, pos_ - start));
  }

  std::string value() {
    if (peek() != '"') return bare();
    ++pos_;
    std::string out;
    for (;;) {
      if (at_end()) syntax("unterminated string");
      char c = t_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (at_end()) syntax("unterminated escape");
        c = t_[pos_++];
      }
      out += c;
    }
  }

  void node(int parent) {
    if (peek() != '(') syntax("expected '('");
    ++pos_;
    ws();
    if (bare() != "node") syntax("expected 'node'");
    PatternNode n;
    bool have_tag = false;
    int id = -1;
    for (;;) {
      ws();
      if (at_end()) syntax("unterminated node");
      if (peek() == ')') {
        ++pos_;
        break;
      }
      if (peek() == '(') {
        if (id < 0) {
          if (!have_tag) syntax("node without tag=");
          id = q_.add(std::move(n), parent);
        }
        node(id);
        continue;
      }
      if (id >= 0) syntax("attributes must precede child nodes");
      const auto key_pos = pos_;
      const auto key = bare();
      if (peek() == '=') {
        ++pos_;
        auto v = value();
        if (key == "tag") {
          if (v.empty()) syntax("empty tag");
          n.label = std::move(v);
          have_tag = true;
        } else if (key == "axis") {
          if (v == "child") n.axis = Axis::Child;
          else if (v == "desc") n.axis = Axis::Desc;
          else syntax("axis must be child or desc");
        } else if (key == "eq" || key == "contains") {
          if (n.predicate.active()) syntax("more than one predicate");
          n.predicate.kind = key == "eq" ? Predicate::Kind::Eq : Predicate::Kind::Contains;
          n.predicate.literal = std::move(v);
        } else {
          pos_ = key_pos;
          syntax("unknown attribute '" + key + "'");
        }
      } else if (key == "opt") {
        n.optional = true;
      } else if (key == "exist") {
        n.existential = true;
      } else if (key == "ret") {
        n.returned = true;
      } else {
        pos_ = key_pos;
        syntax("unknown flag '" + key + "'");
      }
    }
    if (id < 0) {
      if (!have_tag) syntax("node without tag=");
      q_.add(std::move(n), parent);
    }
  }

  std::string_view t_;
  std::size_t pos_ = 0;
  QueryPattern q_;
};

bool bare_safe(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '=' || c == '"') return false;
  return true;
}

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

void print(const QueryPattern& q, int i, std::string& out) {
  const auto& n = q.node(i);
  out += "(node tag=";
  out += bare_safe(n.label) ? n.label : quoted(n.label);
  out += n.axis == Axis::Child ? " axis=child" : " axis=desc";
  if (n.optional) out += " opt";
  if (n.existential) out += " exist";
  if (n.returned) out += " ret";
  if (n.predicate.kind == Predicate::Kind::Eq) out += " eq=" + quoted(n.predicate.literal);
  if (n.predicate.kind == Predicate::Kind::Contains) out += " contains=" + quoted(n.predicate.literal);
  for (int c : n.children) {
    out += ' ';
    print(q, c, out);
  }
  out += ')';
}

}  // namespace

QueryPattern parse_xpath(std::string_view text) { return XPathParser(text).parse(); }

QueryPattern parse_pattern(std::string_view text) { return SexprParser(text).parse(); }

std::string to_sexpr(const QueryPattern& q) {
  std::string out;
  if (q.size() > 0) print(q, 0, out);
  return out;
}

}  // namespace xsum
