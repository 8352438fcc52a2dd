#include "xsum/summary.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "xsum/error.hpp"
#include "xsum/varint.hpp"

namespace xsum {

char annotation_symbol(Annotation a) {
  switch (a) {
    case Annotation::One: return '1';
    case Annotation::Plus: return '+';
    case Annotation::Star: return '*';
  }
  return '?';
}

PathSummary PathSummary::from_nodes(std::vector<SummaryNode> nodes) {
  PathSummary s;
  s.nodes_.reserve(nodes.size() + 1);
  for (auto& n : nodes) {
    n.children.clear();
    s.nodes_.push_back(std::move(n));
  }
  if (s.size() > 0) s.nodes_[1].annotation = Annotation::One;
  s.index();
  return s;
}

void PathSummary::index() {
  const auto n = static_cast<PathId>(nodes_.size());
  child_index_.assign(n, {});
  tags_.clear();
  tag_index_.clear();
  for (PathId p = 1; p < n; ++p) {
    auto& node = nodes_[p];
    node.children.clear();
    node.last = p;
    if (p == 1) {
      if (node.parent != kNoPath) throw Error(ErrorCode::CorruptStore, "summary root has a parent");
      node.depth = 1;
    } else {
      if (node.parent == kNoPath || node.parent >= p)
        throw Error(ErrorCode::CorruptStore, "summary node " + std::to_string(p) + " is not in pre-order");
      node.depth = nodes_[node.parent].depth + 1;
    }
    if (tag_index_.emplace(node.label, static_cast<std::uint32_t>(tags_.size())).second) tags_.push_back(node.label);
  }
  // Pre-order check: each node's parent must be on the current root path.
  std::vector<PathId> path;
  for (PathId p = 1; p < n; ++p) {
    const PathId par = nodes_[p].parent;
    while (!path.empty() && path.back() != par) path.pop_back();
    if (p != 1 && path.empty()) throw Error(ErrorCode::CorruptStore, "summary node order is not a pre-order");
    if (p != 1) {
      nodes_[par].children.push_back(p);
      if (!child_index_[par].emplace(nodes_[p].label, p).second)
        throw Error(ErrorCode::CorruptStore, "duplicate child label in summary");
    }
    path.push_back(p);
  }
  for (PathId p = n - 1; p >= 2; --p) {
    auto& par = nodes_[nodes_[p].parent];
    par.last = std::max(par.last, nodes_[p].last);
  }
}

const SummaryNode& PathSummary::node(PathId p) const {
  if (!contains(p)) throw Error(ErrorCode::UnknownPath, "no summary node " + std::to_string(p));
  return nodes_[p];
}

bool PathSummary::is_value_path(PathId p) const {
  const auto& l = label(p);
  return !l.empty() && (l[0] == '#' || l[0] == '@');
}

bool PathSummary::is_ancestor_or_self(PathId a, PathId d) const {
  return contains(a) && contains(d) && a <= d && d <= nodes_[a].last;
}

PathId PathSummary::child(PathId p, std::string_view label) const {
  if (!contains(p)) return kNoPath;
  const auto& idx = child_index_[p];
  auto it = idx.find(std::string(label));
  return it == idx.end() ? kNoPath : it->second;
}

std::optional<PathId> PathSummary::lookup(std::span<const std::string> labels) const {
  if (labels.empty() || empty() || nodes_[1].label != labels[0]) return std::nullopt;
  PathId p = 1;
  for (std::size_t i = 1; i < labels.size(); ++i) {
    p = child(p, labels[i]);
    if (p == kNoPath) return std::nullopt;
  }
  return p;
}

std::vector<std::string> PathSummary::label_path(PathId p) const {
  std::vector<std::string> out;
  for (PathId q = p; q != kNoPath; q = node(q).parent) out.push_back(nodes_[q].label);
  std::reverse(out.begin(), out.end());
  return out;
}

PathSummary PathSummary::precompute() const {
  PathSummary s = *this;
  s.encoding_ = Encoding::Precomputed;
  const auto n = nodes_.size();
  s.n1_.assign(n, 0);
  s.nplus_.assign(n, 0);
  std::uint32_t next1 = 0;
  std::uint32_t nextp = 0;
  for (PathId p = 1; p < n; ++p) {
    const auto& node = nodes_[p];
    if (p == 1) {
      s.n1_[p] = next1++;
      s.nplus_[p] = nextp++;
      continue;
    }
    s.n1_[p] = node.annotation == Annotation::One ? s.n1_[node.parent] : next1++;
    s.nplus_[p] = node.annotation != Annotation::Star ? s.nplus_[node.parent] : nextp++;
  }
  return s;
}

bool PathSummary::walk_check(PathId px, PathId py, bool allow_plus, std::uint64_t* visits) const {
  for (PathId q = py; q != px; q = nodes_[q].parent) {
    if (visits) ++*visits;
    const auto a = nodes_[q].annotation;
    if (a == Annotation::Star || (a == Annotation::Plus && !allow_plus)) return false;
  }
  return true;
}

bool PathSummary::all1(PathId px, PathId py, std::uint64_t* visits) const {
  if (!is_ancestor_or_self(px, py))
    throw Error(ErrorCode::NotAncestor, std::to_string(px) + " is not an ancestor of " + std::to_string(py));
  if (encoding_ == Encoding::Precomputed) {
    if (visits) *visits += 2;
    return n1_[px] == n1_[py];
  }
  return walk_check(px, py, false, visits);
}

bool PathSummary::all1orplus(PathId px, PathId py, std::uint64_t* visits) const {
  if (!is_ancestor_or_self(px, py))
    throw Error(ErrorCode::NotAncestor, std::to_string(px) + " is not an ancestor of " + std::to_string(py));
  if (encoding_ == Encoding::Precomputed) {
    if (visits) *visits += 2;
    return nplus_[px] == nplus_[py];
  }
  return walk_check(px, py, true, visits);
}

bool operator==(const PathSummary& a, const PathSummary& b) {
  if (a.size() != b.size() || a.encoding_ != b.encoding_) return false;
  for (PathId p = 1; p <= a.size(); ++p) {
    const auto& x = a.nodes_[p];
    const auto& y = b.nodes_[p];
    if (x.label != y.label || x.parent != y.parent || x.annotation != y.annotation) return false;
  }
  if (a.encoding_ == Encoding::Precomputed) return a.n1_ == b.n1_ && a.nplus_ == b.nplus_;
  return true;
}

// ---------------------------------------------------------------------------
// Building

std::uint32_t SummaryBuilder::child_of(std::uint32_t parent, const std::string& label) {
  auto& by_label = nodes_[parent].by_label;
  if (auto it = by_label.find(label); it != by_label.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_[parent].by_label.emplace(label, id);
  nodes_[parent].children.push_back(id);
  Node n;
  n.label = label;
  n.parent = parent;
  nodes_.push_back(std::move(n));
  return id;
}

void SummaryBuilder::count_child(Frame& frame, std::uint32_t child) {
  auto& c = nodes_[child];
  if (c.open_count == 0) {
    frame.touched.push_back(child);
    ++touched_total_;
  }
  ++c.open_count;
  ++c.instances;
}

void SummaryBuilder::track() {
  stats_.summary_nodes = nodes_.size();
  stats_.peak_open_frames = std::max(stats_.peak_open_frames, frames_.size());
  stats_.peak_child_counters = std::max(stats_.peak_child_counters, touched_total_);
  stats_.peak_tracked = std::max(stats_.peak_tracked, nodes_.size() + frames_.size() + touched_total_);
}

void SummaryBuilder::feed(const NodeEvent& ev) {
  ++stats_.events;
  switch (ev.kind) {
    case NodeKind::ElementStart: {
      std::uint32_t id;
      if (frames_.empty()) {
        if (has_root_) throw Error(ErrorCode::MalformedXml, "second root element");
        has_root_ = true;
        Node root;
        root.label = ev.label;
        root.parent = std::numeric_limits<std::uint32_t>::max();
        root.instances = 1;
        nodes_.push_back(std::move(root));
        id = 0;
      } else {
        id = child_of(frames_.back().node, ev.label);
        count_child(frames_.back(), id);
      }
      frames_.push_back({id, {}});
      break;
    }
    case NodeKind::Attribute:
    case NodeKind::Text: {
      if (frames_.empty()) throw Error(ErrorCode::MalformedXml, "value outside any element");
      const auto id = child_of(frames_.back().node, ev.label);
      count_child(frames_.back(), id);
      break;
    }
    case NodeKind::ElementEnd: {
      if (frames_.empty()) throw Error(ErrorCode::MalformedXml, "unbalanced end event");
      Frame& f = frames_.back();
      for (auto c : f.touched) {
        auto& n = nodes_[c];
        ++n.having;
        n.max_count = std::max(n.max_count, n.open_count);
        n.open_count = 0;
      }
      touched_total_ -= f.touched.size();
      frames_.pop_back();
      break;
    }
  }
  track();
}

PathSummary SummaryBuilder::finish() {
  if (!frames_.empty()) throw Error(ErrorCode::MalformedXml, "unclosed elements at end of stream");
  if (!has_root_) throw Error(ErrorCode::EmptyDocument, "no root element");
  // Renumber in pre-order, children in first-appearance order.
  std::vector<SummaryNode> out;
  out.reserve(nodes_.size());
  std::vector<PathId> new_id(nodes_.size(), kNoPath);
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    const Node& n = nodes_[i];
    SummaryNode sn;
    sn.label = n.label;
    if (i != 0) {
      sn.parent = new_id[n.parent];
      const Node& par = nodes_[n.parent];
      if (n.having < par.instances) sn.annotation = Annotation::Star;
      else if (n.max_count > 1) sn.annotation = Annotation::Plus;
      else sn.annotation = Annotation::One;
    }
    out.push_back(std::move(sn));
    new_id[i] = static_cast<PathId>(out.size());
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
  }
  return PathSummary::from_nodes(std::move(out));
}

PathSummary build_summary(std::string_view xml, BuildStats* stats) {
  EventSource src(xml);
  SummaryBuilder b;
  while (auto ev = src.next()) b.feed(*ev);
  auto s = b.finish();
  if (stats) *stats = b.stats();
  return s;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::string_view kMagic = "XSUM";
constexpr std::uint8_t kVersion = 0x01;

std::string serialize_binary(const PathSummary& s, bool precomputed) {
  std::string out;
  out.append(kMagic);
  out += static_cast<char>(kVersion);
  out += static_cast<char>(precomputed ? 1 : 0);
  const auto& tags = s.tag_dictionary();
  put_varint(out, tags.size());
  std::unordered_map<std::string, std::uint32_t> idx;
  for (std::uint32_t i = 0; i < tags.size(); ++i) {
    put_string(out, tags[i]);
    idx.emplace(tags[i], i);
  }
  put_varint(out, s.size());
  for (PathId p = 1; p <= s.size(); ++p) {
    put_varint(out, idx.at(s.label(p)));
    put_varint(out, s.parent(p));
    out += static_cast<char>(s.annotation(p));
    if (precomputed) {
      put_varint(out, s.n1(p));
      put_varint(out, s.nplus(p));
    }
  }
  return out;
}

void xml_node(std::string& out, const PathSummary& s, PathId p, bool precomputed) {
  const auto& label = s.label(p);
  std::string open;
  std::string close;
  if (label == kTextLabel) {
    open = "<text k=\"#\"";
    close = "text";
  } else if (!label.empty() && label[0] == '@') {
    open = "<attr k=\"@\" name=\"" + escape_xml(label.substr(1)) + "\"";
    close = "attr";
  } else {
    open = "<" + label;
    close = label;
  }
  out += open;
  out += " a=\"";
  out += annotation_symbol(s.annotation(p));
  out += "\"";
  if (precomputed) {
    out += " c1=\"" + std::to_string(s.n1(p)) + "\" cp=\"" + std::to_string(s.nplus(p)) + "\"";
  }
  const auto kids = s.children(p);
  if (kids.empty()) {
    out += "/>";
    return;
  }
  out += ">";
  for (auto c : kids) xml_node(out, s, c, precomputed);
  out += "</" + close + ">";
}

std::string serialize_xml(const PathSummary& s, bool precomputed) {
  std::string out = "<xsum encoding=\"";
  out += precomputed ? "precomputed" : "direct";
  out += "\">";
  if (!s.empty()) xml_node(out, s, 1, precomputed);
  out += "</xsum>";
  return out;
}

Annotation parse_symbol(std::string_view v) {
  if (v == "1") return Annotation::One;
  if (v == "+") return Annotation::Plus;
  if (v == "*") return Annotation::Star;
  throw Error(ErrorCode::CorruptStore, "bad annotation '" + std::string(v) + "'");
}

std::uint32_t parse_u32(std::string_view v) {
  std::uint64_t x = 0;
  if (v.empty()) throw Error(ErrorCode::CorruptStore, "empty number");
  for (char c : v) {
    if (c < '0' || c > '9') throw Error(ErrorCode::CorruptStore, "bad number '" + std::string(v) + "'");
    x = x * 10 + static_cast<std::uint64_t>(c - '0');
    if (x > UINT32_MAX) throw Error(ErrorCode::CorruptStore, "number out of range");
  }
  return static_cast<std::uint32_t>(x);
}

}  // namespace

std::string serialize(const PathSummary& summary, SummaryFormat format) {
  const bool pre = format == SummaryFormat::XmlPrecomputed || format == SummaryFormat::BinaryPrecomputed;
  const PathSummary* s = &summary;
  PathSummary tmp;
  if (pre && summary.encoding() != Encoding::Precomputed) {
    tmp = summary.precompute();
    s = &tmp;
  }
  if (format == SummaryFormat::XmlDirect || format == SummaryFormat::XmlPrecomputed) return serialize_xml(*s, pre);
  return serialize_binary(*s, pre);
}

PathSummary deserialize_summary(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) == kMagic) {
    ByteReader r(bytes.substr(kMagic.size()));
    const auto version = r.byte();
    if (version != kVersion) throw Error(ErrorCode::UnsupportedVersion, "summary version " + std::to_string(version));
    const auto flags = r.byte();
    const bool pre = flags & 1;
    const auto ntags = r.varint();
    std::vector<std::string> tags;
    for (std::uint64_t i = 0; i < ntags; ++i) {
      if (r.at_end()) throw Error(ErrorCode::TruncatedInput, "tag dictionary ends early");
      tags.push_back(r.string());
    }
    const auto n = r.varint32();
    std::vector<SummaryNode> nodes;
    std::vector<std::uint32_t> n1(1, 0), np(1, 0);
    for (std::uint32_t i = 0; i < n; ++i) {
      SummaryNode sn;
      const auto t = r.varint();
      if (t >= tags.size()) throw Error(ErrorCode::CorruptStore, "tag index out of range");
      sn.label = tags[t];
      sn.parent = r.varint32();
      const auto a = r.byte();
      if (a > 2) throw Error(ErrorCode::CorruptStore, "bad annotation byte");
      sn.annotation = static_cast<Annotation>(a);
      if (pre) {
        n1.push_back(r.varint32());
        np.push_back(r.varint32());
      }
      nodes.push_back(std::move(sn));
    }
    if (!r.at_end()) throw Error(ErrorCode::CorruptStore, "trailing bytes after summary");
    PathSummary s = PathSummary::from_nodes(std::move(nodes));
    if (pre) {
      s.encoding_ = Encoding::Precomputed;
      s.n1_ = std::move(n1);
      s.nplus_ = std::move(np);
    }
    return s;
  }
  if (bytes.size() < 4 && std::string_view("XSUM").starts_with(bytes))
    throw Error(ErrorCode::TruncatedInput, "summary input shorter than its magic");
  if (bytes.front() != '<') throw Error(ErrorCode::BadMagic, "neither binary nor XML summary");

  XmlReader reader(bytes);
  auto root = reader.next();
  if (!root || root->kind != NodeKind::ElementStart || root->label != "xsum")
    throw Error(ErrorCode::BadMagic, "XML summary must start with <xsum>");
  bool pre = false;
  std::vector<SummaryNode> nodes;
  std::vector<std::uint32_t> n1(1, 0), np(1, 0);
  std::vector<PathId> open;  // 0 marks the <xsum> wrapper
  open.push_back(kNoPath);
  struct Pending {
    SummaryNode node;
    std::string kind;
    std::optional<Annotation> ann;
    std::optional<std::uint32_t> c1, cp;
    std::string name;
  };
  std::optional<Pending> cur;
  auto flush = [&] {
    if (!cur) return;
    auto& pn = *cur;
    if (pn.kind == "#") pn.node.label = std::string(kTextLabel);
    else if (pn.kind == "@") pn.node.label = "@" + pn.name;
    if (!pn.ann) throw Error(ErrorCode::CorruptStore, "summary node without annotation");
    pn.node.annotation = *pn.ann;
    if (pre) {
      if (!pn.c1 || !pn.cp) throw Error(ErrorCode::CorruptStore, "precomputed node without clusters");
      n1.push_back(*pn.c1);
      np.push_back(*pn.cp);
    }
    nodes.push_back(std::move(pn.node));
    open.push_back(static_cast<PathId>(nodes.size()));
    cur.reset();
  };
  // Attributes of the wrapper.
  bool in_wrapper_attrs = true;
  while (auto ev = reader.next()) {
    switch (ev->kind) {
      case NodeKind::Attribute:
        if (in_wrapper_attrs) {
          if (ev->label == "@encoding") pre = ev->value == "precomputed";
          break;
        }
        if (!cur) throw Error(ErrorCode::CorruptStore, "stray attribute");
        if (ev->label == "@a") cur->ann = parse_symbol(ev->value);
        else if (ev->label == "@c1") cur->c1 = parse_u32(ev->value);
        else if (ev->label == "@cp") cur->cp = parse_u32(ev->value);
        else if (ev->label == "@k") cur->kind = ev->value;
        else if (ev->label == "@name") cur->name = ev->value;
        break;
      case NodeKind::ElementStart:
        in_wrapper_attrs = false;
        flush();
        cur = Pending{};
        cur->node.label = ev->label;
        cur->node.parent = open.back();
        break;
      case NodeKind::ElementEnd:
        in_wrapper_attrs = false;
        flush();
        open.pop_back();
        break;
      case NodeKind::Text:
        throw Error(ErrorCode::CorruptStore, "unexpected text in XML summary");
    }
  }
  PathSummary s = PathSummary::from_nodes(std::move(nodes));
  if (pre) {
    s.encoding_ = Encoding::Precomputed;
    s.n1_ = std::move(n1);
    s.nplus_ = std::move(np);
  }
  return s;
}

std::string export_dot(const PathSummary& s) {
  std::ostringstream out;
  out << "digraph summary {\n";
  for (PathId p = 1; p <= s.size(); ++p) {
    std::string label = std::to_string(p) + ":" + s.label(p) + "[" + annotation_symbol(s.annotation(p)) + "]";
    std::string esc;
    for (char c : label) {
      if (c == '"' || c == '\\') esc += '\\';
      esc += c;
    }
    out << "  n" << p << " [label=\"" << esc << "\"];\n";
  }
  for (PathId p = 2; p <= s.size(); ++p) out << "  n" << s.parent(p) << " -> n" << p << ";\n";
  out << "}\n";
  return out.str();
}

FanInReport fanin_report(const PathSummary& summary, const std::map<std::string, std::uint64_t>& tag_counts) {
  FanInReport r;
  for (PathId p = 1; p <= summary.size(); ++p) {
    const auto& l = summary.label(p);
    if (l == kTextLabel) continue;
    ++r.tags[l].fin;
  }
  for (const auto& [tag, count] : tag_counts) {
    if (tag == kTextLabel) continue;
    r.tags[tag].count = count;
    r.total_nodes += count;
  }
  if (r.total_nodes == 0) throw Error(ErrorCode::EmptyDocument, "no element or attribute nodes");
  double weighted = 0.0;
  for (const auto& [tag, t] : r.tags) {
    weighted += static_cast<double>(t.fin) * static_cast<double>(t.count);
    r.max_fin = std::max(r.max_fin, t.fin);
  }
  r.mf = weighted / static_cast<double>(r.total_nodes);
  return r;
}

}  // namespace xsum
