#include "support.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "xsum/error.hpp"

namespace xsum::testing {

const char* const kD1 =
    "<site><asia><item><name>n1</name><desc/></item><item><name>n2</name></item></asia>"
    "<europe><item><name>n3</name></item></europe></site>";
const char* const kD2 = "<a><b><c/><b><c/></b></b></a>";

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------------------
// DOM

bool Dom::is_ancestor(int a, int d) const {
  for (int x = nodes[static_cast<std::size_t>(d)].parent; x >= 0; x = nodes[static_cast<std::size_t>(x)].parent)
    if (x == a) return true;
  return false;
}

Dom parse_dom(const std::string& xml, const PathSummary& summary) {
  Dom dom;
  std::vector<int> open;
  for (const NodeEvent& ev : read_events(xml)) {
    if (ev.kind == NodeKind::ElementEnd) {
      dom.nodes[static_cast<std::size_t>(open.back())].id = ev.id;
      open.pop_back();
      continue;
    }
    DomNode n;
    n.kind = ev.kind;
    n.label = ev.label;
    n.value = ev.value;
    n.id = ev.id;
    n.key = ev.kind == NodeKind::ElementStart ? element_key(ev.id) : value_key(ev.id);
    n.parent = open.empty() ? -1 : open.back();
    const int idx = static_cast<int>(dom.nodes.size());
    PathId pp = n.parent < 0 ? kNoPath : dom.nodes[static_cast<std::size_t>(n.parent)].path;
    n.path = pp == kNoPath ? (summary.label(1) == n.label ? 1 : kNoPath) : summary.child(pp, n.label);
    if (n.parent >= 0) {
      auto& par = dom.nodes[static_cast<std::size_t>(n.parent)];
      par.children.push_back(idx);
      if (n.kind == NodeKind::Text) par.direct_text += n.value;
    }
    dom.nodes.push_back(std::move(n));
    if (ev.kind == NodeKind::ElementStart) open.push_back(idx);
  }
  return dom;
}

std::string serialize_subtree(const Dom& dom, int i) {
  const DomNode& n = dom.nodes[static_cast<std::size_t>(i)];
  if (n.kind != NodeKind::ElementStart) return escape_xml(n.value);
  std::string out = "<" + n.label;
  std::string body;
  for (int c : n.children) {
    const DomNode& ch = dom.nodes[static_cast<std::size_t>(c)];
    if (ch.kind == NodeKind::Attribute)
      out += " " + ch.label.substr(1) + "=\"" + escape_xml(ch.value) + "\"";
    else
      body += serialize_subtree(dom, c);
  }
  return out + ">" + body + "</" + n.label + ">";
}

std::string serialize_roots(const Dom& dom, const std::vector<PathId>& roots) {
  std::string out;
  for (int i = 0; i < static_cast<int>(dom.nodes.size()); ++i)
    if (std::find(roots.begin(), roots.end(), dom.nodes[static_cast<std::size_t>(i)].path) != roots.end())
      out += serialize_subtree(dom, i);
  return out;
}

// ---------------------------------------------------------------------------
// Naive summary

PathSummary naive_summary(const std::string& xml) {
  struct TrieNode {
    std::string label;
    int parent;
    std::vector<int> children;
    std::map<std::string, int> by_label;
    std::uint64_t min_count = UINT64_MAX;
    std::uint64_t max_count = 0;
  };
  std::vector<TrieNode> trie;
  // Per open element: its trie node and child counts per trie child.
  struct Open {
    int node;
    std::map<int, std::uint64_t> counts;
  };
  std::vector<Open> open;
  auto enter = [&](const std::string& label) {
    int parent = open.empty() ? -1 : open.back().node;
    int id;
    if (parent < 0) {
      if (trie.empty()) trie.push_back({label, -1, {}, {}, 1, 1});
      id = 0;
    } else {
      auto& bl = trie[static_cast<std::size_t>(parent)].by_label;
      auto it = bl.find(label);
      if (it == bl.end()) {
        id = static_cast<int>(trie.size());
        trie.push_back({label, parent, {}, {}, UINT64_MAX, 0});
        trie[static_cast<std::size_t>(parent)].by_label[label] = id;
        trie[static_cast<std::size_t>(parent)].children.push_back(id);
      } else {
        id = it->second;
      }
      ++open.back().counts[id];
    }
    return id;
  };
  auto close = [&](Open& o) {
    for (int c : trie[static_cast<std::size_t>(o.node)].children) {
      auto it = o.counts.find(c);
      std::uint64_t k = it == o.counts.end() ? 0 : it->second;
      auto& t = trie[static_cast<std::size_t>(c)];
      t.min_count = std::min(t.min_count, k);
      t.max_count = std::max(t.max_count, k);
    }
  };
  // Children discovered after an instance closed must record a zero for it:
  // collect every closed instance's counts and finish at the end.
  std::vector<Open> closed;
  for (const NodeEvent& ev : read_events(xml)) {
    switch (ev.kind) {
      case NodeKind::ElementStart:
        open.push_back({enter(ev.label), {}});
        break;
      case NodeKind::ElementEnd:
        closed.push_back(std::move(open.back()));
        open.pop_back();
        break;
      case NodeKind::Attribute:
      case NodeKind::Text: {
        int id = enter(ev.label);
        closed.push_back({id, {}});
        break;
      }
    }
  }
  for (auto& o : closed) close(o);

  std::vector<SummaryNode> nodes;
  std::function<void(int, PathId)> emit = [&](int t, PathId parent) {
    SummaryNode n;
    n.label = trie[static_cast<std::size_t>(t)].label;
    n.parent = parent;
    const auto& tn = trie[static_cast<std::size_t>(t)];
    if (tn.min_count >= 1 && tn.max_count == 1)
      n.annotation = Annotation::One;
    else if (tn.min_count >= 1)
      n.annotation = Annotation::Plus;
    else
      n.annotation = Annotation::Star;
    nodes.push_back(n);
    const PathId me = static_cast<PathId>(nodes.size());
    for (int c : tn.children) emit(c, me);
  };
  if (!trie.empty()) emit(0, kNoPath);
  return PathSummary::from_nodes(std::move(nodes));
}

// ---------------------------------------------------------------------------
// Naive evaluation

namespace {

bool label_matches(const std::string& pattern, const std::string& label) {
  if (pattern == "*") return label[0] != '#' && label[0] != '@';
  return pattern == label;
}

bool predicate_holds(const Predicate& p, const std::string& v) {
  switch (p.kind) {
    case Predicate::Kind::None:
      return true;
    case Predicate::Kind::Eq:
      return v == p.literal;
    case Predicate::Kind::Contains:
      return v.find(p.literal) != std::string::npos;
  }
  return false;
}

bool returns(const QueryPattern& q, int n) {
  if (q.node(n).returned) return true;
  if (n != 0) return false;
  for (const auto& x : q.nodes())
    if (x.returned) return false;
  return true;
}

int compare_ref(const RefCell& a, const RefCell& b) {
  if (a.present != b.present) return a.present ? 1 : -1;
  if (!a.present) return 0;
  if (a.key < b.key) return -1;
  if (b.key < a.key) return 1;
  return 0;
}

bool row_less(const RefRow& a, const RefRow& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    int c = compare_ref(a[i], b[i]);
    if (c) return c < 0;
  }
  return false;
}

}  // namespace

std::vector<RefRow> naive_evaluate(const Dom& dom, const QueryPattern& q) {
  std::vector<int> cols;
  for (int n = 0; n < static_cast<int>(q.size()); ++n)
    if (returns(q, n)) cols.push_back(n);
  std::vector<int> col_of(q.size(), -1);
  for (std::size_t i = 0; i < cols.size(); ++i) col_of[static_cast<std::size_t>(cols[i])] = static_cast<int>(i);

  // Partial rows: -1 for null or unbound, DOM index otherwise.
  using Partial = std::vector<int>;
  std::function<std::vector<Partial>(int, int)> eval = [&](int n, int ctx) {
    const PatternNode& pn = q.node(n);
    std::vector<Partial> result;
    for (int i = 0; i < static_cast<int>(dom.nodes.size()); ++i) {
      const DomNode& d = dom.nodes[static_cast<std::size_t>(i)];
      if (!label_matches(pn.label, d.label)) continue;
      if (ctx < 0) {
        if (pn.axis == Axis::Child && i != 0) continue;
      } else if (pn.axis == Axis::Child ? d.parent != ctx : !dom.is_ancestor(ctx, i)) {
        continue;
      }
      const std::string& v = d.kind == NodeKind::ElementStart ? d.direct_text : d.value;
      if (!predicate_holds(pn.predicate, v)) continue;
      std::vector<Partial> acc(1, Partial(cols.size(), -1));
      if (col_of[static_cast<std::size_t>(n)] >= 0) acc[0][static_cast<std::size_t>(col_of[static_cast<std::size_t>(n)])] = i;
      bool ok = true;
      for (int c : pn.children) {
        std::vector<Partial> sub = eval(c, i);
        if (sub.empty()) {
          if (q.node(c).optional) continue;
          ok = false;
          break;
        }
        if (q.node(c).existential) continue;
        std::vector<Partial> next;
        for (const auto& a : acc)
          for (const auto& b : sub) {
            Partial m = a;
            for (std::size_t k = 0; k < m.size(); ++k)
              if (b[k] >= 0) m[k] = b[k];
            next.push_back(std::move(m));
          }
        acc = std::move(next);
      }
      if (ok) result.insert(result.end(), acc.begin(), acc.end());
    }
    return result;
  };

  std::vector<RefRow> rows;
  for (const Partial& p : eval(0, -1)) {
    RefRow r;
    for (int i : p) {
      RefCell c;
      if (i >= 0) {
        const DomNode& d = dom.nodes[static_cast<std::size_t>(i)];
        c.present = true;
        c.is_value = d.kind != NodeKind::ElementStart;
        c.id = d.id;
        c.key = d.key;
      }
      r.push_back(c);
    }
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(), row_less);
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

std::vector<RefRow> to_ref_rows(const Table& table) {
  std::vector<RefRow> out;
  for (const auto& row : table.rows) {
    RefRow r;
    for (const Cell& c : row) {
      RefCell x;
      if (c.present) {
        x.present = true;
        x.is_value = c.item.is_value;
        x.id = c.item.id;
        x.key = c.item.key;
      }
      r.push_back(x);
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Relevant-path oracle

namespace {

struct Oracle {
  const PathSummary& s;
  const QueryPattern& q;

  bool summary_ancestor(PathId a, PathId d) const {
    for (PathId x = s.parent(d); x != kNoPath; x = s.parent(x))
      if (x == a) return true;
    return false;
  }
  bool related(const PatternNode& n, PathId parent, PathId p) const {
    return n.axis == Axis::Child ? s.parent(p) == parent : summary_ancestor(parent, p);
  }
  bool chain(PathId a, PathId d, bool allow_plus) const {
    for (PathId x = d; x != a; x = s.parent(x)) {
      Annotation an = s.annotation(x);
      if (!(an == Annotation::One || (allow_plus && an == Annotation::Plus))) return false;
    }
    return true;
  }
  bool existential_required(int n) const { return n != 0 && q.node(n).existential && !q.node(n).optional; }
  bool predicate_below(int n) const {
    for (int i = n; i < q.subtree_end(n); ++i)
      if (q.node(i).predicate.active()) return true;
    return false;
  }
  bool for_variable(int n) const {
    const auto& pn = q.node(n);
    return !pn.existential && !pn.optional && !pn.predicate.active() && !returns(q, n);
  }

  std::vector<std::vector<char>> ok;  // ok[n][p]

  void compute_ok() {
    ok.assign(q.size(), std::vector<char>(s.size() + 1, 0));
    for (int n = static_cast<int>(q.size()) - 1; n >= 0; --n) {
      const PatternNode& pn = q.node(n);
      for (PathId p = 1; p <= s.size(); ++p) {
        if (!label_matches(pn.label, s.label(p))) continue;
        bool good = true;
        for (int c : pn.children) {
          if (q.node(c).optional) continue;
          bool found = false;
          for (PathId x = 1; x <= s.size() && !found; ++x) found = ok[static_cast<std::size_t>(c)][x] && related(q.node(c), p, x);
          good = good && found;
        }
        ok[static_cast<std::size_t>(n)][p] = good;
      }
    }
  }

  // Tuples of the pattern subtree of n with n bound to p.
  std::vector<PathTuple> expand(int n, PathId p) const {
    std::vector<PathTuple> acc(1, PathTuple(q.size(), kNoPath));
    acc[0][static_cast<std::size_t>(n)] = p;
    for (int c : q.node(n).children) {
      std::vector<PathTuple> sub;
      for (PathId x = 1; x <= s.size(); ++x)
        if (ok[static_cast<std::size_t>(c)][x] && related(q.node(c), p, x)) {
          auto more = expand(c, x);
          sub.insert(sub.end(), more.begin(), more.end());
        }
      if (sub.empty()) continue;  // optional without candidates: slots stay empty
      std::vector<PathTuple> next;
      for (const auto& a : acc)
        for (const auto& b : sub) {
          PathTuple m = a;
          for (std::size_t k = 0; k < m.size(); ++k)
            if (b[k] != kNoPath) m[k] = b[k];
          next.push_back(std::move(m));
          if (next.size() > kDefaultTupleCap) throw Error(ErrorCode::TupleExplosion, "oracle tuple cap");
        }
      acc = std::move(next);
    }
    return acc;
  }

  static std::map<PathId, std::set<PathId>> parents_of(const std::vector<PathTuple>& ts, int n, int parent) {
    std::map<PathId, std::set<PathId>> out;
    for (const auto& t : ts)
      if (t[static_cast<std::size_t>(n)] != kNoPath) out[t[static_cast<std::size_t>(n)]].insert(t[static_cast<std::size_t>(parent)]);
    return out;
  }

  std::vector<PathTuple> run(bool minimize) {
    compute_ok();
    std::set<PathTuple> raw;
    for (PathId p = 1; p <= s.size(); ++p) {
      if (!ok[0][p]) continue;
      if (q.node(0).axis == Axis::Child && s.depth(p) != 1) continue;
      for (auto& t : expand(0, p)) raw.insert(std::move(t));
    }
    std::vector<PathTuple> ts(raw.begin(), raw.end());
    if (!minimize) return ts;

    // Trivial existential paths, bottom-up; pass[n] = parent paths on which
    // existential n always holds.
    std::vector<std::set<PathId>> pass(q.size());
    for (int n = static_cast<int>(q.size()) - 1; n >= 1; --n) {
      if (!existential_required(n) || predicate_below(n)) continue;
      for (const auto& [c, parents] : parents_of(ts, n, q.node(n).parent)) {
        bool trivial = true;
        for (int m : q.node(n).children)
          if (existential_required(m) && !pass[static_cast<std::size_t>(m)].count(c)) trivial = false;
        for (PathId par : parents)
          if (!chain(par, c, true)) trivial = false;
        if (trivial) pass[static_cast<std::size_t>(n)].insert(parents.begin(), parents.end());
      }
    }
    std::set<PathTuple> reduced;
    for (PathTuple t : ts) {
      for (int n = 1; n < static_cast<int>(q.size()); ++n) {
        if (t[static_cast<std::size_t>(n)] == kNoPath || !existential_required(n)) continue;
        if (!pass[static_cast<std::size_t>(n)].count(t[static_cast<std::size_t>(q.node(n).parent)])) continue;
        for (int k = n; k < q.subtree_end(n); ++k) t[static_cast<std::size_t>(k)] = kNoPath;
      }
      reduced.insert(std::move(t));
    }
    ts.assign(reduced.begin(), reduced.end());

    // Useless for-variables, decided per pattern node.
    std::vector<char> unbound(q.size(), 0);
    for (int n = 0; n < static_cast<int>(q.size()); ++n) {
      if (!for_variable(n)) continue;
      int counted = 0;
      for (int c : q.node(n).children)
        counted += std::any_of(ts.begin(), ts.end(), [&](const PathTuple& t) { return t[static_cast<std::size_t>(c)] != kNoPath; });
      if (counted > 1) continue;
      std::set<PathId> mine;
      for (const auto& t : ts)
        if (t[static_cast<std::size_t>(n)] != kNoPath) mine.insert(t[static_cast<std::size_t>(n)]);
      if (mine.empty()) continue;
      bool useless = true;
      if (n == 0) {
        for (PathId c : mine) useless = useless && chain(1, c, false);
      } else {
        for (const auto& [c, parents] : parents_of(ts, n, q.node(n).parent))
          for (PathId par : parents) useless = useless && chain(par, c, false);
      }
      unbound[static_cast<std::size_t>(n)] = useless;
    }
    std::set<PathTuple> out;
    for (PathTuple t : ts) {
      for (std::size_t n = 0; n < q.size(); ++n)
        if (unbound[n]) t[n] = kNoPath;
      out.insert(std::move(t));
    }
    return {out.begin(), out.end()};
  }
};

}  // namespace

std::vector<PathTuple> oracle_relevant_paths(const PathSummary& summary, const QueryPattern& q, bool minimize) {
  Oracle o{summary, q, {}};
  return o.run(minimize);
}

// ---------------------------------------------------------------------------
// Random inputs

std::string random_document(std::mt19937_64& rng, const DocGenOptions& opt) {
  static const char* const kValues[] = {"v1", "v2", "x y", "a&b", "v1 v2"};
  std::size_t budget = opt.elements;
  auto tag = [&] { return std::string(1, static_cast<char>('a' + rng() % static_cast<unsigned>(opt.alphabet))); };
  auto value = [&] { return escape_xml(kValues[rng() % std::size(kValues)]); };
  std::function<std::string(int)> gen = [&](int depth) {
    const std::string t = depth == 1 ? std::string("r") : tag();
    --budget;
    std::string out = "<" + t;
    if (unit(rng) < opt.attr_prob) out += " k=\"" + value() + "\"";
    if (unit(rng) < opt.attr_prob / 2) out += " id=\"" + value() + "\"";
    out += ">";
    bool last_text = false;
    auto maybe_text = [&] {
      if (!last_text && unit(rng) < opt.text_prob) {
        out += value();
        last_text = true;
      }
    };
    maybe_text();
    if (depth < opt.max_depth) {
      int kids = depth == 1 ? 1 << 30 : static_cast<int>(rng() % 4);
      for (int i = 0; i < kids && budget > 0; ++i) {
        out += gen(depth + 1);
        last_text = false;
        maybe_text();
      }
    }
    return out + "</" + t + ">";
  };
  return gen(1);
}

QueryPattern random_pattern(std::mt19937_64& rng, const PatternGenOptions& opt) {
  static const char* const kLiterals[] = {"v1", "v2", "x y", "a&b"};
  const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(opt.max_size));
  std::vector<int> parent(static_cast<std::size_t>(k), -1);
  std::vector<std::vector<int>> kids(static_cast<std::size_t>(k));
  for (int i = 1; i < k; ++i) {
    parent[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<unsigned>(i));
    kids[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])].push_back(i);
  }
  std::vector<PatternNode> shape(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    PatternNode& n = shape[static_cast<std::size_t>(i)];
    const bool leaf = kids[static_cast<std::size_t>(i)].empty();
    if (i > 0 && leaf && unit(rng) < opt.value_leaf_prob)
      n.label = rng() % 2 ? "#text" : "@k";
    else if (unit(rng) < 0.15)
      n.label = "*";
    else
      n.label = i == 0 && unit(rng) < 0.3 ? "r"
                                          : std::string(1, static_cast<char>('a' + rng() % static_cast<unsigned>(opt.alphabet)));
    n.axis = (i == 0 ? unit(rng) < 0.85 : unit(rng) < 0.5) ? Axis::Desc : Axis::Child;
    if (i == 0 && n.label == "r") n.axis = Axis::Child;
    if (unit(rng) < opt.predicate_prob) {
      n.predicate.kind = rng() % 2 ? Predicate::Kind::Eq : Predicate::Kind::Contains;
      n.predicate.literal = n.predicate.kind == Predicate::Kind::Eq ? kLiterals[rng() % std::size(kLiterals)]
                                                                    : std::string(rng() % 2 ? "v" : "y");
    }
  }

  auto assemble = [&](const std::vector<PatternNode>& nodes) {
    QueryPattern q;
    std::vector<int> index(static_cast<std::size_t>(k), -1);
    std::function<void(int)> add = [&](int i) {
      PatternNode n = nodes[static_cast<std::size_t>(i)];
      n.children.clear();
      n.parent = -1;
      const int pi = parent[static_cast<std::size_t>(i)];
      index[static_cast<std::size_t>(i)] = q.add(n, pi < 0 ? -1 : index[static_cast<std::size_t>(pi)]);
      for (int c : kids[static_cast<std::size_t>(i)]) add(c);
    };
    add(0);
    return q;
  };

  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<PatternNode> nodes = shape;
    for (int i = 0; i < k; ++i) {
      PatternNode& n = nodes[static_cast<std::size_t>(i)];
      n.returned = unit(rng) < 0.4;
      if (i > 0) {
        n.optional = unit(rng) < 0.2;
        n.existential = !n.returned && unit(rng) < 0.3;
      }
    }
    QueryPattern q = assemble(nodes);
    try {
      q.validate();
      return q;
    } catch (const Error&) {
    }
  }
  std::vector<PatternNode> nodes = shape;
  for (auto& n : nodes) n.returned = n.optional = n.existential = false;
  nodes[0].returned = true;
  return assemble(nodes);
}

std::vector<JoinPair> brute_join(const Dom& dom, const std::map<std::pair<bool, DocKey>, int>& node_of,
                                 const IdStream& outer, const IdStream& inner, Axis axis, JoinVariant v) {
  auto dom_index = [&](const IdItem& it) { return node_of.at({it.is_value, it.key}); };
  auto related = [&](const IdItem& a, const IdItem& d) {
    const int x = dom_index(a), y = dom_index(d);
    return axis == Axis::Child ? dom.nodes[static_cast<std::size_t>(y)].parent == x : dom.is_ancestor(x, y);
  };
  std::vector<JoinPair> out;
  switch (v) {
    case JoinVariant::Inner:
      for (std::size_t j = 0; j < inner.size(); ++j)
        for (std::size_t a = 0; a < outer.size(); ++a)
          if (related(outer[a], inner[j])) out.push_back({static_cast<int>(a), static_cast<int>(j)});
      break;
    case JoinVariant::Semi:
      for (std::size_t j = 0; j < inner.size(); ++j)
        for (std::size_t a = 0; a < outer.size(); ++a)
          if (related(outer[a], inner[j])) {
            out.push_back({-1, static_cast<int>(j)});
            break;
          }
      break;
    case JoinVariant::AncestorSemi:
      for (std::size_t a = 0; a < outer.size(); ++a)
        for (std::size_t j = 0; j < inner.size(); ++j)
          if (related(outer[a], inner[j])) {
            out.push_back({static_cast<int>(a), -1});
            break;
          }
      break;
    case JoinVariant::LeftOuter:
      for (std::size_t a = 0; a < outer.size(); ++a) {
        bool any = false;
        for (std::size_t j = 0; j < inner.size(); ++j)
          if (related(outer[a], inner[j])) {
            out.push_back({static_cast<int>(a), static_cast<int>(j)});
            any = true;
          }
        if (!any) out.push_back({static_cast<int>(a), -1});
      }
      break;
  }
  return out;
}


}  // namespace xsum::testing
