#include "xsum/exec.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <queue>
#include <sstream>

#include "xsum/error.hpp"

namespace xsum {

// ---------------------------------------------------------------------------
// Access operators

IdStream scan_values(const PathStore& store, PathId p) {
  IdStream out;
  const auto& vals = store.values(p);
  out.reserve(vals.size());
  for (const auto& v : vals) {
    IdItem it;
    it.id = v.self;
    it.anchor = v.owner;
    it.path = p;
    it.key = value_key(v.self);
    it.value = &v.value;
    it.is_value = true;
    out.push_back(it);
  }
  return out;
}

IdStream scan_ids(const PathStore& store, PathId p) {
  if (store.has_values(p)) return scan_values(store, p);
  IdStream out;
  const auto& ids = store.ids(p);
  out.reserve(ids.size());
  for (const auto& id : ids) {
    IdItem it;
    it.id = id;
    it.anchor = id;
    it.path = p;
    it.key = element_key(id);
    out.push_back(it);
  }
  return out;
}

namespace {

void check_sorted(const IdStream& s, bool strict, const char* what) {
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (strict ? !(s[i - 1].key < s[i].key) : s[i].key < s[i - 1].key)
      throw Error(ErrorCode::UnsortedInput, std::string(what) + " is not sorted at position " + std::to_string(i));
  }
}

}  // namespace

IdStream merge(const std::vector<IdStream>& inputs) {
  for (const auto& in : inputs) check_sorted(in, true, "merge input");
  using Head = std::pair<DocKey, std::size_t>;
  std::priority_queue<Head, std::vector<Head>, std::greater<>> heap;
  std::vector<std::size_t> pos(inputs.size(), 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    total += inputs[i].size();
    if (!inputs[i].empty()) heap.emplace(inputs[i][0].key, i);
  }
  IdStream out;
  out.reserve(total);
  while (!heap.empty()) {
    const auto [key, i] = heap.top();
    heap.pop();
    out.push_back(inputs[i][pos[i]++]);
    if (pos[i] < inputs[i].size()) heap.emplace(inputs[i][pos[i]].key, i);
  }
  return out;
}

IdStream select(const IdStream& input, const Predicate& pred) {
  IdStream out;
  for (const auto& it : input) {
    if (!it.value) throw Error(ErrorCode::MissingColumn, "select on an item without a value");
    if (pred.matches(*it.value)) out.push_back(it);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural join

namespace {

bool contains(const IdItem& a, const IdItem& d, Axis axis) {
  if (a.is_value) return false;
  if (d.is_value) return axis == Axis::Child ? a.id == d.anchor : ancestor_or_self(a.id, d.anchor);
  return axis == Axis::Child ? parent(a.id, d.id) : ancestor(a.id, d.id);
}

}  // namespace

std::vector<JoinPair> struct_join(const IdStream& outer, const IdStream& inner, Axis axis, JoinVariant variant,
                                  const PathPairFilter& filter, std::size_t* peak_stack) {
  check_sorted(outer, true, "join outer input");
  check_sorted(inner, false, "join inner input");
  std::vector<JoinPair> pairs;
  std::vector<int> stack;
  std::size_t i = 0;
  for (std::size_t j = 0; j < inner.size(); ++j) {
    const auto& d = inner[j];
    while (i < outer.size() && outer[i].key < d.key) {
      while (!stack.empty() && !contains(outer[static_cast<std::size_t>(stack.back())], outer[i], Axis::Desc))
        stack.pop_back();
      stack.push_back(static_cast<int>(i));
      ++i;
      if (peak_stack) *peak_stack = std::max(*peak_stack, stack.size());
    }
    while (!stack.empty() && !contains(outer[static_cast<std::size_t>(stack.back())], d, Axis::Desc))
      stack.pop_back();
    for (int a : stack) {
      const auto& ai = outer[static_cast<std::size_t>(a)];
      if (axis == Axis::Child && !contains(ai, d, Axis::Child)) continue;
      if (filter && !filter(ai.path, d.path)) continue;
      pairs.push_back({a, static_cast<int>(j)});
    }
  }
  switch (variant) {
    case JoinVariant::Inner:
      return pairs;
    case JoinVariant::Semi: {
      std::vector<JoinPair> out;
      for (const auto& p : pairs)
        if (out.empty() || out.back().d != p.d) out.push_back({-1, p.d});
      return out;
    }
    case JoinVariant::AncestorSemi: {
      std::vector<char> hit(outer.size(), 0);
      for (const auto& p : pairs) hit[static_cast<std::size_t>(p.a)] = 1;
      std::vector<JoinPair> out;
      for (std::size_t a = 0; a < outer.size(); ++a)
        if (hit[a]) out.push_back({static_cast<int>(a), -1});
      return out;
    }
    case JoinVariant::LeftOuter: {
      std::vector<std::vector<int>> by_a(outer.size());
      for (const auto& p : pairs) by_a[static_cast<std::size_t>(p.a)].push_back(p.d);
      std::vector<JoinPair> out;
      for (std::size_t a = 0; a < outer.size(); ++a) {
        if (by_a[a].empty()) out.push_back({static_cast<int>(a), -1});
        for (int d : by_a[a]) out.push_back({static_cast<int>(a), d});
      }
      return out;
    }
  }
  return pairs;
}

DupSafety needs_dup_elim(const std::set<PathId>& paths, const PathSummary& summary) {
  DupSafety r;
  for (PathId a : paths)
    for (PathId d : paths)
      if (a != d && summary.is_ancestor(a, d)) {
        r.safe = false;
        r.witness = std::make_pair(a, d);
        return r;
      }
  return r;
}

int Table::column_of(int node) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == node) return static_cast<int>(i);
  return -1;
}

// ---------------------------------------------------------------------------
// Plan construction

namespace {

using Kind = PlanNode::Kind;

std::unique_ptr<PlanNode> make(Kind k, int node) {
  auto p = std::make_unique<PlanNode>();
  p->kind = k;
  p->node = node;
  return p;
}

class Planner {
 public:
  Planner(const QueryPattern& q, const RelevantPathForest& f) : q_(q), f_(f) {}

  Plan run() {
    if (!f_.satisfiable()) throw Error(ErrorCode::Unsatisfiable, "the pattern root has no relevant path");
    Plan plan;
    for (const auto& n : q_.nodes()) plan.labels.push_back(n.label);
    for (int n = 0; n < static_cast<int>(q_.size()); ++n)
      if (implicitly_returned(q_, n)) plan.output_columns.push_back(n);

    int top = -1;
    for (int n = 0; n < static_cast<int>(q_.size()); ++n) {
      if (!f_.bound(n) || f_.bound_parent(n) != -1 || f_.live(n).empty() || inert(n)) continue;
      if (top != -1) throw Error(ErrorCode::InvariantViolation, "pruned pattern has several roots");
      top = n;
    }
    auto out = make(Kind::Output, -1);
    if (top >= 0) {
      Built b = build(top);
      if (!implicitly_returned(q_, top)) b = project_away(std::move(b), top);
      const int first = plan.output_columns.front();
      const bool single = plan.output_columns.size() == 1;
      if (!(single && b.order == first)) b = sort(std::move(b), first);
      out->children.push_back(std::move(b.node));
      plan.null_row_if_empty = top != 0 && q_.node(top).optional;
    } else {
      plan.null_row_if_empty = true;
    }
    plan.root = std::move(out);
    return plan;
  }

 private:
  struct Built {
    std::unique_ptr<PlanNode> node;
    std::vector<int> cols;
    int order = -1;
  };

  bool returning(int n) const {
    const int end = q_.subtree_end(n);
    for (int i = n; i < end; ++i)
      if (implicitly_returned(q_, i)) return true;
    return false;
  }

  // Optional subtree with nothing returned: it neither filters nor adds
  // columns, so the plan leaves it out.
  bool inert(int n) const { return q_.node(n).optional && !returning(n); }

  bool has_required_returned_below(int n) const {
    const int end = q_.subtree_end(n);
    for (int i = n + 1; i < end; ++i)
      if (q_.node(i).returned && !q_.node(i).optional) return true;
    return false;
  }

  std::vector<int> tchildren(int n) const {
    std::vector<int> out;
    const int end = q_.subtree_end(n);
    for (int i = n + 1; i < end; ++i)
      if (f_.bound(i) && f_.bound_parent(i) == n && !inert(i)) out.push_back(i);
    return out;
  }

  Built access(int n) {
    const auto paths = f_.paths(n);
    const bool value_node = q_.node(n).is_value();
    std::unique_ptr<PlanNode> src;
    if (paths.size() == 1) {
      src = make(value_node ? Kind::ValScan : Kind::Scan, n);
      src->path = paths[0];
    } else {
      src = make(Kind::Merge, n);
      for (PathId p : paths) {
        auto s = make(value_node ? Kind::ValScan : Kind::Scan, n);
        s->path = p;
        src->children.push_back(std::move(s));
      }
    }
    const auto& pred = q_.node(n).predicate;
    if (pred.active()) {
      auto sel = make(Kind::Select, n);
      sel->predicate = pred;
      sel->children.push_back(std::move(src));
      if (!value_node) {
        for (PathId p : paths) {
          const PathId tp = f_.summary().child(p, kTextLabel);
          if (tp == kNoPath) continue;
          auto v = make(Kind::ValScan, n);
          v->path = tp;
          v->note = "text of " + std::to_string(p);
          sel->children.push_back(std::move(v));
        }
      }
      src = std::move(sel);
    }
    return {std::move(src), {n}, n};
  }

  Built sort(Built b, int key) {
    auto s = make(Kind::Sort, key);
    s->children.push_back(std::move(b.node));
    b.node = std::move(s);
    b.order = key;
    return b;
  }

  Built project_away(Built b, int node) {
    auto pr = make(Kind::Project, node);
    for (int c : b.cols)
      if (c != node) pr->keep.push_back(c);
    const auto paths = f_.paths(node);
    const auto safety = needs_dup_elim({paths.begin(), paths.end()}, f_.summary());
    const bool only_optional = !has_required_returned_below(node);
    if (safety.safe) {
      pr->note = "drop " + q_.node(node).label + ", dup-safe";
    } else {
      pr->note = "drop " + q_.node(node).label + ", dup-unsafe: " + std::to_string(safety.witness->first) +
                 " is an ancestor of " + std::to_string(safety.witness->second);
    }
    if (safety.safe && only_optional) pr->note += ", only optional returned descendants";
    pr->children.push_back(std::move(b.node));
    b.node = std::move(pr);
    b.cols = b.node->keep;
    if (b.order == node) b.order = -1;
    if (!safety.safe || only_optional) {
      auto d = make(Kind::DupElim, b.cols.empty() ? -1 : b.cols.front());
      d->children.push_back(std::move(b.node));
      b.node = std::move(d);
      b.order = b.cols.empty() ? -1 : b.cols.front();
    }
    return b;
  }

  Built join(Built outer, int n, Built inner, int c, JoinVariant variant) {
    auto j = make(Kind::StructJoin, n);
    j->inner_node = c;
    j->variant = variant;
    j->axis = q_.node(c).parent == n ? q_.node(c).axis : Axis::Desc;
    j->pairs = f_.path_pairs(c);
    if (variant == JoinVariant::AncestorSemi) j->passthrough = f_.passthrough_paths(c);
    j->children.push_back(std::move(outer.node));
    j->children.push_back(std::move(inner.node));
    Built out;
    out.node = std::move(j);
    out.cols = outer.cols;
    if (variant != JoinVariant::AncestorSemi) out.cols.insert(out.cols.end(), inner.cols.begin(), inner.cols.end());
    out.order = variant == JoinVariant::Inner ? c : n;
    return out;
  }

  Built build(int n) {
    Built acc = access(n);
    const auto kids = tchildren(n);
    for (int c : kids) {
      if (returning(c) || q_.node(c).optional) continue;
      Built inner = build(c);
      acc = join(std::move(acc), n, std::move(inner), c, JoinVariant::AncestorSemi);
    }
    for (int c : kids) {
      if (!returning(c)) continue;
      Built inner = build(c);
      if (inner.order != c) inner = sort(std::move(inner), c);
      if (acc.order != n) acc = sort(std::move(acc), n);
      const auto variant = q_.node(c).optional ? JoinVariant::LeftOuter : JoinVariant::Inner;
      acc = join(std::move(acc), n, std::move(inner), c, variant);
      if (!implicitly_returned(q_, c)) acc = project_away(std::move(acc), c);
    }
    return acc;
  }

  const QueryPattern& q_;
  const RelevantPathForest& f_;
};

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Scan: return "Scan";
    case Kind::ValScan: return "ValScan";
    case Kind::Merge: return "Merge";
    case Kind::Select: return "Select";
    case Kind::StructJoin: return "StructJoin";
    case Kind::Sort: return "Sort";
    case Kind::DupElim: return "DupElim";
    case Kind::Project: return "Project";
    case Kind::Output: return "Output";
  }
  return "?";
}

const char* variant_name(JoinVariant v) {
  switch (v) {
    case JoinVariant::Inner: return "inner";
    case JoinVariant::Semi: return "semi";
    case JoinVariant::LeftOuter: return "left-outer";
    case JoinVariant::AncestorSemi: return "ancestor-semi";
  }
  return "?";
}

void explain_node(const PlanNode& p, const std::vector<std::string>& labels, int depth, std::ostringstream& out) {
  out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << kind_name(p.kind);
  auto label = [&](int n) {
    return n >= 0 && static_cast<std::size_t>(n) < labels.size() ? labels[static_cast<std::size_t>(n)] : std::string("?");
  };
  switch (p.kind) {
    case Kind::Scan:
    case Kind::ValScan: out << '(' << p.path << ')'; break;
    case Kind::Select:
      out << '[' << (p.predicate.kind == Predicate::Kind::Eq ? "=" : "~") << " \"" << p.predicate.literal << "\"]";
      break;
    case Kind::StructJoin:
      out << '[' << variant_name(p.variant) << ", " << (p.axis == Axis::Child ? "child" : "desc") << ", "
          << label(p.node) << " -> " << label(p.inner_node) << ", " << p.pairs.size() << " path pairs";
      if (!p.passthrough.empty()) out << ", " << p.passthrough.size() << " passthrough paths";
      out << ']';
      break;
    case Kind::Sort: out << '[' << label(p.node) << ']'; break;
    default: break;
  }
  if (!p.note.empty()) out << "  -- " << p.note;
  out << '\n';
  for (const auto& c : p.children) explain_node(*c, labels, depth + 1, out);
}

std::size_t count_kind(const PlanNode& p, Kind k) {
  std::size_t n = p.kind == k;
  for (const auto& c : p.children) n += count_kind(*c, k);
  return n;
}

// ---------------------------------------------------------------------------
// Execution

int compare_cells(const Cell& a, const Cell& b) {
  if (a.present != b.present) return a.present ? 1 : -1;
  if (!a.present) return 0;
  if (a.item.key < b.item.key) return -1;
  if (b.item.key < a.item.key) return 1;
  return 0;
}

int compare_rows(const std::vector<Cell>& a, const std::vector<Cell>& b, int first) {
  if (first >= 0) {
    const int c = compare_cells(a[static_cast<std::size_t>(first)], b[static_cast<std::size_t>(first)]);
    if (c != 0) return c;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int c = compare_cells(a[i], b[i]);
    if (c != 0) return c;
  }
  return 0;
}

class Executor {
 public:
  Executor(const PathStore& st, ExecStats* stats) : st_(st), stats_(stats ? stats : &local_) {}

  Table eval(const PlanNode& p) {
    switch (p.kind) {
      case Kind::Scan:
      case Kind::ValScan:
      case Kind::Merge:
      case Kind::Select: return wrap(access(p), p.node);
      case Kind::StructJoin: return join(p);
      case Kind::Sort: {
        Table t = eval(*p.children[0]);
        const int key = t.column_of(p.node);
        std::stable_sort(t.rows.begin(), t.rows.end(),
                         [&](const auto& a, const auto& b) { return compare_rows(a, b, key) < 0; });
        t.order_column = p.node;
        return t;
      }
      case Kind::DupElim: {
        Table t = eval(*p.children[0]);
        std::sort(t.rows.begin(), t.rows.end(), [](const auto& a, const auto& b) { return compare_rows(a, b, -1) < 0; });
        t.rows.erase(std::unique(t.rows.begin(), t.rows.end(),
                                 [](const auto& a, const auto& b) { return compare_rows(a, b, -1) == 0; }),
                     t.rows.end());
        t.order_column = t.columns.empty() ? -1 : t.columns.front();
        return t;
      }
      case Kind::Project: {
        Table t = eval(*p.children[0]);
        return project(t, p.keep);
      }
      case Kind::Output: break;
    }
    throw Error(ErrorCode::InvariantViolation, "unexpected plan node");
  }

 private:
  static Table project(const Table& t, const std::vector<int>& keep) {
    Table out;
    out.columns = keep;
    std::vector<int> idx;
    for (int k : keep) idx.push_back(t.column_of(k));
    out.rows.reserve(t.rows.size());
    for (const auto& r : t.rows) {
      std::vector<Cell> row;
      row.reserve(idx.size());
      for (int i : idx) row.push_back(i >= 0 ? r[static_cast<std::size_t>(i)] : Cell{});
      out.rows.push_back(std::move(row));
    }
    out.order_column = std::find(keep.begin(), keep.end(), t.order_column) != keep.end() ? t.order_column : -1;
    return out;
  }

  static Table wrap(IdStream s, int node) {
    Table t;
    t.columns = {node};
    t.rows.reserve(s.size());
    for (auto& it : s) t.rows.push_back({Cell{true, it}});
    t.order_column = node;
    return t;
  }

  IdStream access(const PlanNode& p) {
    switch (p.kind) {
      case Kind::Scan:
      case Kind::ValScan: {
        auto s = scan_ids(st_, p.path);
        stats_->ids_scanned += s.size();
        return s;
      }
      case Kind::Merge: {
        std::vector<IdStream> ins;
        for (const auto& c : p.children) ins.push_back(access(*c));
        return merge(ins);
      }
      case Kind::Select: {
        IdStream in = access(*p.children[0]);
        if (!in.empty() && !in.front().is_value) {
          std::map<std::uint32_t, std::string> text;  // owner pre -> concatenated direct text
          for (std::size_t i = 1; i < p.children.size(); ++i) {
            auto vs = scan_ids(st_, p.children[i]->path);
            stats_->ids_scanned += vs.size();
            for (const auto& v : vs) text[v.anchor.pre] += *v.value;
          }
          static const std::string empty;
          for (auto& it : in) {
            auto f = text.find(it.id.pre);
            it.value = f == text.end() ? &empty : &f->second;
          }
          IdStream out = select(in, p.predicate);
          for (auto& it : out) it.value = nullptr;
          return out;
        }
        return select(in, p.predicate);
      }
      default: break;
    }
    throw Error(ErrorCode::InvariantViolation, "not an access operator");
  }

  struct Groups {
    IdStream items;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;  // row ranges per distinct item
  };

  static Groups group(const Table& t, int col, const char* what) {
    Groups g;
    const auto c = static_cast<std::size_t>(t.column_of(col));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& cell = t.rows[r][c];
      if (!cell.present) throw Error(ErrorCode::MissingColumn, std::string(what) + " key column is absent");
      if (!g.items.empty() && g.items.back().key == cell.item.key) {
        g.ranges.back().second = r + 1;
        continue;
      }
      if (!g.items.empty() && cell.item.key < g.items.back().key)
        throw Error(ErrorCode::UnsortedInput, std::string(what) + " not sorted on its key column");
      g.items.push_back(cell.item);
      g.ranges.emplace_back(r, r + 1);
    }
    return g;
  }

  Table join(const PlanNode& p) {
    Table outer = eval(*p.children[0]);
    Table inner = eval(*p.children[1]);
    const Groups a = group(outer, p.node, "join outer");
    const Groups d = group(inner, p.inner_node, "join inner");
    PathPairFilter filter = [&p](PathId x, PathId y) { return p.pairs.count({x, y}) > 0; };
    const auto pairs = struct_join(a.items, d.items, p.axis, p.variant, filter, &stats_->peak_join_stack);

    Table out;
    out.columns = outer.columns;
    if (p.variant == JoinVariant::AncestorSemi) {
      std::vector<char> keep(a.items.size(), 0);
      for (const auto& pr : pairs) keep[static_cast<std::size_t>(pr.a)] = 1;
      for (std::size_t i = 0; i < a.items.size(); ++i) {
        if (!keep[i] && !p.passthrough.count(a.items[i].path)) continue;
        for (auto r = a.ranges[i].first; r < a.ranges[i].second; ++r) out.rows.push_back(outer.rows[r]);
      }
      out.order_column = p.node;
      return out;
    }
    out.columns.insert(out.columns.end(), inner.columns.begin(), inner.columns.end());
    const std::vector<Cell> nulls(inner.columns.size());
    for (const auto& pr : pairs) {
      const auto& ar = a.ranges[static_cast<std::size_t>(pr.a)];
      if (pr.d < 0) {
        for (auto r = ar.first; r < ar.second; ++r) {
          auto row = outer.rows[r];
          row.insert(row.end(), nulls.begin(), nulls.end());
          out.rows.push_back(std::move(row));
        }
        continue;
      }
      const auto& dr = d.ranges[static_cast<std::size_t>(pr.d)];
      for (auto u = dr.first; u < dr.second; ++u)
        for (auto r = ar.first; r < ar.second; ++r) {
          auto row = outer.rows[r];
          row.insert(row.end(), inner.rows[u].begin(), inner.rows[u].end());
          out.rows.push_back(std::move(row));
        }
    }
    out.order_column = p.variant == JoinVariant::Inner ? p.inner_node : p.node;
    return out;
  }

  const PathStore& st_;
  ExecStats local_;
  ExecStats* stats_;
};

}  // namespace

std::string Plan::explain() const {
  std::ostringstream out;
  if (root) explain_node(*root, labels, 0, out);
  return out.str();
}

std::size_t Plan::count(PlanNode::Kind kind) const { return root ? count_kind(*root, kind) : 0; }

Plan build_plan(const QueryPattern& q, const RelevantPathForest& forest, const PathStore& store) {
  (void)store;
  return Planner(q, forest).run();
}

Table execute(const Plan& plan, const PathStore& store, ExecStats* stats) {
  Executor ex(store, stats);
  Table result;
  result.columns = plan.output_columns;
  if (plan.root && !plan.root->children.empty()) {
    Table t = ex.eval(*plan.root->children[0]);
    std::vector<int> idx;
    for (int c : plan.output_columns) idx.push_back(t.column_of(c));
    for (const auto& r : t.rows) {
      std::vector<Cell> row;
      for (int i : idx) row.push_back(i >= 0 ? r[static_cast<std::size_t>(i)] : Cell{});
      result.rows.push_back(std::move(row));
    }
  }
  if (result.rows.empty() && plan.null_row_if_empty)
    result.rows.push_back(std::vector<Cell>(plan.output_columns.size()));
  for (std::size_t i = 1; i < result.rows.size(); ++i)
    if (compare_rows(result.rows[i - 1], result.rows[i], -1) >= 0)
      throw Error(ErrorCode::UnsortedInput, "output rows are not sorted and duplicate-free at row " + std::to_string(i));
  result.order_column = result.columns.empty() ? -1 : result.columns.front();
  return result;
}

QueryResult run_query(const PathStore& store, const QueryPattern& q, QueryOptions options) {
  QueryResult r;
  const auto forest = compute_relevant_paths(store.summary(), q, {options.minimize});
  r.table.columns.clear();
  for (int n = 0; n < static_cast<int>(q.size()); ++n)
    if (implicitly_returned(q, n)) r.table.columns.push_back(n);
  if (!forest.satisfiable()) {
    r.satisfiable = false;
    r.explain = "Output  -- unsatisfiable, no relevant paths\n";
    return r;
  }
  const Plan plan = build_plan(q, forest, store);
  r.explain = plan.explain();
  r.table = execute(plan, store, &r.stats);
  return r;
}

std::string format_row(const std::vector<Cell>& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    const auto& c = row[i];
    if (!c.present) {
      out += "null";
      continue;
    }
    out += std::to_string(c.item.id.pre) + ',' + std::to_string(c.item.id.post) + ',' + std::to_string(c.item.id.depth);
    if (c.item.is_value && c.item.value) {
      std::string v = *c.item.value;
      if (v.find_first_of(",\"\n") != std::string::npos) {
        std::string q = "\"";
        for (char ch : v) {
          if (ch == '"') q += '"';
          q += ch;
        }
        v = q + "\"";
      }
      out += ',' + v;
    }
  }
  return out;
}

}  // namespace xsum
