#include "xsum/reconstruct.hpp"

#include <algorithm>

#include "xsum/error.hpp"

namespace xsum {

namespace {

void check_antichain(const PathSummary& s, const std::vector<PathId>& roots) {
  for (PathId a : roots) {
    if (!s.contains(a)) throw Error(ErrorCode::UnknownPath, "no path " + std::to_string(a));
    for (PathId b : roots)
      if (a != b && s.is_ancestor_or_self(a, b))
        throw Error(ErrorCode::InvariantViolation, "root paths must be an antichain");
  }
}

bool is_attr(const std::string& label) { return !label.empty() && label[0] == '@'; }

bool inside(const IdItem& parent, const IdItem& item) {
  return item.is_value ? parent.id == item.anchor : ancestor(parent.id, item.id);
}

/// One buffered position over a path's sequence.
struct Cursor {
  PathId path = kNoPath;
  IdStream items;
  std::size_t pos = 0;
  std::size_t end = 0;

  bool has() const { return pos < end; }
  const IdItem& cur() const { return items[pos]; }
};

class Streamer {
 public:
  Streamer(const PathStore& st, ReconstructStats* stats) : st_(st), s_(st.summary()), stats_(stats) {}

  /// `scope`, when set, restricts every cursor to the subtree of that item.
  std::string run(const std::vector<PathId>& roots, const IdItem* scope) {
    cursor_of_.assign(s_.size() + 1, -1);
    for (PathId r : roots) {
      for (PathId p = r; p <= s_.node(r).last; ++p) open_cursor(p, scope);
      root_cursors_.push_back(cursor_of_[r]);
    }
    if (stats_) {
      stats_->buffers += cursors_.size();
      std::size_t live = 0;
      for (const auto& c : cursors_) live += c.has();
      stats_->peak_buffers = std::max(stats_->peak_buffers, live);
    }
    std::string out;
    struct Open {
      IdItem item;
      bool tag_closed;
    };
    std::vector<Open> stack;
    for (;;) {
      const std::vector<int>* candidates = &root_cursors_;
      std::vector<int> kids;
      if (!stack.empty()) {
        for (PathId c : s_.children(stack.back().item.path)) kids.push_back(cursor_of_[c]);
        candidates = &kids;
      }
      int best = -1;
      for (int ci : *candidates) {
        const auto& c = cursors_[static_cast<std::size_t>(ci)];
        if (!c.has()) continue;
        if (!stack.empty() && !inside(stack.back().item, c.cur())) continue;
        if (best < 0 || c.cur().key < cursors_[static_cast<std::size_t>(best)].cur().key) best = ci;
      }
      if (best < 0) {
        if (stack.empty()) break;
        if (!stack.back().tag_closed) out += '>';
        out += "</" + s_.label(stack.back().item.path) + '>';
        stack.pop_back();
        continue;
      }
      auto& c = cursors_[static_cast<std::size_t>(best)];
      const IdItem item = c.cur();
      ++c.pos;
      if (stats_) ++stats_->emitted;
      const auto& label = s_.label(item.path);
      if (is_attr(label)) {
        if (stack.empty()) {
          out += escape_xml(*item.value);
          continue;
        }
        if (stack.back().tag_closed) throw Error(ErrorCode::CorruptStore, "attribute after element content");
        out += ' ' + label.substr(1) + "=\"" + escape_xml(*item.value) + '"';
        continue;
      }
      if (!stack.empty() && !stack.back().tag_closed) {
        out += '>';
        stack.back().tag_closed = true;
      }
      if (item.is_value) {
        out += escape_xml(*item.value);
        continue;
      }
      out += '<' + label;
      stack.push_back({item, false});
      if (stats_) stats_->peak_open = std::max(stats_->peak_open, stack.size());
    }
    for (const auto& c : cursors_)
      if (c.has())
        throw Error(ErrorCode::CorruptStore, "path " + std::to_string(c.path) + " has items outside every root");
    return out;
  }

 private:
  void open_cursor(PathId p, const IdItem* scope) {
    Cursor c;
    c.path = p;
    c.items = scan_ids(st_, p);
    c.pos = 0;
    c.end = c.items.size();
    if (scope) {
      if (p == scope->path) {
        auto it = std::find_if(c.items.begin(), c.items.end(), [&](const IdItem& x) { return x.key == scope->key; });
        c.pos = static_cast<std::size_t>(it - c.items.begin());
        c.end = it == c.items.end() ? c.pos : c.pos + 1;
      } else {
        auto it = std::lower_bound(c.items.begin(), c.items.end(), scope->key,
                                   [](const IdItem& x, const DocKey& k) { return x.key < k; });
        c.pos = static_cast<std::size_t>(it - c.items.begin());
        c.end = c.pos;
        while (c.end < c.items.size() && (c.items[c.end].is_value ? ancestor_or_self(scope->id, c.items[c.end].anchor)
                                                                   : ancestor(scope->id, c.items[c.end].id)))
          ++c.end;
      }
    }
    cursor_of_[p] = static_cast<int>(cursors_.size());
    cursors_.push_back(std::move(c));
  }

  const PathStore& st_;
  const PathSummary& s_;
  ReconstructStats* stats_;
  std::vector<Cursor> cursors_;
  std::vector<int> cursor_of_;
  std::vector<int> root_cursors_;
};

// ---------------------------------------------------------------------------
// SortedOuterUnion

struct Fragment {
  IdItem item;
  std::string xml;
};

class OuterUnion {
 public:
  OuterUnion(const PathStore& st, ReconstructStats* stats, std::uint64_t budget)
      : st_(st), s_(st.summary()), stats_(stats), budget_(budget) {}

  std::vector<Fragment> build(PathId p) {
    const auto& label = s_.label(p);
    IdStream items = scan_ids(st_, p);
    std::vector<Fragment> out;
    out.reserve(items.size());
    if (items.empty() || items.front().is_value) {
      for (auto& it : items) {
        Fragment f{it, is_attr(label) ? ' ' + label.substr(1) + "=\"" + escape_xml(*it.value) + '"'
                                      : escape_xml(*it.value)};
        out.push_back(std::move(f));
      }
      account(out.size());
      return out;
    }
    // Outer union of every child path's fragments, left-outer joined to p.
    struct Row {
      std::size_t parent;  // index into items
      DocKey key;
      bool attr;
      std::string xml;
    };
    std::vector<Row> rows;
    for (PathId c : s_.children(p)) {
      auto frags = build(c);
      IdStream inner;
      inner.reserve(frags.size());
      for (const auto& f : frags) inner.push_back(f.item);
      const auto pairs = struct_join(items, inner, Axis::Child, JoinVariant::LeftOuter);
      const bool attr = is_attr(s_.label(c));
      for (const auto& pr : pairs) {
        if (pr.d < 0) continue;
        auto& f = frags[static_cast<std::size_t>(pr.d)];
        rows.push_back({static_cast<std::size_t>(pr.a), f.item.key, attr, std::move(f.xml)});
      }
      account(pairs.size());
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.parent != b.parent ? a.parent < b.parent : a.key < b.key;
    });
    std::size_t r = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      std::string head = '<' + label;
      std::string body;
      for (; r < rows.size() && rows[r].parent == i; ++r) (rows[r].attr ? head : body) += rows[r].xml;
      out.push_back({items[i], head + '>' + body + "</" + label + '>'});
    }
    account(out.size());
    return out;
  }

 private:
  void account(std::uint64_t n) {
    rows_ += n;
    if (stats_) stats_->materialized_rows = rows_;
    if (rows_ > budget_)
      throw Error(ErrorCode::OutOfBudget, "materialized more than " + std::to_string(budget_) + " rows");
  }

  const PathStore& st_;
  const PathSummary& s_;
  ReconstructStats* stats_;
  std::uint64_t budget_;
  std::uint64_t rows_ = 0;
};

}  // namespace

std::string reconstruct(const PathStore& store, const std::vector<PathId>& roots, ReconstructStats* stats) {
  check_antichain(store.summary(), roots);
  return Streamer(store, stats).run(roots, nullptr);
}

std::string sorted_outer_union(const PathStore& store, const std::vector<PathId>& roots, ReconstructStats* stats,
                               std::uint64_t row_budget) {
  check_antichain(store.summary(), roots);
  OuterUnion ou(store, stats, row_budget);
  std::vector<Fragment> all;
  for (PathId r : roots) {
    auto f = ou.build(r);
    all.insert(all.end(), std::make_move_iterator(f.begin()), std::make_move_iterator(f.end()));
  }
  std::stable_sort(all.begin(), all.end(), [](const Fragment& a, const Fragment& b) { return a.item.key < b.item.key; });
  std::string out;
  for (const auto& f : all) out += f.xml;
  return out;
}

std::string reconstruct_item(const PathStore& store, const IdItem& item, ReconstructStats* stats) {
  if (item.is_value) return item.value ? escape_xml(*item.value) : std::string();
  return Streamer(store, stats).run({item.path}, &item);
}

std::string xmlize(const Table& results, const PathStore& store, const std::string& wrapper) {
  std::string out;
  for (const auto& row : results.rows) {
    out += '<' + wrapper + '>';
    for (const auto& cell : row)
      if (cell.present) out += reconstruct_item(store, cell.item);
    out += "</" + wrapper + '>';
  }
  return out;
}

}  // namespace xsum
