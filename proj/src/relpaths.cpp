#include "xsum/relpaths.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "xsum/error.hpp"

namespace xsum {

bool implicitly_returned(const QueryPattern& q, int node) {
  if (q.node(node).returned) return true;
  if (node != 0) return false;
  for (const auto& n : q.nodes())
    if (n.returned) return false;
  return true;
}

bool useless_candidate(const QueryPattern& q, int node) {
  const auto& n = q.node(node);
  return !n.existential && !n.optional && !n.predicate.active() && !implicitly_returned(q, node);
}

namespace {

std::size_t slot_of(const QueryPattern& q, int child) {
  const auto& siblings = q.node(q.node(child).parent).children;
  return static_cast<std::size_t>(std::find(siblings.begin(), siblings.end(), child) - siblings.begin());
}

bool trivial_candidate(const QueryPattern& q, int node) {
  const auto& n = q.node(node);
  return node != 0 && n.existential && !n.optional;
}

}  // namespace

// ---------------------------------------------------------------------------
// Phase 1: one depth-first pass over the summary.

class RelpathComputation {
 public:
  RelpathComputation(const PathSummary& s, const QueryPattern& q) : s_(s), q_(q) {
    f_.q_ = q;
    f_.summary_ = &s;
    f_.stacks_.resize(q.size());
    f_.unbound_.assign(q.size(), 0);
    top_open_.assign(q.size(), -1);
  }

  RelevantPathForest run(bool minimize) {
    std::vector<PathId> frames;
    std::vector<std::vector<int>> created;  // entries pushed at each open frame
    for (PathId p = 1; p <= s_.size(); ++p) {
      while (!frames.empty() && !s_.is_ancestor(frames.back(), p)) {
        end(created.back());
        frames.pop_back();
        created.pop_back();
      }
      frames.push_back(p);
      created.push_back(begin(p));
      ++f_.stats_.visits;
      f_.stats_.peak_open_frames = std::max(f_.stats_.peak_open_frames, frames.size());
    }
    while (!frames.empty()) {
      end(created.back());
      frames.pop_back();
      created.pop_back();
    }
    if (minimize) {
      mark_trivial();
      erase();
      mark_useless();
    } else {
      for (auto& e : f_.entries_) e.erased = !e.alive;
    }
    return std::move(f_);
  }

 private:
  StackEntry& at(int e) { return f_.entries_[static_cast<std::size_t>(e)]; }

  std::vector<int> begin(PathId p) {
    std::vector<int> made;
    const auto& label = s_.label(p);
    for (int n = static_cast<int>(q_.size()) - 1; n >= 0; --n) {
      const auto& pn = q_.node(n);
      if (!pn.matches_label(label)) continue;
      int parent = -1;
      if (n == 0) {
        if (pn.axis == Axis::Child && s_.depth(p) != 1) continue;
      } else {
        parent = top_open_[static_cast<std::size_t>(pn.parent)];
        if (parent < 0) continue;
        if (pn.axis == Axis::Child && at(parent).path != s_.parent(p)) continue;
      }
      StackEntry e;
      e.path = p;
      e.node = n;
      e.parent = parent;
      e.selfparent = top_open_[static_cast<std::size_t>(n)];
      e.children.resize(pn.children.size());
      e.has_child.assign(pn.children.size(), 0);
      e.passthrough.assign(pn.children.size(), 0);
      const int id = static_cast<int>(f_.entries_.size());
      f_.entries_.push_back(std::move(e));
      if (parent >= 0) at(parent).children[slot_of(q_, n)].push_back(id);
      f_.stacks_[static_cast<std::size_t>(n)].push_back(id);
      top_open_[static_cast<std::size_t>(n)] = id;
      ++f_.stats_.entries_pushed;
      made.push_back(id);
    }
    return made;
  }

  void end(const std::vector<int>& made) {
    for (int id : made) {
      auto& e = at(id);
      const auto& pn = q_.node(e.node);
      bool ok = true;
      for (std::size_t s = 0; s < pn.children.size(); ++s)
        if (!q_.node(pn.children[s]).optional && !e.has_child[s]) ok = false;
      e.open = false;
      top_open_[static_cast<std::size_t>(e.node)] = e.selfparent;
      if (ok) {
        announce(id);
      } else {
        discard(id);
      }
    }
  }

  /// Marks `id` (alive and closed) as a live child of its parent, and of the
  /// parent's selfparent chain across descendant edges.
  void announce(int id) {
    const auto& e = at(id);
    if (e.parent < 0) return;
    const auto slot = slot_of(q_, e.node);
    const bool desc = q_.node(e.node).axis == Axis::Desc;
    for (int x = e.parent; x >= 0; x = desc ? at(x).selfparent : -1)
      if (at(x).alive) at(x).has_child[slot] = 1;
  }

  int live_selfparent(int id) {
    int x = at(id).selfparent;
    while (x >= 0 && !at(x).alive) x = at(x).selfparent;
    return x;
  }

  void discard(int id) {
    auto& e = at(id);
    if (!e.alive) return;
    e.alive = false;
    const int heir = live_selfparent(id);
    const auto& pn = q_.node(e.node);
    for (std::size_t s = 0; s < pn.children.size(); ++s) {
      const bool desc = q_.node(pn.children[s]).axis == Axis::Desc;
      const auto kids = at(id).children[s];
      for (int c : kids) {
        auto& ce = at(c);
        if (!ce.alive || ce.parent != id) continue;
        if (desc && heir >= 0) {
          ce.parent = heir;
          at(heir).children[s].push_back(c);
          if (!ce.open) announce(c);
        } else {
          discard(c);
        }
      }
    }
  }

  // -------------------------------------------------------------------------
  // Phase 2

  void mark_trivial() {
    for (int n = static_cast<int>(q_.size()) - 1; n >= 1; --n) {
      if (!trivial_candidate(q_, n) || q_.has_predicate_below(n)) continue;
      const auto& pn = q_.node(n);
      const auto slot = slot_of(q_, n);
      for (int id : f_.stacks_[static_cast<std::size_t>(n)]) {
        const auto& e = at(id);
        if (!e.alive) continue;
        bool trivial = true;
        for (std::size_t s = 0; s < pn.children.size() && trivial; ++s) {
          const int c = pn.children[s];
          if (trivial_candidate(q_, c) && !e.passthrough[s]) trivial = false;
        }
        const auto parents = f_.effective_parents(id);
        for (int p : parents)
          if (!s_.all1orplus(at(p).path, e.path)) trivial = false;
        if (!trivial) continue;
        for (int p : parents) at(p).passthrough[slot] = 1;
      }
    }
  }

  void erase() {
    for (int n = 0; n < static_cast<int>(q_.size()); ++n) {
      const bool existential = trivial_candidate(q_, n);
      const auto slot = n == 0 ? 0 : slot_of(q_, n);
      for (int id : f_.stacks_[static_cast<std::size_t>(n)]) {
        auto& e = at(id);
        if (!e.alive) {
          e.erased = true;
          continue;
        }
        if (n == 0) continue;
        bool keep = false;
        for (int p : f_.effective_parents(id)) {
          const auto& pe = at(p);
          if (pe.erased) continue;
          if (existential && pe.passthrough[slot]) continue;
          keep = true;
        }
        at(id).erased = !keep;
      }
    }
  }

  void mark_useless() {
    for (int n = 0; n < static_cast<int>(q_.size()); ++n) {
      if (!useless_candidate(q_, n)) continue;
      const auto& pn = q_.node(n);
      int counted = 0;
      for (int c : pn.children)
        if (!f_.live(c).empty()) ++counted;
      if (counted > 1) continue;
      const auto mine = f_.live(n);
      if (mine.empty()) continue;
      bool useless = true;
      for (int id : mine) {
        const PathId p = at(id).path;
        if (n == 0) {
          useless = useless && s_.all1(1, p);
          continue;
        }
        for (int par : f_.effective_parents(id))
          if (!at(par).erased && !s_.all1(at(par).path, p)) useless = false;
      }
      if (useless) f_.unbound_[static_cast<std::size_t>(n)] = 1;
    }
  }

  const PathSummary& s_;
  const QueryPattern& q_;
  RelevantPathForest f_;
  std::vector<int> top_open_;
};

RelevantPathForest compute_relevant_paths(const PathSummary& summary, const QueryPattern& q,
                                          RelpathOptions options) {
  if (q.size() == 0) throw Error(ErrorCode::InvariantViolation, "empty pattern");
  return RelpathComputation(summary, q).run(options.minimize);
}

// ---------------------------------------------------------------------------
// Forest queries

std::vector<int> RelevantPathForest::live(int node) const {
  std::vector<int> out;
  for (int id : stack(node)) {
    const auto& e = entry(id);
    if (e.alive && !e.erased) out.push_back(id);
  }
  return out;
}

std::vector<PathId> RelevantPathForest::paths(int node) const {
  std::vector<PathId> out;
  for (int id : live(node)) out.push_back(entry(id).path);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t RelevantPathForest::live_entry_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.alive && !e.erased;
  return n;
}

bool RelevantPathForest::satisfiable() const { return !live(0).empty(); }

int RelevantPathForest::bound_parent(int node) const {
  for (int a = q_.node(node).parent; a >= 0; a = q_.node(a).parent)
    if (bound(a)) return a;
  return -1;
}

std::vector<int> RelevantPathForest::effective_parents(int e) const {
  std::vector<int> out;
  const auto& en = entry(e);
  if (en.parent < 0) return out;
  const bool desc = q_.node(en.node).axis == Axis::Desc;
  for (int x = en.parent; x >= 0; x = desc ? entry(x).selfparent : -1)
    if (entry(x).alive) out.push_back(x);
  return out;
}

std::vector<int> RelevantPathForest::effective_children(int e, std::size_t slot) const {
  std::vector<int> out;
  const auto& en = entry(e);
  const int child = q_.node(en.node).children.at(slot);
  const bool desc = q_.node(child).axis == Axis::Desc;
  auto take = [&](int x) {
    for (int c : entry(x).children[slot]) {
      const auto& ce = entry(c);
      if (ce.alive && !ce.erased && ce.parent == x) out.push_back(c);
    }
  };
  if (!desc) {
    take(e);
    return out;
  }
  for (int x : stack(en.node))
    if (summary_->is_ancestor_or_self(en.path, entry(x).path)) take(x);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> RelevantPathForest::bound_ancestor_entries(int e) const {
  std::vector<int> out;
  for (int p : effective_parents(e)) {
    if (entry(p).erased) continue;
    if (bound(entry(p).node)) {
      out.push_back(p);
    } else {
      const auto up = bound_ancestor_entries(p);
      out.insert(out.end(), up.begin(), up.end());
    }
  }
  return out;
}

std::set<std::pair<PathId, PathId>> RelevantPathForest::path_pairs(int node) const {
  std::set<std::pair<PathId, PathId>> out;
  for (int id : live(node))
    for (int a : bound_ancestor_entries(id)) out.emplace(entry(a).path, entry(id).path);
  return out;
}

std::set<PathId> RelevantPathForest::passthrough_paths(int node) const {
  std::set<PathId> out;
  const int parent = q_.node(node).parent;
  if (parent < 0) return out;
  const auto& siblings = q_.node(parent).children;
  const auto slot = static_cast<std::size_t>(std::find(siblings.begin(), siblings.end(), node) - siblings.begin());
  for (int id : live(parent)) {
    if (!entry(id).passthrough[slot]) continue;
    if (bound(parent)) {
      out.insert(entry(id).path);
    } else {
      for (int a : bound_ancestor_entries(id)) out.insert(entry(a).path);
    }
  }
  return out;
}

std::string RelevantPathForest::describe() const {
  std::ostringstream out;
  std::function<void(int, int)> walk = [&](int n, int indent) {
    out << std::string(static_cast<std::size_t>(indent) * 2, ' ') << q_.node(n).label << ": ";
    const auto ps = paths(n);
    if (!bound(n)) {
      out << "(useless)";
    } else if (ps.empty()) {
      out << "(none)";
    } else {
      for (std::size_t i = 0; i < ps.size(); ++i) out << (i ? ", " : "") << ps[i];
    }
    out << '\n';
    for (int c : q_.node(n).children) walk(c, indent + 1);
  };
  walk(0, 0);
  return out.str();
}

// ---------------------------------------------------------------------------
// Tuple expansion

namespace {

class Enumerator {
 public:
  Enumerator(const RelevantPathForest& f, std::size_t cap) : f_(f), q_(f.pattern()), cap_(cap) {}

  std::vector<PathTuple> run() {
    std::set<PathTuple> all;
    for (int id : f_.live(0)) {
      for (auto& t : expand(id)) {
        for (std::size_t n = 0; n < q_.size(); ++n)
          if (!f_.bound(static_cast<int>(n))) t[n] = kNoPath;
        all.insert(std::move(t));
        check(all.size());
      }
    }
    return {all.begin(), all.end()};
  }

 private:
  void check(std::size_t n) const {
    if (n > cap_) throw Error(ErrorCode::TupleExplosion, "more than " + std::to_string(cap_) + " tuples");
  }

  std::vector<PathTuple> expand(int id) {
    const auto& e = f_.entry(id);
    const auto& pn = q_.node(e.node);
    std::vector<PathTuple> acc(1, PathTuple(q_.size(), kNoPath));
    acc[0][static_cast<std::size_t>(e.node)] = e.path;
    for (std::size_t s = 0; s < pn.children.size(); ++s) {
      std::vector<PathTuple> options;
      if (!e.passthrough[s]) {
        for (int c : f_.effective_children(id, s)) {
          auto sub = expand(c);
          options.insert(options.end(), std::make_move_iterator(sub.begin()), std::make_move_iterator(sub.end()));
          check(options.size());
        }
      }
      if (options.empty()) {
        if (e.passthrough[s] || q_.node(pn.children[s]).optional) continue;
        return {};
      }
      std::vector<PathTuple> next;
      check(acc.size() * options.size());
      next.reserve(acc.size() * options.size());
      for (const auto& a : acc) {
        for (const auto& o : options) {
          PathTuple t = a;
          for (std::size_t k = 0; k < t.size(); ++k)
            if (o[k] != kNoPath) t[k] = o[k];
          next.push_back(std::move(t));
        }
      }
      acc = std::move(next);
    }
    return acc;
  }

  const RelevantPathForest& f_;
  const QueryPattern& q_;
  std::size_t cap_;
};

}  // namespace

std::vector<PathTuple> enumerate_tuples(const RelevantPathForest& forest, std::size_t cap) {
  return Enumerator(forest, cap).run();
}

std::size_t tuple_cap_from_env() {
  if (const char* v = std::getenv("XSUM_TUPLE_CAP")) {
    char* end = nullptr;
    const auto n = std::strtoull(v, &end, 10);
    if (end != v && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
  }
  return kDefaultTupleCap;
}

}  // namespace xsum
