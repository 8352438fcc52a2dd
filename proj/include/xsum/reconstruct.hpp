#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xsum/exec.hpp"
#include "xsum/store.hpp"

namespace xsum {

struct ReconstructStats {
  std::size_t buffers = 0;        // cursors opened, one per contributing path
  std::size_t peak_buffers = 0;   // cursors holding an item at the same time
  std::size_t peak_open = 0;      // open-element stack depth
  std::size_t emitted = 0;        // nodes written
  std::uint64_t materialized_rows = 0;
};

inline constexpr std::uint64_t kDefaultRowBudget = 50'000'000;

/// Streaming reconstruction of every subtree rooted on `roots` (an antichain
/// of summary paths), in document order. One cursor per path of the summary
/// subtrees below the roots.
std::string reconstruct(const PathStore& store, const std::vector<PathId>& roots, ReconstructStats* stats = nullptr);

/// Same output built bottom-up from materialized outer-join tables.
/// OutOfBudget once more than `row_budget` rows have been materialized.
std::string sorted_outer_union(const PathStore& store, const std::vector<PathId>& roots,
                               ReconstructStats* stats = nullptr, std::uint64_t row_budget = kDefaultRowBudget);

/// Subtree of one node: an element serialized with its content, or the
/// escaped value of a text or attribute node.
std::string reconstruct_item(const PathStore& store, const IdItem& item, ReconstructStats* stats = nullptr);

/// `<wrapper>` + the subtree of each present cell + `</wrapper>` per row.
std::string xmlize(const Table& results, const PathStore& store, const std::string& wrapper);

}  // namespace xsum
