#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xsum/ingest.hpp"
#include "xsum/summary.hpp"

namespace xsum {

/// One #text or @attr node with its closest enclosing element.
struct ValueEntry {
  StructuralId owner;
  StructuralId self;
  std::string value;

  friend bool operator==(const ValueEntry&, const ValueEntry&) = default;
};

struct StoreCounts {
  std::uint64_t elements = 0;
  std::uint64_t attributes = 0;
  std::uint64_t texts = 0;
  std::uint32_t height = 0;
};

/// Structural ids and values partitioned by summary path. Element and
/// attribute paths carry an id sequence; #text and @attr paths carry a value
/// sequence. Sequences opened from disk are read on first access.
class PathStore {
 public:
  PathStore() = default;
  PathStore(PathStore&&) noexcept;
  PathStore& operator=(PathStore&&) noexcept;
  ~PathStore();

  /// Single pass over stamped events. Throws SummaryMismatch when an event's
  /// path is not in `summary`.
  static PathStore partition(const std::vector<NodeEvent>& events, PathSummary summary);
  /// Parses `xml`, builds its summary and partitions it.
  static PathStore from_xml(std::string_view xml, bool precompute = false);

  void persist(const std::filesystem::path& dir) const;
  /// Reads the manifest and summary only. CorruptStore on a missing or
  /// damaged manifest, VersionMismatch on a foreign version.
  static PathStore open(const std::filesystem::path& dir);

  const PathSummary& summary() const noexcept { return summary_; }
  const StoreCounts& counts() const noexcept { return counts_; }

  bool has_ids(PathId p) const;
  bool has_values(PathId p) const;
  /// UnknownPath if `p` is not a summary path or has no id sequence.
  const std::vector<StructuralId>& ids(PathId p) const;
  /// UnknownPath if `p` is not a #text or @attr path.
  const std::vector<ValueEntry>& values(PathId p) const;
  /// Number of nodes on `p` without loading the sequence.
  std::uint64_t path_count(PathId p) const;

  /// Element and attribute node counts per label.
  std::map<std::string, std::uint64_t> tag_counts() const;

  /// On-disk byte images of single sequences.
  std::string encode_ids(PathId p) const;
  std::string encode_values(PathId p) const;

  /// Number of sequences currently loaded in memory.
  std::size_t loaded_sequences() const;

 private:
  struct Slot;
  Slot& slot(PathId p) const;
  void load(PathId p, Slot& s) const;

  PathSummary summary_;
  StoreCounts counts_;
  std::filesystem::path dir_;  // empty for in-memory stores
  std::vector<std::unique_ptr<Slot>> slots_;
  mutable std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

inline constexpr std::uint32_t kStoreVersion = 1;

}  // namespace xsum
