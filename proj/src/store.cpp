#include "xsum/store.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "xsum/error.hpp"
#include "xsum/varint.hpp"

namespace xsum {

namespace fs = std::filesystem;
using nlohmann::json;

struct PathStore::Slot {
  bool has_ids = false;
  bool has_vals = false;
  bool loaded = false;
  std::uint64_t id_count = 0;
  std::uint64_t val_count = 0;
  std::uint32_t id_crc = 0;
  std::uint32_t val_crc = 0;
  std::vector<StructuralId> ids;
  std::vector<ValueEntry> vals;
};

PathStore::PathStore(PathStore&&) noexcept = default;
PathStore& PathStore::operator=(PathStore&&) noexcept = default;
PathStore::~PathStore() = default;

namespace {

constexpr std::string_view kIdMagic = "XIDS";
constexpr std::string_view kValMagic = "XVAL";

std::string id_file(PathId p) { return "ids/" + std::to_string(p) + ".seq"; }
std::string val_file(PathId p) { return "vals/" + std::to_string(p) + ".val"; }

std::string encode_id_seq(const std::vector<StructuralId>& ids) {
  std::string out(kIdMagic);
  put_varint(out, ids.size());
  std::uint32_t prev = 0;
  for (const auto& id : ids) {
    put_varint(out, id.pre - prev);
    put_varint(out, id.post);
    put_varint(out, id.depth);
    prev = id.pre;
  }
  return out;
}

std::string encode_val_seq(const std::vector<ValueEntry>& vals) {
  std::string out(kValMagic);
  put_varint(out, vals.size());
  std::uint32_t prev = 0;
  for (const auto& v : vals) {
    put_varint(out, v.self.pre - prev);
    put_varint(out, v.self.pre - v.owner.pre);
    put_varint(out, v.self.post);
    put_varint(out, v.owner.post);
    put_varint(out, v.self.depth);
    put_string(out, v.value);
    prev = v.self.pre;
  }
  return out;
}

std::vector<StructuralId> decode_id_seq(std::string_view bytes) {
  ByteReader r(bytes, ErrorCode::CorruptStore);
  if (r.bytes(4) != kIdMagic) throw Error(ErrorCode::CorruptStore, "bad id sequence magic");
  const auto n = r.varint();
  std::vector<StructuralId> ids;
  ids.reserve(n);
  std::uint64_t pre = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    pre += r.varint();
    if (pre > UINT32_MAX) throw Error(ErrorCode::CorruptStore, "pre out of range");
    StructuralId id;
    id.pre = static_cast<std::uint32_t>(pre);
    id.post = r.varint32();
    id.depth = r.varint32();
    ids.push_back(id);
  }
  if (!r.at_end()) throw Error(ErrorCode::CorruptStore, "trailing bytes in id sequence");
  return ids;
}

std::vector<ValueEntry> decode_val_seq(std::string_view bytes) {
  ByteReader r(bytes, ErrorCode::CorruptStore);
  if (r.bytes(4) != kValMagic) throw Error(ErrorCode::CorruptStore, "bad value sequence magic");
  const auto n = r.varint();
  std::vector<ValueEntry> vals;
  vals.reserve(n);
  std::uint64_t pre = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    pre += r.varint();
    const auto back = r.varint();
    if (pre > UINT32_MAX || back > pre) throw Error(ErrorCode::CorruptStore, "value ids out of range");
    ValueEntry v;
    v.self.pre = static_cast<std::uint32_t>(pre);
    v.owner.pre = static_cast<std::uint32_t>(pre - back);
    v.self.post = r.varint32();
    v.owner.post = r.varint32();
    v.self.depth = r.varint32();
    if (v.self.depth == 0) throw Error(ErrorCode::CorruptStore, "value node at depth 0");
    v.owner.depth = v.self.depth - 1;
    v.value = r.string();
    vals.push_back(std::move(v));
  }
  if (!r.at_end()) throw Error(ErrorCode::CorruptStore, "trailing bytes in value sequence");
  return vals;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::CorruptStore, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::CorruptStore, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::CorruptStore, "write failed for " + path.string());
}

bool is_attr_label(const std::string& label) { return !label.empty() && label[0] == '@'; }

}  // namespace

PathStore PathStore::partition(const std::vector<NodeEvent>& events, PathSummary summary) {
  PathStore st;
  st.summary_ = std::move(summary);
  const auto n = st.summary_.size();
  st.slots_.resize(n + 1);
  for (PathId p = 1; p <= n; ++p) {
    auto s = std::make_unique<Slot>();
    const auto& label = st.summary_.label(p);
    s->has_ids = label != kTextLabel;
    s->has_vals = label == kTextLabel || is_attr_label(label);
    s->loaded = true;
    st.slots_[p] = std::move(s);
  }

  struct Frame {
    PathId path;
    StructuralId id;
    std::vector<std::pair<PathId, std::size_t>> pending;  // value entries awaiting owner.post
  };
  std::vector<Frame> stack;
  auto mismatch = [](const NodeEvent& ev) {
    return Error(ErrorCode::SummaryMismatch, "no summary path for '" + ev.label + "'");
  };
  for (const auto& ev : events) {
    switch (ev.kind) {
      case NodeKind::ElementStart: {
        PathId p;
        if (stack.empty()) {
          if (n == 0 || st.summary_.label(1) != ev.label) throw mismatch(ev);
          p = 1;
        } else {
          p = st.summary_.child(stack.back().path, ev.label);
          if (p == kNoPath) throw mismatch(ev);
        }
        stack.push_back({p, ev.id, {}});
        ++st.counts_.elements;
        st.counts_.height = std::max<std::uint32_t>(st.counts_.height, ev.id.depth);
        break;
      }
      case NodeKind::ElementEnd: {
        if (stack.empty()) throw Error(ErrorCode::MalformedXml, "unbalanced end event");
        auto& f = stack.back();
        st.slots_[f.path]->ids.push_back(ev.id);
        for (auto [vp, idx] : f.pending) st.slots_[vp]->vals[idx].owner.post = ev.id.post;
        stack.pop_back();
        break;
      }
      case NodeKind::Attribute:
      case NodeKind::Text: {
        if (stack.empty()) throw mismatch(ev);
        auto& f = stack.back();
        const PathId p = st.summary_.child(f.path, ev.label);
        if (p == kNoPath) throw mismatch(ev);
        auto& slot = *st.slots_[p];
        ValueEntry v;
        v.self = ev.id;
        v.owner = f.id;
        v.value = ev.value;
        f.pending.emplace_back(p, slot.vals.size());
        slot.vals.push_back(std::move(v));
        if (ev.kind == NodeKind::Attribute) {
          slot.ids.push_back(ev.id);
          ++st.counts_.attributes;
        } else {
          ++st.counts_.texts;
        }
        break;
      }
    }
  }
  if (!stack.empty()) throw Error(ErrorCode::MalformedXml, "unclosed elements");
  for (PathId p = 1; p <= n; ++p) {
    auto& s = *st.slots_[p];
    s.id_count = s.ids.size();
    s.val_count = s.vals.size();
  }
  return st;
}

PathStore PathStore::from_xml(std::string_view xml, bool precompute) {
  auto events = read_events(xml);
  SummaryBuilder b;
  for (const auto& ev : events) b.feed(ev);
  auto summary = b.finish();
  if (precompute) summary = summary.precompute();
  return partition(events, std::move(summary));
}

PathStore::Slot& PathStore::slot(PathId p) const {
  if (!summary_.contains(p) || p >= slots_.size() || !slots_[p])
    throw Error(ErrorCode::UnknownPath, "no path " + std::to_string(p) + " in store");
  return *slots_[p];
}

void PathStore::load(PathId p, Slot& s) const {
  std::lock_guard<std::mutex> lock(*mutex_);
  if (s.loaded) return;
  if (s.has_ids) {
    const auto bytes = read_file(dir_ / id_file(p));
    if (crc32_of(bytes) != s.id_crc) throw Error(ErrorCode::CorruptStore, "checksum mismatch in " + id_file(p));
    s.ids = decode_id_seq(bytes);
    if (s.ids.size() != s.id_count) throw Error(ErrorCode::CorruptStore, "count mismatch in " + id_file(p));
  }
  if (s.has_vals) {
    const auto bytes = read_file(dir_ / val_file(p));
    if (crc32_of(bytes) != s.val_crc) throw Error(ErrorCode::CorruptStore, "checksum mismatch in " + val_file(p));
    s.vals = decode_val_seq(bytes);
    if (s.vals.size() != s.val_count) throw Error(ErrorCode::CorruptStore, "count mismatch in " + val_file(p));
  }
  s.loaded = true;
}

bool PathStore::has_ids(PathId p) const { return slot(p).has_ids; }
bool PathStore::has_values(PathId p) const { return slot(p).has_vals; }

const std::vector<StructuralId>& PathStore::ids(PathId p) const {
  auto& s = slot(p);
  if (!s.has_ids) throw Error(ErrorCode::UnknownPath, "path " + std::to_string(p) + " has no id sequence");
  if (!s.loaded) load(p, s);
  return s.ids;
}

const std::vector<ValueEntry>& PathStore::values(PathId p) const {
  auto& s = slot(p);
  if (!s.has_vals) throw Error(ErrorCode::UnknownPath, "path " + std::to_string(p) + " has no value sequence");
  if (!s.loaded) load(p, s);
  return s.vals;
}

std::uint64_t PathStore::path_count(PathId p) const {
  const auto& s = slot(p);
  return s.has_ids ? s.id_count : s.val_count;
}

std::map<std::string, std::uint64_t> PathStore::tag_counts() const {
  std::map<std::string, std::uint64_t> out;
  for (PathId p = 1; p <= summary_.size(); ++p) {
    const auto& s = slot(p);
    if (s.has_ids) out[summary_.label(p)] += s.id_count;
  }
  return out;
}

std::string PathStore::encode_ids(PathId p) const { return encode_id_seq(ids(p)); }
std::string PathStore::encode_values(PathId p) const { return encode_val_seq(values(p)); }

std::size_t PathStore::loaded_sequences() const {
  std::size_t n = 0;
  for (PathId p = 1; p < slots_.size(); ++p) {
    const auto& s = *slots_[p];
    if (s.loaded) n += static_cast<std::size_t>(s.has_ids) + static_cast<std::size_t>(s.has_vals);
  }
  return n;
}

void PathStore::persist(const fs::path& dir) const {
  fs::create_directories(dir / "ids");
  fs::create_directories(dir / "vals");
  json files = json::object();
  json paths = json::array();
  const auto fmt = summary_.encoding() == Encoding::Precomputed ? SummaryFormat::BinaryPrecomputed
                                                                : SummaryFormat::BinaryDirect;
  const auto sum_bytes = serialize(summary_, fmt);
  write_file(dir / "summary.xsum", sum_bytes);
  files["summary.xsum"] = crc32_of(sum_bytes);
  for (PathId p = 1; p <= summary_.size(); ++p) {
    const auto& s = slot(p);
    json entry = {{"path", p}};
    if (s.has_ids) {
      const auto bytes = encode_ids(p);
      write_file(dir / id_file(p), bytes);
      files[id_file(p)] = crc32_of(bytes);
      entry["ids"] = s.id_count;
    }
    if (s.has_vals) {
      const auto bytes = encode_values(p);
      write_file(dir / val_file(p), bytes);
      files[val_file(p)] = crc32_of(bytes);
      entry["values"] = s.val_count;
    }
    paths.push_back(std::move(entry));
  }
  json manifest = {
      {"format", "xsum-store"},
      {"version", kStoreVersion},
      {"elements", counts_.elements},
      {"attributes", counts_.attributes},
      {"texts", counts_.texts},
      {"height", counts_.height},
      {"summary_nodes", summary_.size()},
      {"paths", std::move(paths)},
      {"crc32", std::move(files)},
  };
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

PathStore PathStore::open(const fs::path& dir) {
  const auto mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw Error(ErrorCode::CorruptStore, "no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(read_file(mpath));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptStore, std::string("unreadable manifest: ") + e.what());
  }
  PathStore st;
  try {
    if (manifest.at("format") != "xsum-store") throw Error(ErrorCode::CorruptStore, "not an xsum store");
    const auto version = manifest.at("version").get<std::uint32_t>();
    if (version != kStoreVersion)
      throw Error(ErrorCode::VersionMismatch, "store version " + std::to_string(version) + ", expected " +
                                                   std::to_string(kStoreVersion));
    const auto& crcs = manifest.at("crc32");
    const auto sum_bytes = read_file(dir / "summary.xsum");
    if (crc32_of(sum_bytes) != crcs.at("summary.xsum").get<std::uint32_t>())
      throw Error(ErrorCode::CorruptStore, "checksum mismatch in summary.xsum");
    try {
      st.summary_ = deserialize_summary(sum_bytes);
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptStore, std::string("summary: ") + e.what());
    }
    st.counts_.elements = manifest.at("elements").get<std::uint64_t>();
    st.counts_.attributes = manifest.at("attributes").get<std::uint64_t>();
    st.counts_.texts = manifest.at("texts").get<std::uint64_t>();
    st.counts_.height = manifest.at("height").get<std::uint32_t>();
    const auto n = st.summary_.size();
    if (manifest.at("summary_nodes").get<std::size_t>() != n)
      throw Error(ErrorCode::CorruptStore, "manifest and summary disagree on path count");
    st.slots_.resize(n + 1);
    for (const auto& entry : manifest.at("paths")) {
      const auto p = entry.at("path").get<PathId>();
      if (!st.summary_.contains(p) || st.slots_[p]) throw Error(ErrorCode::CorruptStore, "bad path entry");
      auto s = std::make_unique<Slot>();
      if (entry.contains("ids")) {
        s->has_ids = true;
        s->id_count = entry["ids"].get<std::uint64_t>();
        s->id_crc = crcs.at(id_file(p)).get<std::uint32_t>();
      }
      if (entry.contains("values")) {
        s->has_vals = true;
        s->val_count = entry["values"].get<std::uint64_t>();
        s->val_crc = crcs.at(val_file(p)).get<std::uint32_t>();
      }
      st.slots_[p] = std::move(s);
    }
    for (PathId p = 1; p <= n; ++p)
      if (!st.slots_[p]) throw Error(ErrorCode::CorruptStore, "manifest lacks path " + std::to_string(p));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptStore, std::string("malformed manifest: ") + e.what());
  }
  st.dir_ = dir;
  return st;
}

}  // namespace xsum
