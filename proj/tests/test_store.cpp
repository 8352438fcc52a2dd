#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "support.hpp"
#include "xsum/error.hpp"
#include "xsum/exec.hpp"
#include "xsum/generate.hpp"
#include "xsum/store.hpp"

using namespace xsum;
using xsum::testing::kD1;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("xsum_store_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

ErrorCode open_error(const fs::path& dir) {
  try {
    auto st = PathStore::open(dir);
    for (PathId p = 1; p <= st.summary().size(); ++p) {
      if (st.has_ids(p)) st.ids(p);
      if (st.has_values(p)) st.values(p);
    }
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error opening " << dir;
  return ErrorCode::InvariantViolation;
}

void flip_byte(const fs::path& file, std::size_t at) {
  std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(static_cast<std::streamoff>(at));
  char c;
  f.get(c);
  f.seekp(static_cast<std::streamoff>(at));
  f.put(static_cast<char>(c ^ 0x5a));
}

void expect_same(const PathStore& a, const PathStore& b) {
  ASSERT_TRUE(a.summary() == b.summary());
  for (PathId p = 1; p <= a.summary().size(); ++p) {
    ASSERT_EQ(a.has_ids(p), b.has_ids(p));
    ASSERT_EQ(a.has_values(p), b.has_values(p));
    if (a.has_ids(p)) ASSERT_EQ(a.encode_ids(p), b.encode_ids(p)) << p;
    if (a.has_values(p)) ASSERT_EQ(a.encode_values(p), b.encode_values(p)) << p;
  }
}

}  // namespace

TEST(Store, D1Sequences) {
  auto st = PathStore::from_xml(kD1);
  EXPECT_EQ(st.ids(3), (std::vector<StructuralId>{{3, 3, 3}, {6, 5, 3}}));
  EXPECT_EQ(st.ids(8), (std::vector<StructuralId>{{9, 8, 3}}));
  const auto& v5 = st.values(5);
  ASSERT_EQ(v5.size(), 2u);
  EXPECT_EQ(v5[0].owner, (StructuralId{4, 1, 4}));
  EXPECT_EQ(v5[0].value, "n1");
  EXPECT_EQ(v5[1].owner, (StructuralId{7, 4, 4}));
  EXPECT_EQ(v5[1].value, "n2");
  const auto& v10 = st.values(10);
  ASSERT_EQ(v10.size(), 1u);
  EXPECT_EQ(v10[0].owner, (StructuralId{10, 7, 4}));
  EXPECT_EQ(v10[0].value, "n3");
  EXPECT_FALSE(st.has_values(3));
  EXPECT_EQ(st.path_count(3), 2u);
  EXPECT_EQ(st.counts().elements, 10u);
  EXPECT_EQ(st.counts().texts, 3u);
}

TEST(Store, SingleElement) {
  auto st = PathStore::from_xml("<a/>");
  EXPECT_EQ(st.ids(1).size(), 1u);
  EXPECT_FALSE(st.has_values(1));
}

TEST(Store, ScanExamples) {
  auto st = PathStore::from_xml(kD1);
  auto s3 = scan_ids(st, 3);
  ASSERT_EQ(s3.size(), 2u);
  EXPECT_EQ(s3[0].id, (StructuralId{3, 3, 3}));
  EXPECT_EQ(s3[1].id, (StructuralId{6, 5, 3}));
  auto v5 = scan_values(st, 5);
  ASSERT_EQ(v5.size(), 2u);
  EXPECT_EQ(v5[0].anchor.pre, 4u);
  EXPECT_EQ(v5[1].anchor.pre, 7u);
  // Restartable: a second scan sees the same items.
  EXPECT_EQ(scan_ids(st, 3).size(), 2u);
  try {
    scan_ids(st, 99);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownPath);
  }
}

TEST(Store, MixedContentOwners) {
  auto st = PathStore::from_xml("<r x='1'>t1<b y='q'>in</b>t2<c/>t3</r>");
  const auto& s = st.summary();
  std::vector<std::string> rt = {"r", "#text"};
  PathId text = *s.lookup(rt);
  for (const auto& v : st.values(text)) {
    EXPECT_EQ(v.owner, (StructuralId{1, 3, 1}));
    EXPECT_EQ(v.self.depth, 2u);
  }
  EXPECT_EQ(st.values(text).size(), 3u);
}

TEST(Store, PersistOpenRoundTrip) {
  auto dir = scratch("d1");
  auto st = PathStore::from_xml(kD1, true);
  st.persist(dir);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "summary.xsum"));
  EXPECT_TRUE(fs::exists(dir / "ids" / "3.seq"));
  EXPECT_TRUE(fs::exists(dir / "vals" / "5.val"));
  auto back = PathStore::open(dir);
  EXPECT_EQ(back.loaded_sequences(), 0u);  // opening reads no sequence
  EXPECT_EQ(back.path_count(3), 2u);
  EXPECT_EQ(back.loaded_sequences(), 0u);
  EXPECT_EQ(back.ids(3), st.ids(3));
  EXPECT_EQ(back.loaded_sequences(), 1u);
  EXPECT_EQ(back.values(10), st.values(10));
  expect_same(st, back);
  EXPECT_EQ(back.summary().encoding(), Encoding::Precomputed);
  EXPECT_EQ(back.tag_counts(), st.tag_counts());
  fs::remove_all(dir);
}

TEST(Store, SequenceFileMagic) {
  auto st = PathStore::from_xml(kD1);
  EXPECT_EQ(st.encode_ids(3).substr(0, 4), "XIDS");
  EXPECT_EQ(st.encode_values(5).substr(0, 4), "XVAL");
}

TEST(Store, OpenErrors) {
  auto empty = scratch("empty");
  fs::create_directories(empty);
  EXPECT_EQ(open_error(empty), ErrorCode::CorruptStore);

  auto dir = scratch("corrupt");
  PathStore::from_xml(kD1).persist(dir);
  flip_byte(dir / "ids" / "3.seq", 6);
  EXPECT_EQ(open_error(dir), ErrorCode::CorruptStore);

  auto dir2 = scratch("version");
  PathStore::from_xml(kD1).persist(dir2);
  {
    std::ifstream in(dir2 / "manifest.json");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    auto at = text.find("\"version\": 1");
    ASSERT_NE(at, std::string::npos);
    text.replace(at, 12, "\"version\": 7");
    std::ofstream(dir2 / "manifest.json") << text;
  }
  EXPECT_EQ(open_error(dir2), ErrorCode::VersionMismatch);

  auto dir3 = scratch("summary");
  PathStore::from_xml(kD1).persist(dir3);
  flip_byte(dir3 / "summary.xsum", 8);
  EXPECT_EQ(open_error(dir3), ErrorCode::CorruptStore);
  for (const auto& d : {empty, dir, dir2, dir3}) fs::remove_all(d);
}

TEST(Store, SummaryMismatch) {
  auto events = read_events(kD1);
  try {
    PathStore::partition(events, build_summary("<site><asia/></site>"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SummaryMismatch);
  }
}

TEST(Store, LargeGeneratedRoundTrip) {
  GenSpec spec;
  spec.shape = Shape::TextHeavy;
  spec.depth = 5;
  spec.fanout = 10;  // 11111 elements plus text and attributes, about 10^5 nodes
  spec.seed = 17;
  auto st = PathStore::from_xml(generate(spec));
  EXPECT_GE(st.counts().elements + st.counts().attributes + st.counts().texts, 30000u);
  auto dir = scratch("large");
  st.persist(dir);
  expect_same(st, PathStore::open(dir));
  fs::remove_all(dir);
}

// Partition law and per-path order law on random documents.
TEST(StoreProperty, PartitionAndOrderLaws) {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 40; ++round) {
    xsum::testing::DocGenOptions opt;
    opt.elements = 10 + rng() % 400;
    std::string xml = xsum::testing::random_document(rng, opt);
    auto st = PathStore::from_xml(xml);
    auto dom = xsum::testing::parse_dom(xml, st.summary());

    std::vector<std::pair<PathId, StructuralId>> from_store, from_dom;
    std::vector<std::pair<PathId, std::string>> vals_store, vals_dom;
    for (PathId p = 1; p <= st.summary().size(); ++p) {
      if (st.has_ids(p)) {
        const auto& ids = st.ids(p);
        for (std::size_t i = 0; i < ids.size(); ++i) {
          from_store.push_back({p, ids[i]});
          if (i) ASSERT_TRUE(value_key(ids[i - 1]) < value_key(ids[i]));
          if (!st.summary().is_value_path(p))
            for (std::size_t j = 0; j < i; ++j) ASSERT_FALSE(ancestor(ids[j], ids[i]));
        }
      }
      if (st.has_values(p)) {
        const auto& vs = st.values(p);
        for (std::size_t i = 0; i < vs.size(); ++i) {
          vals_store.push_back({p, vs[i].value});
          ASSERT_EQ(vs[i].owner.depth + 1, vs[i].self.depth);
          if (i) ASSERT_TRUE(value_key(vs[i - 1].self) < value_key(vs[i].self));
        }
      }
    }
    for (const auto& n : dom.nodes) {
      if (n.kind != NodeKind::Text) from_dom.push_back({n.path, n.id});
      if (n.kind != NodeKind::ElementStart) vals_dom.push_back({n.path, n.value});
    }
    auto by_key = [](const auto& a, const auto& b) {
      return std::tie(a.first, a.second.pre, a.second.post) < std::tie(b.first, b.second.pre, b.second.post);
    };
    std::sort(from_store.begin(), from_store.end(), by_key);
    std::sort(from_dom.begin(), from_dom.end(), by_key);
    ASSERT_EQ(from_store, from_dom);
    std::sort(vals_store.begin(), vals_store.end());
    std::sort(vals_dom.begin(), vals_dom.end());
    ASSERT_EQ(vals_store, vals_dom);
  }
}
