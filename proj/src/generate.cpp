#include "xsum/generate.hpp"

#include <random>
#include <vector>

#include "xsum/error.hpp"
#include "xsum/ingest.hpp"

namespace xsum {

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string words(std::mt19937_64& rng) {
  static const char* const kWords[] = {"alpha", "beta", "gamma", "a&b", "x<y", "\"q\"", "delta", "it's"};
  std::string s;
  std::size_t n = 1 + rng() % 3;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += kWords[rng() % std::size(kWords)];
  }
  return s;
}

}  // namespace

std::uint64_t generated_size(const GenSpec& spec) {
  if (spec.depth == 0) return 0;
  if (spec.shape == Shape::Chain) return spec.depth;
  std::uint64_t level = 1, total = 0;
  for (std::uint32_t d = 0; d < spec.depth; ++d) {
    total += level;
    if (total > kMaxGeneratedNodes) return kMaxGeneratedNodes + 1;
    level *= spec.fanout;
    if (level > kMaxGeneratedNodes) level = kMaxGeneratedNodes + 1;
  }
  return total;
}

std::string generate(const GenSpec& spec) {
  if (spec.depth == 0) throw Error(ErrorCode::SpecTooLarge, "depth must be at least 1");
  if (spec.recursion_prob < 0.0 || spec.recursion_prob > 1.0)
    throw Error(ErrorCode::SpecTooLarge, "recursion_prob must lie in [0, 1]");
  std::uint64_t n = generated_size(spec);
  if (n > kMaxGeneratedNodes)
    throw Error(ErrorCode::SpecTooLarge, "generator recipe yields more than " + std::to_string(kMaxGeneratedNodes) + " nodes");

  std::mt19937_64 rng(spec.seed);
  std::string out;
  out.reserve(n * 16);

  if (spec.shape == Shape::Chain) {
    for (std::uint32_t d = 1; d <= spec.depth; ++d) out += "<c" + std::to_string(d) + ">";
    for (std::uint32_t d = spec.depth; d >= 1; --d) out += "</c" + std::to_string(d) + ">";
    return out;
  }

  // Explicit stack so deep documents do not recurse.
  struct Frame {
    std::string tag;
    std::uint32_t level;
    std::uint32_t next_child = 0;
  };
  const bool text_heavy = spec.shape == Shape::TextHeavy;
  auto open = [&](const std::string& tag, std::uint32_t level) {
    out += '<';
    out += tag;
    if (text_heavy && rng() % 2 == 0) out += " k=\"" + escape_xml(words(rng)) + "\"";
    out += '>';
    return Frame{tag, level};
  };

  std::vector<Frame> stack;
  stack.push_back(open("l1", 1));
  while (!stack.empty()) {
    Frame& f = stack.back();
    bool leaf = f.level == spec.depth;
    if (leaf || f.next_child == spec.fanout) {
      if (text_heavy) out += escape_xml(words(rng));
      out += "</" + f.tag + ">";
      stack.pop_back();
      continue;
    }
    if (text_heavy) out += escape_xml(words(rng));  // text before each child
    ++f.next_child;
    std::uint32_t level = f.level + 1;
    std::string tag = "l" + std::to_string(level);
    if (spec.shape == Shape::Recursive && unit(rng) < spec.recursion_prob) tag = f.tag;
    stack.push_back(open(tag, level));
  }
  return out;
}

}  // namespace xsum
