#pragma once

#include <cstdint>
#include <string>

namespace xsum {

enum class Shape : std::uint8_t { Chain, Fanout, Recursive, TextHeavy };

/// Synthetic document recipe. `depth` counts element levels including the
/// root; every non-leaf element gets `fanout` children.
struct GenSpec {
  Shape shape = Shape::Fanout;
  std::uint32_t depth = 3;
  std::uint32_t fanout = 10;
  double recursion_prob = 0.0;
  std::uint64_t seed = 1;
};

inline constexpr std::uint64_t kMaxGeneratedNodes = 1'000'000;

/// Element count the recipe produces; saturates above the node limit.
std::uint64_t generated_size(const GenSpec& spec);

/// Deterministic for a fixed spec. SpecTooLarge beyond kMaxGeneratedNodes.
std::string generate(const GenSpec& spec);

}  // namespace xsum
