#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace neurostrike {

using Rng = std::mt19937_64;

// Independent stream for (seed, tags...). Streams with different tag tuples
// are decorrelated through seed_seq mixing.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * tags.size());
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (auto t : tags) {
    words.push_back(static_cast<std::uint32_t>(t));
    words.push_back(static_cast<std::uint32_t>(t >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Stream tags.
namespace stream {
inline constexpr std::uint64_t kPositions = 1;
inline constexpr std::uint64_t kParams = 2;
inline constexpr std::uint64_t kConnect = 3;
inline constexpr std::uint64_t kLgn = 4;
inline constexpr std::uint64_t kBkg = 5;
inline constexpr std::uint64_t kFeedLgn = 6;
inline constexpr std::uint64_t kFeedBkg = 7;
inline constexpr std::uint64_t kTargets = 8;
inline constexpr std::uint64_t kInitialV = 9;
}  // namespace stream

}  // namespace neurostrike
