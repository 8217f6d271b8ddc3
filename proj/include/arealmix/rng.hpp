#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace arealmix {

using Rng = std::mt19937_64;

// Independent stream keyed by a base seed and a path of indices
// (chain, replicate, model, ...). Same key, same stream.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> key = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * key.size());
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (auto k : key) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32) ^ 0x9e3779b9u);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace arealmix
