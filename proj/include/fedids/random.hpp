#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace fedids {

using Rng = std::mt19937_64;

// Builds an independent generator stream from a tuple of integers, e.g.
// (seed, round, client). Each 64-bit part is fed to seed_seq as two words.
inline Rng make_rng(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  words.reserve(parts.size() * 2);
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

// Derives a 64-bit child seed from a tuple of integers.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  auto rng = make_rng(parts);
  return rng();
}

}  // namespace fedids
