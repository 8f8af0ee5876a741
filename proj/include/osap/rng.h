#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace osap {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, used to key streams by names.
constexpr std::uint64_t HashName(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent stream seed from a master seed and a key path, e.g.
// (master, cell, scheme, trace). Adding keys elsewhere never shifts a stream.
inline std::uint64_t DeriveSeed(std::uint64_t master,
                                std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = Mix64(master);
  for (std::uint64_t k : keys) h = Mix64(h ^ Mix64(k));
  return h;
}

}  // namespace osap
