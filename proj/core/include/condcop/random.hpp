#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace condcop {

//! All sampling in the library runs on this engine. Its output sequence is
//! fixed by the standard, so draws are reproducible across platforms.
using Rng = std::mt19937_64;

//! Uniform draw on the open interval (0,1) built from 53 random bits.
inline double
uniform_open(Rng& rng)
{
  const std::uint64_t bits = rng() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

//! SplitMix64 finalizer.
constexpr std::uint64_t
mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Stable 64-bit FNV-1a hash, used to turn labels into seed keys.
constexpr std::uint64_t
hash_label(std::string_view label)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

//! Derives an independent stream seed from a master seed and a key path,
//! e.g. (master, model, N, replication). Counter-based, so any cell can be
//! regenerated without replaying the others.
constexpr std::uint64_t
derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys)
{
  std::uint64_t s = mix64(master);
  for (std::uint64_t k : keys) {
    s = mix64(s ^ mix64(k + 0x632be59bd9b4e019ULL));
  }
  return s;
}

} // namespace condcop
