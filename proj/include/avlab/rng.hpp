#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace avlab {

using Rng = std::mt19937_64;

/// Derives an independent child seed from a parent seed and a stream tag.
/// splitmix64 finalizer over (seed, fnv(tag)); stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

inline Rng make_rng(std::uint64_t seed, std::string_view tag) { return Rng(derive_seed(seed, tag)); }

}  // namespace avlab
