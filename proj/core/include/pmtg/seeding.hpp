#pragma once

// All randomness derives from one master seed through named, hashed streams
// ("env", "perturb", "optim", "eval", "init"). There is no global RNG.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace pmtg {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

// Mixes the master seed, a stream name and any number of indices into a
// well-scrambled 64-bit seed. Order of indices matters.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::initializer_list<std::uint64_t> indices = {});

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace pmtg
