#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace kdm {

inline constexpr std::uint64_t kDefaultSeeds[3] = { 42, 43, 44 };

// Stable 64-bit seed for a sub-task, derived from the master seed, a label
// and integer indices. Independent of platform, thread count and call order.
std::uint64_t seed_stream(std::uint64_t master,
                          std::string_view label,
                          std::initializer_list<std::uint64_t> indices = {});

} // namespace kdm
