#include "kdm/seeding.hpp"

namespace kdm {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the label bytes.
std::uint64_t hash_label(std::string_view label)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace

std::uint64_t seed_stream(std::uint64_t master,
                          std::string_view label,
                          std::initializer_list<std::uint64_t> indices)
{
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ hash_label(label));
  for (auto i : indices)
    h = splitmix64(h ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

} // namespace kdm
