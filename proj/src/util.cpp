#include "machash/util.hpp"

#include <atomic>
#include <iostream>

namespace machash {

namespace {
std::atomic<bool> g_warnings{true};
}

void set_warnings_enabled(bool enabled) { g_warnings = enabled; }

void warn(const std::string& message) {
  if (g_warnings) std::clog << "warning: " << message << '\n';
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace machash
