#include "linkvol/common/hash.hpp"

#include <cstdio>
#include <stdexcept>

namespace linkvol {

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string digest_names(const std::vector<std::string>& names) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& n : names) {
    h = fnv1a64(n, h);
    h = fnv1a64("\n", h);
  }
  return to_hex(h);
}

std::string digest_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open file for digest: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) {
    h = fnv1a64(std::string_view(buf, n), h);
  }
  std::fclose(f);
  return to_hex(h);
}

}  // namespace linkvol
