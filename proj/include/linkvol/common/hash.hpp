#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace linkvol {

// FNV-1a 64-bit. Content digests for manifests and schema hashes; not
// cryptographic, just a stable fingerprint for staleness and mismatch checks.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v);

// Digest of a list of names in order (schema fingerprints).
std::string digest_names(const std::vector<std::string>& names);

// Streaming digest of a file's raw bytes. Throws if the file cannot be read.
std::string digest_file(const std::string& path);

}  // namespace linkvol
