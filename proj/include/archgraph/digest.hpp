#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace archgraph {

// SHA-1 of the payload, rendered in RFC 4648 base32 (32 chars, no padding),
// the form CDX files use for the digest column.
std::string sha1_base32(std::string_view bytes);

// Lowercase hex SHA-1, used for stage manifests.
std::string sha1_hex(std::string_view bytes);

bool is_base32_digest(std::string_view digest);

// Incremental SHA-1 producing lowercase hex.
class Sha1Hasher {
 public:
  Sha1Hasher();
  ~Sha1Hasher();
  Sha1Hasher(const Sha1Hasher&) = delete;
  Sha1Hasher& operator=(const Sha1Hasher&) = delete;

  void update(std::string_view bytes);
  // Throws std::runtime_error when the file cannot be read.
  void update_file(const std::filesystem::path& path);
  std::string hex_digest();

 private:
  void* ctx_;
};

}  // namespace archgraph
