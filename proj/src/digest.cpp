#include "archgraph/digest.hpp"

#include <array>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace archgraph {
namespace {

using Sha1Bytes = std::array<unsigned char, 20>;

Sha1Bytes sha1(std::string_view bytes) {
  Sha1Bytes out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha1(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  return out;
}

constexpr std::string_view kBase32Alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";

}  // namespace

std::string sha1_base32(std::string_view bytes) {
  const Sha1Bytes digest = sha1(bytes);
  std::string out;
  out.reserve(32);
  std::uint32_t buffer = 0;
  int bits = 0;
  for (unsigned char b : digest) {
    buffer = (buffer << 8) | b;
    bits += 8;
    while (bits >= 5) {
      out.push_back(kBase32Alphabet[(buffer >> (bits - 5)) & 0x1f]);
      bits -= 5;
    }
  }
  // 160 bits is an exact multiple of 5, so nothing is left over.
  return out;
}

std::string sha1_hex(std::string_view bytes) {
  const Sha1Bytes digest = sha1(bytes);
  std::string out;
  out.reserve(40);
  for (unsigned char b : digest) out += fmt::format("{:02x}", b);
  return out;
}

bool is_base32_digest(std::string_view digest) {
  if (digest.size() != 32) return false;
  for (char c : digest) {
    if (kBase32Alphabet.find(c) == std::string_view::npos) return false;
  }
  return true;
}

Sha1Hasher::Sha1Hasher() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 init failed");
  }
}

Sha1Hasher::~Sha1Hasher() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha1Hasher::update(std::string_view bytes) {
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), bytes.data(), bytes.size()) != 1) {
    throw std::runtime_error("SHA-1 update failed");
  }
}

void Sha1Hasher::update_file(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!f) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  std::array<char, 1 << 16> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), f.get())) > 0) update(std::string_view(buf.data(), n));
  if (std::ferror(f.get())) throw std::runtime_error(fmt::format("read error on {}", path.string()));
}

std::string Sha1Hasher::hex_digest() {
  Sha1Bytes digest{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), digest.data(), &len) != 1) {
    throw std::runtime_error("SHA-1 final failed");
  }
  std::string out;
  for (unsigned char b : digest) out += fmt::format("{:02x}", b);
  EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha1(), nullptr);
  return out;
}

}  // namespace archgraph
