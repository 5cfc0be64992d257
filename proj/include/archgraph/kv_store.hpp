#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace archgraph {

class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Embedded ordered key-value store. Every mutation is appended to a
// checksummed log (`data.log` in the store directory) and applied to an
// ordered in-memory index; opening a directory replays the log. A torn
// tail record (crash mid-append) is discarded on open.
//
// Thread-safe: writers take an exclusive lock, readers a shared one, so a
// scan observes a consistent snapshot.
class KvStore {
 public:
  using Visitor = std::function<void(std::string_view key, std::string_view value)>;

  static KvStore open(const std::filesystem::path& dir);
  static KvStore in_memory();

  KvStore(KvStore&&) noexcept;
  KvStore& operator=(KvStore&&) noexcept;
  ~KvStore();

  std::optional<std::string> get(std::string_view key) const;
  bool contains(std::string_view key) const;

  void put(std::string_view key, std::string_view value);
  // Returns true when the stored value changed (nothing is logged otherwise).
  bool put_if_changed(std::string_view key, std::string_view value);
  // Returns the existing value if the key was present, nullopt if inserted.
  std::optional<std::string> put_if_absent(std::string_view key, std::string_view value);
  bool erase(std::string_view key);

  // Visits keys with the given prefix in ascending byte order.
  void scan_prefix(std::string_view prefix, const Visitor& visit) const;
  std::size_t count_prefix(std::string_view prefix) const;

  std::size_t size() const;
  std::uint64_t log_bytes() const;
  bool persistent() const;

  void flush();
  // Rewrites the log with only live entries, in key order.
  void compact();

 private:
  struct Impl;
  explicit KvStore(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace archgraph
