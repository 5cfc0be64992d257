#include "archgraph/kv_store.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>
#include <zlib.h>

namespace archgraph {
namespace {

constexpr std::string_view kMagic = "AGKVLOG1";
constexpr std::uint8_t kOpPut = 1;
constexpr std::uint8_t kOpErase = 2;
constexpr std::size_t kRecordHeader = 4 + 1 + 4 + 4;

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t read_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

std::string encode_record(std::uint8_t op, std::string_view key, std::string_view value) {
  std::string body;
  body.reserve(1 + 8 + key.size() + value.size());
  body.push_back(static_cast<char>(op));
  append_u32(body, static_cast<std::uint32_t>(key.size()));
  append_u32(body, static_cast<std::uint32_t>(value.size()));
  body.append(key).append(value);
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
  std::string rec;
  rec.reserve(4 + body.size());
  append_u32(rec, crc);
  rec.append(body);
  return rec;
}

}  // namespace

struct KvStore::Impl {
  mutable std::shared_mutex mutex;
  std::map<std::string, std::string, std::less<>> index;
  std::filesystem::path dir;
  std::FILE* log = nullptr;
  std::uint64_t log_size = 0;
  std::vector<char> io_buffer;

  ~Impl() { close_log(); }

  bool persistent() const { return !dir.empty(); }
  std::filesystem::path log_path() const { return dir / "data.log"; }

  void open_log_for_append() {
    log = std::fopen(log_path().c_str(), "ab");
    if (log == nullptr) throw StorageError(fmt::format("cannot open {}", log_path().string()));
    io_buffer.resize(1 << 20);
    std::setvbuf(log, io_buffer.data(), _IOFBF, io_buffer.size());
  }

  void close_log() {
    if (log != nullptr) {
      std::fclose(log);
      log = nullptr;
    }
  }

  void append(std::uint8_t op, std::string_view key, std::string_view value) {
    if (!persistent()) return;
    const std::string rec = encode_record(op, key, value);
    if (std::fwrite(rec.data(), 1, rec.size(), log) != rec.size()) {
      throw StorageError(fmt::format("write failed on {}", log_path().string()));
    }
    log_size += rec.size();
  }

  void replay() {
    const auto path = log_path();
    if (!std::filesystem::exists(path)) {
      std::ofstream out(path, std::ios::binary);
      out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
      if (!out) throw StorageError(fmt::format("cannot create {}", path.string()));
      log_size = kMagic.size();
      return;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError(fmt::format("cannot read {}", path.string()));
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < kMagic.size() || std::string_view(data).substr(0, kMagic.size()) != kMagic) {
      throw StorageError(fmt::format("{} is not a store log", path.string()));
    }
    std::size_t pos = kMagic.size();
    while (pos + kRecordHeader <= data.size()) {
      const char* p = data.data() + pos;
      const std::uint32_t crc = read_u32(p);
      const auto op = static_cast<std::uint8_t>(p[4]);
      const std::uint32_t klen = read_u32(p + 5);
      const std::uint32_t vlen = read_u32(p + 9);
      const std::size_t total = kRecordHeader + klen + vlen;
      if (pos + total > data.size()) break;
      const auto actual = static_cast<std::uint32_t>(
          crc32(0L, reinterpret_cast<const Bytef*>(p + 4), static_cast<uInt>(total - 4)));
      if (actual != crc) break;
      std::string key(p + kRecordHeader, klen);
      if (op == kOpPut) {
        index.insert_or_assign(std::move(key), std::string(p + kRecordHeader + klen, vlen));
      } else if (op == kOpErase) {
        index.erase(key);
      } else {
        break;
      }
      pos += total;
    }
    if (pos != data.size()) {
      // Torn or corrupt tail: keep the valid prefix only.
      in.close();
      std::filesystem::resize_file(path, pos);
    }
    log_size = pos;
  }
};

KvStore::KvStore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
KvStore::KvStore(KvStore&&) noexcept = default;
KvStore& KvStore::operator=(KvStore&&) noexcept = default;

KvStore::~KvStore() {
  if (impl_ && impl_->log != nullptr) std::fflush(impl_->log);
}

KvStore KvStore::open(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw StorageError(fmt::format("cannot create store directory {}: {}", dir.string(), ec.message()));
  auto impl = std::make_unique<Impl>();
  impl->dir = dir;
  impl->replay();
  impl->open_log_for_append();
  return KvStore(std::move(impl));
}

KvStore KvStore::in_memory() { return KvStore(std::make_unique<Impl>()); }

std::optional<std::string> KvStore::get(std::string_view key) const {
  std::shared_lock lock(impl_->mutex);
  const auto it = impl_->index.find(key);
  if (it == impl_->index.end()) return std::nullopt;
  return it->second;
}

bool KvStore::contains(std::string_view key) const {
  std::shared_lock lock(impl_->mutex);
  return impl_->index.find(key) != impl_->index.end();
}

void KvStore::put(std::string_view key, std::string_view value) {
  std::unique_lock lock(impl_->mutex);
  impl_->append(kOpPut, key, value);
  impl_->index.insert_or_assign(std::string(key), std::string(value));
}

bool KvStore::put_if_changed(std::string_view key, std::string_view value) {
  std::unique_lock lock(impl_->mutex);
  const auto it = impl_->index.find(key);
  if (it != impl_->index.end() && it->second == value) return false;
  impl_->append(kOpPut, key, value);
  if (it != impl_->index.end()) {
    it->second = std::string(value);
  } else {
    impl_->index.emplace(std::string(key), std::string(value));
  }
  return true;
}

std::optional<std::string> KvStore::put_if_absent(std::string_view key, std::string_view value) {
  std::unique_lock lock(impl_->mutex);
  const auto it = impl_->index.lower_bound(key);
  if (it != impl_->index.end() && it->first == key) return it->second;
  impl_->append(kOpPut, key, value);
  impl_->index.emplace_hint(it, std::string(key), std::string(value));
  return std::nullopt;
}

bool KvStore::erase(std::string_view key) {
  std::unique_lock lock(impl_->mutex);
  const auto it = impl_->index.find(key);
  if (it == impl_->index.end()) return false;
  impl_->append(kOpErase, key, {});
  impl_->index.erase(it);
  return true;
}

void KvStore::scan_prefix(std::string_view prefix, const Visitor& visit) const {
  std::shared_lock lock(impl_->mutex);
  for (auto it = impl_->index.lower_bound(prefix); it != impl_->index.end(); ++it) {
    if (std::string_view(it->first).substr(0, prefix.size()) != prefix) break;
    visit(it->first, it->second);
  }
}

std::size_t KvStore::count_prefix(std::string_view prefix) const {
  std::size_t n = 0;
  scan_prefix(prefix, [&](std::string_view, std::string_view) { ++n; });
  return n;
}

std::size_t KvStore::size() const {
  std::shared_lock lock(impl_->mutex);
  return impl_->index.size();
}

std::uint64_t KvStore::log_bytes() const {
  std::shared_lock lock(impl_->mutex);
  return impl_->log_size;
}

bool KvStore::persistent() const { return impl_->persistent(); }

void KvStore::flush() {
  std::unique_lock lock(impl_->mutex);
  if (impl_->log != nullptr && std::fflush(impl_->log) != 0) {
    throw StorageError(fmt::format("flush failed on {}", impl_->log_path().string()));
  }
}

void KvStore::compact() {
  std::unique_lock lock(impl_->mutex);
  if (!impl_->persistent()) return;
  const auto tmp = impl_->dir / "data.log.compact";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
    std::uint64_t size = kMagic.size();
    for (const auto& [key, value] : impl_->index) {
      const std::string rec = encode_record(kOpPut, key, value);
      out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
      size += rec.size();
    }
    out.flush();
    if (!out) throw StorageError(fmt::format("compaction write failed on {}", tmp.string()));
    impl_->log_size = size;
  }
  impl_->close_log();
  std::filesystem::rename(tmp, impl_->log_path());
  impl_->open_log_for_append();
}

}  // namespace archgraph
