#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "archgraph/cdx_filter.hpp"

namespace archgraph {

struct WarcLocator {
  std::string warc_file;
  std::uint64_t offset = 0;
};

struct MementoPayload {
  std::string target_uri;
  std::string warc_datetime;  // 14-digit archival timestamp
  int http_status = 0;
  std::string content_type;
  std::string body;

  bool operator==(const MementoPayload&) const = default;
};

class WarcError : public std::runtime_error {
 public:
  enum class Kind { Io, CorruptRecord, Truncated, WrongType, WholeFileGzip };

  WarcError(Kind kind, const std::string& message, std::string actual_type = {})
      : std::runtime_error(message), kind_(kind), actual_type_(std::move(actual_type)) {}

  Kind kind() const { return kind_; }
  // Set for WrongType: the WARC-Type actually found at the offset.
  const std::string& actual_type() const { return actual_type_; }

 private:
  Kind kind_;
  std::string actual_type_;
};

// Random-access reader over one .warc or member-compressed .warc.gz file.
// Not thread-safe; use one reader per worker.
class WarcReader {
 public:
  explicit WarcReader(const std::filesystem::path& path);
  WarcReader(const WarcReader&) = delete;
  WarcReader& operator=(const WarcReader&) = delete;
  WarcReader(WarcReader&&) noexcept;
  WarcReader& operator=(WarcReader&&) noexcept;
  ~WarcReader();

  // Response record at `offset`. Throws WarcError.
  MementoPayload read_record(std::uint64_t offset);

  const std::filesystem::path& path() const { return path_; }
  std::uint64_t file_size() const { return size_; }

  struct RawRecord {
    std::string version;
    std::map<std::string, std::string> headers;  // names lowercased
    std::string block;
    std::uint64_t next_offset = 0;

    std::string header(const std::string& lower_name) const;
  };
  // Any record type at `offset`.
  RawRecord read_raw(std::uint64_t offset);

 private:
  std::string read_bytes(std::uint64_t offset, std::size_t count);
  RawRecord read_plain(std::uint64_t offset);
  RawRecord read_gzip_member(std::uint64_t offset);

  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  std::uint64_t size_ = 0;
};

MementoPayload read_record(const std::filesystem::path& corpus_root, const WarcLocator& locator);

// Converts a response record's raw block into a payload (splits the HTTP
// header block from the body at the first blank line).
MementoPayload payload_from_raw(const WarcReader::RawRecord& raw, const std::string& where);

struct WarcStreamResult {
  std::vector<std::pair<std::uint64_t, MementoPayload>> records;
  std::size_t skipped_non_response = 0;
  std::vector<std::string> warnings;
};

// All response records in file order. A truncated final record ends the
// stream with a warning; other corruption throws.
WarcStreamResult stream_records(const std::filesystem::path& warc_file);

// Writes WARC/1.0 records, one gzip member per record for .gz paths.
class WarcWriter {
 public:
  explicit WarcWriter(const std::filesystem::path& path);
  WarcWriter(const WarcWriter&) = delete;
  WarcWriter& operator=(const WarcWriter&) = delete;
  ~WarcWriter();

  // Returns the record offset.
  std::uint64_t write_response(const std::string& target_uri, const std::string& timestamp, int http_status,
                               const std::string& content_type, const std::string& body);
  std::uint64_t write_request(const std::string& target_uri, const std::string& timestamp);
  std::uint64_t write_record(const std::string& type, const std::string& target_uri,
                             const std::string& timestamp, const std::string& content_type,
                             const std::string& block);
  void close();

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  bool compress_ = false;
  std::uint64_t offset_ = 0;
  std::uint64_t serial_ = 0;
};

// Builds CDX records (11-column layout) for every response record.
std::vector<CdxRecord> index_warc(const std::filesystem::path& warc_file);

}  // namespace archgraph
