#include "archgraph/warc.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

#include <fmt/format.h>
#include <zlib.h>

#include "archgraph/digest.hpp"
#include "archgraph/timestamp.hpp"
#include "archgraph/uri_identity.hpp"

namespace archgraph {
namespace {

constexpr std::size_t kHeaderProbe = 16 * 1024;
constexpr std::size_t kMaxHeaderBytes = 1 << 20;

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Position just past the blank line ending a header block, or npos.
std::size_t find_header_end(std::string_view data) {
  const auto crlf = data.find("\r\n\r\n");
  const auto lf = data.find("\n\n");
  if (crlf == std::string_view::npos && lf == std::string_view::npos) return std::string_view::npos;
  if (lf == std::string_view::npos || (crlf != std::string_view::npos && crlf < lf)) return crlf + 4;
  return lf + 2;
}

// Parses "Name: value" lines after the first line of `block`.
std::map<std::string, std::string> parse_header_lines(std::string_view block, std::string& first_line) {
  std::map<std::string, std::string> headers;
  std::size_t pos = 0;
  bool first = true;
  while (pos < block.size()) {
    auto eol = block.find('\n', pos);
    if (eol == std::string_view::npos) eol = block.size();
    std::string_view line = block.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    if (first) {
      first_line = std::string(line);
      first = false;
      continue;
    }
    if (line.empty()) break;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    headers[to_lower(trim(line.substr(0, colon)))] = std::string(trim(line.substr(colon + 1)));
  }
  return headers;
}

bool has_warc_magic(std::string_view data) {
  return data.substr(0, 5) == "WARC/";
}

struct ParsedHead {
  std::string version;
  std::map<std::string, std::string> headers;
  std::size_t header_len = 0;
  std::uint64_t content_length = 0;
};

ParsedHead parse_warc_head(std::string_view data, std::size_t header_end, const std::string& where) {
  ParsedHead head;
  head.headers = parse_header_lines(data.substr(0, header_end), head.version);
  head.header_len = header_end;
  if (head.version != "WARC/1.0" && head.version != "WARC/1.1") {
    throw WarcError(WarcError::Kind::CorruptRecord, fmt::format("{}: unsupported version '{}'", where, head.version));
  }
  const auto it = head.headers.find("content-length");
  if (it == head.headers.end() || it->second.empty() ||
      !std::all_of(it->second.begin(), it->second.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw WarcError(WarcError::Kind::CorruptRecord, fmt::format("{}: missing or invalid Content-Length", where));
  }
  head.content_length = std::stoull(it->second);
  return head;
}

// Count of CR/LF bytes at the start of `data` (record separator).
std::size_t separator_len(std::string_view data) {
  std::size_t n = 0;
  while (n < data.size() && n < 4 && (data[n] == '\r' || data[n] == '\n')) ++n;
  return n;
}

std::string reason_phrase(int status) {
  switch (status) {
    case 200: return "OK";
    case 301: return "Moved Permanently";
    case 302: return "Found";
    case 404: return "Not Found";
    case 500: return "Internal Server Error";
    default: return "Status";
  }
}

}  // namespace

std::string WarcReader::RawRecord::header(const std::string& lower_name) const {
  const auto it = headers.find(lower_name);
  return it == headers.end() ? std::string() : it->second;
}

WarcReader::WarcReader(const std::filesystem::path& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "rb");
  if (file_ == nullptr) throw WarcError(WarcError::Kind::Io, fmt::format("cannot open WARC file {}", path.string()));
  std::error_code ec;
  size_ = std::filesystem::file_size(path, ec);
  if (ec) throw WarcError(WarcError::Kind::Io, fmt::format("cannot stat {}: {}", path.string(), ec.message()));
}

WarcReader::WarcReader(WarcReader&& other) noexcept
    : path_(std::move(other.path_)), file_(std::exchange(other.file_, nullptr)), size_(other.size_) {}

WarcReader& WarcReader::operator=(WarcReader&& other) noexcept {
  if (this != &other) {
    if (file_ != nullptr) std::fclose(file_);
    path_ = std::move(other.path_);
    file_ = std::exchange(other.file_, nullptr);
    size_ = other.size_;
  }
  return *this;
}

WarcReader::~WarcReader() {
  if (file_ != nullptr) std::fclose(file_);
}

std::string WarcReader::read_bytes(std::uint64_t offset, std::size_t count) {
  if (offset >= size_) return {};
  count = static_cast<std::size_t>(std::min<std::uint64_t>(count, size_ - offset));
  std::string out(count, '\0');
  if (fseeko(file_, static_cast<off_t>(offset), SEEK_SET) != 0) {
    throw WarcError(WarcError::Kind::Io, fmt::format("{}: seek to {} failed", path_.string(), offset));
  }
  const std::size_t n = std::fread(out.data(), 1, count, file_);
  if (n != count && std::ferror(file_)) {
    throw WarcError(WarcError::Kind::Io, fmt::format("{}: read failed at {}", path_.string(), offset));
  }
  out.resize(n);
  return out;
}

WarcReader::RawRecord WarcReader::read_raw(std::uint64_t offset) {
  const std::string where = fmt::format("{}@{}", path_.filename().string(), offset);
  const std::string magic = read_bytes(offset, 5);
  if (magic.size() >= 2 && static_cast<unsigned char>(magic[0]) == 0x1f &&
      static_cast<unsigned char>(magic[1]) == 0x8b) {
    return read_gzip_member(offset);
  }
  if (!has_warc_magic(magic)) {
    throw WarcError(WarcError::Kind::CorruptRecord, fmt::format("{}: no WARC record starts here", where));
  }
  return read_plain(offset);
}

WarcReader::RawRecord WarcReader::read_plain(std::uint64_t offset) {
  const std::string where = fmt::format("{}@{}", path_.filename().string(), offset);
  std::string head_bytes;
  std::size_t header_end = std::string::npos;
  for (std::size_t probe = kHeaderProbe; probe <= kMaxHeaderBytes; probe *= 4) {
    head_bytes = read_bytes(offset, probe);
    header_end = find_header_end(head_bytes);
    if (header_end != std::string::npos || head_bytes.size() < probe) break;
  }
  if (header_end == std::string::npos) {
    throw WarcError(WarcError::Kind::Truncated, fmt::format("{}: header block never terminates", where));
  }
  ParsedHead head = parse_warc_head(head_bytes, header_end, where);
  RawRecord raw;
  raw.version = std::move(head.version);
  raw.headers = std::move(head.headers);
  raw.block = read_bytes(offset + header_end, static_cast<std::size_t>(head.content_length));
  if (raw.block.size() != head.content_length) {
    throw WarcError(WarcError::Kind::Truncated,
                    fmt::format("{}: record declares {} bytes, only {} present", where, head.content_length,
                                raw.block.size()));
  }
  const std::uint64_t after = offset + header_end + head.content_length;
  raw.next_offset = after + separator_len(read_bytes(after, 4));
  return raw;
}

WarcReader::RawRecord WarcReader::read_gzip_member(std::uint64_t offset) {
  const std::string where = fmt::format("{}@{}", path_.filename().string(), offset);
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) throw WarcError(WarcError::Kind::Io, "inflateInit2 failed");
  std::string out;
  std::vector<char> outbuf(1 << 16);
  std::uint64_t pos = offset;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    std::string in = read_bytes(pos, 1 << 16);
    if (in.empty()) break;
    zs.next_in = reinterpret_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    const uLong before = zs.total_in;
    while (zs.avail_in > 0 && rc != Z_STREAM_END) {
      zs.next_out = reinterpret_cast<Bytef*>(outbuf.data());
      zs.avail_out = static_cast<uInt>(outbuf.size());
      rc = inflate(&zs, Z_NO_FLUSH);
      if (rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR) {
        inflateEnd(&zs);
        throw WarcError(WarcError::Kind::CorruptRecord, fmt::format("{}: gzip data error", where));
      }
      out.append(outbuf.data(), outbuf.size() - zs.avail_out);
      if (rc == Z_BUF_ERROR && zs.avail_out != 0) break;
    }
    pos += zs.total_in - before;
  }
  const std::uint64_t member_end = offset + zs.total_in;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) {
    throw WarcError(WarcError::Kind::Truncated, fmt::format("{}: gzip member is truncated", where));
  }

  const std::size_t header_end = find_header_end(out);
  if (!has_warc_magic(out)) {
    throw WarcError(WarcError::Kind::CorruptRecord, fmt::format("{}: gzip member is not a WARC record", where));
  }
  if (header_end == std::string::npos) {
    throw WarcError(WarcError::Kind::Truncated, fmt::format("{}: header block never terminates", where));
  }
  ParsedHead head = parse_warc_head(out, header_end, where);
  if (out.size() - header_end < head.content_length) {
    throw WarcError(WarcError::Kind::Truncated,
                    fmt::format("{}: record declares {} bytes, only {} present", where, head.content_length,
                                out.size() - header_end));
  }
  std::string_view rest = std::string_view(out).substr(header_end + head.content_length);
  rest.remove_prefix(separator_len(rest));
  if (rest.find_first_not_of("\r\n") != std::string_view::npos) {
    throw WarcError(WarcError::Kind::WholeFileGzip,
                    fmt::format("{}: gzip member holds more than one record; whole-file gzip is not supported, "
                                "recompress with one member per record",
                                where));
  }
  RawRecord raw;
  raw.version = std::move(head.version);
  raw.headers = std::move(head.headers);
  raw.block = out.substr(header_end, static_cast<std::size_t>(head.content_length));
  raw.next_offset = member_end;
  return raw;
}

MementoPayload payload_from_raw(const WarcReader::RawRecord& raw, const std::string& where) {
  const std::string type = raw.header("warc-type");
  if (type != "response") {
    throw WarcError(WarcError::Kind::WrongType, fmt::format("{}: expected a response record, found '{}'", where, type),
                    type);
  }
  MementoPayload p;
  p.target_uri = raw.header("warc-target-uri");
  if (!p.target_uri.empty() && p.target_uri.front() == '<' && p.target_uri.back() == '>') {
    p.target_uri = p.target_uri.substr(1, p.target_uri.size() - 2);
  }
  const auto ts = timestamp_from_iso8601(raw.header("warc-date"));
  if (!ts) throw WarcError(WarcError::Kind::CorruptRecord, fmt::format("{}: invalid WARC-Date", where));
  p.warc_datetime = *ts;

  const std::string_view block = raw.block;
  const std::size_t http_end = find_header_end(block);
  const std::string_view http_head = http_end == std::string_view::npos ? block : block.substr(0, http_end);
  std::string status_line;
  const auto http_headers = parse_header_lines(http_head, status_line);
  if (status_line.rfind("HTTP/", 0) != 0) {
    throw WarcError(WarcError::Kind::CorruptRecord, fmt::format("{}: response block lacks an HTTP status line", where));
  }
  const auto sp = status_line.find(' ');
  if (sp != std::string::npos) {
    const std::string code = status_line.substr(sp + 1, 3);
    if (code.size() == 3 && std::all_of(code.begin(), code.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      p.http_status = std::stoi(code);
    }
  }
  if (const auto it = http_headers.find("content-type"); it != http_headers.end()) p.content_type = it->second;
  if (http_end != std::string_view::npos) p.body = std::string(block.substr(http_end));
  return p;
}

MementoPayload WarcReader::read_record(std::uint64_t offset) {
  const RawRecord raw = read_raw(offset);
  return payload_from_raw(raw, fmt::format("{}@{}", path_.filename().string(), offset));
}

MementoPayload read_record(const std::filesystem::path& corpus_root, const WarcLocator& locator) {
  WarcReader reader(corpus_root / locator.warc_file);
  return reader.read_record(locator.offset);
}

WarcStreamResult stream_records(const std::filesystem::path& warc_file) {
  WarcStreamResult result;
  WarcReader reader(warc_file);
  std::uint64_t offset = 0;
  while (offset < reader.file_size()) {
    WarcReader::RawRecord raw;
    try {
      raw = reader.read_raw(offset);
    } catch (const WarcError& e) {
      if (e.kind() != WarcError::Kind::Truncated) throw;
      result.warnings.push_back(e.what());
      break;
    }
    if (raw.header("warc-type") == "response") {
      result.records.emplace_back(offset, payload_from_raw(raw, fmt::format("{}@{}", warc_file.filename().string(), offset)));
    } else {
      ++result.skipped_non_response;
    }
    if (raw.next_offset <= offset) break;
    offset = raw.next_offset;
  }
  return result;
}

WarcWriter::WarcWriter(const std::filesystem::path& path) : path_(path) {
  compress_ = path.extension() == ".gz";
  file_ = std::fopen(path.c_str(), "wb");
  if (file_ == nullptr) throw WarcError(WarcError::Kind::Io, fmt::format("cannot create {}", path.string()));
}

WarcWriter::~WarcWriter() { close(); }

void WarcWriter::close() {
  if (file_ != nullptr) {
    std::fclose(file_);
    file_ = nullptr;
  }
}

std::uint64_t WarcWriter::write_record(const std::string& type, const std::string& target_uri,
                                       const std::string& timestamp, const std::string& content_type,
                                       const std::string& block) {
  const std::string record_id = sha1_hex(fmt::format("{}#{}", path_.filename().string(), serial_++));
  std::string record = fmt::format(
      "WARC/1.0\r\nWARC-Type: {}\r\nWARC-Record-ID: <urn:uuid:{}-{}-{}-{}-{}>\r\nWARC-Date: {}\r\n"
      "WARC-Target-URI: {}\r\nContent-Type: {}\r\nContent-Length: {}\r\n\r\n",
      type, record_id.substr(0, 8), record_id.substr(8, 4), record_id.substr(12, 4), record_id.substr(16, 4),
      record_id.substr(20, 12), iso8601_from_timestamp(timestamp), target_uri, content_type, block.size());
  record.append(block).append("\r\n\r\n");

  std::string bytes;
  if (compress_) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
      throw WarcError(WarcError::Kind::Io, "deflateInit2 failed");
    }
    bytes.resize(deflateBound(&zs, static_cast<uLong>(record.size())) + 64);
    zs.next_in = reinterpret_cast<Bytef*>(record.data());
    zs.avail_in = static_cast<uInt>(record.size());
    zs.next_out = reinterpret_cast<Bytef*>(bytes.data());
    zs.avail_out = static_cast<uInt>(bytes.size());
    const int rc = deflate(&zs, Z_FINISH);
    bytes.resize(zs.total_out);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw WarcError(WarcError::Kind::Io, "deflate failed");
  } else {
    bytes = std::move(record);
  }
  const std::uint64_t at = offset_;
  if (std::fwrite(bytes.data(), 1, bytes.size(), file_) != bytes.size()) {
    throw WarcError(WarcError::Kind::Io, fmt::format("write failed on {}", path_.string()));
  }
  offset_ += bytes.size();
  return at;
}

std::uint64_t WarcWriter::write_response(const std::string& target_uri, const std::string& timestamp,
                                         int http_status, const std::string& content_type, const std::string& body) {
  const std::string block = fmt::format("HTTP/1.1 {} {}\r\nContent-Type: {}\r\nContent-Length: {}\r\n\r\n",
                                        http_status, reason_phrase(http_status), content_type, body.size()) +
                            body;
  return write_record("response", target_uri, timestamp, "application/http; msgtype=response", block);
}

std::uint64_t WarcWriter::write_request(const std::string& target_uri, const std::string& timestamp) {
  const std::string path = target_uri.substr(std::min(target_uri.size(), target_uri.find('/', target_uri.find("//") + 2)));
  const std::string block = fmt::format("GET {} HTTP/1.1\r\nUser-Agent: archgraph-fixture\r\n\r\n", path.empty() ? "/" : path);
  return write_record("request", target_uri, timestamp, "application/http; msgtype=request", block);
}

std::vector<CdxRecord> index_warc(const std::filesystem::path& warc_file) {
  std::vector<CdxRecord> out;
  WarcReader reader(warc_file);
  std::uint64_t offset = 0;
  while (offset < reader.file_size()) {
    const WarcReader::RawRecord raw = reader.read_raw(offset);
    if (raw.header("warc-type") == "response") {
      const MementoPayload p = payload_from_raw(raw, warc_file.filename().string());
      CdxRecord r;
      try {
        r.urlkey = canonicalize(p.target_uri).str();
      } catch (const CanonicalizationError&) {
        r.urlkey = p.target_uri;
      }
      r.timestamp = p.warc_datetime;
      r.original_uri = p.target_uri;
      const std::string mime = to_lower(trim(std::string_view(p.content_type).substr(0, p.content_type.find(';'))));
      r.mimetype = mime.empty() ? "-" : mime;
      r.status = p.http_status == 0 ? "-" : std::to_string(p.http_status);
      r.digest = sha1_base32(p.body);
      r.offset = offset;
      r.length = raw.next_offset - offset;
      r.warc_file = warc_file.filename().string();
      out.push_back(std::move(r));
    }
    if (raw.next_offset <= offset) break;
    offset = raw.next_offset;
  }
  return out;
}

}  // namespace archgraph
