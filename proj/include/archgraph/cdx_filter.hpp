#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace archgraph {

// One capture-index line.
struct CdxRecord {
  std::string urlkey;
  std::string timestamp;
  std::string original_uri;
  std::string mimetype;
  std::string status;  // "200", "404", ... or "-"
  std::string digest;  // 32-char base32 SHA-1 or "-"
  std::string redirect = "-";
  std::string meta = "-";
  std::uint64_t offset = 0;
  std::string warc_file;
  std::optional<std::uint64_t> length;  // compressed record length, when the layout has one

  bool operator==(const CdxRecord&) const = default;
};

struct CdxSkip {
  std::size_t line_number;
  std::string reason;
};

struct CdxParseResult {
  std::vector<CdxRecord> records;
  std::vector<CdxSkip> skipped;
};

class CdxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses CDX text. A " CDX <letters>" header line fixes the column layout;
// without one the layout is inferred per line from the field count (9, 10
// or 11 columns). Malformed lines are skipped and reported, never fatal.
CdxParseResult parse_cdx_stream(std::istream& in);

// Reads a plain or gzip-compressed CDX file. Throws CdxError on I/O failure.
CdxParseResult read_cdx_file(const std::filesystem::path& path);

std::string format_cdx_line(const CdxRecord& record);

// ---------------------------------------------------------------------------
// Filter rules

enum class RuleMode { Include, Exclude };

struct StatusEquals {
  std::vector<std::string> codes;
  bool any_2xx = false;
};
struct MimetypePrefixIn {
  std::vector<std::string> prefixes;
};
struct ExtensionIn {
  std::vector<std::string> extensions;
};
// A record is a duplicate when an earlier capture (by timestamp, then input
// order) with the same digest reached this rule. Digest "-" never matches.
struct DuplicateDigest {};

using RulePredicate = std::variant<StatusEquals, MimetypePrefixIn, ExtensionIn, DuplicateDigest>;

struct FilterRule {
  RuleMode mode;
  RulePredicate predicate;

  bool stateless() const { return !std::holds_alternative<DuplicateDigest>(predicate); }
  std::string describe() const;
};

using RuleChain = std::vector<FilterRule>;

// INCLUDE status 200; EXCLUDE image/js/css mimetypes; INCLUDE text/*;
// EXCLUDE non-textual extensions; EXCLUDE duplicate digest.
RuleChain default_rule_chain(bool accept_any_2xx = false);

// Rule file syntax, one rule per line, '#' starts a comment:
//   INCLUDE status 200          (or: INCLUDE status 2xx)
//   EXCLUDE mimetype image/ text/css
//   EXCLUDE extension jpg png
//   EXCLUDE duplicate-digest
RuleChain parse_rule_chain(std::istream& in);
RuleChain read_rule_chain(const std::filesystem::path& path);

// Lowercased last path segment extension of a URI, ignoring query and
// fragment. Empty when the segment has no dot.
std::string path_extension(std::string_view uri);

struct RuleStats {
  std::string rule;
  std::size_t surviving = 0;             // after this rule, applied in chain order
  std::size_t standalone_surviving = 0;  // this rule alone over the full input
  double seconds = 0.0;
};

struct FilterReport {
  std::size_t input_count = 0;
  std::size_t output_count = 0;
  std::vector<RuleStats> rules;
  double total_seconds = 0.0;

  std::string table() const;
  std::string key_values() const;
};

struct Observation {
  std::string urlkey;
  std::string timestamp;
  std::string digest;
  std::string original_uri;

  bool operator==(const Observation&) const = default;
};

struct FilterResult {
  std::vector<CdxRecord> extraction_list;
  std::vector<Observation> observation_log;
  FilterReport report;
};

struct FilterOptions {
  std::size_t workers = 1;
  bool standalone_counts = true;
};

// Survivors keep input order. The observation log holds every successful
// capture (as judged by the chain's first status rule, else status 200),
// including content duplicates, so every observation time is retained.
FilterResult apply_filters(std::span<const CdxRecord> records, const RuleChain& chain,
                           const FilterOptions& options = {});

// Tab-separated outputs:
//   extraction list: urlkey, timestamp, original_uri, digest, offset, warc_file
//   observation log: urlkey, timestamp, digest, original_uri
void write_extraction_list(std::ostream& out, std::span<const CdxRecord> records);
std::vector<CdxRecord> read_extraction_list(std::istream& in);
void write_observation_log(std::ostream& out, std::span<const Observation> log);
std::vector<Observation> read_observation_log(std::istream& in);

}  // namespace archgraph
