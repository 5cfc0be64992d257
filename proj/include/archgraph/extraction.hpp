#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "archgraph/cdx_filter.hpp"
#include "archgraph/html_links.hpp"
#include "archgraph/partition.hpp"

namespace archgraph {

struct ExtractionSource {
  enum class Kind { WarcCorpus, ReplayEndpoint };

  Kind kind = Kind::WarcCorpus;
  std::filesystem::path corpus_root;
  std::string replay_base;  // e.g. "http://localhost:8080/web"
  int politeness_ms = 0;
  int timeout_ms = 10000;
  int max_retries = 3;

  static ExtractionSource warc_corpus(std::filesystem::path root);
  static ExtractionSource replay(std::string base_url, int politeness_ms = 0);

  // Throws std::invalid_argument.
  void validate() const;
};

class ReplayError : public std::runtime_error {
 public:
  ReplayError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }  // 0 for transport failures

 private:
  int status_;
};

struct ReplayResponse {
  int status = 0;
  std::string content_type;
  std::string body;
  std::string final_url;
};

inline constexpr std::string_view kReplayUserAgent = "archgraph-link-extractor/1.0";

// GET <base>/<timestamp>/<original>. Follows up to five redirects and
// retries 5xx answers and transport failures up to max_retries times.
// Throws ReplayError once retries are exhausted or on a non-200 answer.
ReplayResponse fetch_memento(const ExtractionSource& source, std::string_view timestamp, std::string_view original_uri);

struct LinkBatch {
  std::size_t partition = 0;
  std::string warc_file;
  std::vector<LinkRecord> links;
};

// Invoked from worker threads, one call at a time.
using BatchSink = std::function<void(LinkBatch&&)>;

struct RecordFailure {
  std::size_t record_index = 0;  // into the extraction list
  std::string reason;
};

struct PartitionReport {
  std::size_t index = 0;
  std::size_t records = 0;
  std::size_t pages = 0;
  std::size_t links = 0;
  std::size_t skipped_non_html = 0;
  double seconds = 0.0;
  std::vector<RecordFailure> failures;
};

struct ExtractionReport {
  std::vector<PartitionReport> partitions;
  std::size_t records = 0;
  std::size_t pages = 0;
  std::size_t links = 0;
  std::size_t failures = 0;
  double map_seconds = 0.0;    // slowest worker
  double total_seconds = 0.0;  // including merge of batches

  std::string table() const;
  std::string key_values() const;
};

// One worker thread per partition. Records that fail (missing WARC file,
// corrupt record, replay errors) are listed in the report and never abort
// the run.
ExtractionReport run_extraction(const ExtractionSource& source, std::span<const CdxRecord> extraction_list,
                                const PartitionPlan& plan, const BatchSink& sink);

// Plans k partitions, runs the extraction and returns every record, sorted.
std::vector<LinkRecord> extract_all(const ExtractionSource& source, std::span<const CdxRecord> extraction_list,
                                    std::size_t k, ExtractionReport* report = nullptr);

}  // namespace archgraph
