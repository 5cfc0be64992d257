#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "archgraph/cdx_filter.hpp"
#include "archgraph/extraction.hpp"
#include "archgraph/graph_store.hpp"

namespace archgraph {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// key = value lines, '#' comments. Repeatable keys: cdx. Relative paths
// are taken relative to the config file's directory.
//
//   cdx = crawl/a.cdx            (file or directory of *.cdx / *.cdx.gz)
//   corpus_root = warcs          (or: replay_base = http://host/web)
//   politeness_ms = 0
//   rules = rules.txt            (optional; default chain otherwise)
//   accept_2xx = false
//   workers = 2
//   store = store
//   run_dir = run
//   bind = 127.0.0.1:8080
//   damping = 0.85   epsilon = 1e-8   max_iter = 100   top_k = 50
struct PipelineConfig {
  std::vector<std::filesystem::path> cdx_paths;
  std::optional<std::filesystem::path> corpus_root;
  std::optional<std::string> replay_base;
  int politeness_ms = 0;
  std::optional<std::filesystem::path> rules_file;
  bool accept_any_2xx = false;
  std::size_t workers = 1;
  std::filesystem::path store_path;
  std::filesystem::path run_dir;
  std::string bind_host = "127.0.0.1";
  int bind_port = 8080;
  double damping = 0.85;
  double epsilon = 1e-8;
  int max_iter = 100;
  std::size_t top_k = 50;

  // Throws ConfigError on syntax errors and unknown keys.
  static PipelineConfig parse(std::istream& in, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& file);

  // Problems that prevent a run (missing inputs, two sources, ...).
  std::vector<std::string> validate() const;

  ExtractionSource source() const;
  // CDX files named by cdx_paths, directories expanded, sorted.
  std::vector<std::filesystem::path> cdx_files() const;
};

// Reads all CDX files in order and concatenates their records.
CdxParseResult read_cdx_files(std::span<const std::filesystem::path> files);

// Replaces each checksum's outlink set with the links given for it,
// registers link targets and loads the observations.
struct StoreLoadReport {
  std::size_t link_records = 0;
  std::size_t checksums = 0;
  std::size_t content_changes = 0;
  LoadStats observations;
};
StoreLoadReport load_store(GraphStore& store, std::span<const LinkRecord> links, std::span<const Observation> log);

struct StageOutcome {
  std::string stage;
  bool skipped = false;  // inputs unchanged since the last completed run
  double seconds = 0.0;
  std::string summary;
};

struct PipelineResult {
  int exit_code = 0;  // 0 ok, 1 validation, 2 stage failure
  std::vector<StageOutcome> stages;
  std::string failed_stage;
  std::string message;
};

inline constexpr const char* kStages[] = {"filter", "extract", "load", "materialize", "analyze"};

// Runs filter, extract, load, materialize and analyze. Each stage writes
// its outputs and report under run_dir/<stage>/ and a manifest holding the
// hash of its inputs; a stage whose manifest matches is skipped.
PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

// Manifest hash of a set of files plus extra settings text.
std::string hash_inputs(std::span<const std::filesystem::path> files, std::string_view settings);

}  // namespace archgraph
