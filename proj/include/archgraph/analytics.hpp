#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "archgraph/graph_store.hpp"
#include "archgraph/timestamp.hpp"
#include "archgraph/uri_identity.hpp"

namespace archgraph {

struct Window {
  std::string label;  // "whole" or "YYYY-MM"
  TimeRange range;    // unbounded for whole

  bool whole() const { return range.unbounded(); }
  static Window whole_collection();
  // "whole", "YYYY-MM" or "YYYYMM"
  static std::optional<Window> parse(std::string_view spec);
};

// Calendar months (UTC) from the earliest to the latest observation.
std::vector<Window> monthly_windows(const GraphStore& store);

// Directed graph over dense node indices. Nodes are ordered by SURT.
struct WindowedGraph {
  Window window;
  std::vector<UriId> nodes;
  std::vector<std::string> surts;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // sorted, unique

  std::size_t node_count() const { return nodes.size(); }
  std::size_t edge_count() const { return edges.size(); }
  bool empty() const { return nodes.empty(); }
  std::optional<std::uint32_t> index_of(UriId id) const;
};

// Edge x->y iff some observation of x inside the window has content
// linking to y (any link type).
WindowedGraph build_window_graph(const GraphStore& store, const Window& window);

// Graph over labels used as SURT keys; ids are uri_id(SurtKey(label)).
WindowedGraph make_graph(const std::vector<std::string>& labels,
                         const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

class EmptyGraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PageRankOptions {
  double damping = 0.85;
  double epsilon = 1e-8;  // L1 change between iterations
  int max_iter = 100;
  // Teleport distribution, indexed like the graph's nodes; normalized
  // internally. Empty means uniform.
  std::vector<double> personalization;
  // Called after every iteration with (iteration, score sum, L1 delta).
  std::function<void(int, double, double)> observer;
  std::size_t threads = 0;  // 0: hardware concurrency
};

// Power iteration; dangling mass is spread uniformly over all nodes.
// Scores are indexed like the graph's nodes. Throws EmptyGraphError or
// std::invalid_argument.
struct PageRankResult {
  std::vector<double> scores;
  int iterations = 0;
  double last_delta = 0.0;
  bool converged = false;
};
PageRankResult pagerank_scores(const WindowedGraph& graph, const PageRankOptions& options = {});

struct RankEntry {
  UriId id;
  std::string surt;
  double score = 0.0;
};

// Descending score; ties by SURT ascending.
struct RankTable {
  std::string label;
  std::vector<RankEntry> entries;
  int iterations = 0;
  bool converged = false;

  std::optional<std::size_t> rank_of(UriId id) const;  // 0-based
  std::vector<UriId> top(std::size_t k) const;
  double sum() const;

  // Scores need not be normalized; ids are uri_id(SurtKey(label)).
  static RankTable from_scores(const std::vector<std::pair<std::string, double>>& scored);
};

RankTable pagerank(const WindowedGraph& graph, const PageRankOptions& options = {});

std::size_t top_k_overlap(const RankTable& a, const RankTable& b, std::size_t k);

// Classic tau over the items in both top-k lists, ranked by their
// positions in the full tables. NaN when fewer than two items are shared.
double kendall_tau_topk(const RankTable& a, const RankTable& b, std::size_t k);

struct ComparisonRow {
  std::string first;
  std::string second;
  std::size_t overlap = 0;
  double tau = 0.0;
};

// Consecutive non-empty windows, then every window against `whole`.
std::vector<ComparisonRow> compare_rankings(const std::vector<RankTable>& windows, const RankTable* whole,
                                            std::size_t k);

struct TimelineRow {
  std::string datetime;
  std::string date;  // DD-Mon-YY
  std::string text;
  std::string source_uri;

  bool operator==(const TimelineRow&) const = default;
};

// Inlinks of `uri` by datetime ascending (then source SURT). Throws
// CanonicalizationError.
std::vector<TimelineRow> inlink_anchor_timeline(const GraphStore& store, std::string_view uri);

struct CoverageReport {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;  // distinct (source, target) pairs
  std::size_t observed_count = 0;
  std::size_t uncrawled_count = 0;
  double uncrawled_fraction = 0.0;
};

CoverageReport coverage_report(const GraphStore& store);

struct CostEstimate {
  double filtering_time_sec = 0.0;
  double filtering_survivors = 0.0;
  double extraction_time_hrs = 0.0;
  double storage_size = 0.0;  // unit of collection_size
};

double filtering_time_sec(double n, double m);
double filtering_survivors(double n);
double extraction_time_hrs(double n, double m);
double storage_size(double collection_size);

// Extraction time uses the survivor count when chained, n otherwise.
// Throws std::invalid_argument unless n >= 1, m >= 1, size >= 0.
CostEstimate cost_model(double n, double m, double collection_size, bool chained = true);

}  // namespace archgraph
