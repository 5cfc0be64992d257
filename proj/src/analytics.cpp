#include "archgraph/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

namespace archgraph {
namespace {

struct PairHash {
  std::size_t operator()(const std::pair<UriId, UriId>& p) const noexcept {
    return UriIdHash{}(p.first) * 31 + UriIdHash{}(p.second);
  }
};

// checksum -> distinct target ids, for the given checksums.
std::unordered_map<std::string, std::vector<UriId>> targets_of(const GraphStore& store,
                                                               const std::set<std::string>& checksums) {
  std::unordered_map<std::string, std::vector<UriId>> out;
  for (const auto& c : checksums) {
    const auto vertex = store.content(c);
    if (!vertex) continue;
    std::vector<UriId> ids;
    for (const auto& t : vertex->outlinks) ids.push_back(t.target_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    out.emplace(c, std::move(ids));
  }
  return out;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n < 20000) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    pool.emplace_back([&fn, begin, end = std::min(n, begin + chunk)] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

Window Window::whole_collection() { return Window{"whole", TimeRange::whole()}; }

std::optional<Window> Window::parse(std::string_view spec) {
  if (spec == "whole") return whole_collection();
  const auto range = TimeRange::month(spec);
  if (!range) return std::nullopt;
  return Window{range->from.substr(0, 4) + "-" + range->from.substr(4, 2), *range};
}

std::vector<Window> monthly_windows(const GraphStore& store) {
  std::string first;
  std::string last;
  store.for_each_observation([&](const ObservationEntry& e) {
    if (first.empty() || e.datetime < first) first = e.datetime;
    if (last.empty() || e.datetime > last) last = e.datetime;
  });
  std::vector<Window> out;
  if (first.empty()) return out;
  int year = std::stoi(first.substr(0, 4));
  int month = std::stoi(first.substr(4, 2));
  const int end_year = std::stoi(last.substr(0, 4));
  const int end_month = std::stoi(last.substr(4, 2));
  while (year < end_year || (year == end_year && month <= end_month)) {
    out.push_back(*Window::parse(fmt::format("{:04}-{:02}", year, month)));
    if (++month > 12) {
      month = 1;
      ++year;
    }
  }
  return out;
}

std::optional<std::uint32_t> WindowedGraph::index_of(UriId id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == id) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

WindowedGraph build_window_graph(const GraphStore& store, const Window& window) {
  std::vector<ObservationEntry> observations;
  store.for_each_observation([&](const ObservationEntry& e) {
    if (window.range.contains(e.datetime)) observations.push_back(e);
  });
  std::set<std::string> checksums;
  for (const auto& o : observations) checksums.insert(o.checksum);
  const auto targets = targets_of(store, checksums);

  std::set<std::pair<UriId, UriId>> id_edges;
  for (const auto& o : observations) {
    const auto it = targets.find(o.checksum);
    if (it == targets.end()) continue;
    for (const UriId& t : it->second) id_edges.emplace(o.source_id, t);
  }
  std::set<UriId> ids;
  for (const auto& [s, t] : id_edges) {
    ids.insert(s);
    ids.insert(t);
  }
  std::vector<std::pair<std::string, UriId>> labelled;
  for (const UriId& id : ids) {
    const auto entry = store.lookup(id);
    labelled.emplace_back(entry ? entry->surt.str() : id.hex(), id);
  }
  std::sort(labelled.begin(), labelled.end());

  WindowedGraph g;
  g.window = window;
  std::unordered_map<UriId, std::uint32_t, UriIdHash> index;
  for (const auto& [surt, id] : labelled) {
    index.emplace(id, static_cast<std::uint32_t>(g.nodes.size()));
    g.nodes.push_back(id);
    g.surts.push_back(surt);
  }
  for (const auto& [s, t] : id_edges) g.edges.emplace_back(index.at(s), index.at(t));
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

WindowedGraph make_graph(const std::vector<std::string>& labels,
                         const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  WindowedGraph g;
  g.window = Window::whole_collection();
  for (const auto& l : labels) {
    g.nodes.push_back(uri_id(SurtKey(l)));
    g.surts.push_back(l);
  }
  for (const auto& e : edges) {
    if (e.first >= labels.size() || e.second >= labels.size()) throw std::out_of_range("edge endpoint out of range");
    g.edges.push_back(e);
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

PageRankResult pagerank_scores(const WindowedGraph& graph, const PageRankOptions& options) {
  const std::size_t n = graph.node_count();
  if (n == 0) throw EmptyGraphError(fmt::format("window '{}' has no edges to rank", graph.window.label));
  if (!(options.damping > 0.0 && options.damping < 1.0)) throw std::invalid_argument("damping must lie in (0, 1)");
  if (!(options.epsilon > 0.0) || options.max_iter < 1) throw std::invalid_argument("epsilon and max_iter must be positive");

  std::vector<double> teleport(n, 1.0 / static_cast<double>(n));
  if (!options.personalization.empty()) {
    if (options.personalization.size() != n) throw std::invalid_argument("personalization size differs from node count");
    double total = 0.0;
    for (double v : options.personalization) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("personalization must be non-negative");
      total += v;
    }
    if (!(total > 0.0)) throw std::invalid_argument("personalization mass is zero");
    for (std::size_t i = 0; i < n; ++i) teleport[i] = options.personalization[i] / total;
  }

  // Incoming adjacency in CSR form.
  std::vector<std::uint32_t> out_degree(n, 0);
  std::vector<std::size_t> in_start(n + 1, 0);
  for (const auto& [s, t] : graph.edges) {
    ++out_degree[s];
    ++in_start[t + 1];
  }
  std::partial_sum(in_start.begin(), in_start.end(), in_start.begin());
  std::vector<std::uint32_t> in_source(graph.edges.size());
  {
    std::vector<std::size_t> fill(in_start.begin(), in_start.end() - 1);
    for (const auto& [s, t] : graph.edges) in_source[fill[t]++] = s;
  }
  std::vector<std::uint32_t> dangling;
  for (std::size_t i = 0; i < n; ++i) {
    if (out_degree[i] == 0) dangling.push_back(static_cast<std::uint32_t>(i));
  }

  const std::size_t threads =
      options.threads != 0 ? options.threads : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const double d = options.damping;
  PageRankResult result;
  std::vector<double> p(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  std::vector<double> share(n);
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    double dangling_mass = 0.0;
    for (std::uint32_t j : dangling) dangling_mass += p[j];
    for (std::size_t j = 0; j < n; ++j) share[j] = out_degree[j] == 0 ? 0.0 : p[j] / out_degree[j];
    const double spread = d * dangling_mass / static_cast<double>(n);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        double in = 0.0;
        for (std::size_t k = in_start[i]; k < in_start[i + 1]; ++k) in += share[in_source[k]];
        next[i] = d * in + spread + (1.0 - d) * teleport[i];
      }
    });
    double delta = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      delta += std::abs(next[i] - p[i]);
      sum += next[i];
    }
    p.swap(next);
    result.iterations = iter;
    result.last_delta = delta;
    if (options.observer) options.observer(iter, sum, delta);
    if (delta < options.epsilon) {
      result.converged = true;
      break;
    }
  }
  result.scores = std::move(p);
  return result;
}

std::optional<std::size_t> RankTable::rank_of(UriId id) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<UriId> RankTable::top(std::size_t k) const {
  std::vector<UriId> out;
  for (std::size_t i = 0; i < entries.size() && i < k; ++i) out.push_back(entries[i].id);
  return out;
}

double RankTable::sum() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.score;
  return s;
}

namespace {
void sort_entries(std::vector<RankEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.surt < b.surt;
  });
}
}  // namespace

RankTable RankTable::from_scores(const std::vector<std::pair<std::string, double>>& scored) {
  RankTable t;
  for (const auto& [label, score] : scored) t.entries.push_back(RankEntry{uri_id(SurtKey(label)), label, score});
  sort_entries(t.entries);
  return t;
}

RankTable pagerank(const WindowedGraph& graph, const PageRankOptions& options) {
  const PageRankResult r = pagerank_scores(graph, options);
  RankTable t;
  t.label = graph.window.label;
  t.iterations = r.iterations;
  t.converged = r.converged;
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    t.entries.push_back(RankEntry{graph.nodes[i], graph.surts[i], r.scores[i]});
  }
  sort_entries(t.entries);
  return t;
}

std::size_t top_k_overlap(const RankTable& a, const RankTable& b, std::size_t k) {
  const auto ta = a.top(k);
  const auto tb = b.top(k);
  const std::unordered_set<UriId, UriIdHash> sa(ta.begin(), ta.end());
  return static_cast<std::size_t>(std::count_if(tb.begin(), tb.end(), [&](const UriId& id) { return sa.count(id) > 0; }));
}

double kendall_tau_topk(const RankTable& a, const RankTable& b, std::size_t k) {
  const auto ta = a.top(k);
  const auto tb = b.top(k);
  const std::unordered_set<UriId, UriIdHash> sb(tb.begin(), tb.end());
  std::vector<std::pair<std::size_t, std::size_t>> ranks;  // (rank in a, rank in b)
  for (const UriId& id : ta) {
    if (sb.count(id) == 0) continue;
    ranks.emplace_back(*a.rank_of(id), *b.rank_of(id));
  }
  const std::size_t m = ranks.size();
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  long long concordant = 0;
  long long discordant = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const bool order_a = ranks[i].first < ranks[j].first;
      const bool order_b = ranks[i].second < ranks[j].second;
      if (order_a == order_b) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  return static_cast<double>(concordant - discordant) / static_cast<double>(m * (m - 1) / 2);
}

std::vector<ComparisonRow> compare_rankings(const std::vector<RankTable>& windows, const RankTable* whole,
                                            std::size_t k) {
  std::vector<ComparisonRow> rows;
  const RankTable* previous = nullptr;
  for (const auto& w : windows) {
    if (w.entries.empty()) continue;
    if (previous != nullptr) {
      rows.push_back({previous->label, w.label, top_k_overlap(*previous, w, k), kendall_tau_topk(*previous, w, k)});
    }
    previous = &w;
  }
  if (whole != nullptr) {
    for (const auto& w : windows) {
      if (w.entries.empty()) continue;
      rows.push_back({w.label, whole->label, top_k_overlap(w, *whole, k), kendall_tau_topk(w, *whole, k)});
    }
  }
  return rows;
}

std::vector<TimelineRow> inlink_anchor_timeline(const GraphStore& store, std::string_view uri) {
  const UriId id = uri_id(canonicalize(uri));
  std::vector<InlinkEntry> inlinks = store.get_inlinks(id);
  std::stable_sort(inlinks.begin(), inlinks.end(),
                   [](const InlinkEntry& a, const InlinkEntry& b) { return a.datetime < b.datetime; });
  std::vector<TimelineRow> rows;
  rows.reserve(inlinks.size());
  for (const auto& e : inlinks) rows.push_back({e.datetime, format_short_date(e.datetime), e.text, e.source_uri});
  return rows;
}

CoverageReport coverage_report(const GraphStore& store) {
  std::vector<ObservationEntry> observations;
  store.for_each_observation([&](const ObservationEntry& e) { observations.push_back(e); });
  std::set<std::string> checksums;
  std::unordered_set<UriId, UriIdHash> observed;
  for (const auto& o : observations) {
    checksums.insert(o.checksum);
    observed.insert(o.source_id);
  }
  const auto targets = targets_of(store, checksums);
  std::unordered_set<std::pair<UriId, UriId>, PairHash> edges;
  std::unordered_set<UriId, UriIdHash> nodes(observed.begin(), observed.end());
  for (const auto& o : observations) {
    const auto it = targets.find(o.checksum);
    if (it == targets.end()) continue;
    for (const UriId& t : it->second) {
      edges.emplace(o.source_id, t);
      nodes.insert(t);
    }
  }
  CoverageReport r;
  r.node_count = nodes.size();
  r.edge_count = edges.size();
  r.observed_count = observed.size();
  r.uncrawled_count = r.node_count - r.observed_count;
  r.uncrawled_fraction = r.node_count == 0 ? 0.0 : static_cast<double>(r.uncrawled_count) / static_cast<double>(r.node_count);
  return r;
}

double filtering_time_sec(double n, double m) { return n / 1e6 * 88.0 / m; }
double filtering_survivors(double n) { return n * 0.30; }
double extraction_time_hrs(double n, double m) { return n / 1e6 * 5.5 / m; }
double storage_size(double collection_size) { return collection_size * (0.05 + 0.05 + 0.002); }

CostEstimate cost_model(double n, double m, double collection_size, bool chained) {
  if (!(n >= 1.0) || !(m >= 1.0) || !(collection_size >= 0.0)) {
    throw std::invalid_argument("cost model needs n >= 1, m >= 1 and a non-negative collection size");
  }
  CostEstimate e;
  e.filtering_time_sec = filtering_time_sec(n, m);
  e.filtering_survivors = filtering_survivors(n);
  e.extraction_time_hrs = extraction_time_hrs(chained ? e.filtering_survivors : n, m);
  e.storage_size = storage_size(collection_size);
  return e;
}

}  // namespace archgraph
