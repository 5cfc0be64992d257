#include <csignal>
#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "archgraph/analytics.hpp"
#include "archgraph/cdx_filter.hpp"
#include "archgraph/extraction.hpp"
#include "archgraph/graph_store.hpp"
#include "archgraph/link_service.hpp"
#include "archgraph/pipeline.hpp"
#include "archgraph/warc.hpp"

namespace fs = std::filesystem;
using namespace archgraph;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kFailure = 2;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", p.string()));
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot read {}", p.string()));
  return in;
}

GraphStore open_store(const fs::path& p) {
  if (!fs::is_directory(p)) throw ValidationError(fmt::format("store {} does not exist", p.string()));
  return GraphStore::open(p);
}

std::pair<std::string, int> split_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ValidationError("--bind must be host:port");
  return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
}

LinkServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int serve(const GraphStore& store, const std::string& host, int port) {
  LinkServer server(&store);
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cerr << fmt::format("serving /linkQuery on http://{}:{}\n", host, port);
  const bool ok = server.listen(host, port);
  g_server = nullptr;
  return ok ? kOk : kFailure;
}

std::string format_tau(double tau) { return std::isnan(tau) ? "nan" : fmt::format("{:.3f}", tau); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal web graph toolkit for web-archive collections"};
  app.require_subcommand(1);

  // filter
  auto* filter = app.add_subcommand("filter", "Filter CDX files into an extraction list and observation log");
  std::vector<fs::path> cdx_paths;
  fs::path rules_file;
  fs::path out_dir = ".";
  std::size_t workers = 1;
  bool accept_2xx = false;
  filter->add_option("--cdx", cdx_paths, "CDX files (plain or gzip)")->required();
  filter->add_option("--rules", rules_file, "Rule chain file (default chain otherwise)");
  filter->add_option("--out-dir", out_dir, "Output directory");
  filter->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  filter->add_flag("--accept-2xx", accept_2xx, "Treat any 2xx status as successful in the default chain");

  // extract
  auto* extract = app.add_subcommand("extract", "Extract links for an extraction list");
  fs::path list_file;
  std::string source_kind = "warc";
  fs::path corpus_root;
  std::string replay_base;
  int politeness_ms = 0;
  fs::path links_out = "links.tsv";
  extract->add_option("--list", list_file, "Extraction list (tab-separated)")->required();
  extract->add_option("--source", source_kind, "warc or replay")->check(CLI::IsMember({"warc", "replay"}));
  extract->add_option("--corpus-root", corpus_root, "Directory holding the WARC files");
  extract->add_option("--replay-base", replay_base, "Replay endpoint, e.g. http://host/web");
  extract->add_option("--workers", workers, "Worker count (partitions)")->check(CLI::PositiveNumber);
  extract->add_option("--politeness-ms", politeness_ms, "Delay between replay requests per worker");
  extract->add_option("--out", links_out, "Link records output");

  // load
  auto* load = app.add_subcommand("load", "Load link records and observations into a store, then build inlinks");
  fs::path store_path = "store";
  fs::path links_in;
  fs::path observations_in;
  bool skip_materialize = false;
  load->add_option("--store", store_path, "Store directory");
  load->add_option("--links", links_in, "Link records file")->required();
  load->add_option("--observations", observations_in, "Observation log")->required();
  load->add_flag("--no-materialize", skip_materialize, "Do not rebuild the inlink family");

  // export
  auto* exp = app.add_subcommand("export", "Write the property-schema quads of a store");
  fs::path export_out;
  exp->add_option("--store", store_path, "Store directory");
  exp->add_option("--out", export_out, "Output file (stdout if omitted)");

  // serve
  auto* srv = app.add_subcommand("serve", "Serve /linkQuery over HTTP");
  std::string bind = "127.0.0.1:8080";
  srv->add_option("--store", store_path, "Store directory");
  srv->add_option("--bind", bind, "host:port");

  // rank
  auto* rank = app.add_subcommand("rank", "PageRank over a monthly window or the whole collection");
  std::string window_spec = "whole";
  std::size_t top = 0;
  double damping = 0.85;
  rank->add_option("--store", store_path, "Store directory");
  rank->add_option("--window", window_spec, "YYYY-MM or whole");
  rank->add_option("--top", top, "Print only the first N rows");
  rank->add_option("--damping", damping, "Damping factor");

  // compare
  auto* compare = app.add_subcommand("compare", "Top-k overlap and Kendall tau between monthly rankings");
  std::size_t k = 50;
  compare->add_option("--store", store_path, "Store directory");
  compare->add_option("--k", k, "List depth")->check(CLI::PositiveNumber);

  // timeline
  auto* timeline = app.add_subcommand("timeline", "Inlink anchor text of a URI over time");
  std::string uri;
  timeline->add_option("--store", store_path, "Store directory");
  timeline->add_option("--uri", uri, "URI")->required();

  // coverage
  auto* coverage = app.add_subcommand("coverage", "Node, edge and uncrawled-target counts");
  coverage->add_option("--store", store_path, "Store directory");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Cost model estimates");
  double n = 0;
  double m = 1;
  double size = 0;
  bool standalone = false;
  estimate->add_option("--n", n, "Number of mementos")->required();
  estimate->add_option("--m", m, "Number of machines")->required();
  estimate->add_option("--size", size, "Collection size (any unit)");
  estimate->add_flag("--standalone", standalone, "Extraction time over n instead of the filter survivors");

  // index
  auto* index = app.add_subcommand("index", "Write a CDX index for WARC files");
  std::vector<fs::path> warcs;
  fs::path cdx_out;
  index->add_option("warcs", warcs, "WARC files")->required();
  index->add_option("--out", cdx_out, "Output CDX (stdout if omitted)");

  // run-all
  auto* run_all = app.add_subcommand("run-all", "Run every stage from a config file");
  fs::path config_file;
  bool serve_after = false;
  run_all->add_option("--config", config_file, "Config file")->required();
  run_all->add_flag("--serve", serve_after, "Serve the store after the run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (filter->parsed()) {
      fs::create_directories(out_dir);
      const CdxParseResult parsed = read_cdx_files(cdx_paths);
      const RuleChain chain = rules_file.empty() ? default_rule_chain(accept_2xx) : read_rule_chain(rules_file);
      const FilterResult result = apply_filters(parsed.records, chain, FilterOptions{workers, true});
      auto list = open_out(out_dir / "extraction_list.tsv");
      write_extraction_list(list, result.extraction_list);
      auto obs = open_out(out_dir / "observations.tsv");
      write_observation_log(obs, result.observation_log);
      std::cout << result.report.table() << '\n' << result.report.key_values();
      std::cout << fmt::format("skipped_lines={}\n", parsed.skipped.size());
      return kOk;
    }
    if (extract->parsed()) {
      ExtractionSource source = source_kind == "warc" ? ExtractionSource::warc_corpus(corpus_root)
                                                      : ExtractionSource::replay(replay_base, politeness_ms);
      try {
        source.validate();
      } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
      }
      auto in = open_in(list_file);
      const auto list = read_extraction_list(in);
      ExtractionReport report;
      const auto links = extract_all(source, list, workers, &report);
      auto out = open_out(links_out);
      write_link_records(out, links);
      std::cout << report.table() << '\n' << report.key_values();
      return kOk;
    }
    if (load->parsed()) {
      auto links_stream = open_in(links_in);
      const auto links = read_link_records(links_stream);
      auto obs_stream = open_in(observations_in);
      const auto observations = read_observation_log(obs_stream);
      GraphStore store = GraphStore::open(store_path);
      const StoreLoadReport r = load_store(store, links, observations);
      std::cout << fmt::format("link_records={}\nchecksums={}\ncontent_changes={}\nobservations_inserted={}\n",
                               r.link_records, r.checksums, r.content_changes, r.observations.inserted);
      if (!skip_materialize) {
        const MaterializeResult mr = store.materialize_inlinks(true);
        std::cout << fmt::format("inlinks_written={}\ninlinks_total={}\ndangling={}\n", mr.written, mr.total,
                                 mr.dangling_checksums.size());
      }
      store.flush();
      return kOk;
    }
    if (exp->parsed()) {
      GraphStore store = open_store(store_path);
      if (export_out.empty()) {
        store.write_quads(std::cout);
      } else {
        auto out = open_out(export_out);
        store.write_quads(out);
      }
      return kOk;
    }
    if (srv->parsed()) {
      const auto [host, port] = split_bind(bind);
      GraphStore store = open_store(store_path);
      return serve(store, host, port);
    }
    if (rank->parsed()) {
      const auto window = Window::parse(window_spec);
      if (!window) throw ValidationError("--window must be YYYY-MM or whole");
      GraphStore store = open_store(store_path);
      const WindowedGraph g = build_window_graph(store, *window);
      if (g.empty()) {
        std::cerr << fmt::format("window {} has no observed edges; no rank\n", window->label);
        return kOk;
      }
      PageRankOptions opts;
      opts.damping = damping;
      const RankTable table = pagerank(g, opts);
      for (std::size_t i = 0; i < table.entries.size() && (top == 0 || i < top); ++i) {
        std::cout << fmt::format("{}\t{}\t{:.12g}\n", i + 1, table.entries[i].surt, table.entries[i].score);
      }
      return kOk;
    }
    if (compare->parsed()) {
      GraphStore store = open_store(store_path);
      std::vector<RankTable> tables;
      for (const Window& w : monthly_windows(store)) {
        const WindowedGraph g = build_window_graph(store, w);
        RankTable t;
        if (!g.empty()) t = pagerank(g);
        t.label = w.label;
        tables.push_back(std::move(t));
      }
      const WindowedGraph whole_graph = build_window_graph(store, Window::whole_collection());
      RankTable whole;
      if (!whole_graph.empty()) whole = pagerank(whole_graph);
      std::cout << "first\tsecond\toverlap\ttau\n";
      for (const auto& row : compare_rankings(tables, whole.entries.empty() ? nullptr : &whole, k)) {
        std::cout << fmt::format("{}\t{}\t{}\t{}\n", row.first, row.second, row.overlap, format_tau(row.tau));
      }
      return kOk;
    }
    if (timeline->parsed()) {
      GraphStore store = open_store(store_path);
      for (const auto& row : inlink_anchor_timeline(store, uri)) {
        std::cout << fmt::format("{}\t{}\t{}\n", row.date, row.text, row.source_uri);
      }
      return kOk;
    }
    if (coverage->parsed()) {
      GraphStore store = open_store(store_path);
      const CoverageReport r = coverage_report(store);
      std::cout << fmt::format("nodes={}\nedges={}\nobserved={}\nuncrawled={}\nuncrawled_fraction={:.6f}\n",
                               r.node_count, r.edge_count, r.observed_count, r.uncrawled_count, r.uncrawled_fraction);
      return kOk;
    }
    if (estimate->parsed()) {
      CostEstimate e;
      try {
        e = cost_model(n, m, size, !standalone);
      } catch (const std::invalid_argument& err) {
        throw ValidationError(err.what());
      }
      std::cout << fmt::format("filtering_time_sec={:.6g}\nfiltering_time_hrs={:.6g}\nfiltering_survivors={:.6g}\n"
                               "extraction_time_hrs={:.6g}\nextraction_time_days={:.6g}\nstorage_size={:.6g}\n",
                               e.filtering_time_sec, e.filtering_time_sec / 3600.0, e.filtering_survivors,
                               e.extraction_time_hrs, e.extraction_time_hrs / 24.0, e.storage_size);
      return kOk;
    }
    if (index->parsed()) {
      std::ofstream file;
      if (!cdx_out.empty()) file = open_out(cdx_out);
      std::ostream& out = cdx_out.empty() ? std::cout : file;
      out << " CDX N b a m s k r M S V g\n";
      for (const auto& w : warcs) {
        for (const auto& r : index_warc(w)) out << format_cdx_line(r) << '\n';
      }
      return kOk;
    }
    if (run_all->parsed()) {
      PipelineConfig config;
      try {
        config = PipelineConfig::load(config_file);
      } catch (const ConfigError& e) {
        throw ValidationError(e.what());
      }
      const PipelineResult result = run_pipeline(config, &std::cerr);
      if (result.exit_code != kOk || !serve_after) return result.exit_code;
      GraphStore store = GraphStore::open(config.store_path);
      return serve(store, config.bind_host, config.bind_port);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
