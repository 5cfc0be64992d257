#include "archgraph/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "archgraph/analytics.hpp"
#include "archgraph/digest.hpp"

namespace archgraph {
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, v));
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
  std::istringstream in(v);
  T out{};
  in >> out;
  if (in.fail() || !in.eof()) throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
  return out;
}

fs::path resolve_path(const fs::path& base, const std::string& v) {
  const fs::path p(v);
  return p.is_absolute() ? p : base / p;
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
}

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  return in;
}

using Clock = std::chrono::steady_clock;

class Runner {
 public:
  Runner(const PipelineConfig& config, std::ostream* log) : config_(config), log_(log) {}

  PipelineResult run() {
    PipelineResult result;
    const auto problems = config_.validate();
    if (!problems.empty()) {
      result.exit_code = 1;
      result.message = fmt::format("invalid configuration: {}", fmt::join(problems, "; "));
      say(result.message);
      return result;
    }
    try {
      fs::create_directories(config_.run_dir);
    } catch (const std::exception& e) {
      result.exit_code = 1;
      result.message = fmt::format("cannot create run directory: {}", e.what());
      return result;
    }

    for (const char* stage : kStages) {
      const auto t0 = Clock::now();
      StageOutcome outcome{stage, false, 0.0, {}};
      try {
        fs::create_directories(dir(stage));
        const std::string inputs = stage_inputs(stage);
        if (up_to_date(stage, inputs)) {
          outcome.skipped = true;
          outcome.summary = "up to date";
        } else {
          fs::remove(dir(stage) / "manifest");
          outcome.summary = run_stage(stage);
          finish(stage, inputs);
        }
      } catch (const std::exception& e) {
        outcome.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        result.stages.push_back(outcome);
        result.exit_code = 2;
        result.failed_stage = stage;
        result.message = fmt::format("stage '{}' failed: {}", stage, e.what());
        say(result.message);
        return result;
      }
      outcome.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      say(fmt::format("[{}] {} ({:.3f} s)", stage, outcome.skipped ? "skipped, up to date" : outcome.summary,
                      outcome.seconds));
      result.stages.push_back(std::move(outcome));
    }
    if (store_) store_->flush();
    return result;
  }

 private:
  fs::path dir(std::string_view stage) const { return config_.run_dir / std::string(stage); }
  fs::path stamp_path(std::string_view stage) const {
    return config_.store_path / "stamps" / std::string(stage);
  }

  void say(const std::string& line) {
    if (log_ != nullptr) *log_ << line << '\n';
  }

  bool touches_store(std::string_view stage) const { return stage == "load" || stage == "materialize"; }

  bool up_to_date(std::string_view stage, const std::string& inputs) const {
    const auto manifest = read_file(dir(stage) / "manifest");
    if (!manifest || *manifest != "inputs=" + inputs + "\n") return false;
    if (touches_store(stage)) {
      const auto stamp = read_file(stamp_path(stage));
      if (!stamp || *stamp != inputs) return false;
    }
    return true;
  }

  void finish(std::string_view stage, const std::string& inputs) {
    if (touches_store(stage)) {
      store().flush();
      fs::create_directories(stamp_path(stage).parent_path());
      write_file(stamp_path(stage), inputs);
    }
    write_file(dir(stage) / "manifest", "inputs=" + inputs + "\n");
  }

  std::string stage_inputs(std::string_view stage) const {
    if (stage == "filter") {
      std::vector<fs::path> files = config_.cdx_files();
      if (config_.rules_file) files.push_back(*config_.rules_file);
      return hash_inputs(files, fmt::format("accept_2xx={}\nrules={}", config_.accept_any_2xx, config_.rules_file.has_value()));
    }
    if (stage == "extract") {
      std::vector<fs::path> files{dir("filter") / "extraction_list.tsv"};
      std::string settings;
      if (config_.corpus_root) {
        settings = "source=warc";
        std::set<std::string> warcs;
        if (auto in = std::ifstream(files[0])) {
          for (const auto& r : read_extraction_list(in)) warcs.insert(r.warc_file);
        }
        for (const auto& w : warcs) {
          const fs::path p = *config_.corpus_root / w;
          if (fs::exists(p)) {
            files.push_back(p);
          } else {
            settings += "\nmissing=" + w;
          }
        }
      } else {
        settings = "source=replay\nbase=" + config_.replay_base.value_or("");
      }
      return hash_inputs(files, settings);
    }
    if (stage == "load") {
      const std::vector<fs::path> files{dir("extract") / "links.tsv", dir("extract") / "contents.txt",
                                        dir("filter") / "observations.tsv"};
      return hash_inputs(files, "store=" + fs::absolute(config_.store_path).lexically_normal().string());
    }
    if (stage == "materialize") {
      const std::vector<fs::path> files{dir("load") / "manifest"};
      return hash_inputs(files, "");
    }
    const std::vector<fs::path> files{dir("materialize") / "manifest"};
    return hash_inputs(files, fmt::format("damping={}\nepsilon={}\nmax_iter={}\ntop_k={}", config_.damping,
                                          config_.epsilon, config_.max_iter, config_.top_k));
  }

  GraphStore& store() {
    if (!store_) store_ = std::make_unique<GraphStore>(GraphStore::open(config_.store_path));
    return *store_;
  }

  std::string run_stage(std::string_view stage) {
    if (stage == "filter") return run_filter();
    if (stage == "extract") return run_extract();
    if (stage == "load") return run_load();
    if (stage == "materialize") return run_materialize();
    return run_analyze();
  }

  std::string run_filter() {
    const auto files = config_.cdx_files();
    const CdxParseResult parsed = read_cdx_files(files);
    const RuleChain chain =
        config_.rules_file ? read_rule_chain(*config_.rules_file) : default_rule_chain(config_.accept_any_2xx);
    const FilterResult result = apply_filters(parsed.records, chain, FilterOptions{config_.workers, true});
    {
      std::ofstream out(dir("filter") / "extraction_list.tsv", std::ios::binary | std::ios::trunc);
      write_extraction_list(out, result.extraction_list);
    }
    {
      std::ofstream out(dir("filter") / "observations.tsv", std::ios::binary | std::ios::trunc);
      write_observation_log(out, result.observation_log);
    }
    std::string report = result.report.table() + "\n" + result.report.key_values();
    report += fmt::format("skipped_lines={}\n", parsed.skipped.size());
    for (const auto& s : parsed.skipped) report += fmt::format("skipped.line.{}={}\n", s.line_number, s.reason);
    write_file(dir("filter") / "report.txt", report);
    return fmt::format("{} of {} records survive, {} observations", result.report.output_count,
                       result.report.input_count, result.observation_log.size());
  }

  std::string run_extract() {
    auto in = open_input(dir("filter") / "extraction_list.tsv");
    const std::vector<CdxRecord> list = read_extraction_list(in);
    ExtractionReport report;
    const std::vector<LinkRecord> links = extract_all(config_.source(), list, config_.workers, &report);
    {
      std::ofstream out(dir("extract") / "links.tsv", std::ios::binary | std::ios::trunc);
      write_link_records(out, links);
    }
    std::set<std::size_t> failed;
    for (const auto& p : report.partitions) {
      for (const auto& f : p.failures) failed.insert(f.record_index);
    }
    std::set<std::string> contents;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (failed.count(i) == 0 && is_base32_digest(list[i].digest)) contents.insert(list[i].digest);
    }
    for (const auto& l : links) contents.insert(l.doc_checksum);
    std::string contents_text;
    for (const auto& c : contents) contents_text += c + "\n";
    write_file(dir("extract") / "contents.txt", contents_text);

    std::string text = report.table() + "\n" + report.key_values();
    for (const auto& p : report.partitions) {
      for (const auto& f : p.failures) {
        text += fmt::format("failure\t{}\t{}\t{}\n", list[f.record_index].warc_file, list[f.record_index].offset, f.reason);
      }
    }
    write_file(dir("extract") / "report.txt", text);
    return fmt::format("{} links from {} pages, {} failures", links.size(), report.pages, report.failures);
  }

  std::string run_load() {
    auto links_in = open_input(dir("extract") / "links.tsv");
    const std::vector<LinkRecord> links = read_link_records(links_in);
    auto obs_in = open_input(dir("filter") / "observations.tsv");
    const std::vector<Observation> observations = read_observation_log(obs_in);
    std::vector<std::string> contents;
    {
      auto in = open_input(dir("extract") / "contents.txt");
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty()) contents.push_back(line);
      }
    }
    GraphStore& s = store();
    for (const auto& c : contents) s.upsert_content(c, {});
    const StoreLoadReport r = load_store(s, links, observations);
    std::string text = fmt::format(
        "link_records={}\nchecksums={}\ncontent_changes={}\nobservations={}\nobservations_inserted={}\n"
        "observations_unchanged={}\nobservations_rejected={}\ncontent_vertices={}\n",
        r.link_records, r.checksums, r.content_changes, r.observations.records, r.observations.inserted,
        r.observations.unchanged, r.observations.rejected, s.content_count());
    for (const auto& e : r.observations.errors) text += "error\t" + e + "\n";
    const auto collisions = s.ids().collisions();
    text += fmt::format("id_collisions={}\n", collisions.size());
    for (const auto& c : collisions) {
      text += fmt::format("collision\t{}\t{}\t{}\n", c.id.hex(), c.existing.str(), c.incoming.str());
    }
    write_file(dir("load") / "report.txt", text);
    return fmt::format("{} link records, {} observations ({} new), {} id collisions", r.link_records,
                       r.observations.records, r.observations.inserted, collisions.size());
  }

  std::string run_materialize() {
    GraphStore& s = store();
    const MaterializeResult r = s.materialize_inlinks(true);
    {
      std::ofstream out(dir("materialize") / "quads.tsv", std::ios::binary | std::ios::trunc);
      s.write_quads(out);
    }
    std::string text = fmt::format("written={}\nremoved={}\ntotal={}\ndangling={}\n", r.written, r.removed, r.total,
                                   r.dangling_checksums.size());
    for (const auto& d : r.dangling_checksums) text += "dangling\t" + d + "\n";
    write_file(dir("materialize") / "report.txt", text);
    return fmt::format("{} inlink entries ({} written, {} removed), {} dangling checksums", r.total, r.written,
                       r.removed, r.dangling_checksums.size());
  }

  std::string run_analyze() {
    GraphStore& s = store();
    const CoverageReport cov = coverage_report(s);
    write_file(dir("analyze") / "coverage.txt",
               fmt::format("nodes={}\nedges={}\nobserved={}\nuncrawled={}\nuncrawled_fraction={:.6f}\n", cov.node_count,
                           cov.edge_count, cov.observed_count, cov.uncrawled_count, cov.uncrawled_fraction));
    PageRankOptions opts;
    opts.damping = config_.damping;
    opts.epsilon = config_.epsilon;
    opts.max_iter = config_.max_iter;

    auto rank_window = [&](const Window& w) {
      RankTable table;
      table.label = w.label;
      const WindowedGraph g = build_window_graph(s, w);
      std::string text;
      if (g.empty()) {
        text = "# no edges observed in this window\n";
      } else {
        table = pagerank(g, opts);
        for (std::size_t i = 0; i < table.entries.size(); ++i) {
          text += fmt::format("{}\t{}\t{:.12g}\n", i + 1, table.entries[i].surt, table.entries[i].score);
        }
      }
      write_file(dir("analyze") / fmt::format("rank_{}.tsv", w.label), text);
      return table;
    };
    std::vector<RankTable> monthly;
    for (const Window& w : monthly_windows(s)) monthly.push_back(rank_window(w));
    const RankTable whole = rank_window(Window::whole_collection());
    std::string compare = "first\tsecond\toverlap\ttau\n";
    for (const auto& row : compare_rankings(monthly, whole.entries.empty() ? nullptr : &whole, config_.top_k)) {
      compare += fmt::format("{}\t{}\t{}\t{}\n", row.first, row.second, row.overlap,
                             std::isnan(row.tau) ? std::string("nan") : fmt::format("{:.3f}", row.tau));
    }
    write_file(dir("analyze") / "compare.tsv", compare);
    return fmt::format("{} nodes, {} edges, {:.1f}% uncrawled, {} monthly windows", cov.node_count, cov.edge_count,
                       100.0 * cov.uncrawled_fraction, monthly.size());
  }

  const PipelineConfig& config_;
  std::ostream* log_;
  std::unique_ptr<GraphStore> store_;
};

}  // namespace

PipelineConfig PipelineConfig::parse(std::istream& in, const fs::path& base_dir) {
  PipelineConfig c;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key != "cdx" && !seen.insert(key).second) throw ConfigError(fmt::format("line {}: '{}' set twice", line_no, key));
    if (key == "cdx") {
      c.cdx_paths.push_back(resolve_path(base_dir, value));
    } else if (key == "corpus_root") {
      c.corpus_root = resolve_path(base_dir, value);
    } else if (key == "replay_base") {
      c.replay_base = value;
    } else if (key == "politeness_ms") {
      c.politeness_ms = parse_number<int>(value, key);
    } else if (key == "rules") {
      c.rules_file = resolve_path(base_dir, value);
    } else if (key == "accept_2xx") {
      c.accept_any_2xx = parse_bool(value, key);
    } else if (key == "workers") {
      const long long w = parse_number<long long>(value, key);
      if (w < 1) throw ConfigError("workers must be at least 1");
      c.workers = static_cast<std::size_t>(w);
    } else if (key == "store") {
      c.store_path = resolve_path(base_dir, value);
    } else if (key == "run_dir") {
      c.run_dir = resolve_path(base_dir, value);
    } else if (key == "bind") {
      const auto colon = value.rfind(':');
      if (colon == std::string::npos) throw ConfigError("bind must be host:port");
      c.bind_host = value.substr(0, colon);
      c.bind_port = parse_number<int>(value.substr(colon + 1), key);
    } else if (key == "damping") {
      c.damping = parse_number<double>(value, key);
    } else if (key == "epsilon") {
      c.epsilon = parse_number<double>(value, key);
    } else if (key == "max_iter") {
      c.max_iter = parse_number<int>(value, key);
    } else if (key == "top_k") {
      c.top_k = parse_number<std::size_t>(value, key);
    } else {
      throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key));
    }
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(fmt::format("cannot read config file {}", file.string()));
  return parse(in, file.parent_path());
}

std::vector<std::string> PipelineConfig::validate() const {
  std::vector<std::string> problems;
  if (cdx_paths.empty()) problems.push_back("no cdx input configured");
  for (const auto& p : cdx_paths) {
    if (!fs::exists(p)) problems.push_back(fmt::format("cdx input {} does not exist", p.string()));
  }
  if (corpus_root.has_value() == replay_base.has_value()) {
    problems.push_back("configure exactly one of corpus_root and replay_base");
  } else {
    try {
      source().validate();
    } catch (const std::invalid_argument& e) {
      problems.push_back(e.what());
    }
  }
  if (rules_file && !fs::exists(*rules_file)) problems.push_back(fmt::format("rules file {} does not exist", rules_file->string()));
  if (workers < 1) problems.push_back("workers must be at least 1");
  if (store_path.empty()) problems.push_back("store path is not set");
  if (run_dir.empty()) problems.push_back("run_dir is not set");
  if (!(damping > 0.0 && damping < 1.0)) problems.push_back("damping must lie in (0, 1)");
  if (!(epsilon > 0.0) || max_iter < 1) problems.push_back("epsilon and max_iter must be positive");
  if (top_k < 1) problems.push_back("top_k must be at least 1");
  if (bind_port < 0 || bind_port > 65535) problems.push_back("bind port out of range");
  return problems;
}

ExtractionSource PipelineConfig::source() const {
  ExtractionSource s = corpus_root ? ExtractionSource::warc_corpus(*corpus_root)
                                   : ExtractionSource::replay(replay_base.value_or(""), politeness_ms);
  s.politeness_ms = politeness_ms;
  return s;
}

std::vector<fs::path> PipelineConfig::cdx_files() const {
  std::vector<fs::path> out;
  for (const auto& p : cdx_paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        const std::string name = e.path().filename().string();
        const bool cdx = name.size() > 4 && (name.ends_with(".cdx") || name.ends_with(".cdx.gz"));
        if (e.is_regular_file() && cdx) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

CdxParseResult read_cdx_files(std::span<const fs::path> files) {
  CdxParseResult all;
  for (const auto& f : files) {
    CdxParseResult r = read_cdx_file(f);
    all.records.insert(all.records.end(), std::make_move_iterator(r.records.begin()),
                       std::make_move_iterator(r.records.end()));
    for (auto& s : r.skipped) {
      s.reason = fmt::format("{}: {}", f.filename().string(), s.reason);
      all.skipped.push_back(std::move(s));
    }
  }
  return all;
}

StoreLoadReport load_store(GraphStore& store, std::span<const LinkRecord> links, std::span<const Observation> log) {
  StoreLoadReport report;
  report.link_records = links.size();
  std::map<std::string, std::vector<OutlinkTriple>> by_checksum;
  for (const LinkRecord& r : links) {
    if (!store.lookup(r.outlink_id)) store.ids().put(r.outlink_id, canonicalize(r.outlink_uri), r.outlink_uri);
    by_checksum[r.doc_checksum].push_back(OutlinkTriple{r.outlink_id, r.type, r.text});
  }
  report.checksums = by_checksum.size();
  for (const auto& [checksum, triples] : by_checksum) report.content_changes += store.replace_content(checksum, triples);
  report.observations = store.load_observations(log);
  return report;
}

std::string hash_inputs(std::span<const fs::path> files, std::string_view settings) {
  Sha1Hasher h;
  for (const auto& f : files) {
    h.update(f.filename().string());
    h.update(std::string_view("\0", 1));
    if (fs::exists(f)) {
      h.update(std::to_string(fs::file_size(f)));
      h.update(std::string_view("\0", 1));
      h.update_file(f);
    } else {
      h.update("<missing>");
    }
    h.update(std::string_view("\0", 1));
  }
  h.update(settings);
  return h.hex_digest();
}

PipelineResult run_pipeline(const PipelineConfig& config, std::ostream* log) { return Runner(config, log).run(); }

}  // namespace archgraph
