#include "archgraph/extraction.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <optional>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "archgraph/digest.hpp"
#include "archgraph/url.hpp"
#include "archgraph/warc.hpp"

namespace archgraph {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Endpoint {
  std::string origin;  // scheme://authority
  std::string target;  // path and query
};

std::optional<Endpoint> split_endpoint(std::string_view absolute) {
  const url::Reference ref = url::parse(absolute);
  if (!ref.scheme || !ref.authority || ref.authority->empty()) return std::nullopt;
  std::string scheme = *ref.scheme;
  std::transform(scheme.begin(), scheme.end(), scheme.begin(), [](unsigned char c) { return std::tolower(c); });
  if (scheme != "http") return std::nullopt;
  Endpoint e{scheme + "://" + *ref.authority, ref.path.empty() ? "/" : ref.path};
  if (ref.query) e.target += "?" + *ref.query;
  return e;
}

std::string doc_checksum(const CdxRecord& record, std::string_view body) {
  return is_base32_digest(record.digest) ? record.digest : sha1_base32(body);
}

}  // namespace

ExtractionSource ExtractionSource::warc_corpus(std::filesystem::path root) {
  ExtractionSource s;
  s.kind = Kind::WarcCorpus;
  s.corpus_root = std::move(root);
  return s;
}

ExtractionSource ExtractionSource::replay(std::string base_url, int politeness_ms) {
  ExtractionSource s;
  s.kind = Kind::ReplayEndpoint;
  s.replay_base = std::move(base_url);
  s.politeness_ms = politeness_ms;
  return s;
}

void ExtractionSource::validate() const {
  if (politeness_ms < 0 || timeout_ms <= 0 || max_retries < 0) {
    throw std::invalid_argument("politeness, timeout and retry settings must be non-negative");
  }
  if (kind == Kind::WarcCorpus) {
    if (corpus_root.empty()) throw std::invalid_argument("WARC corpus root is not set");
    if (!std::filesystem::is_directory(corpus_root)) {
      throw std::invalid_argument(fmt::format("WARC corpus root {} is not a directory", corpus_root.string()));
    }
  } else {
    if (!split_endpoint(replay_base)) {
      throw std::invalid_argument(fmt::format("replay base URL '{}' is not an absolute http URL", replay_base));
    }
  }
}

ReplayResponse fetch_memento(const ExtractionSource& source, std::string_view timestamp, std::string_view original_uri) {
  std::string base = source.replay_base;
  while (!base.empty() && base.back() == '/') base.pop_back();
  std::string current = fmt::format("{}/{}/{}", base, timestamp, original_uri);

  constexpr int kMaxRedirects = 5;
  int redirects = 0;
  int attempt = 0;
  while (true) {
    const auto endpoint = split_endpoint(current);
    if (!endpoint) throw ReplayError(0, fmt::format("cannot fetch '{}': only http URLs are supported", current));
    httplib::Client client(endpoint->origin);
    const auto timeout = std::chrono::milliseconds(source.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_follow_location(false);
    const httplib::Headers headers{{"User-Agent", std::string(kReplayUserAgent)}};
    const auto res = client.Get(endpoint->target, headers);

    const bool transient = !res || res->status >= 500;
    if (transient) {
      if (attempt < source.max_retries) {
        ++attempt;
        std::this_thread::sleep_for(std::chrono::milliseconds(std::max(source.politeness_ms, 20) * attempt));
        continue;
      }
      if (!res) throw ReplayError(0, fmt::format("{}: {}", current, httplib::to_string(res.error())));
      throw ReplayError(res->status, fmt::format("{}: HTTP {} after {} retries", current, res->status, attempt));
    }
    if (res->status >= 300 && res->status < 400 && res->has_header("Location")) {
      if (++redirects > kMaxRedirects) throw ReplayError(res->status, fmt::format("{}: too many redirects", current));
      current = url::resolve(current, res->get_header_value("Location"));
      continue;
    }
    if (res->status != 200) throw ReplayError(res->status, fmt::format("{}: HTTP {}", current, res->status));
    return ReplayResponse{res->status, res->get_header_value("Content-Type"), res->body, current};
  }
}

std::string ExtractionReport::table() const {
  std::string out = fmt::format("{:>9} {:>9} {:>9} {:>9} {:>9} {:>10}\n", "partition", "records", "pages", "links",
                                "failures", "seconds");
  for (const auto& p : partitions) {
    out += fmt::format("{:>9} {:>9} {:>9} {:>9} {:>9} {:>10.3f}\n", p.index, p.records, p.pages, p.links,
                       p.failures.size(), p.seconds);
  }
  out += fmt::format("{:>9} {:>9} {:>9} {:>9} {:>9} {:>10.3f}\n", "total", records, pages, links, failures,
                     total_seconds);
  return out;
}

std::string ExtractionReport::key_values() const {
  std::string out = fmt::format("records={}\npages={}\nlinks={}\nfailures={}\nmap_seconds={:.6f}\ntotal_seconds={:.6f}\n",
                                records, pages, links, failures, map_seconds, total_seconds);
  for (const auto& p : partitions) {
    out += fmt::format("partition.{}.records={}\npartition.{}.links={}\npartition.{}.seconds={:.6f}\n", p.index,
                       p.records, p.index, p.links, p.index, p.seconds);
  }
  return out;
}

ExtractionReport run_extraction(const ExtractionSource& source, std::span<const CdxRecord> list,
                                const PartitionPlan& plan, const BatchSink& sink) {
  const auto started = Clock::now();
  ExtractionReport report;
  report.partitions.resize(plan.partitions.size());
  std::mutex sink_mutex;
  const ExtractOptions options{source.kind == ExtractionSource::Kind::ReplayEndpoint ? source.replay_base : ""};

  auto work = [&](std::size_t p) {
    const auto t0 = Clock::now();
    PartitionReport& pr = report.partitions[p];
    pr.index = plan.partitions[p].index;
    ExtractStats stats;
    bool first_request = true;
    for (const RecordRange& range : plan.partitions[p].ranges) {
      LinkBatch batch;
      batch.partition = pr.index;
      if (range.size() == 0) continue;
      batch.warc_file = list[plan.order[range.begin]].warc_file;
      std::optional<WarcReader> reader;
      if (source.kind == ExtractionSource::Kind::WarcCorpus) {
        try {
          reader.emplace(source.corpus_root / batch.warc_file);
        } catch (const WarcError& e) {
          for (std::size_t i = range.begin; i < range.end; ++i) pr.failures.push_back({plan.order[i], e.what()});
          pr.records += range.size();
          continue;
        }
      }
      for (std::size_t i = range.begin; i < range.end; ++i) {
        const std::size_t idx = plan.order[i];
        const CdxRecord& rec = list[idx];
        ++pr.records;
        try {
          std::string content_type;
          std::string body;
          if (reader) {
            MementoPayload payload = reader->read_record(rec.offset);
            content_type = std::move(payload.content_type);
            body = std::move(payload.body);
          } else {
            if (!first_request && source.politeness_ms > 0) {
              std::this_thread::sleep_for(std::chrono::milliseconds(source.politeness_ms));
            }
            first_request = false;
            ReplayResponse res = fetch_memento(source, rec.timestamp, rec.original_uri);
            content_type = std::move(res.content_type);
            body = std::move(res.body);
          }
          auto links = extract_links_if_html(content_type, body, rec.original_uri, doc_checksum(rec, body), options, &stats);
          batch.links.insert(batch.links.end(), std::make_move_iterator(links.begin()),
                             std::make_move_iterator(links.end()));
        } catch (const std::exception& e) {
          pr.failures.push_back({idx, e.what()});
        }
      }
      pr.links += batch.links.size();
      std::lock_guard lock(sink_mutex);
      sink(std::move(batch));
    }
    pr.pages = stats.pages;
    pr.skipped_non_html = stats.skipped_non_html;
    pr.seconds = seconds_since(t0);
  };

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(plan.partitions.size());
  for (std::size_t p = 0; p < plan.partitions.size(); ++p) {
    workers.emplace_back([&, p] {
      try {
        work(p);
      } catch (...) {
        errors[p] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (const auto& p : report.partitions) {
    report.records += p.records;
    report.pages += p.pages;
    report.links += p.links;
    report.failures += p.failures.size();
    report.map_seconds = std::max(report.map_seconds, p.seconds);
  }
  report.total_seconds = seconds_since(started);
  return report;
}

std::vector<LinkRecord> extract_all(const ExtractionSource& source, std::span<const CdxRecord> list, std::size_t k,
                                    ExtractionReport* report) {
  const PartitionPlan plan = plan_partitions(list, k);
  std::vector<LinkRecord> out;
  ExtractionReport r = run_extraction(source, list, plan, [&](LinkBatch&& batch) {
    out.insert(out.end(), std::make_move_iterator(batch.links.begin()), std::make_move_iterator(batch.links.end()));
  });
  std::sort(out.begin(), out.end());
  if (report != nullptr) *report = std::move(r);
  return out;
}

}  // namespace archgraph
