#include "archgraph/cdx_filter.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <zlib.h>

#include "archgraph/digest.hpp"
#include "archgraph/timestamp.hpp"

namespace archgraph {
namespace {

enum class Field { UrlKey, Timestamp, Original, Mimetype, Status, Digest, Redirect, Meta, Length, Offset, File, Ignored };

using Layout = std::vector<Field>;

const Layout kLayout9 = {Field::UrlKey, Field::Timestamp, Field::Original, Field::Mimetype, Field::Status,
                         Field::Digest, Field::Redirect, Field::Offset, Field::File};
const Layout kLayout10 = {Field::UrlKey, Field::Timestamp, Field::Original, Field::Mimetype, Field::Status,
                          Field::Digest, Field::Redirect, Field::Meta, Field::Offset, Field::File};
// IA "N b a m s k r M S V g": length precedes offset.
const Layout kLayout11 = {Field::UrlKey, Field::Timestamp, Field::Original, Field::Mimetype,
                          Field::Status, Field::Digest, Field::Redirect, Field::Meta,
                          Field::Length, Field::Offset, Field::File};
// 10-column layout followed by a trailing length column.
const Layout kLayout11Trailing = {Field::UrlKey, Field::Timestamp, Field::Original, Field::Mimetype,
                                  Field::Status, Field::Digest, Field::Redirect, Field::Meta,
                                  Field::Offset, Field::File, Field::Length};

bool is_number(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<Layout> layout_from_header(std::string_view letters_line) {
  Layout layout;
  bool has_offset = false;
  for (std::string_view tok : split_ws(letters_line)) {
    if (tok.size() != 1) return std::nullopt;
    switch (tok[0]) {
      case 'N': layout.push_back(Field::UrlKey); break;
      case 'b': layout.push_back(Field::Timestamp); break;
      case 'a': layout.push_back(Field::Original); break;
      case 'm': layout.push_back(Field::Mimetype); break;
      case 's': layout.push_back(Field::Status); break;
      case 'k': layout.push_back(Field::Digest); break;
      case 'r': layout.push_back(Field::Redirect); break;
      case 'M': layout.push_back(Field::Meta); break;
      case 'S': layout.push_back(Field::Length); break;
      case 'V':
      case 'v':
        layout.push_back(has_offset ? Field::Ignored : Field::Offset);
        has_offset = true;
        break;
      case 'g': layout.push_back(Field::File); break;
      default: layout.push_back(Field::Ignored); break;
    }
  }
  auto has = [&](Field f) { return std::find(layout.begin(), layout.end(), f) != layout.end(); };
  for (Field f : {Field::UrlKey, Field::Timestamp, Field::Original, Field::Mimetype, Field::Status,
                  Field::Digest, Field::Offset, Field::File}) {
    if (!has(f)) return std::nullopt;
  }
  return layout;
}

const Layout* infer_layout(const std::vector<std::string_view>& fields) {
  switch (fields.size()) {
    case 9: return &kLayout9;
    case 10: return &kLayout10;
    case 11:
      if (is_number(fields[10]) && !is_number(fields[9])) return &kLayout11Trailing;
      return &kLayout11;
    default: return nullptr;
  }
}

// Fills `rec` from `fields`; returns an error reason or empty on success.
std::string assign_fields(const Layout& layout, const std::vector<std::string_view>& fields, CdxRecord& rec) {
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const std::string_view v = fields[i];
    switch (layout[i]) {
      case Field::UrlKey: rec.urlkey = v; break;
      case Field::Timestamp: rec.timestamp = v; break;
      case Field::Original: rec.original_uri = v; break;
      case Field::Mimetype: rec.mimetype = v; break;
      case Field::Status: rec.status = v; break;
      case Field::Digest: {
        std::string_view d = v;
        if (d.size() > 5 && to_lower(d.substr(0, 5)) == "sha1:") d.remove_prefix(5);
        rec.digest = d;
        break;
      }
      case Field::Redirect: rec.redirect = v; break;
      case Field::Meta: rec.meta = v; break;
      case Field::Length:
        if (v != "-") {
          if (!is_number(v)) return "non-numeric length";
          rec.length = std::stoull(std::string(v));
        }
        break;
      case Field::Offset:
        if (!is_number(v)) return "offset is not a non-negative integer";
        rec.offset = std::stoull(std::string(v));
        break;
      case Field::File: rec.warc_file = v; break;
      case Field::Ignored: break;
    }
  }
  if (!is_valid_timestamp(rec.timestamp)) return fmt::format("invalid timestamp '{}'", rec.timestamp);
  if (rec.digest != "-" && !is_base32_digest(rec.digest)) return fmt::format("invalid digest '{}'", rec.digest);
  if (rec.status != "-" && !is_number(rec.status)) return fmt::format("invalid status '{}'", rec.status);
  if (rec.warc_file.empty() || rec.warc_file == "-") return "missing WARC file name";
  return {};
}

std::string normalized_mimetype(std::string_view mime) {
  std::string m = to_lower(mime.substr(0, mime.find(';')));
  while (!m.empty() && std::isspace(static_cast<unsigned char>(m.back()))) m.pop_back();
  return m;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out.append(sep);
    out.append(s);
  }
  return out;
}

// Stateless predicate; DuplicateDigest is handled by the caller.
bool predicate_matches(const RulePredicate& predicate, const CdxRecord& rec) {
  return std::visit(
      [&](const auto& p) -> bool {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, StatusEquals>) {
          if (p.any_2xx && rec.status.size() == 3 && rec.status[0] == '2') return true;
          return std::find(p.codes.begin(), p.codes.end(), rec.status) != p.codes.end();
        } else if constexpr (std::is_same_v<T, MimetypePrefixIn>) {
          const std::string mime = normalized_mimetype(rec.mimetype);
          return std::any_of(p.prefixes.begin(), p.prefixes.end(), [&](const std::string& prefix) {
            std::string_view pre = prefix;
            if (!pre.empty() && pre.back() == '*') pre.remove_suffix(1);
            return std::string_view(mime).substr(0, pre.size()) == pre;
          });
        } else if constexpr (std::is_same_v<T, ExtensionIn>) {
          const std::string ext = path_extension(rec.original_uri);
          if (ext.empty()) return false;
          return std::any_of(p.extensions.begin(), p.extensions.end(),
                             [&](const std::string& e) { return to_lower(e) == ext; });
        } else {
          return false;
        }
      },
      predicate);
}

// Marks, among alive records, those that are duplicates of an earlier
// capture of the same digest. Earliest timestamp wins; ties go to the
// record that appears first in input order.
std::vector<char> duplicate_flags(std::span<const CdxRecord> records, const std::vector<char>& alive) {
  std::unordered_map<std::string_view, std::size_t> keeper;
  keeper.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!alive[i] || records[i].digest == "-") continue;
    auto [it, inserted] = keeper.try_emplace(records[i].digest, i);
    if (!inserted && records[i].timestamp < records[it->second].timestamp) it->second = i;
  }
  std::vector<char> dup(records.size(), 0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!alive[i] || records[i].digest == "-") continue;
    dup[i] = keeper.at(records[i].digest) != i;
  }
  return dup;
}

void apply_rule(const FilterRule& rule, std::span<const CdxRecord> records, std::vector<char>& alive,
                std::size_t workers) {
  if (!rule.stateless()) {
    const std::vector<char> dup = duplicate_flags(records, alive);
    const bool keep_duplicates = rule.mode == RuleMode::Include;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (alive[i] && static_cast<bool>(dup[i]) != keep_duplicates) alive[i] = 0;
    }
    return;
  }
  const bool include = rule.mode == RuleMode::Include;
  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (alive[i] && predicate_matches(rule.predicate, records[i]) != include) alive[i] = 0;
    }
  };
  constexpr std::size_t kMinPerWorker = 4096;
  const std::size_t parts = std::max<std::size_t>(1, std::min(workers, records.size() / kMinPerWorker));
  if (parts == 1) {
    run_range(0, records.size());
    return;
  }
  std::vector<std::jthread> threads;
  const std::size_t chunk = (records.size() + parts - 1) / parts;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t begin = p * chunk;
    const std::size_t end = std::min(records.size(), begin + chunk);
    threads.emplace_back(run_range, begin, end);
  }
}

const StatusEquals* observation_status_rule(const RuleChain& chain) {
  for (const auto& rule : chain) {
    if (rule.mode != RuleMode::Include) continue;
    if (const auto* s = std::get_if<StatusEquals>(&rule.predicate)) return s;
  }
  return nullptr;
}

std::string escape_field(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '\t' || c == '\n' || c == '\r') {
      out.append(fmt::format("%{:02X}", static_cast<unsigned char>(c)));
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

CdxParseResult parse_cdx_stream(std::istream& in) {
  CdxParseResult result;
  std::optional<Layout> header_layout;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view view = line;
    if (view.find_first_not_of(" \t") == std::string_view::npos) continue;

    const auto first = view.find_first_not_of(' ');
    if (view.substr(first, 4) == "CDX " || view.substr(first) == "CDX") {
      header_layout = layout_from_header(view.substr(first + 3));
      if (!header_layout) {
        throw CdxError(fmt::format("line {}: unsupported CDX header '{}'", line_number, line));
      }
      continue;
    }

    const auto fields = split_ws(view);
    const Layout* layout = nullptr;
    if (header_layout) {
      if (fields.size() != header_layout->size()) {
        result.skipped.push_back({line_number, fmt::format("expected {} fields, found {}",
                                                           header_layout->size(), fields.size())});
        continue;
      }
      layout = &*header_layout;
    } else {
      if (fields.size() < 9) {
        result.skipped.push_back({line_number, fmt::format("fewer than 9 fields ({})", fields.size())});
        continue;
      }
      layout = infer_layout(fields);
      if (layout == nullptr) {
        result.skipped.push_back({line_number, fmt::format("unexpected field count {}", fields.size())});
        continue;
      }
    }
    CdxRecord rec;
    if (std::string why = assign_fields(*layout, fields, rec); !why.empty()) {
      result.skipped.push_back({line_number, std::move(why)});
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  if (in.bad()) throw CdxError("read failure while parsing CDX stream");
  return result;
}

CdxParseResult read_cdx_file(const std::filesystem::path& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw CdxError(fmt::format("cannot open CDX file {}", path.string()));
  std::string data;
  std::vector<char> buf(1 << 16);
  while (true) {
    const int n = gzread(file, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      int errnum = 0;
      const std::string msg = gzerror(file, &errnum);
      gzclose(file);
      throw CdxError(fmt::format("read error in {}: {}", path.string(), msg));
    }
    if (n == 0) break;
    data.append(buf.data(), static_cast<std::size_t>(n));
  }
  gzclose(file);
  std::istringstream in(std::move(data));
  return parse_cdx_stream(in);
}

std::string format_cdx_line(const CdxRecord& r) {
  std::string line = fmt::format("{} {} {} {} {} {} {} {}", r.urlkey, r.timestamp, r.original_uri,
                                 r.mimetype, r.status, r.digest, r.redirect, r.meta);
  if (r.length) {
    line += fmt::format(" {} {} {}", *r.length, r.offset, r.warc_file);
  } else {
    line += fmt::format(" - {} {}", r.offset, r.warc_file);
  }
  return line;
}

std::string FilterRule::describe() const {
  const std::string mode_name = mode == RuleMode::Include ? "INCLUDE" : "EXCLUDE";
  const std::string param = std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, StatusEquals>) {
          std::vector<std::string> codes = p.codes;
          if (p.any_2xx) codes.push_back("2xx");
          return "status " + join(codes, ",");
        } else if constexpr (std::is_same_v<T, MimetypePrefixIn>) {
          return "mimetype " + join(p.prefixes, ",");
        } else if constexpr (std::is_same_v<T, ExtensionIn>) {
          return "extension " + join(p.extensions, ",");
        } else {
          return "duplicate-digest";
        }
      },
      predicate);
  return mode_name + " " + param;
}

RuleChain default_rule_chain(bool accept_any_2xx) {
  return {
      {RuleMode::Include, StatusEquals{{"200"}, accept_any_2xx}},
      {RuleMode::Exclude, MimetypePrefixIn{{"image/", "text/css", "application/javascript", "text/javascript",
                                            "application/x-javascript"}}},
      {RuleMode::Include, MimetypePrefixIn{{"text/"}}},
      {RuleMode::Exclude, ExtensionIn{{"jpg", "jpeg", "png", "gif", "bmp", "ico", "tif", "tiff", "css", "js", "swf"}}},
      {RuleMode::Exclude, DuplicateDigest{}},
  };
}

RuleChain parse_rule_chain(std::istream& in) {
  RuleChain chain;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    auto fail = [&](std::string_view why) {
      return CdxError(fmt::format("rule file line {}: {}", line_number, why));
    };
    const std::string mode = to_lower(tokens[0]);
    if (mode != "include" && mode != "exclude") throw fail("rule must start with INCLUDE or EXCLUDE");
    if (tokens.size() < 2) throw fail("missing predicate");
    const RuleMode rule_mode = mode == "include" ? RuleMode::Include : RuleMode::Exclude;
    const std::string kind = to_lower(tokens[1]);
    std::vector<std::string> params(tokens.begin() + 2, tokens.end());
    if (kind == "duplicate-digest") {
      if (!params.empty()) throw fail("duplicate-digest takes no parameters");
      chain.push_back({rule_mode, DuplicateDigest{}});
      continue;
    }
    if (params.empty()) throw fail("predicate parameters must be non-empty");
    if (kind == "status") {
      StatusEquals s;
      for (auto& p : params) {
        if (to_lower(p) == "2xx") {
          s.any_2xx = true;
        } else {
          s.codes.push_back(p);
        }
      }
      chain.push_back({rule_mode, std::move(s)});
    } else if (kind == "mimetype") {
      for (auto& p : params) p = to_lower(p);
      chain.push_back({rule_mode, MimetypePrefixIn{std::move(params)}});
    } else if (kind == "extension") {
      for (auto& p : params) {
        p = to_lower(p);
        if (!p.empty() && p.front() == '.') p.erase(0, 1);
      }
      chain.push_back({rule_mode, ExtensionIn{std::move(params)}});
    } else {
      throw fail(fmt::format("unknown predicate '{}'", kind));
    }
  }
  if (chain.empty()) throw CdxError("rule file defines no rules");
  return chain;
}

RuleChain read_rule_chain(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CdxError(fmt::format("cannot open rule file {}", path.string()));
  return parse_rule_chain(in);
}

std::string path_extension(std::string_view uri) {
  uri = uri.substr(0, uri.find('#'));
  uri = uri.substr(0, uri.find('?'));
  if (const auto scheme = uri.find("://"); scheme != std::string_view::npos) {
    uri.remove_prefix(scheme + 3);
    const auto slash = uri.find('/');
    uri = slash == std::string_view::npos ? std::string_view{} : uri.substr(slash);
  }
  const auto last_slash = uri.rfind('/');
  const std::string_view segment = last_slash == std::string_view::npos ? uri : uri.substr(last_slash + 1);
  const auto dot = segment.rfind('.');
  if (dot == std::string_view::npos) return {};
  return to_lower(segment.substr(dot + 1));
}

FilterResult apply_filters(std::span<const CdxRecord> records, const RuleChain& chain,
                           const FilterOptions& options) {
  if (chain.empty()) throw std::invalid_argument("rule chain must not be empty");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  FilterResult result;
  result.report.input_count = records.size();
  std::vector<char> alive(records.size(), 1);
  for (const auto& rule : chain) {
    const auto t0 = Clock::now();
    apply_rule(rule, records, alive, options.workers);
    RuleStats stats;
    stats.rule = rule.describe();
    stats.surviving = static_cast<std::size_t>(std::count(alive.begin(), alive.end(), 1));
    stats.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    result.report.rules.push_back(std::move(stats));
  }
  if (options.standalone_counts) {
    for (std::size_t r = 0; r < chain.size(); ++r) {
      std::vector<char> solo(records.size(), 1);
      apply_rule(chain[r], records, solo, options.workers);
      result.report.rules[r].standalone_surviving = static_cast<std::size_t>(std::count(solo.begin(), solo.end(), 1));
    }
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    if (alive[i]) result.extraction_list.push_back(records[i]);
  }
  result.report.output_count = result.extraction_list.size();

  const StatusEquals default_status{{"200"}, false};
  const StatusEquals* status_rule = observation_status_rule(chain);
  const RulePredicate success = status_rule ? RulePredicate(*status_rule) : RulePredicate(default_status);
  for (const auto& rec : records) {
    if (predicate_matches(success, rec)) {
      result.observation_log.push_back({rec.urlkey, rec.timestamp, rec.digest, rec.original_uri});
    }
  }
  result.report.total_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

std::string FilterReport::table() const {
  auto pct = [&](std::size_t n) {
    return input_count == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(input_count);
  };
  std::size_t w = 9;
  for (const auto& r : rules) w = std::max(w, r.rule.size());
  std::string out = fmt::format("{:<{}} {:>18} {:>18} {:>10}\n", "Rule", w, "Chained", "Standalone", "Time (s)");
  for (const auto& r : rules) {
    out += fmt::format("{:<{}} {:>10} ({:>3.0f}%) {:>10} ({:>3.0f}%) {:>10.4f}\n", r.rule, w, r.surviving,
                       pct(r.surviving), r.standalone_surviving, pct(r.standalone_surviving), r.seconds);
  }
  out += fmt::format("{:<{}} {:>10} ({:>3.0f}%) {:>18} {:>10.4f}\n", "All rules", w, output_count,
                     pct(output_count), "", total_seconds);
  return out;
}

std::string FilterReport::key_values() const {
  std::string out = fmt::format("input_count={}\noutput_count={}\ntotal_seconds={:.6f}\n", input_count,
                                output_count, total_seconds);
  for (std::size_t i = 0; i < rules.size(); ++i) {
    out += fmt::format("rule.{}.name={}\nrule.{}.surviving={}\nrule.{}.standalone_surviving={}\nrule.{}.seconds={:.6f}\n",
                       i + 1, rules[i].rule, i + 1, rules[i].surviving, i + 1, rules[i].standalone_surviving,
                       i + 1, rules[i].seconds);
  }
  return out;
}

void write_extraction_list(std::ostream& out, std::span<const CdxRecord> records) {
  for (const auto& r : records) {
    out << escape_field(r.urlkey) << '\t' << r.timestamp << '\t' << escape_field(r.original_uri) << '\t'
        << r.digest << '\t' << r.offset << '\t' << escape_field(r.warc_file) << '\n';
  }
}

std::vector<CdxRecord> read_extraction_list(std::istream& in) {
  std::vector<CdxRecord> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 6 || !is_number(f[4])) {
      throw CdxError(fmt::format("extraction list line {}: expected 6 tab-separated fields", line_number));
    }
    CdxRecord r;
    r.urlkey = f[0];
    r.timestamp = f[1];
    r.original_uri = f[2];
    r.digest = f[3];
    r.offset = std::stoull(std::string(f[4]));
    r.warc_file = f[5];
    r.status = "200";
    out.push_back(std::move(r));
  }
  return out;
}

void write_observation_log(std::ostream& out, std::span<const Observation> log) {
  for (const auto& o : log) {
    out << escape_field(o.urlkey) << '\t' << o.timestamp << '\t' << o.digest << '\t'
        << escape_field(o.original_uri) << '\n';
  }
}

std::vector<Observation> read_observation_log(std::istream& in) {
  std::vector<Observation> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 4 && f.size() != 3) {
      throw CdxError(fmt::format("observation log line {}: expected 3 or 4 tab-separated fields", line_number));
    }
    Observation o{std::string(f[0]), std::string(f[1]), std::string(f[2]),
                  f.size() == 4 ? std::string(f[3]) : std::string(f[0])};
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace archgraph
