#include "archgraph/link_service.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

namespace archgraph {
namespace {

using Json = nlohmann::json;

void normalize_members(std::vector<LinkMember>& members) {
  std::map<std::tuple<std::string, LinkType, std::string>, std::vector<std::string>> grouped;
  for (auto& m : members) {
    auto& bag = grouped[{std::move(m.descriptor), m.type, std::move(m.text)}];
    bag.insert(bag.end(), m.timestamps.begin(), m.timestamps.end());
  }
  members.clear();
  for (auto& [key, bag] : grouped) {
    std::sort(bag.begin(), bag.end());
    bag.erase(std::unique(bag.begin(), bag.end()), bag.end());
    members.push_back(LinkMember{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::move(bag)});
  }
}

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t\n\r") == std::string_view::npos; }

void write_collection(std::string& out, std::string_view name, const std::vector<LinkMember>& members) {
  out += fmt::format(" <twg:{} rdf:parseType=\"Collection\">\n", name);
  for (const auto& m : members) {
    out += fmt::format("  <rdf:Description rdf:about=\"{}\">\n", xml::escape_attribute(m.descriptor));
    out += fmt::format("   <twg:type>{}</twg:type>\n", to_string(m.type));
    out += fmt::format("   <twg:text>{}</twg:text>\n", xml::escape_text(m.text));
    out += "   <twg:timestamp><rdf:Bag>";
    for (const auto& ts : m.timestamps) out += fmt::format("<rdf:li>{}</rdf:li>", xml::escape_text(ts));
    out += "</rdf:Bag></twg:timestamp>\n";
    out += "  </rdf:Description>\n";
  }
  out += fmt::format(" </twg:{}>\n", name);
}

void check_blank(const xml::Element& el, std::vector<std::string>& v) {
  if (!is_blank(el.text)) v.push_back(fmt::format("unexpected character data in {}", el.name));
}

void check_member(const xml::Element& m, std::string_view where, std::vector<std::string>& v) {
  if (m.name != "rdf:Description") {
    v.push_back(fmt::format("{} member is <{}>, expected rdf:Description", where, m.name));
    return;
  }
  if (m.attribute("rdf:about") == nullptr) v.push_back(fmt::format("{} member lacks rdf:about", where));
  check_blank(m, v);
  for (const auto& c : m.children) {
    if (c.name != "twg:type" && c.name != "twg:text" && c.name != "twg:timestamp") {
      v.push_back(fmt::format("{} member has unexpected <{}>", where, c.name));
    }
  }
  const auto types = m.children_named("twg:type");
  if (types.size() != 1) {
    v.push_back(fmt::format("{} member needs exactly one twg:type", where));
  } else if (!parse_link_type(types[0]->text) || !types[0]->children.empty()) {
    v.push_back(fmt::format("{} member has invalid twg:type '{}'", where, types[0]->text));
  }
  const auto texts = m.children_named("twg:text");
  if (texts.size() != 1 || !texts[0]->children.empty()) v.push_back(fmt::format("{} member needs one plain twg:text", where));
  const auto stamps = m.children_named("twg:timestamp");
  if (stamps.size() != 1) {
    v.push_back(fmt::format("{} member needs exactly one twg:timestamp", where));
    return;
  }
  check_blank(*stamps[0], v);
  if (stamps[0]->children.size() != 1 || stamps[0]->children[0].name != "rdf:Bag") {
    v.push_back(fmt::format("{} twg:timestamp must hold exactly one rdf:Bag", where));
    return;
  }
  const xml::Element& bag = stamps[0]->children[0];
  check_blank(bag, v);
  if (bag.children.empty()) v.push_back(fmt::format("{} timestamp bag is empty", where));
  std::string previous;
  for (const auto& li : bag.children) {
    if (li.name != "rdf:li" || !li.children.empty()) {
      v.push_back(fmt::format("{} bag holds <{}>, expected rdf:li", where, li.name));
      continue;
    }
    if (!is_valid_timestamp(li.text)) v.push_back(fmt::format("{} bag item '{}' is not a timestamp", where, li.text));
    if (!previous.empty() && li.text <= previous) v.push_back(fmt::format("{} bag is not strictly ascending", where));
    previous = li.text;
  }
}

std::vector<LinkMember> read_collection(const xml::Element& coll) {
  std::vector<LinkMember> out;
  for (const auto& m : coll.children) {
    LinkMember member;
    member.descriptor = *m.attribute("rdf:about");
    member.type = *parse_link_type(m.child("twg:type")->text);
    member.text = m.child("twg:text")->text;
    for (const auto& li : m.child("twg:timestamp")->children[0].children) member.timestamps.push_back(li.text);
    out.push_back(std::move(member));
  }
  return out;
}

Json members_to_json(const std::vector<LinkMember>& members) {
  Json arr = Json::array();
  for (const auto& m : members) {
    arr.push_back({{"uri", m.descriptor}, {"type", std::string(to_string(m.type))}, {"text", m.text},
                   {"timestamps", m.timestamps}});
  }
  return arr;
}

std::vector<LinkMember> members_from_json(const Json& arr) {
  std::vector<LinkMember> out;
  for (const auto& j : arr) {
    const auto type = parse_link_type(j.at("type").get<std::string>());
    if (!type) throw ResponseFormatError("invalid link type in JSON response");
    out.push_back(LinkMember{j.at("uri").get<std::string>(), *type, j.at("text").get<std::string>(),
                             j.at("timestamps").get<std::vector<std::string>>()});
  }
  return out;
}

std::string canonical_subject(const std::string& s) {
  try {
    return canonicalize(s).str();
  } catch (const CanonicalizationError&) {
    return s;
  }
}

HttpResult error_result(int status, const std::string& message) {
  return HttpResult{status, "text/plain; charset=utf-8", message + "\n"};
}

}  // namespace

void normalize(LinkStructureResponse& r) {
  normalize_members(r.outlinks);
  normalize_members(r.inlinks);
}

LinkStructureResponse build_response(const GraphStore& store, std::string_view uri, const TimeRange& range) {
  const SurtKey key = canonicalize(uri);
  const UriId id = uri_id(key);
  LinkStructureResponse r;
  r.subject = std::string(uri);
  for (const TemporalEdge& e : store.get_outlinks(id, range)) {
    r.outlinks.push_back(LinkMember{e.target_surt.str(), e.type, e.text, e.datetimes});
  }
  for (const InlinkEntry& e : store.get_inlinks(id, range)) {
    r.inlinks.push_back(LinkMember{e.source_uri, e.type, e.text, {e.datetime}});
  }
  normalize(r);
  return r;
}

std::string to_rdf_xml(const LinkStructureResponse& r) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += fmt::format("<rdf:RDF xmlns:rdf=\"{}\"\n xmlns:twg=\"{}\">\n", kRdfNamespace, kTwgNamespace);
  out += fmt::format("<rdf:Description rdf:about=\"{}\">\n", xml::escape_attribute(r.subject));
  write_collection(out, "hasOutlinks", r.outlinks);
  write_collection(out, "hasInlinks", r.inlinks);
  out += "</rdf:Description>\n</rdf:RDF>\n";
  return out;
}

std::vector<std::string> check_rdf_structure(const xml::Element& root) {
  std::vector<std::string> v;
  if (root.name != "rdf:RDF") v.push_back(fmt::format("root element is <{}>, expected rdf:RDF", root.name));
  const std::string* rdf_ns = root.attribute("xmlns:rdf");
  const std::string* twg_ns = root.attribute("xmlns:twg");
  if (rdf_ns == nullptr || *rdf_ns != kRdfNamespace) v.push_back("rdf namespace missing or wrong");
  if (twg_ns == nullptr || *twg_ns != kTwgNamespace) v.push_back("twg namespace missing or wrong");
  check_blank(root, v);
  if (root.children.size() != 1 || root.children[0].name != "rdf:Description") {
    v.push_back("rdf:RDF must contain exactly one rdf:Description");
    return v;
  }
  const xml::Element& subject = root.children[0];
  if (subject.attribute("rdf:about") == nullptr) v.push_back("subject lacks rdf:about");
  check_blank(subject, v);
  for (const auto& c : subject.children) {
    if (c.name != "twg:hasOutlinks" && c.name != "twg:hasInlinks") {
      v.push_back(fmt::format("subject has unexpected <{}>", c.name));
    }
  }
  for (const std::string_view name : {"twg:hasOutlinks", "twg:hasInlinks"}) {
    const auto colls = subject.children_named(name);
    if (colls.size() != 1) {
      v.push_back(fmt::format("subject needs exactly one {}", name));
      continue;
    }
    const std::string* pt = colls[0]->attribute("rdf:parseType");
    if (pt == nullptr || *pt != "Collection") v.push_back(fmt::format("{} must be rdf:parseType=\"Collection\"", name));
    check_blank(*colls[0], v);
    for (const auto& m : colls[0]->children) check_member(m, name, v);
  }
  return v;
}

LinkStructureResponse parse_rdf_xml(std::string_view document) {
  const xml::Element root = xml::parse(document);
  const auto violations = check_rdf_structure(root);
  if (!violations.empty()) throw ResponseFormatError(violations.front());
  const xml::Element& subject = root.children[0];
  LinkStructureResponse r;
  r.subject = *subject.attribute("rdf:about");
  r.outlinks = read_collection(*subject.child("twg:hasOutlinks"));
  r.inlinks = read_collection(*subject.child("twg:hasInlinks"));
  return r;
}

std::string to_json(const LinkStructureResponse& r) {
  const Json j = {{"subject", r.subject}, {"outlinks", members_to_json(r.outlinks)}, {"inlinks", members_to_json(r.inlinks)}};
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

LinkStructureResponse parse_json(std::string_view document) {
  try {
    const Json j = Json::parse(document);
    return LinkStructureResponse{j.at("subject").get<std::string>(), members_from_json(j.at("outlinks")),
                                 members_from_json(j.at("inlinks"))};
  } catch (const Json::exception& e) {
    throw ResponseFormatError(fmt::format("malformed JSON response: {}", e.what()));
  }
}

LinkStructureResponse merge_responses(const LinkStructureResponse& a, const LinkStructureResponse& b) {
  if (canonical_subject(a.subject) != canonical_subject(b.subject)) {
    throw AggregationError(fmt::format("cannot merge responses for '{}' and '{}'", a.subject, b.subject));
  }
  LinkStructureResponse out;
  out.subject = std::min(a.subject, b.subject);
  out.outlinks = a.outlinks;
  out.outlinks.insert(out.outlinks.end(), b.outlinks.begin(), b.outlinks.end());
  out.inlinks = a.inlinks;
  out.inlinks.insert(out.inlinks.end(), b.inlinks.begin(), b.inlinks.end());
  normalize(out);
  return out;
}

HttpResult handle_link_query(const GraphStore* store, const std::multimap<std::string, std::string>& params) {
  auto param = [&](const std::string& name) -> std::optional<std::string> {
    const auto it = params.find(name);
    if (it == params.end()) return std::nullopt;
    return it->second;
  };
  const auto uri = param("uri");
  if (!uri || uri->empty()) return error_result(400, "missing required parameter 'uri'");
  TimeRange range;
  for (const auto& [name, field] : {std::pair{"from", &range.from}, std::pair{"to", &range.to}}) {
    if (const auto v = param(name); v && !v->empty()) {
      if (!is_valid_timestamp(*v)) return error_result(400, fmt::format("'{}' must be a 14-digit timestamp", name));
      *field = *v;
    }
  }
  const std::string format = param("format").value_or("rdf");
  if (format != "rdf" && format != "json") return error_result(400, "format must be 'rdf' or 'json'");
  if (store == nullptr) return error_result(503, "link store unavailable");

  LinkStructureResponse response;
  try {
    response = build_response(*store, *uri, range);
  } catch (const CanonicalizationError& e) {
    return error_result(400, e.what());
  } catch (const StorageError& e) {
    return error_result(503, e.what());
  }
  if (format == "json") return HttpResult{200, "application/json", to_json(response)};
  return HttpResult{200, "application/rdf+xml; charset=utf-8", to_rdf_xml(response)};
}

struct LinkServer::Impl {
  httplib::Server server;
};

LinkServer::LinkServer(const GraphStore* store) : impl_(std::make_unique<Impl>()), store_(store) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::multimap<std::string, std::string> params(req.params.begin(), req.params.end());
    const HttpResult r = handle_link_query(store_.load(), params);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  impl_->server.Get("/linkQuery", handler);
  impl_->server.Get("/LinkService/linkQuery", handler);
}

LinkServer::~LinkServer() { stop(); }

int LinkServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw std::runtime_error(fmt::format("cannot bind {}:{}", host, port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

bool LinkServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void LinkServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace archgraph
