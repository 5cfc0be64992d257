#pragma once

#include <atomic>
#include <compare>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "archgraph/graph_store.hpp"
#include "archgraph/html_links.hpp"
#include "archgraph/timestamp.hpp"
#include "archgraph/xml.hpp"

namespace archgraph {

inline constexpr std::string_view kRdfNamespace = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline constexpr std::string_view kTwgNamespace = "http://www.mementoweb.org/TemporalWebGraph/";

// One collection member: outlinks are described by target SURT, inlinks by
// the source's original URI.
struct LinkMember {
  std::string descriptor;
  LinkType type = LinkType::Href;
  std::string text;
  std::vector<std::string> timestamps;  // ascending, no duplicates

  auto operator<=>(const LinkMember&) const = default;
};

struct LinkStructureResponse {
  std::string subject;
  std::vector<LinkMember> outlinks;
  std::vector<LinkMember> inlinks;

  bool operator==(const LinkStructureResponse&) const = default;
};

class ResponseFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AggregationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sorts members by (descriptor, type, text), merges members sharing that
// triple and sorts/dedups each timestamp bag.
void normalize(LinkStructureResponse& response);

// Link structure of `uri` from the store. Throws CanonicalizationError.
LinkStructureResponse build_response(const GraphStore& store, std::string_view uri, const TimeRange& range = {});

std::string to_rdf_xml(const LinkStructureResponse& response);
// Throws xml::ParseError or ResponseFormatError.
LinkStructureResponse parse_rdf_xml(std::string_view document);

// Structural violations of a parsed link-structure document (namespaces,
// Collection/Bag nesting, member fields). Empty when the document conforms.
std::vector<std::string> check_rdf_structure(const xml::Element& root);

std::string to_json(const LinkStructureResponse& response);
LinkStructureResponse parse_json(std::string_view document);

// Union of both responses. Subjects must canonicalize to the same SURT;
// the lexicographically smaller spelling is kept. Throws AggregationError.
LinkStructureResponse merge_responses(const LinkStructureResponse& a, const LinkStructureResponse& b);

struct HttpResult {
  int status = 200;
  std::string content_type;
  std::string body;
};

// GET /linkQuery handler. Parameters: uri (required), from, to (14-digit
// timestamps, inclusive), format (rdf | json). A null store answers 503.
HttpResult handle_link_query(const GraphStore* store, const std::multimap<std::string, std::string>& params);

// HTTP front end. Serves /linkQuery (and /LinkService/linkQuery) on a
// background thread; requests are answered concurrently.
class LinkServer {
 public:
  explicit LinkServer(const GraphStore* store);
  ~LinkServer();
  LinkServer(const LinkServer&) = delete;
  LinkServer& operator=(const LinkServer&) = delete;

  // Binds (port 0 picks a free port) and starts serving. Returns the port.
  int start(const std::string& host, int port);
  // Blocks serving on the calling thread.
  bool listen(const std::string& host, int port);
  void stop();

  // nullptr makes the service answer 503 until a store is set again.
  void set_store(const GraphStore* store) { store_.store(store); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<const GraphStore*> store_;
  std::thread thread_;
};

}  // namespace archgraph
