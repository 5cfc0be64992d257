#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <httplib.h>

#include "archgraph/link_service.hpp"

using namespace archgraph;

namespace {

const std::string kSumA = "AAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAA";
const std::string kSumB = "BBBBBBBBBBBBBBBBBBBBBBBBBBBBBBBB";

GraphStore fixture_store() {
  auto store = GraphStore::in_memory();
  auto link = [](const std::string& sum, const std::string& target, LinkType type, const std::string& text) {
    return LinkRecord{sum, target, uri_id(canonicalize(target)), type, text};
  };
  store.upsert_links(std::vector<LinkRecord>{
      link(kSumA, "http://www.vancouver2010.com/", LinkType::Href, "Vancouver 2010"),
      link(kSumA, "http://example.org/logo.gif", LinkType::Image, "logo"),
      link(kSumB, "http://www.teamgb.com/", LinkType::Href, "Team GB & friends"),
  });
  store.upsert_observation("http://www.teamgb.com/", "20100130003005", kSumA);
  store.upsert_observation("http://www.teamgb.com/", "20100212000000", kSumA);
  store.upsert_observation("http://news.example.com/olympics", "20100201101010", kSumB);
  store.materialize_inlinks();
  return store;
}

bool boost_well_formed(const std::string& doc) {
  try {
    std::istringstream in(doc);
    boost::property_tree::ptree tree;
    boost::property_tree::read_xml(in, tree);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

TEST(LinkService, BuildResponseFromStore) {
  const auto store = fixture_store();
  const auto r = build_response(store, "http://teamgb.com/");
  EXPECT_EQ(r.subject, "http://teamgb.com/");
  ASSERT_EQ(r.outlinks.size(), 2u);
  EXPECT_EQ(r.outlinks[0].descriptor, "com,vancouver2010)/");
  EXPECT_EQ(r.outlinks[0].timestamps, (std::vector<std::string>{"20100130003005", "20100212000000"}));
  EXPECT_EQ(r.outlinks[1].descriptor, "org,example)/logo.gif");
  EXPECT_EQ(r.outlinks[1].type, LinkType::Image);
  ASSERT_EQ(r.inlinks.size(), 1u);
  EXPECT_EQ(r.inlinks[0].descriptor, "http://news.example.com/olympics");
  EXPECT_EQ(r.inlinks[0].text, "Team GB & friends");

  const auto feb = build_response(store, "http://teamgb.com/", *TimeRange::month("2010-02"));
  ASSERT_EQ(feb.outlinks.size(), 2u);
  EXPECT_EQ(feb.outlinks[0].timestamps, std::vector<std::string>{"20100212000000"});
  EXPECT_EQ(feb.inlinks.size(), 1u);
  EXPECT_TRUE(build_response(store, "http://unknown.example/").outlinks.empty());
}

TEST(LinkService, RdfDocumentShape) {
  const auto doc = to_rdf_xml(build_response(fixture_store(), "http://www.teamgb.com/"));
  EXPECT_TRUE(boost_well_formed(doc));
  const auto root = xml::parse(doc);
  EXPECT_TRUE(check_rdf_structure(root).empty());
  EXPECT_NE(doc.find("xmlns:twg=\"http://www.mementoweb.org/TemporalWebGraph/\""), std::string::npos);
  EXPECT_NE(doc.find("<twg:hasOutlinks rdf:parseType=\"Collection\">"), std::string::npos);
  EXPECT_NE(doc.find("<rdf:Description rdf:about=\"com,vancouver2010)/\">"), std::string::npos);
  EXPECT_NE(doc.find("<rdf:li>20100130003005</rdf:li><rdf:li>20100212000000</rdf:li>"), std::string::npos);
  EXPECT_NE(doc.find("<twg:text>Team GB &amp; friends</twg:text>"), std::string::npos);
}

TEST(LinkService, StructureCheckFindsViolations) {
  auto v = check_rdf_structure(xml::parse("<rdf:RDF><rdf:Description/></rdf:RDF>"));
  EXPECT_GE(v.size(), 3u);
  const std::string member_without_bag =
      std::string("<rdf:RDF xmlns:rdf=\"") + std::string(kRdfNamespace) + "\" xmlns:twg=\"" + std::string(kTwgNamespace) +
      "\"><rdf:Description rdf:about=\"x\"><twg:hasOutlinks rdf:parseType=\"Collection\">"
      "<rdf:Description rdf:about=\"y\"><twg:type>href</twg:type><twg:text/><twg:timestamp>20100101000000"
      "</twg:timestamp></rdf:Description></twg:hasOutlinks><twg:hasInlinks rdf:parseType=\"Collection\"/>"
      "</rdf:Description></rdf:RDF>";
  v = check_rdf_structure(xml::parse(member_without_bag));
  ASSERT_FALSE(v.empty());
  EXPECT_THROW(parse_rdf_xml(member_without_bag), ResponseFormatError);
}

TEST(LinkService, RdfAndJsonRoundTrip) {
  LinkStructureResponse r;
  r.subject = "http://example.org/?a=1&b=<2>";
  r.outlinks = {{"org,example)/x", LinkType::Href, "quote \" and ' and \r\n and \t", {"20100101000000"}},
                {"org,example)/y", LinkType::Image, "", {"20100101000000", "20100102000000"}}};
  r.inlinks = {{"http://a.org/", LinkType::Href, "\xc3\xa9t\xc3\xa9", {"20100103000000"}}};
  EXPECT_EQ(parse_rdf_xml(to_rdf_xml(r)), r);
  EXPECT_EQ(parse_json(to_json(r)), r);
  EXPECT_THROW(parse_json("{\"subject\":1}"), std::exception);
}

TEST(LinkService, NormalizeMergesMembers) {
  LinkStructureResponse r;
  r.outlinks = {{"b", LinkType::Href, "t", {"20100102000000", "20100101000000"}},
                {"a", LinkType::Href, "t", {"20100101000000"}},
                {"b", LinkType::Href, "t", {"20100101000000"}}};
  normalize(r);
  ASSERT_EQ(r.outlinks.size(), 2u);
  EXPECT_EQ(r.outlinks[0].descriptor, "a");
  EXPECT_EQ(r.outlinks[1].timestamps, (std::vector<std::string>{"20100101000000", "20100102000000"}));
}

TEST(LinkService, MergeResponses) {
  LinkStructureResponse a{"http://www.example.org/", {{"x", LinkType::Href, "t", {"20100101000000"}}}, {}};
  LinkStructureResponse b{"http://example.org/", {{"x", LinkType::Href, "t", {"20100201000000"}}}, {}};
  const auto m = merge_responses(a, b);
  EXPECT_EQ(m.subject, "http://example.org/");
  ASSERT_EQ(m.outlinks.size(), 1u);
  EXPECT_EQ(m.outlinks[0].timestamps.size(), 2u);
  EXPECT_EQ(merge_responses(b, a), m);
  LinkStructureResponse c{"http://other.org/", {}, {}};
  EXPECT_THROW(merge_responses(a, c), AggregationError);
}

TEST(LinkService, HandlerStatusCodes) {
  const auto store = fixture_store();
  using P = std::multimap<std::string, std::string>;
  EXPECT_EQ(handle_link_query(&store, P{}).status, 400);
  EXPECT_EQ(handle_link_query(&store, P{{"uri", ""}}).status, 400);
  EXPECT_EQ(handle_link_query(&store, P{{"uri", "mailto:x@y"}}).status, 400);
  EXPECT_EQ(handle_link_query(&store, P{{"uri", "http://teamgb.com/"}, {"from", "2010"}}).status, 400);
  EXPECT_EQ(handle_link_query(&store, P{{"uri", "http://teamgb.com/"}, {"format", "csv"}}).status, 400);
  EXPECT_EQ(handle_link_query(nullptr, P{{"uri", "http://teamgb.com/"}}).status, 503);
  const auto ok = handle_link_query(&store, P{{"uri", "http://teamgb.com/"}});
  EXPECT_EQ(ok.status, 200);
  EXPECT_NE(ok.content_type.find("rdf+xml"), std::string::npos);
  EXPECT_EQ(parse_rdf_xml(ok.body), build_response(store, "http://teamgb.com/"));
  const auto json = handle_link_query(&store, P{{"uri", "http://teamgb.com/"}, {"format", "json"},
                                                {"from", "20100201000000"}, {"to", "20100228235959"}});
  EXPECT_EQ(json.status, 200);
  EXPECT_EQ(parse_json(json.body), build_response(store, "http://teamgb.com/", *TimeRange::month("2010-02")));
}

TEST(LinkService, HttpServer) {
  const auto store = fixture_store();
  LinkServer server(&store);
  const int port = server.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/linkQuery?uri=http%3A%2F%2Fteamgb.com%2F");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(parse_rdf_xml(res->body), build_response(store, "http://teamgb.com/"));
  res = client.Get("/LinkService/linkQuery?uri=http://teamgb.com/&format=json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  res = client.Get("/linkQuery");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  server.set_store(nullptr);
  res = client.Get("/linkQuery?uri=http://teamgb.com/");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 503);
  server.stop();
}
