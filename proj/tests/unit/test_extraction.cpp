#include <gtest/gtest.h>

#include <random>

#include "archgraph/digest.hpp"
#include "archgraph/extraction.hpp"
#include "test_support.hpp"

using namespace archgraph;
namespace t = archgraph::testing;

namespace {

std::vector<CdxRecord> html_only(const std::vector<CdxRecord>& cdx) {
  return apply_filters(cdx, default_rule_chain()).extraction_list;
}

}  // namespace

TEST(Extraction, SourceValidation) {
  t::TempDir dir;
  EXPECT_NO_THROW(ExtractionSource::warc_corpus(dir.path()).validate());
  EXPECT_THROW(ExtractionSource::warc_corpus(dir / "missing").validate(), std::invalid_argument);
  EXPECT_NO_THROW(ExtractionSource::replay("http://localhost:8080/web").validate());
  EXPECT_THROW(ExtractionSource::replay("ftp://x/web").validate(), std::invalid_argument);
  EXPECT_THROW(ExtractionSource::replay("/web").validate(), std::invalid_argument);
}

TEST(Extraction, FixtureLinksFromWarc) {
  t::TempDir dir;
  const auto cdx = t::write_corpus(dir.path(), t::fixture_captures());
  const auto list = html_only(cdx);
  ASSERT_EQ(list.size(), 3u);
  ExtractionReport report;
  const auto links = extract_all(ExtractionSource::warc_corpus(dir.path()), list, 2, &report);
  EXPECT_EQ(links.size(), 7u);
  EXPECT_EQ(report.records, 3u);
  EXPECT_EQ(report.pages, 3u);
  EXPECT_EQ(report.links, 7u);
  EXPECT_EQ(report.failures, 0u);
  ASSERT_EQ(report.partitions.size(), 2u);
  for (const auto& l : links) EXPECT_TRUE(is_base32_digest(l.doc_checksum));
  EXPECT_TRUE(std::is_sorted(links.begin(), links.end()));
  EXPECT_NE(report.table().find("records"), std::string::npos);
}

TEST(Extraction, MissingWarcAndBadOffsetsAreReportedNotFatal) {
  t::TempDir dir;
  auto list = html_only(t::write_corpus(dir.path(), t::fixture_captures()));
  auto ghost = list[0];
  ghost.warc_file = "ghost.warc.gz";
  auto bad = list[0];
  bad.offset += 1;
  list.push_back(ghost);
  list.push_back(bad);
  ExtractionReport report;
  const auto links = extract_all(ExtractionSource::warc_corpus(dir.path()), list, 3, &report);
  EXPECT_EQ(links.size(), 7u);
  EXPECT_EQ(report.failures, 2u);
  std::size_t listed = 0;
  for (const auto& p : report.partitions) listed += p.failures.size();
  EXPECT_EQ(listed, 2u);
}

TEST(Extraction, ReplayMatchesWarcForEveryWorkerCount) {
  t::TempDir dir;
  std::mt19937_64 rng(21);
  auto captures = t::fixture_captures();
  for (auto& c : t::random_site(rng, 30, 4)) captures.push_back(c);
  const auto list = html_only(t::write_corpus(dir.path(), captures));
  t::ReplayStub stub(dir.path());
  const auto reference = extract_all(ExtractionSource::warc_corpus(dir.path()), list, 1);
  ASSERT_FALSE(reference.empty());
  for (std::size_t k : {1u, 2u, 5u}) {
    EXPECT_EQ(extract_all(ExtractionSource::warc_corpus(dir.path()), list, k), reference) << k;
    ExtractionReport report;
    EXPECT_EQ(extract_all(ExtractionSource::replay(stub.base()), list, k, &report), reference) << k;
    EXPECT_EQ(report.failures, 0u);
  }
  EXPECT_EQ(stub.user_agents(), std::set<std::string>{std::string(kReplayUserAgent)});
}

TEST(Extraction, ReplayRetriesAndRedirects) {
  t::TempDir dir;
  const auto list = html_only(t::write_corpus(dir.path(), t::fixture_captures()));
  t::ReplayStub flaky(dir.path(), t::ReplayStub::Options{2});
  const auto reference = extract_all(ExtractionSource::warc_corpus(dir.path()), list, 1);
  ExtractionReport report;
  EXPECT_EQ(extract_all(ExtractionSource::replay(flaky.base()), list, 1, &report), reference);
  EXPECT_EQ(report.failures, 0u);
  EXPECT_EQ(flaky.requests(), 3 * list.size());

  auto src = ExtractionSource::replay(flaky.base());
  const auto r = fetch_memento(src, "20100115000000", "http://www.example.org/");
  EXPECT_EQ(r.status, 200);
  EXPECT_NE(r.final_url.find("20100115120000"), std::string::npos);
}

TEST(Extraction, ReplayGivesUpAfterRetries) {
  t::TempDir dir;
  const auto list = html_only(t::write_corpus(dir.path(), t::fixture_captures()));
  t::ReplayStub down(dir.path(), t::ReplayStub::Options{100});
  auto src = ExtractionSource::replay(down.base());
  src.max_retries = 2;
  try {
    fetch_memento(src, list[0].timestamp, list[0].original_uri);
    FAIL();
  } catch (const ReplayError& e) {
    EXPECT_EQ(e.status(), 503);
  }
  EXPECT_EQ(down.requests(), 3u);
}

TEST(Extraction, ReplayNotFound) {
  t::TempDir dir;
  t::write_corpus(dir.path(), t::fixture_captures());
  t::ReplayStub stub(dir.path());
  try {
    fetch_memento(ExtractionSource::replay(stub.base()), "20100101000000", "http://unknown.example/");
    FAIL();
  } catch (const ReplayError& e) {
    EXPECT_EQ(e.status(), 404);
  }
}

TEST(Extraction, ReplayTransportFailure) {
  auto src = ExtractionSource::replay("http://127.0.0.1:1/web");
  src.max_retries = 1;
  src.timeout_ms = 500;
  try {
    fetch_memento(src, "20100101000000", "http://a.example/");
    FAIL();
  } catch (const ReplayError& e) {
    EXPECT_EQ(e.status(), 0);
  }
}
