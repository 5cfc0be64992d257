#include <gtest/gtest.h>

#include <cmath>

#include "archgraph/analytics.hpp"

using namespace archgraph;

namespace {

const std::string kSumA = "AAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAA";
const std::string kSumB = "BBBBBBBBBBBBBBBBBBBBBBBBBBBBBBBB";
const std::string kSumC = "CCCCCCCCCCCCCCCCCCCCCCCCCCCCCCCC";

LinkRecord link(const std::string& sum, const std::string& target, const std::string& text) {
  return LinkRecord{sum, target, uri_id(canonicalize(target)), LinkType::Href, text};
}

// January: a -> b, a -> c. February: b -> a (and a keeps linking).
// March: c -> x only with no other observation.
GraphStore temporal_store() {
  auto store = GraphStore::in_memory();
  store.upsert_links(std::vector<LinkRecord>{link(kSumA, "http://b.org/", "to b"), link(kSumA, "http://c.org/", "to c"),
                                             link(kSumB, "http://a.org/", "Home of A"),
                                             link(kSumC, "http://x.org/", "x")});
  store.upsert_observation("http://a.org/", "20100105000000", kSumA);
  store.upsert_observation("http://a.org/", "20100210000000", kSumA);
  store.upsert_observation("http://b.org/", "20100215000000", kSumB);
  store.upsert_observation("http://d.org/", "20100101000000", kSumB);
  store.upsert_observation("http://c.org/", "20100320000000", kSumC);
  store.materialize_inlinks();
  return store;
}

}  // namespace

TEST(Windows, ParseAndMonthly) {
  EXPECT_TRUE(Window::parse("whole")->whole());
  EXPECT_EQ(Window::parse("2010-02")->range.to, "20100228235959");
  EXPECT_EQ(Window::parse("201002")->label, "2010-02");
  EXPECT_FALSE(Window::parse("feb"));
  const auto store = temporal_store();
  const auto months = monthly_windows(store);
  ASSERT_EQ(months.size(), 3u);
  EXPECT_EQ(months[0].label, "2010-01");
  EXPECT_EQ(months[2].label, "2010-03");
  EXPECT_TRUE(monthly_windows(GraphStore::in_memory()).empty());
}

TEST(Windows, GraphPerWindow) {
  const auto store = temporal_store();
  const auto jan = build_window_graph(store, *Window::parse("2010-01"));
  EXPECT_EQ(jan.surts, (std::vector<std::string>{"org,a)/", "org,b)/", "org,c)/", "org,d)/"}));
  EXPECT_EQ(jan.edge_count(), 3u);
  const auto feb = build_window_graph(store, *Window::parse("2010-02"));
  EXPECT_EQ(feb.node_count(), 3u);
  EXPECT_EQ(feb.edge_count(), 3u);
  const auto whole = build_window_graph(store, Window::whole_collection());
  EXPECT_EQ(whole.node_count(), 5u);
  EXPECT_EQ(whole.edge_count(), 5u);
  ASSERT_TRUE(whole.index_of(uri_id(canonicalize("http://x.org/"))));
  EXPECT_FALSE(whole.index_of(uri_id(canonicalize("http://zzz.org/"))));
  EXPECT_TRUE(build_window_graph(store, *Window::parse("2011-01")).empty());
}

TEST(PageRank, ThreeCycleIsUniform) {
  const auto g = make_graph({"a", "b", "c"}, {{0, 1}, {1, 2}, {2, 0}});
  const auto r = pagerank_scores(g);
  for (double s : r.scores) EXPECT_NEAR(s, 1.0 / 3.0, 1e-12);
  EXPECT_TRUE(r.converged);
}

TEST(PageRank, DanglingTwoNodeClosedForm) {
  // a -> b, b dangling: x_a = 0.5 / 1.425.
  const auto g = make_graph({"a", "b"}, {{0, 1}});
  const auto r = pagerank_scores(g, {0.85, 1e-14, 1000, {}, {}, 1});
  EXPECT_NEAR(r.scores[0], 0.5 / 1.425, 1e-12);
  EXPECT_NEAR(r.scores[1], 1.0 - 0.5 / 1.425, 1e-12);
}

TEST(PageRank, ObserverSeesConservedMass) {
  const auto g = make_graph({"a", "b", "c", "d"}, {{0, 1}, {0, 2}, {2, 0}, {3, 3}});
  int calls = 0;
  PageRankOptions opts;
  opts.observer = [&](int it, double sum, double delta) {
    ++calls;
    EXPECT_EQ(it, calls);
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_GE(delta, 0.0);
  };
  const auto r = pagerank_scores(g, opts);
  EXPECT_EQ(calls, r.iterations);
  EXPECT_LT(r.last_delta, 1e-8);
}

TEST(PageRank, PersonalizationAndValidation) {
  const auto g = make_graph({"a", "b"}, {{0, 1}, {1, 0}});
  PageRankOptions opts;
  opts.personalization = {3.0, 1.0};
  const auto r = pagerank_scores(g, opts);
  EXPECT_GT(r.scores[0], r.scores[1]);
  EXPECT_NEAR(r.scores[0] + r.scores[1], 1.0, 1e-12);
  opts.personalization = {1.0};
  EXPECT_THROW(pagerank_scores(g, opts), std::invalid_argument);
  EXPECT_THROW(pagerank_scores(g, {1.0}), std::invalid_argument);
  EXPECT_THROW(pagerank_scores(WindowedGraph{}), EmptyGraphError);
  EXPECT_THROW(make_graph({"a"}, {{0, 1}}), std::out_of_range);
}

TEST(PageRank, ThreadCountDoesNotChangeScores) {
  std::vector<std::string> labels;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  const std::uint32_t n = 30000;
  for (std::uint32_t i = 0; i < n; ++i) {
    labels.push_back("n" + std::to_string(i));
    edges.emplace_back(i, (i * 7 + 1) % n);
    if (i % 3 == 0) edges.emplace_back(i, (i / 3) % n);
  }
  const auto g = make_graph(labels, edges);
  PageRankOptions one;
  one.threads = 1;
  PageRankOptions four;
  four.threads = 4;
  const auto a = pagerank_scores(g, one);
  const auto b = pagerank_scores(g, four);
  double l1 = 0;
  for (std::size_t i = 0; i < n; ++i) l1 += std::abs(a.scores[i] - b.scores[i]);
  EXPECT_LT(l1, 1e-12);
}

TEST(RankTable, OrderingAndLookups) {
  const auto t = RankTable::from_scores({{"b", 0.2}, {"a", 0.2}, {"c", 0.6}});
  ASSERT_EQ(t.entries.size(), 3u);
  EXPECT_EQ(t.entries[0].surt, "c");
  EXPECT_EQ(t.entries[1].surt, "a");
  EXPECT_EQ(t.rank_of(uri_id(SurtKey("b"))), 2u);
  EXPECT_FALSE(t.rank_of(uri_id(SurtKey("zz"))));
  EXPECT_EQ(t.top(2).size(), 2u);
  EXPECT_NEAR(t.sum(), 1.0, 1e-15);
}

TEST(KendallTau, IdentityReverseAndWorkedExample) {
  const auto a = RankTable::from_scores({{"p", 6}, {"q", 5}, {"r", 4}, {"s", 3}, {"t", 2}, {"u", 1}});
  const auto rev = RankTable::from_scores({{"p", 1}, {"q", 2}, {"r", 3}, {"s", 4}, {"t", 5}, {"u", 6}});
  const auto b = RankTable::from_scores({{"q", 6}, {"r", 5}, {"p", 4}, {"v", 3}, {"w", 2}, {"x", 1}});
  EXPECT_DOUBLE_EQ(kendall_tau_topk(a, a, 6), 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau_topk(a, rev, 6), -1.0);
  EXPECT_DOUBLE_EQ(kendall_tau_topk(a, b, 6), -1.0 / 3.0);
  EXPECT_EQ(top_k_overlap(a, b, 6), 3u);
  EXPECT_EQ(top_k_overlap(a, b, 1), 0u);
  EXPECT_TRUE(std::isnan(kendall_tau_topk(a, b, 1)));
}

TEST(Compare, ConsecutiveThenWhole) {
  const auto jan = [] {
    auto t = RankTable::from_scores({{"a", 3}, {"b", 2}, {"c", 1}});
    t.label = "2010-01";
    return t;
  }();
  RankTable empty;
  empty.label = "2010-02";
  auto mar = RankTable::from_scores({{"c", 3}, {"b", 2}, {"a", 1}});
  mar.label = "2010-03";
  auto whole = RankTable::from_scores({{"a", 3}, {"b", 2}, {"c", 1}});
  whole.label = "whole";
  const auto rows = compare_rankings({jan, empty, mar}, &whole, 50);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].first, "2010-01");
  EXPECT_EQ(rows[0].second, "2010-03");
  EXPECT_DOUBLE_EQ(rows[0].tau, -1.0);
  EXPECT_EQ(rows[1].second, "whole");
  EXPECT_DOUBLE_EQ(rows[1].tau, 1.0);
  EXPECT_EQ(rows[2].overlap, 3u);
}

TEST(Timeline, InlinkAnchorsByDate) {
  const auto store = temporal_store();
  const auto rows = inlink_anchor_timeline(store, "http://www.a.org/");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].date, "01-Jan-10");
  EXPECT_EQ(rows[0].source_uri, "http://d.org/");
  EXPECT_EQ(rows[1].date, "15-Feb-10");
  EXPECT_EQ(rows[1].text, "Home of A");
  EXPECT_THROW(inlink_anchor_timeline(store, "mailto:a@b"), CanonicalizationError);
}

TEST(Coverage, ObservedPlusUncrawledIsNodes) {
  const auto store = temporal_store();
  const auto r = coverage_report(store);
  // Observed: a, b, c, d. Targets add x.
  EXPECT_EQ(r.observed_count, 4u);
  EXPECT_EQ(r.node_count, 5u);
  EXPECT_EQ(r.uncrawled_count, 1u);
  EXPECT_EQ(r.edge_count, 5u);
  EXPECT_DOUBLE_EQ(r.uncrawled_fraction, 0.2);
  EXPECT_EQ(r.node_count, r.observed_count + r.uncrawled_count);
}

TEST(CostModel, Formulas) {
  EXPECT_DOUBLE_EQ(filtering_time_sec(1e6, 1), 88.0);
  EXPECT_DOUBLE_EQ(filtering_survivors(1000), 300.0);
  EXPECT_DOUBLE_EQ(extraction_time_hrs(1e6, 1), 5.5);
  EXPECT_NEAR(storage_size(1000), 102.0, 1e-12);
  const auto chained = cost_model(1e9, 100, 10);
  EXPECT_NEAR(chained.extraction_time_hrs, 3e8 / 1e6 * 5.5 / 100, 1e-9);
  const auto standalone = cost_model(1e9, 100, 10, false);
  EXPECT_NEAR(standalone.extraction_time_hrs, 55.0, 1e-9);
  EXPECT_THROW(cost_model(0, 1, 1), std::invalid_argument);
  EXPECT_THROW(cost_model(10, 0, 1), std::invalid_argument);
  EXPECT_THROW(cost_model(10, 1, -1), std::invalid_argument);
}
