#include <gtest/gtest.h>

#include "archgraph/url.hpp"

using namespace archgraph;

TEST(Url, ParseComponents) {
  auto r = url::parse("http://a/b/c/d;p?q#f");
  EXPECT_EQ(r.scheme, "http");
  EXPECT_EQ(r.authority, "a");
  EXPECT_EQ(r.path, "/b/c/d;p");
  EXPECT_EQ(r.query, "q");
  EXPECT_EQ(r.fragment, "f");
  EXPECT_EQ(r.str(), "http://a/b/c/d;p?q#f");
  auto rel = url::parse("../g");
  EXPECT_FALSE(rel.scheme);
  EXPECT_FALSE(rel.authority);
  EXPECT_EQ(rel.path, "../g");
}

TEST(Url, RemoveDotSegments) {
  EXPECT_EQ(url::remove_dot_segments("/a/b/c/./../../g"), "/a/g");
  EXPECT_EQ(url::remove_dot_segments("mid/content=5/../6"), "mid/6");
  EXPECT_EQ(url::remove_dot_segments("/../a"), "/a");
}

// Reference resolution examples from RFC 3986 section 5.4.
struct Case {
  const char* ref;
  const char* expected;
};

TEST(Url, ResolveNormalExamples) {
  const Case cases[] = {
      {"g:h", "g:h"},         {"g", "http://a/b/c/g"},       {"./g", "http://a/b/c/g"},
      {"g/", "http://a/b/c/g/"}, {"/g", "http://a/g"},       {"//g", "http://g"},
      {"?y", "http://a/b/c/d;p?y"}, {"g?y", "http://a/b/c/g?y"}, {"#s", "http://a/b/c/d;p?q#s"},
      {"g#s", "http://a/b/c/g#s"}, {"g?y#s", "http://a/b/c/g?y#s"}, {";x", "http://a/b/c/;x"},
      {"g;x", "http://a/b/c/g;x"}, {"g;x?y#s", "http://a/b/c/g;x?y#s"}, {"", "http://a/b/c/d;p?q"},
      {".", "http://a/b/c/"},   {"./", "http://a/b/c/"},       {"..", "http://a/b/"},
      {"../", "http://a/b/"},   {"../g", "http://a/b/g"},      {"../..", "http://a/"},
      {"../../", "http://a/"},  {"../../g", "http://a/g"},
  };
  for (const auto& c : cases) EXPECT_EQ(url::resolve("http://a/b/c/d;p?q", c.ref), c.expected) << c.ref;
}

TEST(Url, ResolveAbnormalExamples) {
  const Case cases[] = {
      {"../../../g", "http://a/g"}, {"../../../../g", "http://a/g"}, {"/./g", "http://a/g"},
      {"/../g", "http://a/g"},      {"g.", "http://a/b/c/g."},       {".g", "http://a/b/c/.g"},
      {"g..", "http://a/b/c/g.."},  {"..g", "http://a/b/c/..g"},     {"./../g", "http://a/b/g"},
      {"./g/.", "http://a/b/c/g/"}, {"g/./h", "http://a/b/c/g/h"},   {"g/../h", "http://a/b/c/h"},
      {"g;x=1/./y", "http://a/b/c/g;x=1/y"}, {"g;x=1/../y", "http://a/b/c/y"},
      {"g?y/./x", "http://a/b/c/g?y/./x"},   {"g#s/../x", "http://a/b/c/g#s/../x"},
  };
  for (const auto& c : cases) EXPECT_EQ(url::resolve("http://a/b/c/d;p?q", c.ref), c.expected) << c.ref;
}

TEST(Url, ResolveAgainstHostOnlyBase) {
  EXPECT_EQ(url::resolve("http://example.org", "b.html"), "http://example.org/b.html");
}

TEST(Url, CleanAttribute) {
  EXPECT_EQ(url::clean_attribute_url("  /a b\n/c\t "), "/a%20b/c");
  EXPECT_EQ(url::clean_attribute_url("http://x/"), "http://x/");
}
