#include <gtest/gtest.h>

#include "archgraph/xml.hpp"

using namespace archgraph;

TEST(Xml, ParsesNestedElementsAttributesAndText) {
  const auto root = xml::parse(
      "<?xml version=\"1.0\"?>\n<!-- lead -->\n<a x=\"1\" y='two'>\n <b>t &amp; &lt;u&gt; &#65;&#x42;</b><c/>"
      "<![CDATA[<raw>]]></a>\n");
  EXPECT_EQ(root.name, "a");
  ASSERT_TRUE(root.attribute("y"));
  EXPECT_EQ(*root.attribute("y"), "two");
  EXPECT_FALSE(root.attribute("z"));
  ASSERT_EQ(root.children.size(), 2u);
  EXPECT_EQ(root.child("b")->text, "t & <u> AB");
  EXPECT_TRUE(root.child("c")->children.empty());
  EXPECT_NE(root.text.find("<raw>"), std::string::npos);
  EXPECT_EQ(root.children_named("c").size(), 1u);
}

TEST(Xml, RejectsMalformedDocuments) {
  for (const char* bad : {"<a><b></a></b>", "<a>", "<a x=\"1\" x=\"2\"/>", "<a>&bogus;</a>", "<a/><b/>",
                          "<a>&#0;</a>", "", "text only", "<a x=1/>", "<a>&amp</a>"}) {
    EXPECT_THROW(xml::parse(bad), xml::ParseError) << bad;
  }
}

TEST(Xml, DepthLimit) {
  std::string deep;
  for (int i = 0; i < 300; ++i) deep += "<a>";
  for (int i = 0; i < 300; ++i) deep += "</a>";
  EXPECT_THROW(xml::parse(deep), xml::ParseError);
}

TEST(Xml, EscapeRoundTrip) {
  const std::string tricky = "a<b>&\"c'\td\r\ne \xc3\xa9";
  const auto root = xml::parse("<r v=\"" + xml::escape_attribute(tricky) + "\">" + xml::escape_text(tricky) + "</r>");
  EXPECT_EQ(root.text, tricky);
  EXPECT_EQ(*root.attribute("v"), tricky);
}

TEST(Xml, SanitizeDropsWhatXmlCannotCarry) {
  EXPECT_EQ(xml::sanitize(std::string("a\x01" "b\x1f" "c\td", 7)), "abc\td");
  EXPECT_EQ(xml::sanitize("ok \xff end"), "ok \xef\xbf\xbd end");
  EXPECT_EQ(xml::sanitize("\xe2\x98\xba"), "\xe2\x98\xba");
  EXPECT_NO_THROW(xml::parse("<r>" + xml::escape_text(std::string("x\0y\x02z", 5)) + "</r>"));
}

TEST(Xml, LineEndingsNormalized) {
  EXPECT_EQ(xml::parse("<r>a\r\nb\rc</r>").text, "a\nb\nc");
}
