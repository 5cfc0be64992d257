#include <gtest/gtest.h>

#include "archgraph/timestamp.hpp"

using namespace archgraph;

TEST(Timestamp, Validity) {
  EXPECT_TRUE(is_valid_timestamp("20091104011307"));
  EXPECT_TRUE(is_valid_timestamp("20120229235959"));
  EXPECT_FALSE(is_valid_timestamp("20110229000000"));
  EXPECT_FALSE(is_valid_timestamp("2009110401130"));
  EXPECT_FALSE(is_valid_timestamp("2009110401130x"));
  EXPECT_FALSE(is_valid_timestamp("20091304011307"));
  EXPECT_FALSE(is_valid_timestamp("20091104241307"));
  EXPECT_FALSE(is_valid_timestamp(""));
}

TEST(Timestamp, ShortDate) {
  EXPECT_EQ(format_short_date("20091104011307"), "04-Nov-09");
  EXPECT_EQ(format_short_date("20100130003005"), "30-Jan-10");
}

TEST(Timestamp, Iso8601) {
  EXPECT_EQ(timestamp_from_iso8601("2010-01-30T00:30:05Z"), "20100130003005");
  EXPECT_EQ(timestamp_from_iso8601("2010-01-30T00:30:05.250Z"), "20100130003005");
  EXPECT_FALSE(timestamp_from_iso8601("2010-01-30 00:30:05Z"));
  EXPECT_FALSE(timestamp_from_iso8601("2010-02-30T00:30:05Z"));
  EXPECT_FALSE(timestamp_from_iso8601("2010-01-30T00:30:05"));
  EXPECT_EQ(iso8601_from_timestamp("20100130003005"), "2010-01-30T00:30:05Z");
}

TEST(Timestamp, RangeContainsInclusive) {
  TimeRange r{"20100101000000", "20100131235959"};
  EXPECT_TRUE(r.contains("20100101000000"));
  EXPECT_TRUE(r.contains("20100131235959"));
  EXPECT_FALSE(r.contains("20100201000000"));
  EXPECT_FALSE(r.contains("20091231235959"));
  EXPECT_TRUE(TimeRange::whole().contains("19960101000000"));
  EXPECT_TRUE((TimeRange{"", "20100101000000"}.contains("19990101000000")));
}

TEST(Timestamp, MonthRange) {
  auto feb = TimeRange::month("2012-02");
  ASSERT_TRUE(feb);
  EXPECT_EQ(feb->from, "20120201000000");
  EXPECT_EQ(feb->to, "20120229235959");
  EXPECT_EQ(TimeRange::month("201011")->to, "20101130235959");
  EXPECT_FALSE(TimeRange::month("2010-13"));
  EXPECT_FALSE(TimeRange::month("2010"));
}
