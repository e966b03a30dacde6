// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include "poolnet/data.hpp"
#include "poolnet/synthetic.hpp"

using namespace poolnet;

namespace {

std::vector<AttributeRecord> read(const std::string& text, InputFormat f) {
  std::istringstream in(text);
  return ingest(in, f);
}

}  // namespace

TEST_CASE("csv ingest keeps values verbatim") {
  const auto recs = read(
      "source,attribute,value\n"
      "epa,mileage,\"21 city / 32 hwy EPA Fuel Economy Guide\"\n"
      "epa,price,\"$12,345\"\n"
      "epa,note,\"say \"\"hi\"\"\"\n"
      "epa,color,\n"
      "epa,color,\n",
      InputFormat::delimited);
  REQUIRE(recs.size() == 5);
  CHECK(recs[0] == AttributeRecord{"epa", "mileage", "21 city / 32 hwy EPA Fuel Economy Guide"});
  CHECK(recs[1].value == "$12,345");
  CHECK(recs[2].value == "say \"hi\"");
  CHECK(recs[3].value.empty());
  CHECK(recs[3] == recs[4]);  // duplicates are kept

  // Column order comes from the header.
  const auto swapped = read("value,source,attribute\nx,s,a\n", InputFormat::delimited);
  CHECK(swapped[0] == AttributeRecord{"s", "a", "x"});
}

TEST_CASE("csv errors carry line numbers") {
  try {
    read("source,attribute,value\ns,a,1\ns,,2\n", InputFormat::delimited);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(read("source,attribute\ns,a\n", InputFormat::delimited), DataError);
  CHECK_THROWS_AS(read("source,attribute,value\ns,a\n", InputFormat::delimited), DataError);
  CHECK_THROWS_AS(read("source,attribute,value\ns,a,\"open\n", InputFormat::delimited), DataError);
  CHECK_THROWS_AS(read("", InputFormat::delimited), ArgumentError);
}

TEST_CASE("jsonl ingest") {
  const auto recs = read(
      "{\"source\":\"a\",\"attribute\":\"color\",\"value\":\"Black\"}\n"
      "\n"
      "{\"source\":\"b\",\"attribute\":\"price\",\"value\":\"\\u00a5100\"}\n",
      InputFormat::record_per_line);
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].value == "\xC2\xA5" "100");
  try {
    read("{\"source\":\"a\",\"attribute\":\"c\",\"value\":\"x\"}\n{bad\n", InputFormat::record_per_line);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(read("{\"source\":\"a\",\"attribute\":\"c\"}\n", InputFormat::record_per_line), DataError);
  CHECK_THROWS_AS(read("{\"source\":\"a\",\"attribute\":\"c\",\"value\":3}\n", InputFormat::record_per_line),
                  DataError);
  CHECK_THROWS_AS(read("\n\n", InputFormat::record_per_line), ArgumentError);
}

TEST_CASE("write_records round-trips through ingest") {
  SyntheticOptions so;
  so.records_per_source = 20;
  const auto recs = generate_synthetic(so);
  for (InputFormat f : {InputFormat::delimited, InputFormat::record_per_line}) {
    std::ostringstream out;
    write_records(out, recs, f);
    CHECK(read(out.str(), f) == recs);
  }
}

TEST_CASE("utf-8 decoding") {
  CHECK(decode_utf8("a\xC2\xA5") == U"a\u00A5");
  CHECK(decode_utf8("\xFF") == U"\uFFFD");
  CHECK(encode_utf8(U"\u00E9\u20AC") == "\xC3\xA9\xE2\x82\xAC");
}

TEST_CASE("character vocabulary") {
  const CharVocabulary v({U'c', U'a', U'b', U'a'});
  CHECK(v.size() == 6);
  CHECK(v.index_of(U'a') == 3);
  CHECK(v.index_of(U'c') == 5);
  CHECK(v.index_of(U'z') == kUnkIndex);
  CHECK(v.character_at(4) == U'b');
  CHECK_THROWS_AS(v.character_at(kBosIndex), VocabularyError);
  CHECK_THROWS_AS(v.character_at(6), VocabularyError);

  const std::vector<AttributeRecord> recs{{"s", "a", "ba"}, {"s", "b", "ab"}};
  CHECK(build_vocab(recs) == CharVocabulary({U'a', U'b'}));
}

TEST_CASE("encode and decode") {
  const CharVocabulary v({U'1', U'2', U'$'});
  CHECK(encode(v, "") == std::vector<int>{kBosIndex, kEosIndex});
  const std::vector<int> e = encode(v, "$12");
  CHECK(e.size() == 5);
  CHECK(e.front() == kBosIndex);
  CHECK(e.back() == kEosIndex);
  CHECK(decode(v, e) == "$12");
  // A character absent from training maps to UNK.
  const std::vector<int> yen = encode(v, "\xC2\xA5" "1");
  CHECK(yen[1] == kUnkIndex);
  CHECK(decode(v, yen) == "\xEF\xBF\xBD" "1");
}

TEST_CASE("catalog grouping and source splits") {
  const std::vector<AttributeRecord> recs{
      {"s1", "price", "1"}, {"s2", "color", "red"}, {"s1", "color", "blue"}, {"s3", "price", "2"}};
  const DomainCatalog cat(recs);
  CHECK(cat.attributes() == std::vector<std::string>{"color", "price"});
  CHECK(cat.size() == 4);
  CHECK(sources_of(recs) == std::vector<std::string>{"s1", "s2", "s3"});

  const SourceSplit split = split_by_source(recs, "s1");
  CHECK(split.test.size() == 2);
  for (const auto& r : split.test) CHECK(r.source == "s1");
  CHECK(split.catalog.size() == 2);
  CHECK(split.catalog.sources().count("s1") == 0);
  CHECK_THROWS_AS(split_by_source(recs, "nope"), ArgumentError);
  const std::vector<AttributeRecord> single{{"s", "a", "x"}};
  CHECK_THROWS_AS(split_by_source(single, "s"), ArgumentError);
}

TEST_CASE("synthetic generator") {
  SyntheticOptions so;
  so.sources = 4;
  so.records_per_source = 23;
  const auto a = generate_synthetic(so);
  CHECK(a == generate_synthetic(so));
  CHECK(a.size() == 92);
  CHECK(sources_of(a).size() == 4);
  const DomainCatalog cat(a);
  for (const auto& [attr, rs] : cat.by_attribute()) {
    CHECK(rs.size() >= 4 * 4);
    CHECK(rs.size() <= 4 * 5);
  }
  so.attributes = {"no-such-kind"};
  CHECK_THROWS_AS(generate_synthetic(so), ArgumentError);
}
