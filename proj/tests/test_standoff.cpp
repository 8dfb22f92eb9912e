#include <doctest.h>

#include <sstream>

#include "s2f/errors.hpp"
#include "s2f/standoff.hpp"

using namespace s2f;

namespace {

StandoffAnnotation ann(std::string type, std::string spans) {
  return StandoffAnnotation{"T1", std::move(type), parse_span_list(spans), ""};
}

}  // namespace

TEST_CASE("tokenizer splits whitespace and edge punctuation") {
  const auto toks = tokenize("  (severe) joint-pain, ok.");
  std::vector<std::string> texts;
  for (const Token& t : toks) texts.push_back(t.text);
  CHECK(texts == std::vector<std::string>{"(", "severe", ")", "joint-pain", ",", "ok", "."});
  CHECK(toks[1].begin == 3);
  CHECK(toks[1].end == 9);
}

TEST_CASE("span lists") {
  const auto spans = parse_span_list("0 6;13 17");
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == CharSpan{0, 6});
  CHECK(spans[1] == CharSpan{13, 17});
  CHECK_THROWS(parse_span_list("0;1"));
  CHECK_THROWS(parse_span_list("5 2"));
}

TEST_CASE("discontinuous character spans map to token fragments") {
  const std::vector<StandoffAnnotation> anns{ann("ADR", "0 6;13 17")};
  const auto r = import_standoff("severe joint pain", anns, AlignMode::kStrict);
  CHECK(r.sentence.tokens == std::vector<std::string>{"severe", "joint", "pain"});
  REQUIRE(r.sentence.entities.size() == 1);
  CHECK(r.sentence.entities[0].fragments == std::vector<Fragment>{{0, 0}, {2, 2}});
  CHECK(r.warnings.empty());
}

TEST_CASE("a span covering the whole text is one fragment") {
  const std::vector<StandoffAnnotation> anns{ann("ADR", "0 17")};
  const auto r = import_standoff("severe joint pain", anns, AlignMode::kStrict);
  CHECK(r.sentence.entities[0].fragments == std::vector<Fragment>{{0, 2}});
}

TEST_CASE("touching spans merge into one fragment") {
  const std::vector<StandoffAnnotation> anns{ann("ADR", "0 6;7 12")};
  const auto r = import_standoff("severe joint pain", anns, AlignMode::kStrict);
  CHECK(r.sentence.entities[0].fragments == std::vector<Fragment>{{0, 1}});
}

TEST_CASE("misaligned spans: strict error, lenient snap with warning") {
  const std::vector<StandoffAnnotation> anns{ann("ADR", "2 6")};
  CHECK_THROWS_AS(import_standoff("severe joint pain", anns, AlignMode::kStrict), AlignmentError);
  const auto r = import_standoff("severe joint pain", anns, AlignMode::kLenient);
  CHECK(r.sentence.entities[0].fragments == std::vector<Fragment>{{0, 0}});
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("standoff file parsing skips non-entity lines") {
  std::istringstream in(
      "T1\tADR 0 6;13 17\tsevere pain\n"
      "R1\tRel Arg1:T1 Arg2:T2\n"
      "#1\tAnnotatorNotes T1\tnote\n"
      "T2\tDrug 7 12\tjoint\n");
  const auto anns = parse_standoff(in);
  REQUIRE(anns.size() == 2);
  CHECK(anns[0].id == "T1");
  CHECK(anns[0].type == "ADR");
  CHECK(anns[0].spans.size() == 2);
  CHECK(anns[1].surface == "joint");
}
