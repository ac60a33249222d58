#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "fauxcheck/corpus.hpp"
#include "fauxcheck/error.hpp"
#include "synthetic.hpp"

using namespace fauxcheck;
using namespace fauxcheck::corpus;

namespace {

Corpus parse(const std::string& text) {
    std::istringstream in(text);
    return parse_corpus(in, "fixture");
}

std::string error_of(const std::string& text) {
    try {
        (void)parse(text);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

const char* kFour =
    R"({"id":"s1","claim":"Storm floods the harbour","label":"true","source":"snopes","published":"2018-03-04"})"
    "\n"
    R"({"id":"s2","claim":"Shark swims on highway","label":"false","source":"snopes"})"
    "\n"
    R"({"id":"r1","claim":"Minister opens bridge","label":"true","source":"reuters","image_ref":"img/r1.jpg"})"
    "\n"
    R"({"id":"o1","claim":"Giant cat statue","label":"false","source":"other"})"
    "\n";

}  // namespace

TEST_CASE("four-record fixture tallies") {
    const auto c = parse(kFour);
    CHECK(c.size() == 4);
    CHECK(c.count(Label::True) == 2);
    CHECK(c.count(Label::False) == 2);
    CHECK(c.count(Source::Reuters, Label::True) == 1);
    CHECK(c.pairs()[0].id == "s1");
    CHECK(c.pairs()[0].published->iso() == "2018-03-04");
    CHECK(c.pairs()[2].image_ref == "img/r1.jpg");
    CHECK(validate_corpus(c).empty());
}

TEST_CASE("blank lines are skipped") {
    CHECK(parse(std::string("\n") + kFour + "\n\n").size() == 4);
}

TEST_CASE("load errors carry line numbers") {
    CHECK(error_of("{\"id\":\"a\",\"claim\":\"x\",\"label\":\"true\",\"source\":\"snopes\"}\n{oops\n")
              .find("fixture:2") != std::string::npos);
    CHECK(error_of(R"({"id":"a","claim":"x","label":"maybe","source":"snopes"})").find("label") != std::string::npos);
    CHECK(error_of(R"({"id":"a","claim":"x","label":"true","source":"blog"})").find("source") != std::string::npos);
    CHECK(error_of(R"({"id":"a","claim":"   ","label":"true","source":"snopes"})").find("claim") != std::string::npos);
    CHECK(error_of(R"({"claim":"x","label":"true","source":"snopes"})").find("id") != std::string::npos);
    CHECK(error_of(R"({"id":"a","claim":"x","label":"true","source":"snopes","published":"2018-13-01"})")
              .find("published") != std::string::npos);
    const std::string dup = R"({"id":"a","claim":"x","label":"true","source":"snopes"})"
                            "\n"
                            R"({"id":"a","claim":"y","label":"false","source":"snopes"})";
    CHECK(error_of(dup).find("duplicate") != std::string::npos);
    CHECK(error_of(dup).find("fixture:2") != std::string::npos);
}

TEST_CASE("labels must be lowercase wire values") {
    CHECK_FALSE(parse_label("True").has_value());
    CHECK(parse_label("true") == Label::True);
    CHECK(parse_source("reuters") == Source::Reuters);
}

TEST_CASE("validation reports reuters False and duplicates") {
    std::vector<ImageClaimPair> pairs{{"r1", "claim", "", Label::False, Source::Reuters, std::nullopt}};
    auto v = validate_corpus(Corpus(pairs));
    REQUIRE(v.size() == 1);
    CHECK(v[0].id == "r1");

    pairs = {{"a", "one", "", Label::True, Source::Snopes, std::nullopt},
             {"a", "two", "", Label::False, Source::Snopes, std::nullopt}};
    v = validate_corpus(Corpus(pairs));
    REQUIRE(v.size() == 1);
    CHECK(v[0].message.find("duplicate") != std::string::npos);

    pairs = {{"b", "  ", "", Label::True, Source::Snopes, std::nullopt}};
    CHECK(validate_corpus(Corpus(pairs)).size() == 1);
}

TEST_CASE("write then load round-trips") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto c = testing::make_corpus({10, 12, 7, 3, "rt"}, seed);
        std::ostringstream out;
        write_corpus(c, out);
        CHECK(parse(out.str()) == c);

        std::size_t total = 0;
        for (const auto& row : c.counts()) total += row[0] + row[1];
        CHECK(total == c.size());
    }
    const auto dir = testing::scratch_dir("corpus-rt");
    const auto c = parse(kFour);
    write_corpus(c, dir / "c.jsonl");
    CHECK(load_corpus(dir / "c.jsonl") == c);
    CHECK_THROWS_AS((void)load_corpus(dir / "missing.jsonl"), DataError);
}

TEST_CASE("merging snopes and reuters sums True counts") {
    const auto snopes = testing::make_corpus({20, 64, 0, 0, "s"}, 1);
    const auto reuters = testing::make_corpus({0, 0, 39, 0, "r"}, 2);
    const std::vector<Corpus> parts{snopes, reuters};
    const auto merged = Corpus::merge(parts);
    CHECK(merged.count(Label::True) == snopes.count(Label::True) + reuters.count(Label::True));
    CHECK(merged.count(Label::True) == 59);
    CHECK(merged.size() == 123);
    CHECK(validate_corpus(merged).empty());
}
