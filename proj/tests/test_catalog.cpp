#include <gtest/gtest.h>

#include "statefusion/catalog.hpp"
#include "statefusion/errors.hpp"
#include "test_support.hpp"

using namespace statefusion;

namespace {

const char* kPotatoCreamy = R"({
  "objects": [{"name": "potato", "words": ["potato", "potatoes"]}],
  "states": [{"name": "creamy", "words": ["creamy", "paste", "mashed", "mash", "softened", "whipped"]}]
})";

}  // namespace

TEST(Catalog, LoadsWordSetsInFileOrder) {
    const auto c = parse_catalog(kPotatoCreamy);
    EXPECT_EQ(c.object_count(), 1u);
    EXPECT_EQ(c.state_count(), 1u);
    EXPECT_EQ(c.objects()[0].words, (std::vector<std::string>{"potato", "potatoes"}));
    EXPECT_EQ(c.states()[0].words.size(), 6u);
    EXPECT_EQ(c.feature_length(), 4u);
}

TEST(Catalog, DuplicateLabelIsRejectedWithLineContext) {
    const char* text = R"({
  "objects": [
    {"name": "potato"},
    {"name": "potato"}
  ],
  "states": [{"name": "sliced"}]
})";
    try {
        parse_catalog(text, "dup.json");
        FAIL() << "expected a duplicate-label error";
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("duplicate"), std::string::npos) << what;
        EXPECT_NE(what.find("potato"), std::string::npos) << what;
        EXPECT_NE(what.find("dup.json:4"), std::string::npos) << what;
    }
}

TEST(Catalog, DuplicateIsCaseInsensitive) {
    EXPECT_THROW(parse_catalog(R"({"objects":[{"name":"Potato"},{"name":"potato"}],"states":[{"name":"x"}]})"),
                 ValidationError);
}

TEST(Catalog, EmptyWordSetIsAnError) {
    try {
        parse_catalog(R"({"objects":[{"name":"potato","words":[]}],"states":[{"name":"x"}]})");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("potato"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("empty word set"), std::string::npos);
    }
}

TEST(Catalog, BlankOrDuplicateWordsAreErrors) {
    EXPECT_THROW(parse_catalog(R"({"objects":[{"name":"a","words":["  "]}],"states":[{"name":"x"}]})"),
                 ValidationError);
    EXPECT_THROW(parse_catalog(R"({"objects":[{"name":"a","words":["b","B "]}],"states":[{"name":"x"}]})"),
                 ValidationError);
}

TEST(Catalog, ParseFailureReportsLine) {
    try {
        parse_catalog("{\n\"objects\": [\n,\n]}", "broken.json");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("broken.json:3"), std::string::npos) << e.what();
    }
}

TEST(Catalog, NameIsImplicitlyAWord) {
    const auto c = parse_catalog(R"({"objects":[{"name":"Bread","words":["loaf"]},{"name":"egg"}],
                                     "states":[{"name":"sliced","words":["sliced","slices"]}]})");
    EXPECT_EQ(c.objects()[0].name, "bread");
    EXPECT_EQ(c.objects()[0].words, (std::vector<std::string>{"bread", "loaf"}));
    EXPECT_EQ(c.objects()[1].words, (std::vector<std::string>{"egg"}));
    EXPECT_EQ(c.states()[0].words, (std::vector<std::string>{"sliced", "slices"}));
}

TEST(Catalog, IndexOf) {
    const auto c = parse_catalog(R"({"objects":[{"name":"potato"},{"name":"tomato"}],"states":[{"name":"creamy"}]})");
    EXPECT_EQ(c.index_of(Axis::object, "tomato"), 1u);
    EXPECT_EQ(c.index_of(Axis::state, "diced"), std::nullopt);
    EXPECT_EQ(c.index_of(Axis::object, "Potato"), 0u);
    EXPECT_THROW(c.require_index(Axis::state, "diced"), ValidationError);
}

TEST(Catalog, IndexOfEveryEntryIsItsPosition) {
    const auto c = load_catalog(support::data_dir() / "catalog_default.json");
    for (Axis axis : {Axis::object, Axis::state})
        for (std::size_t i = 0; i < c.count(axis); ++i) EXPECT_EQ(c.index_of(axis, c.labels(axis)[i].name), i);
}

TEST(Catalog, DefaultCatalogHas15ObjectsAnd9States) {
    const auto c = load_catalog(support::data_dir() / "catalog_default.json");
    EXPECT_EQ(c.object_count(), 15u);
    EXPECT_EQ(c.state_count(), 9u);
    EXPECT_EQ(c.feature_length(), 48u);
    const auto potato = c.index_of(Axis::object, "potato");
    ASSERT_TRUE(potato);
    EXPECT_EQ(c.objects()[*potato].words, (std::vector<std::string>{"potato", "potatoes"}));
    const auto creamy = c.index_of(Axis::state, "creamy");
    ASSERT_TRUE(creamy);
    EXPECT_EQ(c.states()[*creamy].words,
              (std::vector<std::string>{"creamy", "paste", "mashed", "mash", "softened", "whipped"}));
}

TEST(Catalog, SaveLoadRoundTrip) {
    support::TempDir dir("catalog_rt");
    const auto c = load_catalog(support::data_dir() / "catalog_default.json");
    save_catalog(c, dir.path() / "c.json");
    const auto back = load_catalog(dir.path() / "c.json");
    EXPECT_EQ(back, c);
    EXPECT_EQ(back.fingerprint(), c.fingerprint());
}

TEST(Catalog, FingerprintTracksLabelOrder) {
    const auto a = parse_catalog(R"({"objects":[{"name":"a"},{"name":"b"}],"states":[{"name":"x"},{"name":"y"}]})");
    const auto b = parse_catalog(R"({"objects":[{"name":"b"},{"name":"a"}],"states":[{"name":"x"},{"name":"y"}]})");
    EXPECT_NE(a.fingerprint(), b.fingerprint());
    EXPECT_NO_THROW(a.require_classifiable());
    EXPECT_THROW(parse_catalog(kPotatoCreamy).require_classifiable(), ValidationError);
}
