#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <map>
#include <mutex>

#include "statefusion/catalog.hpp"
#include "statefusion/errors.hpp"
#include "statefusion/io.hpp"
#include "statefusion/relatedness.hpp"
#include "test_support.hpp"

using namespace statefusion;

namespace {

/// Serves canned responses by URL and counts requests.
class FakeTransport : public HttpTransport {
public:
    HttpResponse get(const std::string& url) override {
        ++calls;
        std::lock_guard lock(mutex);
        urls.push_back(url);
        if (auto it = responses.find(url); it != responses.end()) return it->second;
        return fallback;
    }

    std::map<std::string, HttpResponse> responses;
    HttpResponse fallback{200, R"({"value": 0.25})"};
    std::atomic<int> calls{0};
    std::mutex mutex;
    std::vector<std::string> urls;
};

std::string conceptnet_body(double v) { return R"({"value": )" + std::to_string(v) + "}"; }

}  // namespace

TEST(Relatedness, ConceptnetUrlUsesEnglishConceptTerms) {
    EXPECT_EQ(conceptnet_url("Tomato", "ice cream"),
              "http://api.conceptnet.io/relatedness?node1=/c/en/tomato&node2=/c/en/ice_cream");
}

TEST(Relatedness, NgramUrlJoinsBothWords) {
    const auto url = ngram_url("tomato", "paste");
    EXPECT_NE(url.find("content=tomato+paste"), std::string::npos) << url;
    EXPECT_EQ(url.rfind("https://books.google.com/ngrams/json?", 0), 0u);
}

TEST(Relatedness, ParsesFixtureResponses) {
    EXPECT_DOUBLE_EQ(parse_conceptnet_response(read_text_file(support::fixture_dir() / "conceptnet_response.json")),
                     0.372);
    EXPECT_NEAR(parse_ngram_response(read_text_file(support::fixture_dir() / "ngram_response.json")), 3.0e-7,
                1e-20);
    EXPECT_DOUBLE_EQ(parse_ngram_response("[]"), 0.0);
}

TEST(Relatedness, NegativeConceptnetScoreClampsToZero) {
    EXPECT_DOUBLE_EQ(parse_conceptnet_response(R"({"value": -0.1})"), 0.0);
}

TEST(Relatedness, MalformedBodiesAreParseErrors) {
    EXPECT_THROW(parse_conceptnet_response("{"), ParseError);
    EXPECT_THROW(parse_conceptnet_response(R"({"other": 1})"), ParseError);
    EXPECT_THROW(parse_ngram_response(R"({"a": 1})"), ParseError);
}

TEST(Relatedness, CacheHitMakesNoRequest) {
    RelatednessCache cache;
    cache.store(KnowledgeSource::conceptnet, "tomato", "paste", 0.9);
    FakeTransport transport;
    RelatednessClient client(cache, &transport);
    EXPECT_DOUBLE_EQ(client.fetch_pair("tomato", "paste", KnowledgeSource::conceptnet).value, 0.9);
    EXPECT_EQ(transport.calls, 0);
}

TEST(Relatedness, MissFetchesOnceAndCaches) {
    RelatednessCache cache;
    FakeTransport transport;
    transport.responses[conceptnet_url("tomato", "paste")] = {200, conceptnet_body(0.5)};
    RelatednessClient client(cache, &transport);
    EXPECT_DOUBLE_EQ(client.fetch_pair("tomato", "paste", KnowledgeSource::conceptnet).value, 0.5);
    EXPECT_DOUBLE_EQ(client.fetch_pair("tomato", "paste", KnowledgeSource::conceptnet).value, 0.5);
    EXPECT_EQ(transport.calls, 1);
    EXPECT_EQ(cache.find(KnowledgeSource::conceptnet, "tomato", "paste"), 0.5);
}

TEST(Relatedness, NotFoundIsZero) {
    RelatednessCache cache;
    FakeTransport transport;
    transport.fallback = {404, ""};
    RelatednessClient client(cache, &transport);
    EXPECT_DOUBLE_EQ(client.fetch_pair("zzz", "qqq", KnowledgeSource::conceptnet).value, 0.0);
}

TEST(Relatedness, ServerErrorCarriesStatus) {
    RelatednessCache cache;
    FakeTransport transport;
    transport.fallback = {503, "busy"};
    RelatednessClient client(cache, &transport);
    try {
        client.fetch_pair("tomato", "paste", KnowledgeSource::conceptnet);
        FAIL();
    } catch (const SourceError& e) {
        EXPECT_EQ(e.status(), 503);
    }
    EXPECT_EQ(cache.size(), 0u);
}

TEST(Relatedness, NgramTakesTheLargerWordOrder) {
    RelatednessCache cache;
    FakeTransport transport;
    transport.responses[ngram_url("tomato", "paste")] = {200, R"([{"timeseries": [1e-8, 3e-8]}])"};
    transport.responses[ngram_url("paste", "tomato")] = {200, R"([{"timeseries": [5e-8]}])"};
    RelatednessClient client(cache, &transport);
    EXPECT_DOUBLE_EQ(client.fetch_pair("tomato", "paste", KnowledgeSource::ngram).value, 5e-8);
    EXPECT_EQ(transport.calls, 2);
}

TEST(Relatedness, OfflineMissIsFetchError) {
    RelatednessCache cache;
    RelatednessClient client(cache, nullptr);
    EXPECT_THROW(client.fetch_pair("tomato", "paste", KnowledgeSource::conceptnet), FetchError);
    OfflineTransport offline;
    RelatednessClient client2(cache, &offline);
    EXPECT_THROW(client2.fetch_pair("tomato", "paste", KnowledgeSource::conceptnet), FetchError);
}

TEST(Relatedness, MissingPairsAndPrefetch) {
    const auto catalog = load_catalog(support::fixture_dir() / "catalog_tomato.json");
    RelatednessCache cache;
    cache.store(KnowledgeSource::conceptnet, "tomato", "diced", 0.5);
    FakeTransport transport;
    RelatednessClient client(cache, &transport);
    // 3 object words x 3 state words, one cached
    EXPECT_EQ(client.missing_pairs(catalog, KnowledgeSource::conceptnet).size(), 11u);
    client.prefetch(catalog, KnowledgeSource::conceptnet, 3);
    EXPECT_EQ(transport.calls, 11);
    EXPECT_TRUE(client.missing_pairs(catalog, KnowledgeSource::conceptnet).empty());
    client.prefetch(catalog, KnowledgeSource::conceptnet, 3);
    EXPECT_EQ(transport.calls, 11);
}

TEST(Relatedness, PrefetchRethrowsWorkerError) {
    const auto catalog = load_catalog(support::fixture_dir() / "catalog_tomato.json");
    RelatednessCache cache;
    FakeTransport transport;
    transport.fallback = {500, "oops"};
    RelatednessClient client(cache, &transport);
    EXPECT_THROW(client.prefetch(catalog, KnowledgeSource::conceptnet, 2), SourceError);
}

TEST(Relatedness, CacheFileRoundTripIgnoresAnnotations) {
    support::TempDir dir("cache");
    const auto fixture = RelatednessCache::load(support::fixture_dir() / "cache_tomato.json");
    EXPECT_EQ(fixture.size(), 24u);
    fixture.save(dir.path() / "c.json");
    const auto back = RelatednessCache::load(dir.path() / "c.json");
    EXPECT_EQ(back.to_json(), fixture.to_json());
    EXPECT_EQ(RelatednessCache::load(dir.path() / "missing.json").size(), 0u);
    EXPECT_THROW(RelatednessCache::from_json(R"({"conceptnet|a|b": -1})"), ParseError);
}

TEST(Relatedness, CachePathHonoursEnvironment) {
    ::setenv("STATE_FUSION_CACHE", "/tmp/elsewhere.json", 1);
    EXPECT_EQ(resolve_cache_path("default.json"), "/tmp/elsewhere.json");
    ::unsetenv("STATE_FUSION_CACHE");
    EXPECT_EQ(resolve_cache_path("default.json"), "default.json");
}
