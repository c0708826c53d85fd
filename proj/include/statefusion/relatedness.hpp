#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "statefusion/catalog.hpp"
#include "statefusion/knowledge.hpp"

namespace statefusion {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Minimal GET interface the relatedness client talks to. Implementations
/// throw FetchError when no response could be obtained at all.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse get(const std::string& url) = 0;
};

struct PolitenessPolicy {
    std::size_t max_concurrent_per_host = 2;
    std::chrono::milliseconds min_spacing{200};
    int retries = 3;
    std::chrono::milliseconds initial_backoff{500};
};

/// Real network transport backed by cpp-httplib, rate limited per host.
std::unique_ptr<HttpTransport> make_network_transport(PolitenessPolicy policy = {});

/// Transport that refuses every request; used for offline runs.
class OfflineTransport final : public HttpTransport {
public:
    HttpResponse get(const std::string& url) override;
};

/// Persistent map from "source|w1|w2" to a relatedness value. Thread-safe.
class RelatednessCache {
public:
    RelatednessCache() = default;
    RelatednessCache(RelatednessCache&& other) noexcept;
    RelatednessCache& operator=(RelatednessCache&& other) noexcept;

    static std::string key(KnowledgeSource source, std::string_view object_word,
                           std::string_view state_word);

    std::optional<double> find(KnowledgeSource source, std::string_view object_word,
                               std::string_view state_word) const;
    void store(KnowledgeSource source, std::string_view object_word, std::string_view state_word,
               double value);
    std::size_t size() const;

    std::string to_json() const;
    static RelatednessCache from_json(std::string_view text);

    /// A missing file yields an empty cache.
    static RelatednessCache load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, double> entries_;
};

/// Cache location: $STATE_FUSION_CACHE if set, otherwise `fallback`.
std::filesystem::path resolve_cache_path(const std::filesystem::path& fallback);

/// ConceptNet concept term for a word or phrase: lowercase, spaces joined by '_'.
std::string conceptnet_term(std::string_view word);
std::string conceptnet_url(std::string_view w1, std::string_view w2);
std::string ngram_url(std::string_view first, std::string_view second);

/// Reads the "value" field, clamped into [0, 1].
double parse_conceptnet_response(std::string_view body);
/// Mean of the "timeseries" of the first entry; an empty list is 0.
double parse_ngram_response(std::string_view body);

/// Cache-first relatedness lookup over a transport.
class RelatednessClient {
public:
    /// `transport` may be null, in which case any cache miss is a FetchError.
    RelatednessClient(RelatednessCache& cache, HttpTransport* transport);

    RelatednessRecord fetch_pair(const std::string& object_word, const std::string& state_word,
                                 KnowledgeSource source);

    /// Adapter for build_raw_matrix.
    PairLookup lookup(KnowledgeSource source);

    /// Word pairs of the catalog that are not yet cached for `source`.
    std::vector<std::pair<std::string, std::string>> missing_pairs(const ClassCatalog& catalog,
                                                                   KnowledgeSource source) const;

    /// Fetches every missing pair using up to `parallelism` worker threads.
    /// Throws the first error encountered after all workers stop.
    void prefetch(const ClassCatalog& catalog, KnowledgeSource source, std::size_t parallelism = 2);

private:
    double fetch_remote(const std::string& object_word, const std::string& state_word,
                        KnowledgeSource source);

    RelatednessCache& cache_;
    HttpTransport* transport_;
};

}  // namespace statefusion
