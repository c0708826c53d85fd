#include "statefusion/relatedness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <set>
#include <thread>

#include <json.hpp>

#include "statefusion/errors.hpp"
#include "statefusion/io.hpp"

#ifdef STATEFUSION_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace statefusion {

using nlohmann::json;

namespace {

std::string percent_encode(std::string_view text, std::string_view keep) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '-' || c == '.' || c == '~' || keep.find(static_cast<char>(c)) != std::string_view::npos) {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

std::string ngram_phrase(std::string_view word) {
    std::string out;
    for (char c : normalize_word(word)) out += c == ' ' ? '+' : c;
    return percent_encode(out, "+_");
}

}  // namespace

// ---------------------------------------------------------------- transports

HttpResponse OfflineTransport::get(const std::string& url) {
    throw FetchError("offline mode: refusing network request to " + url);
}

namespace {

class NetworkTransport final : public HttpTransport {
public:
    explicit NetworkTransport(PolitenessPolicy policy) : policy_(policy) {}

    HttpResponse get(const std::string& url) override {
        const auto [origin, target] = split_url(url);
        HostSlot& slot = acquire(origin);
        HttpResponse response;
        std::exception_ptr failure;
        try {
            response = get_with_retries(origin, target);
        } catch (...) {
            failure = std::current_exception();
        }
        release(slot);
        if (failure) std::rethrow_exception(failure);
        return response;
    }

private:
    struct HostSlot {
        std::size_t active = 0;
        std::chrono::steady_clock::time_point next_allowed{};
    };

    static std::pair<std::string, std::string> split_url(const std::string& url) {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw FetchError("malformed url " + url);
        const auto path_start = url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) return {url, "/"};
        return {url.substr(0, path_start), url.substr(path_start)};
    }

    HostSlot& acquire(const std::string& origin) {
        std::unique_lock lock(mutex_);
        HostSlot& slot = hosts_[origin];
        cv_.wait(lock, [&] { return slot.active < policy_.max_concurrent_per_host; });
        ++slot.active;
        const auto now = std::chrono::steady_clock::now();
        const auto start = std::max(now, slot.next_allowed);
        slot.next_allowed = start + policy_.min_spacing;
        lock.unlock();
        std::this_thread::sleep_until(start);
        return slot;
    }

    void release(HostSlot& slot) {
        {
            std::lock_guard lock(mutex_);
            --slot.active;
        }
        cv_.notify_all();
    }

    HttpResponse get_with_retries(const std::string& origin, const std::string& target) {
        auto backoff = policy_.initial_backoff;
        std::string last_error;
        for (int attempt = 0; attempt <= policy_.retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
            httplib::Client client(origin);
            client.set_follow_location(true);
            client.set_connection_timeout(10);
            client.set_read_timeout(30);
            auto result = client.Get(target);
            if (!result) {
                last_error = httplib::to_string(result.error());
                continue;
            }
            if (result->status == 429 || result->status >= 500) {
                last_error = "HTTP " + std::to_string(result->status);
                continue;
            }
            return {result->status, result->body};
        }
        throw FetchError("request to " + origin + target + " failed after " +
                         std::to_string(policy_.retries + 1) + " attempts: " + last_error);
    }

    PolitenessPolicy policy_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::map<std::string, HostSlot> hosts_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_network_transport(PolitenessPolicy policy) {
    return std::make_unique<NetworkTransport>(policy);
}

// --------------------------------------------------------------------- cache

RelatednessCache::RelatednessCache(RelatednessCache&& other) noexcept {
    std::lock_guard lock(other.mutex_);
    entries_ = std::move(other.entries_);
}

RelatednessCache& RelatednessCache::operator=(RelatednessCache&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        entries_ = std::move(other.entries_);
    }
    return *this;
}

std::string RelatednessCache::key(KnowledgeSource source, std::string_view object_word,
                                  std::string_view state_word) {
    return std::string(to_string(source)) + "|" + std::string(object_word) + "|" + std::string(state_word);
}

std::optional<double> RelatednessCache::find(KnowledgeSource source, std::string_view object_word,
                                             std::string_view state_word) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key(source, object_word, state_word));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void RelatednessCache::store(KnowledgeSource source, std::string_view object_word, std::string_view state_word,
                             double value) {
    std::lock_guard lock(mutex_);
    entries_[key(source, object_word, state_word)] = value;
}

std::size_t RelatednessCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string RelatednessCache::to_json() const {
    std::lock_guard lock(mutex_);
    json j = json::object();
    for (const auto& [k, v] : entries_) j[k] = v;
    return j.dump(2) + "\n";
}

RelatednessCache RelatednessCache::from_json(std::string_view text) {
    RelatednessCache cache;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ParseError("relatedness cache must be a JSON object");
        for (const auto& [k, v] : j.items()) {
            if (k.rfind("_", 0) == 0) continue;  // annotations such as "_comment"
            if (!v.is_number()) throw ParseError("cache entry '" + k + "' is not a number");
            const double value = v.get<double>();
            if (!std::isfinite(value) || value < 0.0) throw ParseError("cache entry '" + k + "' is negative");
            cache.entries_[k] = value;
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("relatedness cache: ") + e.what());
    }
    return cache;
}

RelatednessCache RelatednessCache::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    return from_json(read_text_file(path));
}

void RelatednessCache::save(const std::filesystem::path& path) const {
    write_text_file(path, to_json());
}

std::filesystem::path resolve_cache_path(const std::filesystem::path& fallback) {
    if (const char* env = std::getenv("STATE_FUSION_CACHE"); env && *env) return env;
    return fallback;
}

// ------------------------------------------------------------------ endpoints

std::string conceptnet_term(std::string_view word) {
    std::string out;
    for (char c : normalize_word(word)) out += c == ' ' ? '_' : c;
    return out;
}

std::string conceptnet_url(std::string_view w1, std::string_view w2) {
    return "http://api.conceptnet.io/relatedness?node1=/c/en/" + percent_encode(conceptnet_term(w1), "_") +
           "&node2=/c/en/" + percent_encode(conceptnet_term(w2), "_");
}

std::string ngram_url(std::string_view first, std::string_view second) {
    return "https://books.google.com/ngrams/json?content=" + ngram_phrase(first) + "+" + ngram_phrase(second) +
           "&year_start=1970&year_end=2008&corpus=en-2019&smoothing=0";
}

double parse_conceptnet_response(std::string_view body) {
    try {
        const json j = json::parse(body);
        if (!j.is_object() || !j.contains("value") || !j["value"].is_number())
            throw ParseError("ConceptNet response has no numeric \"value\"");
        const double v = j["value"].get<double>();
        if (!std::isfinite(v)) throw ParseError("ConceptNet value is not finite");
        return std::clamp(v, 0.0, 1.0);
    } catch (const json::exception& e) {
        throw ParseError(std::string("ConceptNet response: ") + e.what());
    }
}

double parse_ngram_response(std::string_view body) {
    try {
        const json j = json::parse(body);
        if (!j.is_array()) throw ParseError("N-gram response is not a list");
        if (j.empty()) return 0.0;
        const auto& series = j.front().at("timeseries");
        if (!series.is_array()) throw ParseError("N-gram \"timeseries\" is not a list");
        if (series.empty()) return 0.0;
        double sum = 0.0;
        for (const auto& v : series) {
            if (!v.is_number()) throw ParseError("N-gram timeseries holds a non-number");
            sum += v.get<double>();
        }
        const double mean = sum / static_cast<double>(series.size());
        if (!std::isfinite(mean)) throw ParseError("N-gram mean is not finite");
        return std::max(mean, 0.0);
    } catch (const json::exception& e) {
        throw ParseError(std::string("N-gram response: ") + e.what());
    }
}

// -------------------------------------------------------------------- client

RelatednessClient::RelatednessClient(RelatednessCache& cache, HttpTransport* transport)
    : cache_(cache), transport_(transport) {}

RelatednessRecord RelatednessClient::fetch_pair(const std::string& object_word, const std::string& state_word,
                                                KnowledgeSource source) {
    RelatednessRecord record{object_word, state_word, source, 0.0};
    if (auto hit = cache_.find(source, object_word, state_word)) {
        record.value = *hit;
        return record;
    }
    record.value = fetch_remote(object_word, state_word, source);
    cache_.store(source, object_word, state_word, record.value);
    return record;
}

double RelatednessClient::fetch_remote(const std::string& object_word, const std::string& state_word,
                                       KnowledgeSource source) {
    if (transport_ == nullptr)
        throw FetchError("no cached " + std::string(to_string(source)) + " value for (" + object_word + ", " +
                         state_word + ") and network access is disabled");

    auto request = [&](const std::string& url, auto parse) -> double {
        const HttpResponse response = transport_->get(url);
        if (response.status == 404) return 0.0;
        if (response.status != 200)
            throw SourceError(response.status, std::string(to_string(source)) + " returned HTTP " +
                                                   std::to_string(response.status) + " for " + url);
        return parse(response.body);
    };

    if (source == KnowledgeSource::conceptnet)
        return request(conceptnet_url(object_word, state_word), parse_conceptnet_response);
    return std::max(request(ngram_url(object_word, state_word), parse_ngram_response),
                    request(ngram_url(state_word, object_word), parse_ngram_response));
}

PairLookup RelatednessClient::lookup(KnowledgeSource source) {
    return [this, source](const std::string& ow, const std::string& sw) { return fetch_pair(ow, sw, source).value; };
}

std::vector<std::pair<std::string, std::string>> RelatednessClient::missing_pairs(const ClassCatalog& catalog,
                                                                                  KnowledgeSource source) const {
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<std::pair<std::string, std::string>> missing;
    for (const auto& object : catalog.objects())
        for (const auto& state : catalog.states())
            for (const auto& ow : object.words)
                for (const auto& sw : state.words)
                    if (!cache_.find(source, ow, sw) && seen.emplace(ow, sw).second) missing.emplace_back(ow, sw);
    return missing;
}

void RelatednessClient::prefetch(const ClassCatalog& catalog, KnowledgeSource source, std::size_t parallelism) {
    const auto pairs = missing_pairs(catalog, source);
    if (pairs.empty()) return;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex error_mutex;
    std::size_t error_index = pairs.size();
    std::exception_ptr error;

    auto worker = [&] {
        while (!stop) {
            const std::size_t i = next++;
            if (i >= pairs.size()) return;
            try {
                fetch_pair(pairs[i].first, pairs[i].second, source);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
                stop = true;
            }
        }
    };

    const std::size_t n_workers = std::clamp<std::size_t>(parallelism, 1, pairs.size());
    std::vector<std::thread> workers;
    for (std::size_t w = 1; w < n_workers; ++w) workers.emplace_back(worker);
    worker();
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace statefusion
