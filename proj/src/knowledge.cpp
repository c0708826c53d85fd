#include "statefusion/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "statefusion/errors.hpp"
#include "statefusion/io.hpp"
#include "statefusion/kernels.hpp"

namespace statefusion {

using nlohmann::json;

std::string_view to_string(KnowledgeSource source) {
    return source == KnowledgeSource::conceptnet ? "conceptnet" : "ngram";
}

std::string_view to_string(Aggregation agg) {
    return agg == Aggregation::max ? "max" : "mean";
}

std::string_view to_string(Direction direction) {
    return direction == Direction::object_given_state ? "object_given_state" : "state_given_object";
}

KnowledgeSource source_from_string(std::string_view text) {
    if (text == "conceptnet") return KnowledgeSource::conceptnet;
    if (text == "ngram") return KnowledgeSource::ngram;
    throw ValidationError("unknown knowledge source '" + std::string(text) + "'");
}

Aggregation aggregation_from_string(std::string_view text) {
    if (text == "max") return Aggregation::max;
    if (text == "mean") return Aggregation::mean;
    throw ValidationError("unknown aggregation '" + std::string(text) + "'");
}

namespace {

Direction direction_from_string(std::string_view text) {
    if (text == "object_given_state") return Direction::object_given_state;
    if (text == "state_given_object") return Direction::state_given_object;
    throw ParseError("unknown direction '" + std::string(text) + "'");
}

}  // namespace

void check_conditional(const ConditionalMatrix& cm, double tolerance) {
    const Grid& v = cm.values;
    for (std::size_t c = 0; c < v.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < v.rows(); ++r) {
            const double p = v(r, c);
            if (!(p >= 0.0 && p <= 1.0))
                throw ValidationError(std::string(to_string(cm.direction)) + ": entry (" + std::to_string(r) +
                                      "," + std::to_string(c) + ") outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > tolerance)
            throw ValidationError(std::string(to_string(cm.direction)) + ": column " + std::to_string(c) +
                                  " sums to " + std::to_string(sum));
    }
}

double aggregate_values(std::span<const double> values, Aggregation agg) {
    if (values.empty()) throw ValidationError("cannot aggregate an empty value list");
    if (agg == Aggregation::max) return *std::max_element(values.begin(), values.end());
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double aggregate_pair(const LabelEntry& object_entry, const LabelEntry& state_entry, Aggregation agg,
                      const PairLookup& lookup) {
    std::vector<double> values;
    values.reserve(object_entry.words.size() * state_entry.words.size());
    for (const auto& ow : object_entry.words) {
        for (const auto& sw : state_entry.words) {
            try {
                values.push_back(lookup(ow, sw));
            } catch (const Error& e) {
                throw FetchError("pair (" + ow + ", " + sw + "): " + e.what());
            }
        }
    }
    return aggregate_values(values, agg);
}

RawRelatednessMatrix build_raw_matrix(const ClassCatalog& catalog, KnowledgeSource source, Aggregation agg,
                                      const PairLookup& lookup) {
    RawRelatednessMatrix raw;
    raw.source = source;
    raw.agg = agg;
    raw.catalog_fingerprint = catalog.fingerprint();
    raw.values = Grid(catalog.object_count(), catalog.state_count());
    for (std::size_t o = 0; o < catalog.object_count(); ++o) {
        for (std::size_t s = 0; s < catalog.state_count(); ++s) {
            try {
                const double v = aggregate_pair(catalog.objects()[o], catalog.states()[s], agg, lookup);
                if (!std::isfinite(v) || v < 0.0) throw ValidationError("invalid relatedness value");
                raw.values(o, s) = v;
            } catch (const Error& e) {
                throw FetchError("cell (" + catalog.objects()[o].name + ", " + catalog.states()[s].name +
                                 ") [" + std::to_string(o) + "," + std::to_string(s) + "]: " + e.what());
            }
        }
    }
    return raw;
}

ConditionalPair normalize(const RawRelatednessMatrix& raw, double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("smoothing epsilon must be >= 0");
    ConditionalPair pair;
    pair.catalog_fingerprint = raw.catalog_fingerprint;
    pair.object_given_state.direction = Direction::object_given_state;
    pair.object_given_state.epsilon = epsilon;
    pair.object_given_state.values = kernels::normalize_columns_omp(raw.values, epsilon);
    pair.state_given_object.direction = Direction::state_given_object;
    pair.state_given_object.epsilon = epsilon;
    pair.state_given_object.values = kernels::normalize_columns_omp(raw.values.transposed(), epsilon);
    return pair;
}

namespace {

json grid_to_json(const Grid& g) {
    return {{"rows", g.rows()}, {"cols", g.cols()}, {"values", g.data()}};
}

Grid grid_from_json(const json& j) {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != rows * cols) throw ParseError("grid value count does not match its shape");
    return Grid(rows, cols, std::move(values));
}

json conditional_to_json(const ConditionalMatrix& cm) {
    json j = grid_to_json(cm.values);
    j["direction"] = to_string(cm.direction);
    j["epsilon"] = cm.epsilon;
    return j;
}

ConditionalMatrix conditional_from_json(const json& j) {
    ConditionalMatrix cm;
    cm.direction = direction_from_string(j.at("direction").get<std::string>());
    cm.epsilon = j.at("epsilon").get<double>();
    cm.values = grid_from_json(j);
    return cm;
}

template <typename F>
auto parse_json_document(std::string_view text, F&& build) {
    try {
        return build(json::parse(text));
    } catch (const json::exception& e) {
        throw ParseError(e.what());
    }
}

}  // namespace

std::string raw_matrix_to_json(const RawRelatednessMatrix& raw) {
    json j = {{"format", "statefusion.raw_relatedness/1"},
              {"source", to_string(raw.source)},
              {"agg", to_string(raw.agg)},
              {"catalog_fingerprint", raw.catalog_fingerprint},
              {"matrix", grid_to_json(raw.values)}};
    return j.dump(2) + "\n";
}

RawRelatednessMatrix raw_matrix_from_json(std::string_view text) {
    return parse_json_document(text, [](const json& j) {
        RawRelatednessMatrix raw;
        raw.source = source_from_string(j.at("source").get<std::string>());
        raw.agg = aggregation_from_string(j.at("agg").get<std::string>());
        raw.catalog_fingerprint = j.at("catalog_fingerprint").get<std::string>();
        raw.values = grid_from_json(j.at("matrix"));
        return raw;
    });
}

std::string conditionals_to_json(const ConditionalPair& pair) {
    json j = {{"format", "statefusion.conditionals/1"},
              {"catalog_fingerprint", pair.catalog_fingerprint},
              {"object_given_state", conditional_to_json(pair.object_given_state)},
              {"state_given_object", conditional_to_json(pair.state_given_object)}};
    return j.dump(2) + "\n";
}

ConditionalPair conditionals_from_json(std::string_view text, std::string_view expected_fingerprint) {
    auto pair = parse_json_document(text, [](const json& j) {
        ConditionalPair p;
        p.catalog_fingerprint = j.at("catalog_fingerprint").get<std::string>();
        p.object_given_state = conditional_from_json(j.at("object_given_state"));
        p.state_given_object = conditional_from_json(j.at("state_given_object"));
        return p;
    });
    if (!expected_fingerprint.empty() && pair.catalog_fingerprint != expected_fingerprint)
        throw ValidationError("conditionals were built for catalog " + pair.catalog_fingerprint +
                              ", expected " + std::string(expected_fingerprint));
    if (pair.object_given_state.direction != Direction::object_given_state ||
        pair.state_given_object.direction != Direction::state_given_object)
        throw ValidationError("conditional matrices are stored under the wrong direction");
    if (pair.object_given_state.values.rows() != pair.state_given_object.values.cols() ||
        pair.object_given_state.values.cols() != pair.state_given_object.values.rows())
        throw ValidationError("conditional matrix shapes disagree");
    return pair;
}

void save_conditionals(const ConditionalPair& pair, const std::filesystem::path& path) {
    write_text_file(path, conditionals_to_json(pair));
}

ConditionalPair load_conditionals(const std::filesystem::path& path, std::string_view expected_fingerprint) {
    return conditionals_from_json(read_text_file(path), expected_fingerprint);
}

}  // namespace statefusion
