#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "statefusion/catalog.hpp"
#include "statefusion/grid.hpp"

namespace statefusion {

enum class KnowledgeSource { conceptnet, ngram };
enum class Aggregation { max, mean };

std::string_view to_string(KnowledgeSource source);
std::string_view to_string(Aggregation agg);
KnowledgeSource source_from_string(std::string_view text);
Aggregation aggregation_from_string(std::string_view text);

inline constexpr double kDefaultSmoothing = 1e-6;

/// One looked-up relatedness value between an object word and a state word.
struct RelatednessRecord {
    std::string object_word;
    std::string state_word;
    KnowledgeSource source = KnowledgeSource::conceptnet;
    double value = 0.0;
};

/// Aggregated relatedness per (object, state) label pair, before normalization.
/// Rows are objects, columns are states.
struct RawRelatednessMatrix {
    KnowledgeSource source = KnowledgeSource::conceptnet;
    Aggregation agg = Aggregation::max;
    std::string catalog_fingerprint;
    Grid values;

    friend bool operator==(const RawRelatednessMatrix&, const RawRelatednessMatrix&) = default;
};

enum class Direction { object_given_state, state_given_object };

std::string_view to_string(Direction direction);

/// Column-stochastic conditional probabilities. Rows index the predicted axis,
/// columns the conditioning axis:
///   object_given_state: N_objects x N_states, entry (o, s) = P(o | s)
///   state_given_object: N_states x N_objects, entry (s, o) = P(s | o)
struct ConditionalMatrix {
    Direction direction = Direction::object_given_state;
    Grid values;
    double epsilon = 0.0;

    double probability(std::size_t target, std::size_t given) const { return values(target, given); }
    std::size_t target_count() const { return values.rows(); }
    std::size_t given_count() const { return values.cols(); }

    friend bool operator==(const ConditionalMatrix&, const ConditionalMatrix&) = default;
};

struct ConditionalPair {
    ConditionalMatrix object_given_state;
    ConditionalMatrix state_given_object;
    std::string catalog_fingerprint;

    friend bool operator==(const ConditionalPair&, const ConditionalPair&) = default;
};

/// Throws ValidationError unless every column sums to 1 within `tolerance`
/// and every entry lies in [0, 1].
void check_conditional(const ConditionalMatrix& cm, double tolerance = 1e-9);

/// Max or mean of the values. Throws ValidationError on an empty list.
double aggregate_values(std::span<const double> values, Aggregation agg);

/// Looks up one (object word, state word) relatedness value.
using PairLookup = std::function<double(const std::string& object_word, const std::string& state_word)>;

/// Aggregates the lookup over the cross product of the two word sets.
double aggregate_pair(const LabelEntry& object_entry, const LabelEntry& state_entry,
                      Aggregation agg, const PairLookup& lookup);

/// Fills every (object, state) cell with aggregate_pair.
RawRelatednessMatrix build_raw_matrix(const ClassCatalog& catalog, KnowledgeSource source,
                                      Aggregation agg, const PairLookup& lookup);

/// Adds `epsilon` to each cell, then column-normalizes for P(object | state)
/// and row-normalizes (stored transposed) for P(state | object).
ConditionalPair normalize(const RawRelatednessMatrix& raw, double epsilon = kDefaultSmoothing);

std::string raw_matrix_to_json(const RawRelatednessMatrix& raw);
RawRelatednessMatrix raw_matrix_from_json(std::string_view text);

std::string conditionals_to_json(const ConditionalPair& pair);
/// Throws ValidationError if `expected_fingerprint` is non-empty and differs.
ConditionalPair conditionals_from_json(std::string_view text, std::string_view expected_fingerprint = {});

void save_conditionals(const ConditionalPair& pair, const std::filesystem::path& path);
ConditionalPair load_conditionals(const std::filesystem::path& path,
                                  std::string_view expected_fingerprint = {});

}  // namespace statefusion
