#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "statefusion/catalog.hpp"
#include "statefusion/grid.hpp"
#include "statefusion/knowledge.hpp"

namespace statefusion {

/// Probability distribution over one axis, as emitted by a confidence provider.
struct ConfidenceVector {
    Axis kind = Axis::object;
    std::vector<double> values;

    friend bool operator==(const ConfidenceVector&, const ConfidenceVector&) = default;
};

/// Builds a confidence vector, rejecting negative or non-finite entries.
/// A sum off by more than 1e-6 is renormalized; off by more than 1e-3 also warns.
ConfidenceVector make_confidence(Axis kind, std::vector<double> values);

/// Knowledge-informed distribution produced by marginalizing over the other axis.
struct MarginalVector {
    Axis kind = Axis::object;
    std::vector<double> values;
};

/// Lowest index among the maximal entries.
std::size_t argmax(std::span<const double> values);

/// P(object_j) = sum_i P(state_i) * P(object_j | state_i)
MarginalVector marginal_objects(const ConfidenceVector& state_prior, const ConditionalMatrix& cm);

/// P(state_j) = sum_i P(object_i) * P(state_j | object_i)
MarginalVector marginal_states(const ConfidenceVector& object_prior, const ConditionalMatrix& cm);

/// alpha * prior + (1 - alpha) * marginal.
ConfidenceVector linear_blend(const ConfidenceVector& prior, const MarginalVector& marginal, double alpha);

/// Fixed order of the fusion feature vector:
/// [state priors | state marginals | object priors | object marginals]
struct FeatureLayout {
    std::size_t n_states = 0;
    std::size_t n_objects = 0;

    std::size_t length() const { return 2 * (n_states + n_objects); }
    std::size_t state_prior_offset() const { return 0; }
    std::size_t state_marginal_offset() const { return n_states; }
    std::size_t object_prior_offset() const { return 2 * n_states; }
    std::size_t object_marginal_offset() const { return 2 * n_states + n_objects; }

    /// Self-describing text, e.g. "state_prior[9]|state_marginal[9]|object_prior[15]|object_marginal[15]".
    std::string descriptor() const;
};

enum class Split { train, validation, test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view text);

struct Sample {
    std::string id;
    Split split = Split::train;
    std::size_t true_object = 0;
    std::size_t true_state = 0;
    ConfidenceVector object_conf{Axis::object, {}};
    ConfidenceVector state_conf{Axis::state, {}};

    const ConfidenceVector& confidence(Axis axis) const {
        return axis == Axis::object ? object_conf : state_conf;
    }
    std::size_t truth(Axis axis) const { return axis == Axis::object ? true_object : true_state; }
};

struct FusionFeatureVector {
    FeatureLayout layout;
    std::vector<double> values;
};

FusionFeatureVector build_feature_vector(const Sample& sample, const MarginalVector& marg_state,
                                         const MarginalVector& marg_object);

/// Marginals for every sample plus the feature matrix (one row per sample).
/// Runs the OpenMP kernels.
struct FusedBatch {
    FeatureLayout layout;
    Grid object_marginals;  // samples x N_objects
    Grid state_marginals;   // samples x N_states
    Grid features;          // samples x layout.length()
};

FusedBatch fuse_samples(std::span<const Sample> samples, const ConditionalPair& knowledge);

/// Confidence rows of one axis, samples x N.
Grid confidence_grid(std::span<const Sample> samples, Axis axis);

/// Samples of a given split, in dataset order.
std::vector<Sample> select_split(std::span<const Sample> samples, Split split);

/// JSON Lines dataset. The first line is a header recording the catalog
/// fingerprint; each following line is one sample with label names.
std::string samples_to_jsonl(std::span<const Sample> samples, const ClassCatalog& catalog);
std::vector<Sample> samples_from_jsonl(std::string_view text, const ClassCatalog& catalog);
void save_samples(std::span<const Sample> samples, const ClassCatalog& catalog,
                  const std::filesystem::path& path);
std::vector<Sample> load_samples(const std::filesystem::path& path, const ClassCatalog& catalog);

}  // namespace statefusion
