#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "statefusion/catalog.hpp"
#include "statefusion/fusion.hpp"
#include "statefusion/gate.hpp"
#include "statefusion/grid.hpp"
#include "statefusion/knowledge.hpp"

namespace statefusion {

/// Parameters of a synthetic world.
struct WorldSpec {
    std::size_t n_objects = 15;
    std::size_t n_states = 9;
    Grid joint;             // n_objects x n_states, sums to 1
    double signal = 1.2;    // logit added to the true class
    double sigma = 0.5;     // std of per-class logit noise
    double rho = 1.0;       // informativeness of the correctness confidences
    double kappa = 0.0;     // corruption of the knowledge served to the pipeline
    std::uint64_t seed = 0;

    /// Throws ValidationError on out-of-range fields.
    void validate() const;
};

/// Joint where each object favours `plausible_states` states; the remaining
/// cells keep a small floor mass. Deterministic in `seed`.
Grid make_structured_joint(std::size_t n_objects, std::size_t n_states, std::size_t plausible_states,
                           std::uint64_t seed);

/// Desk-scale default: 15 objects, 9 states, structured joint.
WorldSpec default_world(std::uint64_t seed);

/// Exact Bayes conditionals of the joint. A zero-mass row or column falls back
/// to uniform with a warning.
ConditionalPair derive_conditionals_from_joint(const Grid& joint);

/// (1 - kappa) * cm + kappa * random column-stochastic noise, renormalized.
ConditionalMatrix corrupt_knowledge(const ConditionalMatrix& cm, double kappa, std::uint64_t seed);
ConditionalPair corrupt_knowledge(const ConditionalPair& pair, double kappa, std::uint64_t seed);

/// Catalog with labels object_00.., state_00.. for a synthetic world.
ClassCatalog synthetic_catalog(std::size_t n_objects, std::size_t n_states);

struct SyntheticDataset {
    ClassCatalog catalog;
    std::vector<Sample> samples;
    std::vector<CorrectnessConfidence> object_correctness;
    std::vector<CorrectnessConfidence> state_correctness;
    ConditionalPair true_conditionals;
    ConditionalPair knowledge;  // corrupted by kappa
};

/// Draws n_samples (object, state) pairs from the joint with logit-noise
/// confidences, split 70/15/15. Requires n_samples >= 10.
SyntheticDataset sample_dataset(const WorldSpec& spec, std::size_t n_samples);

std::string world_spec_to_json(const WorldSpec& spec, std::size_t n_samples);
WorldSpec world_spec_from_json(std::string_view text, std::size_t* n_samples = nullptr);

/// Writes catalog.json, samples.jsonl, correctness_object.jsonl,
/// correctness_state.jsonl, knowledge.json, true_conditionals.json, world.json.
void write_dataset(const SyntheticDataset& data, const WorldSpec& spec, std::size_t n_samples,
                   const std::filesystem::path& dir);

}  // namespace statefusion
