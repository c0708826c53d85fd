#include <gtest/gtest.h>

#include <set>

#include "statefusion/errors.hpp"
#include "statefusion/io.hpp"
#include "statefusion/log.hpp"
#include "statefusion/synthdata.hpp"
#include "test_support.hpp"

using namespace statefusion;

namespace {

double raw_accuracy(const SyntheticDataset& data, Axis axis) {
    std::size_t hit = 0;
    for (const auto& s : data.samples) hit += argmax(s.confidence(axis).values) == s.truth(axis);
    return static_cast<double>(hit) / static_cast<double>(data.samples.size());
}

WorldSpec uniform_world(std::size_t no, std::size_t ns, std::uint64_t seed) {
    WorldSpec spec;
    spec.n_objects = no;
    spec.n_states = ns;
    spec.joint = Grid(no, ns, 1.0 / static_cast<double>(no * ns));
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST(Synthdata, UniformJointGivesUniformConditionals) {
    const auto pair = derive_conditionals_from_joint(Grid(2, 2, 0.25));
    for (double v : pair.object_given_state.values.data()) EXPECT_DOUBLE_EQ(v, 0.5);
    for (double v : pair.state_given_object.values.data()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Synthdata, DiagonalJointGivesIdentityPattern) {
    const auto pair = derive_conditionals_from_joint(Grid(2, 2, {0.5, 0.0, 0.0, 0.5}));
    EXPECT_EQ(pair.object_given_state.values, Grid(2, 2, {1, 0, 0, 1}));
    EXPECT_EQ(pair.state_given_object.values, Grid(2, 2, {1, 0, 0, 1}));
}

TEST(Synthdata, WorkedJointExample) {
    // Rows objects, columns states.
    const auto pair = derive_conditionals_from_joint(Grid(2, 2, {0.4, 0.1, 0.2, 0.3}));
    const auto& ogs = pair.object_given_state.values;
    EXPECT_NEAR(ogs(0, 0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(ogs(1, 0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(ogs(0, 1), 0.25, 1e-15);
    EXPECT_NEAR(ogs(1, 1), 0.75, 1e-15);
    const auto& sgo = pair.state_given_object.values;  // P(s | o): o1 -> [0.8, 0.2], o2 -> [0.4, 0.6]
    EXPECT_NEAR(sgo(0, 0), 0.8, 1e-15);
    EXPECT_NEAR(sgo(1, 0), 0.2, 1e-15);
    EXPECT_NEAR(sgo(0, 1), 0.4, 1e-15);
    EXPECT_NEAR(sgo(1, 1), 0.6, 1e-15);
}

TEST(Synthdata, ZeroMassColumnFallsBackToUniformWithWarning) {
    int warnings = 0;
    auto previous = set_warning_handler([&](std::string_view) { ++warnings; });
    const auto pair = derive_conditionals_from_joint(Grid(2, 2, {0.5, 0.0, 0.5, 0.0}));
    set_warning_handler(previous);
    EXPECT_GE(warnings, 1);
    EXPECT_DOUBLE_EQ(pair.object_given_state.values(0, 1), 0.5);
    EXPECT_NO_THROW(check_conditional(pair.object_given_state));
}

TEST(Synthdata, CorruptionEndpointsAndInvariants) {
    const auto pair = derive_conditionals_from_joint(make_structured_joint(15, 9, 3, 1));
    EXPECT_EQ(corrupt_knowledge(pair, 0.0, 5), pair);
    const auto full_a = corrupt_knowledge(pair, 1.0, 5);
    // kappa = 1 discards the input: a different input gives the same output.
    const auto other = derive_conditionals_from_joint(make_structured_joint(15, 9, 3, 2));
    const auto full_b = corrupt_knowledge(other, 1.0, 5);
    for (std::size_t i = 0; i < full_a.object_given_state.values.size(); ++i)
        EXPECT_NEAR(full_a.object_given_state.values.data()[i], full_b.object_given_state.values.data()[i], 1e-15);
    for (double kappa : {0.1, 0.5, 0.9, 1.0}) {
        const auto c = corrupt_knowledge(pair, kappa, 7);
        EXPECT_NO_THROW(check_conditional(c.object_given_state, 1e-12));
        EXPECT_NO_THROW(check_conditional(c.state_given_object, 1e-12));
    }
}

TEST(Synthdata, NoiselessConfidencesAreAlwaysRight) {
    auto spec = default_world(1);
    spec.sigma = 0.0;
    const auto data = sample_dataset(spec, 500);
    EXPECT_EQ(raw_accuracy(data, Axis::object), 1.0);
    EXPECT_EQ(raw_accuracy(data, Axis::state), 1.0);
}

TEST(Synthdata, ZeroSignalIsChance) {
    auto spec = uniform_world(4, 5, 2);
    spec.signal = 0.0;
    spec.sigma = 1.0;
    const auto data = sample_dataset(spec, 2000);
    EXPECT_NEAR(raw_accuracy(data, Axis::object), 1.0 / 4.0, 0.05);
    EXPECT_NEAR(raw_accuracy(data, Axis::state), 1.0 / 5.0, 0.05);
}

TEST(Synthdata, DefaultWorldIsInTheTargetRegime) {
    const auto data = sample_dataset(default_world(0), 3000);
    const double acc = raw_accuracy(data, Axis::state);
    EXPECT_GE(acc, 0.75);
    EXPECT_LE(acc, 0.85);
}

TEST(Synthdata, SplitsAreDisjointAndCoverEverySample) {
    const auto data = sample_dataset(default_world(4), 1000);
    std::size_t counts[3] = {0, 0, 0};
    std::set<std::string> ids;
    for (const auto& s : data.samples) {
        ++counts[static_cast<int>(s.split)];
        ids.insert(s.id);
    }
    EXPECT_EQ(ids.size(), 1000u);
    EXPECT_EQ(counts[0], 700u);
    EXPECT_EQ(counts[1], 150u);
    EXPECT_EQ(counts[2], 150u);
}

TEST(Synthdata, CorrectnessFollowsRho) {
    auto spec = default_world(5);
    spec.rho = 1.0;
    const auto data = sample_dataset(spec, 300);
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const auto& s = data.samples[i];
        const double expected = argmax(s.state_conf.values) == s.true_state ? 1.0 : 0.0;
        EXPECT_EQ(data.state_correctness[i].p_correct, expected);
        EXPECT_EQ(data.state_correctness[i].id, s.id);
    }
}

TEST(Synthdata, SameSeedWritesIdenticalFiles) {
    support::TempDir a("synth_a"), b("synth_b");
    const auto spec = default_world(9);
    write_dataset(sample_dataset(spec, 200), spec, 200, a.path());
    write_dataset(sample_dataset(spec, 200), spec, 200, b.path());
    for (const char* name : {"catalog.json", "samples.jsonl", "correctness_object.jsonl", "correctness_state.jsonl",
                             "knowledge.json", "true_conditionals.json", "world.json"})
        EXPECT_EQ(read_text_file(a.path() / name), read_text_file(b.path() / name)) << name;
    const auto other = default_world(10);
    write_dataset(sample_dataset(other, 200), other, 200, b.path());
    EXPECT_NE(read_text_file(a.path() / "samples.jsonl"), read_text_file(b.path() / "samples.jsonl"));
}

TEST(Synthdata, WorldSpecRoundTrip) {
    auto spec = default_world(11);
    spec.kappa = 0.3;
    std::size_t n = 0;
    const auto back = world_spec_from_json(world_spec_to_json(spec, 1234), &n);
    EXPECT_EQ(n, 1234u);
    EXPECT_EQ(back.joint, spec.joint);
    EXPECT_EQ(back.kappa, 0.3);
    EXPECT_EQ(back.seed, 11u);
}

TEST(Synthdata, InvalidSpecsAreRejected) {
    auto spec = default_world(0);
    spec.rho = 1.5;
    EXPECT_THROW(sample_dataset(spec, 100), ValidationError);
    spec = default_world(0);
    spec.sigma = -1.0;
    EXPECT_THROW(sample_dataset(spec, 100), ValidationError);
    EXPECT_THROW(sample_dataset(default_world(0), 5), ValidationError);
}
