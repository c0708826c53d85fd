#include "statefusion/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "statefusion/errors.hpp"
#include "statefusion/io.hpp"
#include "statefusion/log.hpp"
#include "statefusion/rng.hpp"

namespace statefusion {

using nlohmann::json;

void WorldSpec::validate() const {
    if (n_objects < 2 || n_states < 2) throw ValidationError("world needs at least two objects and two states");
    if (joint.rows() != n_objects || joint.cols() != n_states)
        throw ValidationError("world joint must be n_objects x n_states");
    double total = 0.0;
    for (double p : joint.data()) {
        if (!std::isfinite(p) || p < 0.0) throw ValidationError("world joint holds a negative entry");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("world joint must sum to 1");
    if (!std::isfinite(signal) || signal < 0.0) throw ValidationError("world signal must be >= 0");
    if (!std::isfinite(sigma) || sigma < 0.0) throw ValidationError("world sigma must be >= 0");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("world rho must lie in [0, 1]");
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw ValidationError("world kappa must lie in [0, 1]");
}

Grid make_structured_joint(std::size_t n_objects, std::size_t n_states, std::size_t plausible_states,
                           std::uint64_t seed) {
    constexpr double kFloor = 0.02;
    Rng rng(derive_seed(seed, "joint"));
    plausible_states = std::clamp<std::size_t>(plausible_states, 1, n_states);
    Grid joint(n_objects, n_states, kFloor);
    std::vector<std::size_t> states(n_states);
    for (std::size_t o = 0; o < n_objects; ++o) {
        std::iota(states.begin(), states.end(), 0);
        rng.shuffle(states.begin(), states.end());
        for (std::size_t k = 0; k < plausible_states; ++k) joint(o, states[k]) = 0.5 + 0.5 * rng.uniform();
        const double row_sum = std::accumulate(joint.row(o).begin(), joint.row(o).end(), 0.0);
        const double object_weight = 0.5 + rng.uniform();
        for (auto& p : joint.row(o)) p = p / row_sum * object_weight;
    }
    const double total = std::accumulate(joint.data().begin(), joint.data().end(), 0.0);
    for (auto& p : joint.data()) p /= total;
    return joint;
}

WorldSpec default_world(std::uint64_t seed) {
    WorldSpec spec;
    spec.seed = seed;
    spec.joint = make_structured_joint(spec.n_objects, spec.n_states, 3, seed);
    return spec;
}

namespace {

ConditionalMatrix column_normalized(const Grid& g, Direction direction) {
    ConditionalMatrix cm{direction, Grid(g.rows(), g.cols()), 0.0};
    for (std::size_t c = 0; c < g.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < g.rows(); ++r) sum += g(r, c);
        if (sum > 0.0) {
            for (std::size_t r = 0; r < g.rows(); ++r) cm.values(r, c) = g(r, c) / sum;
        } else {
            warn(std::string(to_string(direction)) + ": zero-mass column " + std::to_string(c) +
                 " replaced by uniform");
            for (std::size_t r = 0; r < g.rows(); ++r) cm.values(r, c) = 1.0 / static_cast<double>(g.rows());
        }
    }
    return cm;
}

}  // namespace

ConditionalPair derive_conditionals_from_joint(const Grid& joint) {
    ConditionalPair pair;
    pair.object_given_state = column_normalized(joint, Direction::object_given_state);
    pair.state_given_object = column_normalized(joint.transposed(), Direction::state_given_object);
    return pair;
}

ConditionalMatrix corrupt_knowledge(const ConditionalMatrix& cm, double kappa, std::uint64_t seed) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw ValidationError("kappa must lie in [0, 1]");
    if (kappa == 0.0) return cm;
    Rng rng(seed);
    ConditionalMatrix out = cm;
    const Grid& v = cm.values;
    std::vector<double> noise(v.rows());
    for (std::size_t c = 0; c < v.cols(); ++c) {
        double noise_sum = 0.0;
        for (auto& x : noise) noise_sum += x = -std::log(rng.uniform_open_zero());
        double sum = 0.0;
        for (std::size_t r = 0; r < v.rows(); ++r) {
            const double blended = (1.0 - kappa) * v(r, c) + kappa * noise[r] / noise_sum;
            out.values(r, c) = blended;
            sum += blended;
        }
        for (std::size_t r = 0; r < v.rows(); ++r) out.values(r, c) /= sum;
    }
    return out;
}

ConditionalPair corrupt_knowledge(const ConditionalPair& pair, double kappa, std::uint64_t seed) {
    ConditionalPair out = pair;
    out.object_given_state = corrupt_knowledge(pair.object_given_state, kappa, derive_seed(seed, "object_given_state"));
    out.state_given_object = corrupt_knowledge(pair.state_given_object, kappa, derive_seed(seed, "state_given_object"));
    return out;
}

ClassCatalog synthetic_catalog(std::size_t n_objects, std::size_t n_states) {
    auto labels = [](const char* prefix, std::size_t n) {
        std::vector<LabelEntry> entries;
        for (std::size_t i = 0; i < n; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "%s_%02zu", prefix, i);
            entries.push_back({name, {name}});
        }
        return entries;
    };
    return ClassCatalog(labels("object", n_objects), labels("state", n_states));
}

namespace {

std::vector<double> noisy_confidence(std::size_t n_classes, std::size_t truth, double signal, double sigma, Rng& rng) {
    std::vector<double> logits(n_classes);
    for (std::size_t k = 0; k < n_classes; ++k)
        logits[k] = (k == truth ? signal : 0.0) + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (auto& z : logits) sum += z = std::exp(z - peak);
    for (auto& z : logits) z /= sum;
    return logits;
}

}  // namespace

SyntheticDataset sample_dataset(const WorldSpec& spec, std::size_t n_samples) {
    spec.validate();
    if (n_samples < 10) throw ValidationError("synthetic datasets need at least 10 samples");

    SyntheticDataset data;
    data.catalog = synthetic_catalog(spec.n_objects, spec.n_states);
    data.true_conditionals = derive_conditionals_from_joint(spec.joint);
    data.true_conditionals.catalog_fingerprint = data.catalog.fingerprint();
    data.knowledge = corrupt_knowledge(data.true_conditionals, spec.kappa, derive_seed(spec.seed, "knowledge"));

    std::vector<double> cumulative(spec.joint.size());
    std::partial_sum(spec.joint.data().begin(), spec.joint.data().end(), cumulative.begin());

    const std::size_t n_train = static_cast<std::size_t>(std::llround(0.70 * static_cast<double>(n_samples)));
    const std::size_t n_val = static_cast<std::size_t>(std::llround(0.15 * static_cast<double>(n_samples)));
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(derive_seed(spec.seed, "split"));
    split_rng.shuffle(order.begin(), order.end());
    std::vector<Split> splits(n_samples, Split::test);
    for (std::size_t i = 0; i < n_samples; ++i) {
        if (i < n_train) splits[order[i]] = Split::train;
        else if (i < n_train + n_val) splits[order[i]] = Split::validation;
    }

    Rng rng(derive_seed(spec.seed, "samples"));
    Rng correctness_rng(derive_seed(spec.seed, "correctness"));
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double u = rng.uniform() * cumulative.back();
        std::size_t cell = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                                    cumulative.begin());
        cell = std::min(cell, cumulative.size() - 1);

        Sample s;
        char id[32];
        std::snprintf(id, sizeof id, "s%06zu", i);
        s.id = id;
        s.split = splits[i];
        s.true_object = cell / spec.n_states;
        s.true_state = cell % spec.n_states;
        s.object_conf = {Axis::object, noisy_confidence(spec.n_objects, s.true_object, spec.signal, spec.sigma, rng)};
        s.state_conf = {Axis::state, noisy_confidence(spec.n_states, s.true_state, spec.signal, spec.sigma, rng)};

        for (Axis axis : {Axis::object, Axis::state}) {
            const bool correct = argmax(s.confidence(axis).values) == s.truth(axis);
            const double p = spec.rho * (correct ? 1.0 : 0.0) + (1.0 - spec.rho) * correctness_rng.uniform();
            auto record = make_correctness(s.id, std::clamp(p, 0.0, 1.0));
            (axis == Axis::object ? data.object_correctness : data.state_correctness).push_back(std::move(record));
        }
        data.samples.push_back(std::move(s));
    }
    return data;
}

std::string world_spec_to_json(const WorldSpec& spec, std::size_t n_samples) {
    json j = {{"format", "statefusion.world/1"},
              {"n_objects", spec.n_objects},
              {"n_states", spec.n_states},
              {"joint", spec.joint.data()},
              {"signal", spec.signal},
              {"sigma", spec.sigma},
              {"rho", spec.rho},
              {"kappa", spec.kappa},
              {"seed", spec.seed},
              {"n_samples", n_samples}};
    return j.dump(2) + "\n";
}

WorldSpec world_spec_from_json(std::string_view text, std::size_t* n_samples) {
    try {
        const json j = json::parse(text);
        WorldSpec spec;
        spec.n_objects = j.at("n_objects").get<std::size_t>();
        spec.n_states = j.at("n_states").get<std::size_t>();
        spec.joint = Grid(spec.n_objects, spec.n_states, j.at("joint").get<std::vector<double>>());
        spec.signal = j.at("signal").get<double>();
        spec.sigma = j.at("sigma").get<double>();
        spec.rho = j.at("rho").get<double>();
        spec.kappa = j.at("kappa").get<double>();
        spec.seed = j.at("seed").get<std::uint64_t>();
        if (n_samples) *n_samples = j.value("n_samples", std::size_t{0});
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw ParseError(std::string("world spec: ") + e.what());
    }
}

void write_dataset(const SyntheticDataset& data, const WorldSpec& spec, std::size_t n_samples,
                   const std::filesystem::path& dir) {
    save_catalog(data.catalog, dir / "catalog.json");
    save_samples(data.samples, data.catalog, dir / "samples.jsonl");
    save_correctness(data.object_correctness, dir / "correctness_object.jsonl");
    save_correctness(data.state_correctness, dir / "correctness_state.jsonl");
    save_conditionals(data.knowledge, dir / "knowledge.json");
    save_conditionals(data.true_conditionals, dir / "true_conditionals.json");
    write_text_file(dir / "world.json", world_spec_to_json(spec, n_samples));
}

}  // namespace statefusion
