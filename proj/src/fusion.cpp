#include "statefusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "statefusion/errors.hpp"
#include "statefusion/io.hpp"
#include "statefusion/kernels.hpp"
#include "statefusion/log.hpp"

namespace statefusion {

using nlohmann::json;

ConfidenceVector make_confidence(Axis kind, std::vector<double> values) {
    if (values.empty()) throw ValidationError("empty " + std::string(to_string(kind)) + " confidence vector");
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError(std::string(to_string(kind)) + " confidence holds a negative or non-finite value");
        sum += v;
    }
    if (sum <= 0.0) throw ValidationError(std::string(to_string(kind)) + " confidence sums to zero");
    if (std::abs(sum - 1.0) > 1e-6) {
        if (std::abs(sum - 1.0) > 1e-3)
            warn(std::string(to_string(kind)) + " confidence sums to " + std::to_string(sum) + "; renormalized");
        for (auto& v : values) v /= sum;
    }
    return {kind, std::move(values)};
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw ValidationError("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

namespace {

MarginalVector marginalize(const ConfidenceVector& prior, const ConditionalMatrix& cm, Axis prior_kind,
                           Direction direction, Axis out_kind) {
    if (prior.kind != prior_kind)
        throw ValidationError("marginal over " + std::string(to_string(out_kind)) + "s needs a " +
                              std::string(to_string(prior_kind)) + " prior");
    if (cm.direction != direction)
        throw ValidationError("marginal needs a " + std::string(to_string(direction)) + " matrix");
    if (prior.values.size() != cm.given_count())
        throw ValidationError("prior length " + std::to_string(prior.values.size()) +
                              " does not match conditional matrix with " + std::to_string(cm.given_count()) +
                              " columns");
    MarginalVector out{out_kind, std::vector<double>(cm.target_count(), 0.0)};
    for (std::size_t j = 0; j < cm.target_count(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < prior.values.size(); ++i) acc += prior.values[i] * cm.probability(j, i);
        out.values[j] = acc;
    }
    return out;
}

}  // namespace

MarginalVector marginal_objects(const ConfidenceVector& state_prior, const ConditionalMatrix& cm) {
    return marginalize(state_prior, cm, Axis::state, Direction::object_given_state, Axis::object);
}

MarginalVector marginal_states(const ConfidenceVector& object_prior, const ConditionalMatrix& cm) {
    return marginalize(object_prior, cm, Axis::object, Direction::state_given_object, Axis::state);
}

ConfidenceVector linear_blend(const ConfidenceVector& prior, const MarginalVector& marginal, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("blend alpha must lie in [0, 1]");
    if (prior.kind != marginal.kind || prior.values.size() != marginal.values.size())
        throw ValidationError("blend needs a prior and marginal of the same axis and length");
    ConfidenceVector out{prior.kind, std::vector<double>(prior.values.size())};
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = alpha * prior.values[i] + (1.0 - alpha) * marginal.values[i];
    return out;
}

std::string FeatureLayout::descriptor() const {
    std::ostringstream ss;
    ss << "state_prior[" << n_states << "]|state_marginal[" << n_states << "]|object_prior[" << n_objects
       << "]|object_marginal[" << n_objects << "]";
    return ss.str();
}

std::string_view to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "val";
        case Split::test: return "test";
    }
    return "train";
}

Split split_from_string(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "val" || text == "validation") return Split::validation;
    if (text == "test") return Split::test;
    throw ValidationError("unknown split '" + std::string(text) + "'");
}

FusionFeatureVector build_feature_vector(const Sample& sample, const MarginalVector& marg_state,
                                         const MarginalVector& marg_object) {
    const std::size_t n_s = sample.state_conf.values.size();
    const std::size_t n_o = sample.object_conf.values.size();
    if (marg_state.kind != Axis::state || marg_object.kind != Axis::object)
        throw ValidationError("feature vector marginals passed in the wrong order");
    if (marg_state.values.size() != n_s || marg_object.values.size() != n_o)
        throw ValidationError("feature vector: marginal lengths do not match the sample's confidences");
    FusionFeatureVector out{{n_s, n_o}, {}};
    out.values.reserve(out.layout.length());
    auto append = [&](const std::vector<double>& v) { out.values.insert(out.values.end(), v.begin(), v.end()); };
    append(sample.state_conf.values);
    append(marg_state.values);
    append(sample.object_conf.values);
    append(marg_object.values);
    return out;
}

Grid confidence_grid(std::span<const Sample> samples, Axis axis) {
    if (samples.empty()) return {};
    const std::size_t n = samples.front().confidence(axis).values.size();
    Grid g(samples.size(), n);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& v = samples[i].confidence(axis).values;
        if (v.size() != n) throw ValidationError("sample '" + samples[i].id + "' has a ragged confidence vector");
        std::copy(v.begin(), v.end(), g.row(i).begin());
    }
    return g;
}

FusedBatch fuse_samples(std::span<const Sample> samples, const ConditionalPair& knowledge) {
    FusedBatch batch;
    batch.layout = {knowledge.state_given_object.target_count(), knowledge.object_given_state.target_count()};
    const Grid objects = confidence_grid(samples, Axis::object);
    const Grid states = confidence_grid(samples, Axis::state);
    if (samples.empty()) return batch;
    batch.object_marginals = kernels::marginalize_omp(states, knowledge.object_given_state.values);
    batch.state_marginals = kernels::marginalize_omp(objects, knowledge.state_given_object.values);
    if (objects.cols() != batch.layout.n_objects || states.cols() != batch.layout.n_states)
        throw ValidationError("sample confidences do not match the knowledge dimensions");

    const FeatureLayout& L = batch.layout;
    batch.features = Grid(samples.size(), L.length());
    for (std::size_t n = 0; n < samples.size(); ++n) {
        auto row = batch.features.row(n);
        std::copy_n(states.row(n).begin(), L.n_states, row.begin() + static_cast<std::ptrdiff_t>(L.state_prior_offset()));
        std::copy_n(batch.state_marginals.row(n).begin(), L.n_states,
                    row.begin() + static_cast<std::ptrdiff_t>(L.state_marginal_offset()));
        std::copy_n(objects.row(n).begin(), L.n_objects,
                    row.begin() + static_cast<std::ptrdiff_t>(L.object_prior_offset()));
        std::copy_n(batch.object_marginals.row(n).begin(), L.n_objects,
                    row.begin() + static_cast<std::ptrdiff_t>(L.object_marginal_offset()));
    }
    return batch;
}

std::vector<Sample> select_split(std::span<const Sample> samples, Split split) {
    std::vector<Sample> out;
    for (const auto& s : samples)
        if (s.split == split) out.push_back(s);
    return out;
}

std::string samples_to_jsonl(std::span<const Sample> samples, const ClassCatalog& catalog) {
    std::string out;
    json header = {{"format", "statefusion.samples/1"},
                   {"catalog_fingerprint", catalog.fingerprint()},
                   {"n_objects", catalog.object_count()},
                   {"n_states", catalog.state_count()}};
    out += header.dump() + "\n";
    for (const auto& s : samples) {
        json line = {{"id", s.id},
                     {"split", to_string(s.split)},
                     {"object", catalog.objects().at(s.true_object).name},
                     {"state", catalog.states().at(s.true_state).name},
                     {"object_conf", s.object_conf.values},
                     {"state_conf", s.state_conf.values}};
        out += line.dump() + "\n";
    }
    return out;
}

std::vector<Sample> samples_from_jsonl(std::string_view text, const ClassCatalog& catalog) {
    std::vector<Sample> samples;
    std::size_t line_no = 0;
    bool have_header = false;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        const auto where = [&] { return "samples line " + std::to_string(line_no) + ": "; };
        try {
            const json j = json::parse(line);
            if (!have_header) {
                have_header = true;
                const auto fp = j.at("catalog_fingerprint").get<std::string>();
                if (fp != catalog.fingerprint())
                    throw ValidationError("dataset was written for catalog " + fp + ", loaded with " +
                                          catalog.fingerprint());
                continue;
            }
            Sample s;
            s.id = j.at("id").get<std::string>();
            s.split = split_from_string(j.at("split").get<std::string>());
            s.true_object = catalog.require_index(Axis::object, j.at("object").get<std::string>());
            s.true_state = catalog.require_index(Axis::state, j.at("state").get<std::string>());
            s.object_conf = make_confidence(Axis::object, j.at("object_conf").get<std::vector<double>>());
            s.state_conf = make_confidence(Axis::state, j.at("state_conf").get<std::vector<double>>());
            if (s.object_conf.values.size() != catalog.object_count() ||
                s.state_conf.values.size() != catalog.state_count())
                throw ValidationError("confidence lengths do not match the catalog");
            samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw ParseError(where() + e.what());
        } catch (const Error& e) {
            throw ValidationError(where() + e.what());
        }
    }
    if (!have_header) throw ParseError("samples file has no header line");
    return samples;
}

void save_samples(std::span<const Sample> samples, const ClassCatalog& catalog, const std::filesystem::path& path) {
    write_text_file(path, samples_to_jsonl(samples, catalog));
}

std::vector<Sample> load_samples(const std::filesystem::path& path, const ClassCatalog& catalog) {
    return samples_from_jsonl(read_text_file(path), catalog);
}

}  // namespace statefusion
