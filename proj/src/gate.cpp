#include "statefusion/gate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "statefusion/errors.hpp"
#include "statefusion/io.hpp"

namespace statefusion {

using nlohmann::json;

CorrectnessConfidence make_correctness(std::string id, double p_correct) {
    if (!(p_correct >= 0.0 && p_correct <= 1.0))
        throw ValidationError("p_correct for '" + id + "' outside [0, 1]");
    return {std::move(id), p_correct, 1.0 - p_correct};
}

std::string correctness_to_jsonl(std::span<const CorrectnessConfidence> records) {
    std::string out;
    for (const auto& r : records) out += json{{"id", r.id}, {"p_correct", r.p_correct}}.dump() + "\n";
    return out;
}

CorrectnessTable correctness_from_jsonl(std::string_view text) {
    CorrectnessTable table;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const json j = json::parse(line);
            auto record = make_correctness(j.at("id").get<std::string>(), j.at("p_correct").get<double>());
            const std::string id = record.id;
            if (!table.emplace(id, std::move(record)).second)
                throw ValidationError("duplicate correctness record for '" + id + "'");
        } catch (const json::exception& e) {
            throw ParseError("correctness line " + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("correctness line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return table;
}

void save_correctness(std::span<const CorrectnessConfidence> records, const std::filesystem::path& path) {
    write_text_file(path, correctness_to_jsonl(records));
}

CorrectnessTable load_correctness(const std::filesystem::path& path) {
    return correctness_from_jsonl(read_text_file(path));
}

std::string_view to_string(GateSource source) {
    return source == GateSource::raw ? "raw" : "fused";
}

std::vector<int> label_correctness(std::span<const Sample> samples, Axis axis) {
    std::vector<int> labels;
    labels.reserve(samples.size());
    for (const auto& s : samples) labels.push_back(argmax(s.confidence(axis).values) == s.truth(axis) ? 1 : 0);
    return labels;
}

std::vector<double> selector_features(const Sample& sample, const CorrectnessConfidence& correctness) {
    std::vector<double> f{correctness.p_correct, correctness.p_incorrect};
    f.insert(f.end(), sample.object_conf.values.begin(), sample.object_conf.values.end());
    f.insert(f.end(), sample.state_conf.values.begin(), sample.state_conf.values.end());
    return f;
}

LabeledSet build_selector_set(std::span<const Sample> samples, const CorrectnessTable& correctness, Axis axis) {
    LabeledSet set;
    if (samples.empty()) return set;
    const std::size_t width =
        2 + samples.front().object_conf.values.size() + samples.front().state_conf.values.size();
    set.features = Grid(samples.size(), width);
    const auto labels = label_correctness(samples, axis);
    for (std::size_t n = 0; n < samples.size(); ++n) {
        auto it = correctness.find(samples[n].id);
        if (it == correctness.end())
            throw ValidationError("no correctness confidence for sample '" + samples[n].id + "'");
        const auto f = selector_features(samples[n], it->second);
        if (f.size() != width) throw ValidationError("sample '" + samples[n].id + "' has ragged confidences");
        std::copy(f.begin(), f.end(), set.features.row(n).begin());
        set.labels.push_back(static_cast<std::size_t>(labels[n]));
    }
    return set;
}

TrainResult train_selector(const LabeledSet& train_set, const LabeledSet& validation_set, MlpConfig config) {
    const std::set<std::size_t> classes(train_set.labels.begin(), train_set.labels.end());
    if (classes.size() < 2)
        throw ValidationError("selector training split is degenerate: every raw prediction is " +
                              std::string(classes.empty() ? "missing" : (*classes.begin() ? "correct" : "incorrect")));
    config.input_dim = train_set.features.cols();
    config.output_dim = 2;
    return train(init_mlp(config), train_set, validation_set);
}

GateDecision gate_from_probability(std::string sample_id, Axis axis, double p_correct, std::span<const double> raw,
                                   std::span<const double> fused, double threshold) {
    if (raw.size() != fused.size() || raw.empty())
        throw ValidationError("gate: raw and fused vectors differ in length");
    GateDecision d;
    d.sample_id = std::move(sample_id);
    d.axis = axis;
    d.selector = p_correct > threshold ? 1 : 0;
    d.source = d.selector == 1 ? GateSource::raw : GateSource::fused;
    d.final_index = argmax(d.selector == 1 ? raw : fused);
    return d;
}

GateDecision apply_gate(const MlpModel& selector, const Sample& sample, const CorrectnessConfidence& correctness,
                        const ConfidenceVector& raw, std::span<const double> fused, Axis axis, double threshold) {
    if (raw.kind != axis) throw ValidationError("gate: raw confidence is for the other axis");
    const auto probabilities = forward(selector, selector_features(sample, correctness));
    if (probabilities.size() != 2) throw ValidationError("gate: selector must have two outputs");
    return gate_from_probability(sample.id, axis, probabilities[1], raw.values, fused, threshold);
}

std::vector<std::size_t> gated_predictions(std::span<const int> selector, std::span<const std::size_t> raw_predictions,
                                           std::span<const std::size_t> fused_predictions) {
    if (selector.size() != raw_predictions.size() || selector.size() != fused_predictions.size())
        throw ValidationError("gated predictions: length mismatch");
    std::vector<std::size_t> out(selector.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = selector[i] == 1 ? raw_predictions[i] : fused_predictions[i];
    return out;
}

}  // namespace statefusion
