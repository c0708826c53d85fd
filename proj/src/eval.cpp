#include "statefusion/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "statefusion/errors.hpp"
#include "statefusion/io.hpp"
#include "statefusion/kernels.hpp"
#include "statefusion/rng.hpp"

namespace statefusion {

using nlohmann::json;

// ------------------------------------------------------------------- metrics

namespace {

void check_labels(std::span<const std::size_t> predictions, std::span<const std::size_t> truths,
                  std::size_t n_classes) {
    if (predictions.empty() || predictions.size() != truths.size())
        throw ValidationError("accuracy needs equal-length, non-empty prediction and truth lists");
    for (std::size_t i = 0; i < truths.size(); ++i)
        if (predictions[i] >= n_classes || truths[i] >= n_classes)
            throw ValidationError("label " + std::to_string(std::max(predictions[i], truths[i])) +
                                  " out of range for " + std::to_string(n_classes) + " classes");
}

}  // namespace

Grid confusion_matrix(std::span<const std::size_t> predictions, std::span<const std::size_t> truths,
                      std::size_t n_classes) {
    check_labels(predictions, truths, n_classes);
    Grid confusion(n_classes, n_classes);
    for (std::size_t i = 0; i < truths.size(); ++i) confusion(truths[i], predictions[i]) += 1.0;
    return confusion;
}

AxisReport make_axis_report(std::span<const std::size_t> predictions, std::span<const std::size_t> truths,
                            std::size_t n_classes) {
    AxisReport r;
    r.confusion = confusion_matrix(predictions, truths, n_classes);
    r.recall.assign(n_classes, 0.0);
    r.support.assign(n_classes, 0);
    double recall_sum = 0.0;
    std::size_t supported = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        const auto row = r.confusion.row(c);
        const double support = std::accumulate(row.begin(), row.end(), 0.0);
        r.support[c] = static_cast<std::size_t>(support);
        if (support > 0.0) {
            r.recall[c] = r.confusion(c, c) / support;
            recall_sum += r.recall[c];
            ++supported;
        }
    }
    r.accuracy = recall_sum / static_cast<double>(supported);
    return r;
}

double average_class_accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> truths,
                              std::size_t n_classes) {
    return make_axis_report(predictions, truths, n_classes).accuracy;
}

// ------------------------------------------------------------------- methods

std::string_view to_string(Method method) {
    switch (method) {
        case Method::raw: return "raw";
        case Method::linear_blend: return "linear_blend";
        case Method::fused_mlp: return "fused_mlp";
        case Method::fused_mlp_gate: return "fused_mlp+gate";
    }
    return "raw";
}

Method method_from_string(std::string_view text) {
    if (text == "raw") return Method::raw;
    if (text == "linear_blend") return Method::linear_blend;
    if (text == "fused_mlp") return Method::fused_mlp;
    if (text == "fused_mlp+gate") return Method::fused_mlp_gate;
    throw ValidationError("unknown method '" + std::string(text) + "'");
}

std::string table_row_label(const Variant& variant) {
    const std::string src = variant.source == KnowledgeSource::conceptnet ? "CN" : "GN";
    switch (variant.method) {
        case Method::raw: return "Resnet";
        case Method::linear_blend: return "(Resnet," + src + ")+Linear";
        case Method::fused_mlp: return "(Resnet," + src + ")+MLP";
        case Method::fused_mlp_gate: return "(Resnet," + src + ")+MLP+Refinement";
    }
    return "Resnet";
}

void AblationSpec::validate() const {
    if (variants.empty()) throw ValidationError("ablation needs at least one variant");
    if (seeds.empty()) throw ValidationError("ablation needs at least one seed");
    for (std::size_t i = 0; i < variants.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const bool same_raw = variants[i].method == Method::raw && variants[j].method == Method::raw;
            if (variants[i] == variants[j] || same_raw)
                throw ValidationError("ablation variant '" + table_row_label(variants[i]) + "' repeats");
        }
    if (alpha_grid.empty()) throw ValidationError("ablation alpha grid is empty");
    for (double a : alpha_grid)
        if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("alpha grid values must lie in [0, 1]");
}

PipelineConfigs default_pipeline_configs() {
    // Inputs are probabilities, so gradients are small; 1e-3 underfits badly.
    PipelineConfigs c;
    for (MlpConfig* cfg : {&c.fusion_object, &c.fusion_state, &c.selector}) cfg->learning_rate = 0.05;
    return c;
}

// ------------------------------------------------------------------ pipeline

namespace {

std::vector<std::size_t> row_argmax(const Grid& g) {
    std::vector<std::size_t> out(g.rows());
    for (std::size_t n = 0; n < g.rows(); ++n) out[n] = argmax(g.row(n));
    return out;
}

std::vector<std::size_t> truths(std::span<const Sample> samples, Axis axis) {
    std::vector<std::size_t> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.truth(axis));
    return out;
}

std::vector<std::size_t> blend_predictions(const Grid& priors, const Grid& marginals, double alpha) {
    std::vector<std::size_t> out(priors.rows());
    std::vector<double> mixed(priors.cols());
    for (std::size_t n = 0; n < priors.rows(); ++n) {
        for (std::size_t k = 0; k < mixed.size(); ++k)
            mixed[k] = alpha * priors(n, k) + (1.0 - alpha) * marginals(n, k);
        out[n] = argmax(mixed);
    }
    return out;
}

LabeledSet labeled(const Grid& features, std::span<const Sample> samples, Axis axis) {
    return {features, truths(samples, axis)};
}

const ConditionalPair& knowledge_for(const PipelineInputs& inputs, KnowledgeSource source) {
    auto it = inputs.knowledge.find(source);
    if (it == inputs.knowledge.end())
        throw ValidationError("no " + std::string(to_string(source)) + " knowledge matrices supplied");
    return it->second;
}

void require_split(std::span<const Sample> samples, Split split) {
    if (samples.empty()) throw ValidationError("dataset has no " + std::string(to_string(split)) + " samples");
}

}  // namespace

double select_blend_alpha(std::span<const Sample> validation, const ConditionalPair& knowledge,
                          std::span<const double> alpha_grid) {
    if (alpha_grid.empty()) throw ValidationError("alpha grid is empty");
    const FusedBatch batch = fuse_samples(validation, knowledge);
    const Grid priors = confidence_grid(validation, Axis::state);
    const auto truth = truths(validation, Axis::state);
    double best_alpha = alpha_grid.front();
    double best_accuracy = -1.0;
    for (double alpha : alpha_grid) {
        const double acc = average_class_accuracy(blend_predictions(priors, batch.state_marginals, alpha), truth,
                                                  batch.layout.n_states);
        if (acc > best_accuracy) {
            best_accuracy = acc;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

PipelineOutcome run_pipeline(const PipelineInputs& inputs, KnowledgeSource source, const PipelineConfigs& configs,
                             std::uint64_t seed, const PipelineOptions& options) {
    inputs.catalog.require_classifiable();
    const ConditionalPair& knowledge = knowledge_for(inputs, source);
    const auto train_samples = select_split(inputs.samples, Split::train);
    const auto val_samples = select_split(inputs.samples, Split::validation);
    const auto test_samples = select_split(inputs.samples, Split::test);
    require_split(train_samples, Split::train);
    require_split(val_samples, Split::validation);
    require_split(test_samples, Split::test);

    PipelineOutcome out;
    out.seed = seed;
    out.source = source;
    out.alpha = select_blend_alpha(val_samples, knowledge, options.alpha_grid);

    const FusedBatch train_batch = fuse_samples(train_samples, knowledge);
    const FusedBatch val_batch = fuse_samples(val_samples, knowledge);
    const FusedBatch test_batch = fuse_samples(test_samples, knowledge);

    for (Axis axis : {Axis::object, Axis::state}) {
        AxisPredictions& p = axis == Axis::object ? out.object : out.state;
        const Grid test_priors = confidence_grid(test_samples, axis);
        p.truth = truths(test_samples, axis);
        p.raw = row_argmax(test_priors);
        p.blend = blend_predictions(test_priors,
                                    axis == Axis::object ? test_batch.object_marginals : test_batch.state_marginals,
                                    out.alpha);

        MlpConfig cfg = axis == Axis::object ? configs.fusion_object : configs.fusion_state;
        cfg.input_dim = train_batch.layout.length();
        cfg.output_dim = inputs.catalog.count(axis);
        cfg.seed = derive_seed(seed, axis == Axis::object ? "fusion_object" : "fusion_state");
        auto result = train(init_mlp(cfg), labeled(train_batch.features, train_samples, axis),
                            labeled(val_batch.features, val_samples, axis));
        p.fused = predict_batch(result.model, test_batch.features);
        (axis == Axis::object ? out.fusion_object_model : out.fusion_state_model) = std::move(result.model);
        (axis == Axis::object ? out.fusion_object_report : out.fusion_state_report) = std::move(result.report);

        if (!options.train_selectors) continue;
        const CorrectnessTable& table = axis == Axis::object ? inputs.object_correctness : inputs.state_correctness;
        MlpConfig sel_cfg = configs.selector;
        sel_cfg.seed = derive_seed(seed, axis == Axis::object ? "selector_object" : "selector_state");
        auto selector = train_selector(build_selector_set(train_samples, table, axis),
                                       build_selector_set(val_samples, table, axis), sel_cfg);
        const Grid probs = forward_batch(selector.model, build_selector_set(test_samples, table, axis).features);
        p.selector.resize(test_samples.size());
        for (std::size_t n = 0; n < test_samples.size(); ++n)
            p.selector[n] = gate_from_probability(test_samples[n].id, axis, probs(n, 1), test_priors.row(n),
                                                  test_priors.row(n), options.gate_threshold)
                                .selector;
        p.gated = gated_predictions(p.selector, p.raw, p.fused);
        (axis == Axis::object ? out.selector_object_model : out.selector_state_model) = std::move(selector.model);
        (axis == Axis::object ? out.selector_object_report : out.selector_state_report) = std::move(selector.report);
    }
    return out;
}

EvalReport make_report(const Variant& variant, const PipelineOutcome& outcome, const ClassCatalog& catalog,
                       std::string fingerprint) {
    EvalReport r;
    r.method = std::string(to_string(variant.method));
    r.row_label = table_row_label(variant);
    r.source = variant.method == Method::raw ? "none" : std::string(to_string(variant.source));
    r.seed = outcome.seed;
    r.dataset_fingerprint = std::move(fingerprint);
    r.alpha = variant.method == Method::linear_blend ? outcome.alpha : 1.0;
    for (Axis axis : {Axis::object, Axis::state}) {
        const AxisPredictions& p = outcome.predictions(axis);
        const std::vector<std::size_t>* preds = nullptr;
        switch (variant.method) {
            case Method::raw: preds = &p.raw; break;
            case Method::linear_blend: preds = &p.blend; break;
            case Method::fused_mlp: preds = &p.fused; break;
            case Method::fused_mlp_gate: preds = &p.gated; break;
        }
        if (preds->size() != p.truth.size())
            throw ValidationError("no predictions recorded for method " + r.method);
        (axis == Axis::object ? r.object : r.state) = make_axis_report(*preds, p.truth, catalog.count(axis));
    }
    return r;
}

std::string dataset_fingerprint(std::span<const Sample> samples, const ClassCatalog& catalog) {
    return fnv1a_hex(samples_to_jsonl(samples, catalog));
}

std::vector<EvalReport> run_ablation(const AblationSpec& spec, const PipelineInputs& inputs,
                                     const PipelineConfigs& configs, std::vector<PipelineOutcome>* runs) {
    spec.validate();
    const std::string fingerprint = dataset_fingerprint(inputs.samples, inputs.catalog);

    PipelineOptions options;
    options.alpha_grid = spec.alpha_grid;
    options.gate_threshold = spec.gate_threshold;

    // One pipeline run per (source, seed) serves every variant on that source.
    std::map<std::pair<KnowledgeSource, std::uint64_t>, PipelineOutcome> outcomes;
    std::vector<EvalReport> reports;
    for (const auto& variant : spec.variants) {
        for (auto seed : spec.seeds) {
            try {
                if (variant.method == Method::raw) {
                    PipelineOutcome raw;
                    raw.seed = seed;
                    const auto test = select_split(inputs.samples, Split::test);
                    require_split(test, Split::test);
                    for (Axis axis : {Axis::object, Axis::state}) {
                        AxisPredictions& p = axis == Axis::object ? raw.object : raw.state;
                        p.truth = truths(test, axis);
                        p.raw = row_argmax(confidence_grid(test, axis));
                    }
                    reports.push_back(make_report(variant, raw, inputs.catalog, fingerprint));
                    continue;
                }
                const auto key = std::make_pair(variant.source, seed);
                auto it = outcomes.find(key);
                if (it == outcomes.end()) {
                    PipelineOptions opts = options;
                    opts.train_selectors = std::any_of(spec.variants.begin(), spec.variants.end(), [&](const Variant& v) {
                        return v.method == Method::fused_mlp_gate && v.source == variant.source;
                    });
                    it = outcomes.emplace(key, run_pipeline(inputs, variant.source, configs, seed, opts)).first;
                    if (runs) runs->push_back(it->second);
                }
                reports.push_back(make_report(variant, it->second, inputs.catalog, fingerprint));
            } catch (const std::exception& e) {
                throw ValidationError("ablation variant '" + table_row_label(variant) + "' (seed " +
                                      std::to_string(seed) + ") failed: " + e.what());
            }
        }
    }
    return reports;
}

// ------------------------------------------------------------------- reports

namespace {

json axis_to_json(const AxisReport& r) {
    json confusion = json::array();
    for (std::size_t i = 0; i < r.confusion.rows(); ++i) {
        json row = json::array();
        for (double v : r.confusion.row(i)) row.push_back(static_cast<std::size_t>(v));
        confusion.push_back(row);
    }
    return {{"average_class_accuracy", r.accuracy}, {"recall", r.recall}, {"support", r.support},
            {"confusion", confusion}};
}

AxisReport axis_from_json(const json& j) {
    AxisReport r;
    r.accuracy = j.at("average_class_accuracy").get<double>();
    r.recall = j.at("recall").get<std::vector<double>>();
    r.support = j.at("support").get<std::vector<std::size_t>>();
    const auto& rows = j.at("confusion");
    r.confusion = Grid(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k) r.confusion(i, k) = rows[i][k].get<double>();
    return r;
}

}  // namespace

std::string reports_to_json(std::span<const EvalReport> reports) {
    json arr = json::array();
    for (const auto& r : reports)
        arr.push_back({{"method", r.method},
                       {"row_label", r.row_label},
                       {"source", r.source},
                       {"seed", r.seed},
                       {"dataset_fingerprint", r.dataset_fingerprint},
                       {"alpha", r.alpha},
                       {"object", axis_to_json(r.object)},
                       {"state", axis_to_json(r.state)}});
    return json{{"format", "statefusion.reports/1"}, {"reports", arr}}.dump(2) + "\n";
}

std::vector<EvalReport> reports_from_json(std::string_view text) {
    try {
        std::vector<EvalReport> out;
        const json doc = json::parse(text);
        for (const auto& j : doc.at("reports")) {
            EvalReport r;
            r.method = j.at("method").get<std::string>();
            r.row_label = j.at("row_label").get<std::string>();
            r.source = j.at("source").get<std::string>();
            r.seed = j.at("seed").get<std::uint64_t>();
            r.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
            r.alpha = j.at("alpha").get<double>();
            r.object = axis_from_json(j.at("object"));
            r.state = axis_from_json(j.at("state"));
            out.push_back(std::move(r));
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("reports: ") + e.what());
    }
}

std::string reports_to_markdown(std::span<const EvalReport> reports) {
    static const std::vector<std::string> order = {
        "Resnet",          "(Resnet,CN)+SVM", "(Resnet,CN)+Linear",          "(Resnet,GN)+Linear",
        "(Resnet,GN)+MLP", "(Resnet,CN)+MLP", "(Resnet,GN)+MLP+Refinement", "(Resnet,CN)+MLP+Refinement"};
    auto pct = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
        return std::string(buf);
    };

    std::set<std::uint64_t> seeds;
    for (const auto& r : reports) seeds.insert(r.seed);

    std::ostringstream md;
    md << "| Model | States | Objects |\n";
    md << "|---|---|---|\n";
    for (const auto& label : order) {
        if (label == "(Resnet,CN)+SVM") {
            md << "| " << label << " | not implemented | not implemented |\n";
            continue;
        }
        double states = 0.0, objects = 0.0;
        std::size_t n = 0;
        for (const auto& r : reports) {
            if (r.row_label != label) continue;
            states += r.state.accuracy;
            objects += r.object.accuracy;
            ++n;
        }
        if (n == 0) continue;
        md << "| " << label << " | " << pct(states / static_cast<double>(n)) << " | "
           << pct(objects / static_cast<double>(n)) << " |\n";
    }
    md << "\nAverage class accuracy on the test split";
    if (!seeds.empty()) {
        md << ", mean over " << seeds.size() << (seeds.size() == 1 ? " seed" : " seeds") << " (";
        bool first = true;
        for (auto s : seeds) {
            md << (first ? "" : ", ") << s;
            first = false;
        }
        md << ")";
    }
    md << ".\n";
    return md.str();
}

// --------------------------------------------------------------------- chart

std::vector<std::size_t> chart_classes(std::span<const double> raw, std::span<const double> fused, std::size_t top_k) {
    if (top_k == 0) throw ValidationError("top_k must be >= 1");
    if (raw.size() != fused.size()) throw ValidationError("chart: raw and fused lengths differ");
    std::vector<std::size_t> idx(raw.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::max(raw[a], fused[a]) > std::max(raw[b], fused[b]);
    });
    idx.resize(std::min(top_k, idx.size()));
    return idx;
}

namespace {

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct ChartPanel {
    const char* axis;
    const std::vector<std::string>* labels;
    const std::vector<double>* raw;
    const std::vector<double>* fused;
};

std::vector<ChartPanel> panels(const ChartInput& in) {
    if (in.raw_objects.size() != in.object_labels.size() || in.fused_objects.size() != in.object_labels.size() ||
        in.raw_states.size() != in.state_labels.size() || in.fused_states.size() != in.state_labels.size())
        throw ValidationError("chart: probability vectors do not match the label lists");
    return {{"object", &in.object_labels, &in.raw_objects, &in.fused_objects},
            {"state", &in.state_labels, &in.raw_states, &in.fused_states}};
}

}  // namespace

std::string chart_csv(const ChartInput& input, std::size_t top_k) {
    std::string csv = "axis,label,series,probability\n";
    for (const auto& p : panels(input)) {
        for (auto c : chart_classes(*p.raw, *p.fused, top_k)) {
            csv += std::string(p.axis) + "," + (*p.labels)[c] + ",raw," + fixed6((*p.raw)[c]) + "\n";
            csv += std::string(p.axis) + "," + (*p.labels)[c] + ",fused," + fixed6((*p.fused)[c]) + "\n";
        }
    }
    return csv;
}

std::string chart_svg(const ChartInput& input, std::size_t top_k) {
    constexpr int kBar = 18, kGap = 14, kPlotHeight = 200, kTop = 50, kLeft = 50, kPanelGap = 60;
    const auto all = panels(input);
    std::vector<std::vector<std::size_t>> shown;
    int width = kLeft;
    for (const auto& p : all) {
        shown.push_back(chart_classes(*p.raw, *p.fused, top_k));
        width += static_cast<int>(shown.back().size()) * (2 * kBar + kGap) + kPanelGap;
    }
    const int height = kTop + kPlotHeight + 70;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<text x=\"" << kLeft << "\" y=\"20\" font-size=\"14\">Raw vs fused probabilities, sample "
        << xml_escape(input.sample_id) << "</text>\n";
    svg << "<rect x=\"" << width - 150 << "\" y=\"10\" width=\"10\" height=\"10\" fill=\"#4c72b0\"/>"
        << "<text x=\"" << width - 135 << "\" y=\"19\">raw</text>\n";
    svg << "<rect x=\"" << width - 95 << "\" y=\"10\" width=\"10\" height=\"10\" fill=\"#dd8452\"/>"
        << "<text x=\"" << width - 80 << "\" y=\"19\">fused</text>\n";

    int x = kLeft;
    const int base = kTop + kPlotHeight;
    for (std::size_t panel = 0; panel < all.size(); ++panel) {
        const auto& p = all[panel];
        const int panel_start = x;
        for (auto c : shown[panel]) {
            const double values[2] = {(*p.raw)[c], (*p.fused)[c]};
            const char* colors[2] = {"#4c72b0", "#dd8452"};
            for (int series = 0; series < 2; ++series) {
                const int h = static_cast<int>(std::lround(values[series] * kPlotHeight));
                svg << "<rect x=\"" << x + series * kBar << "\" y=\"" << base - h << "\" width=\"" << kBar
                    << "\" height=\"" << h << "\" fill=\"" << colors[series] << "\"/>\n";
            }
            svg << "<text x=\"" << x + kBar << "\" y=\"" << base + 14 << "\" text-anchor=\"middle\">"
                << xml_escape((*p.labels)[c]) << "</text>\n";
            x += 2 * kBar + kGap;
        }
        svg << "<line x1=\"" << panel_start - 4 << "\" y1=\"" << base << "\" x2=\"" << x << "\" y2=\"" << base
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << panel_start << "\" y=\"" << base + 40 << "\" font-size=\"12\">" << p.axis
            << "s</text>\n";
        x += kPanelGap;
    }
    svg << "</svg>\n";
    return svg.str();
}

ChartFiles emit_probability_chart(const ChartInput& input, std::size_t top_k, const std::filesystem::path& out_dir,
                                  const std::string& stem) {
    ChartFiles files{out_dir / (stem + ".svg"), out_dir / (stem + ".csv")};
    write_text_file(files.svg, chart_svg(input, top_k));
    write_text_file(files.csv, chart_csv(input, top_k));
    return files;
}

}  // namespace statefusion
