#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "statefusion/catalog.hpp"
#include "statefusion/fusion.hpp"
#include "statefusion/gate.hpp"
#include "statefusion/grid.hpp"
#include "statefusion/knowledge.hpp"
#include "statefusion/mlp.hpp"

namespace statefusion {

/// Mean over classes with non-zero support of per-class recall.
double average_class_accuracy(std::span<const std::size_t> predictions,
                              std::span<const std::size_t> truths, std::size_t n_classes);

/// Rows are true classes, columns predicted classes.
Grid confusion_matrix(std::span<const std::size_t> predictions, std::span<const std::size_t> truths,
                      std::size_t n_classes);

struct AxisReport {
    double accuracy = 0.0;
    std::vector<double> recall;  // NaN-free; zero-support classes report 0
    std::vector<std::size_t> support;
    Grid confusion;

    friend bool operator==(const AxisReport&, const AxisReport&) = default;
};

AxisReport make_axis_report(std::span<const std::size_t> predictions, std::span<const std::size_t> truths,
                            std::size_t n_classes);

enum class Method { raw, linear_blend, fused_mlp, fused_mlp_gate };

std::string_view to_string(Method method);
Method method_from_string(std::string_view text);

struct Variant {
    Method method = Method::raw;
    KnowledgeSource source = KnowledgeSource::conceptnet;

    friend bool operator==(const Variant&, const Variant&) = default;
};

/// Row name in the Table-1-style summary, e.g. "(Resnet,CN)+MLP".
std::string table_row_label(const Variant& variant);

struct AblationSpec {
    std::vector<Variant> variants;
    std::vector<std::uint64_t> seeds{0};
    std::vector<double> alpha_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    double gate_threshold = kDefaultGateThreshold;

    /// Throws ValidationError if empty or a variant repeats.
    void validate() const;
};

/// Training hyper-parameters; input/output dimensions are filled in per run.
struct PipelineConfigs {
    MlpConfig fusion_object;
    MlpConfig fusion_state;
    MlpConfig selector;
};

PipelineConfigs default_pipeline_configs();

struct PipelineInputs {
    ClassCatalog catalog;
    std::vector<Sample> samples;
    std::map<KnowledgeSource, ConditionalPair> knowledge;
    CorrectnessTable object_correctness;
    CorrectnessTable state_correctness;
};

/// Test-split predictions of every method on one axis.
struct AxisPredictions {
    std::vector<std::size_t> truth;
    std::vector<std::size_t> raw;
    std::vector<std::size_t> blend;
    std::vector<std::size_t> fused;
    std::vector<std::size_t> gated;
    std::vector<int> selector;  // 1 = raw routed
};

struct PipelineOutcome {
    std::uint64_t seed = 0;
    KnowledgeSource source = KnowledgeSource::conceptnet;
    double alpha = 1.0;
    AxisPredictions object;
    AxisPredictions state;
    MlpModel fusion_object_model;
    MlpModel fusion_state_model;
    MlpModel selector_object_model;
    MlpModel selector_state_model;
    TrainReport fusion_object_report;
    TrainReport fusion_state_report;
    TrainReport selector_object_report;
    TrainReport selector_state_report;

    const AxisPredictions& predictions(Axis axis) const { return axis == Axis::object ? object : state; }
};

struct PipelineOptions {
    std::vector<double> alpha_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    double gate_threshold = kDefaultGateThreshold;
    bool train_selectors = true;
};

/// Trains the fusion MLPs (and the selectors) on the train split, tunes on
/// validation, and predicts the test split with every method.
PipelineOutcome run_pipeline(const PipelineInputs& inputs, KnowledgeSource source,
                             const PipelineConfigs& configs, std::uint64_t seed,
                             const PipelineOptions& options = {});

/// Linear-blend alpha with the best validation state accuracy (first on ties).
double select_blend_alpha(std::span<const Sample> validation, const ConditionalPair& knowledge,
                          std::span<const double> alpha_grid);

struct EvalReport {
    std::string method;
    std::string row_label;
    std::string source;
    std::uint64_t seed = 0;
    std::string dataset_fingerprint;
    double alpha = 1.0;  // linear blend only
    AxisReport object;
    AxisReport state;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport make_report(const Variant& variant, const PipelineOutcome& outcome, const ClassCatalog& catalog,
                       std::string dataset_fingerprint);

/// One report per (variant, seed), in spec order with seeds innermost.
/// Fails with a ValidationError naming the variant on any error. When
/// `outcomes` is given, every pipeline run is appended to it in run order.
std::vector<EvalReport> run_ablation(const AblationSpec& spec, const PipelineInputs& inputs,
                                     const PipelineConfigs& configs,
                                     std::vector<PipelineOutcome>* outcomes = nullptr);

std::string dataset_fingerprint(std::span<const Sample> samples, const ClassCatalog& catalog);

std::string reports_to_json(std::span<const EvalReport> reports);
std::vector<EvalReport> reports_from_json(std::string_view text);

/// Table with States/Objects columns, seed-averaged, in Table 1 row order.
std::string reports_to_markdown(std::span<const EvalReport> reports);

struct ChartInput {
    std::string sample_id;
    std::vector<std::string> object_labels;
    std::vector<std::string> state_labels;
    std::vector<double> raw_objects;
    std::vector<double> raw_states;
    std::vector<double> fused_objects;
    std::vector<double> fused_states;
};

/// Classes shown for one axis: the top_k (clamped to the class count) by
/// max(raw, fused), ties to the lower index.
std::vector<std::size_t> chart_classes(std::span<const double> raw, std::span<const double> fused,
                                       std::size_t top_k);

/// CSV with header "axis,label,series,probability"; 2 * top_k rows per axis.
std::string chart_csv(const ChartInput& input, std::size_t top_k);
std::string chart_svg(const ChartInput& input, std::size_t top_k);

struct ChartFiles {
    std::filesystem::path svg;
    std::filesystem::path csv;
};

ChartFiles emit_probability_chart(const ChartInput& input, std::size_t top_k,
                                  const std::filesystem::path& out_dir, const std::string& stem = "chart");

}  // namespace statefusion
