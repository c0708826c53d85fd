#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "statefusion/catalog.hpp"
#include "statefusion/fusion.hpp"
#include "statefusion/mlp.hpp"

namespace statefusion {

/// Output of the correct/incorrect confidence provider for one sample.
struct CorrectnessConfidence {
    std::string id;
    double p_correct = 0.5;
    double p_incorrect = 0.5;
};

/// Builds a record from p_correct alone; throws ValidationError outside [0, 1].
CorrectnessConfidence make_correctness(std::string id, double p_correct);

using CorrectnessTable = std::map<std::string, CorrectnessConfidence>;

std::string correctness_to_jsonl(std::span<const CorrectnessConfidence> records);
CorrectnessTable correctness_from_jsonl(std::string_view text);
void save_correctness(std::span<const CorrectnessConfidence> records, const std::filesystem::path& path);
CorrectnessTable load_correctness(const std::filesystem::path& path);

enum class GateSource { raw, fused };

std::string_view to_string(GateSource source);

struct GateDecision {
    std::string sample_id;
    Axis axis = Axis::object;
    int selector = 0;  // 1 routes raw, 0 routes fused
    GateSource source = GateSource::fused;
    std::size_t final_index = 0;
};

inline constexpr double kDefaultGateThreshold = 0.5;

/// 1 where the raw confidence argmax equals the ground truth on `axis`.
std::vector<int> label_correctness(std::span<const Sample> samples, Axis axis);

/// Selector input: [p_correct, p_incorrect] ++ raw object conf ++ raw state conf.
std::vector<double> selector_features(const Sample& sample, const CorrectnessConfidence& correctness);

/// Selector features and correctness labels for every sample. Throws
/// ValidationError if a sample has no correctness record.
LabeledSet build_selector_set(std::span<const Sample> samples, const CorrectnessTable& correctness,
                              Axis axis);

/// Trains a two-class selector (class 1 = raw prediction correct). Throws
/// ValidationError when the training split contains only one class.
TrainResult train_selector(const LabeledSet& train_set, const LabeledSet& validation_set,
                           MlpConfig config);

/// Routes raw when p_correct > threshold, fused otherwise (a tie goes to fused).
GateDecision gate_from_probability(std::string sample_id, Axis axis, double p_correct,
                                   std::span<const double> raw, std::span<const double> fused,
                                   double threshold = kDefaultGateThreshold);

/// Runs the selector on the sample and gates between raw and fused.
GateDecision apply_gate(const MlpModel& selector, const Sample& sample,
                        const CorrectnessConfidence& correctness, const ConfidenceVector& raw,
                        std::span<const double> fused, Axis axis,
                        double threshold = kDefaultGateThreshold);

/// Final predictions given per-sample selector values (1 = raw, 0 = fused).
std::vector<std::size_t> gated_predictions(std::span<const int> selector,
                                           std::span<const std::size_t> raw_predictions,
                                           std::span<const std::size_t> fused_predictions);

}  // namespace statefusion
