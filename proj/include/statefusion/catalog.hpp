#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace statefusion {

/// The two classification axes.
enum class Axis { object, state };

std::string_view to_string(Axis axis);
Axis axis_from_string(std::string_view text);

/// A class label and the query words that stand for it in knowledge lookups.
struct LabelEntry {
    std::string name;
    std::vector<std::string> words;

    friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

/// Object and state label spaces. The order of each list is the canonical
/// index order for every vector and matrix in the system.
class ClassCatalog {
public:
    ClassCatalog() = default;

    /// Normalizes and validates the entries; throws ValidationError.
    ClassCatalog(std::vector<LabelEntry> objects, std::vector<LabelEntry> states);

    const std::vector<LabelEntry>& objects() const { return objects_; }
    const std::vector<LabelEntry>& states() const { return states_; }
    const std::vector<LabelEntry>& labels(Axis axis) const {
        return axis == Axis::object ? objects_ : states_;
    }

    std::size_t object_count() const { return objects_.size(); }
    std::size_t state_count() const { return states_.size(); }
    std::size_t count(Axis axis) const { return labels(axis).size(); }

    /// Length of the fusion feature vector, 2 * (N_states + N_objects).
    std::size_t feature_length() const { return 2 * (state_count() + object_count()); }

    /// Case-insensitive lookup of a label name.
    std::optional<std::size_t> index_of(Axis axis, std::string_view name) const;

    /// Same as index_of but throws ValidationError for an unknown label.
    std::size_t require_index(Axis axis, std::string_view name) const;

    /// Hash of the label order of both axes. Files that store vectors or
    /// matrices record it so that a mismatched catalog is detected on load.
    std::string fingerprint() const;

    /// Throws ValidationError unless both axes have at least two labels.
    void require_classifiable() const;

    friend bool operator==(const ClassCatalog&, const ClassCatalog&) = default;

private:
    std::vector<LabelEntry> objects_;
    std::vector<LabelEntry> states_;
};

/// Parses catalog JSON text. `origin` names the source in error messages.
ClassCatalog parse_catalog(std::string_view text, std::string_view origin = "<catalog>");
ClassCatalog load_catalog(const std::filesystem::path& path);
std::string catalog_to_json(const ClassCatalog& catalog);
void save_catalog(const ClassCatalog& catalog, const std::filesystem::path& path);

/// Lowercases ASCII and trims surrounding whitespace.
std::string normalize_word(std::string_view word);

}  // namespace statefusion
