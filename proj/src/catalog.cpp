#include "statefusion/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include <json.hpp>

#include "statefusion/errors.hpp"
#include "statefusion/io.hpp"
#include "statefusion/rng.hpp"

namespace statefusion {

using nlohmann::json;

std::string_view to_string(Axis axis) {
    return axis == Axis::object ? "object" : "state";
}

Axis axis_from_string(std::string_view text) {
    if (text == "object") return Axis::object;
    if (text == "state") return Axis::state;
    throw ValidationError("unknown axis '" + std::string(text) + "'");
}

std::string normalize_word(std::string_view word) {
    std::size_t first = 0;
    std::size_t last = word.size();
    while (first < last && std::isspace(static_cast<unsigned char>(word[first]))) ++first;
    while (last > first && std::isspace(static_cast<unsigned char>(word[last - 1]))) --last;
    std::string out(word.substr(first, last - first));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

namespace {

void normalize_entries(std::vector<LabelEntry>& entries, Axis axis) {
    std::set<std::string> seen;
    for (auto& entry : entries) {
        entry.name = normalize_word(entry.name);
        if (entry.name.empty())
            throw ValidationError(std::string(to_string(axis)) + " label with empty name");
        if (!seen.insert(entry.name).second)
            throw ValidationError("duplicate " + std::string(to_string(axis)) + " label '" + entry.name + "'");
        if (entry.words.empty())
            throw ValidationError("empty word set for " + std::string(to_string(axis)) + " label '" +
                                  entry.name + "'");

        std::set<std::string> words;
        for (auto& word : entry.words) {
            word = normalize_word(word);
            if (word.empty())
                throw ValidationError("empty word in set of label '" + entry.name + "'");
            if (!words.insert(word).second)
                throw ValidationError("duplicate word '" + word + "' in set of label '" + entry.name + "'");
        }
        if (!words.contains(entry.name)) entry.words.insert(entry.words.begin(), entry.name);
    }
}

}  // namespace

ClassCatalog::ClassCatalog(std::vector<LabelEntry> objects, std::vector<LabelEntry> states)
    : objects_(std::move(objects)), states_(std::move(states)) {
    if (objects_.empty() || states_.empty())
        throw ValidationError("catalog needs at least one object and one state");
    normalize_entries(objects_, Axis::object);
    normalize_entries(states_, Axis::state);
}

std::optional<std::size_t> ClassCatalog::index_of(Axis axis, std::string_view name) const {
    const std::string key = normalize_word(name);
    const auto& list = labels(axis);
    for (std::size_t i = 0; i < list.size(); ++i)
        if (list[i].name == key) return i;
    return std::nullopt;
}

std::size_t ClassCatalog::require_index(Axis axis, std::string_view name) const {
    if (auto index = index_of(axis, name)) return *index;
    throw ValidationError("unknown " + std::string(to_string(axis)) + " label '" + std::string(name) + "'");
}

std::string ClassCatalog::fingerprint() const {
    std::string text;
    for (const auto& e : objects_) text += "o:" + e.name + "\n";
    for (const auto& e : states_) text += "s:" + e.name + "\n";
    return fnv1a_hex(text);
}

void ClassCatalog::require_classifiable() const {
    if (object_count() < 2 || state_count() < 2)
        throw ValidationError("classification needs at least two objects and two states (have " +
                              std::to_string(object_count()) + " objects, " +
                              std::to_string(state_count()) + " states)");
}

namespace {

// Line of the n-th (0-based) occurrence of "name" as a JSON string in the text.
std::size_t line_of_label(std::string_view text, std::string_view name, std::size_t occurrence) {
    const std::string needle = "\"" + std::string(name) + "\"";
    std::size_t pos = 0;
    std::size_t found = std::string_view::npos;
    for (std::size_t k = 0; k <= occurrence; ++k) {
        found = text.find(needle, pos);
        if (found == std::string_view::npos) break;
        pos = found + 1;
    }
    return found == std::string_view::npos ? 0 : line_at_offset(text, found);
}

std::vector<LabelEntry> parse_entries(const json& doc, const char* key, std::string_view text,
                                      std::string_view origin) {
    if (!doc.contains(key) || !doc[key].is_array())
        throw ParseError(std::string(origin) + ": missing array \"" + key + "\"");
    std::vector<LabelEntry> entries;
    std::map<std::string, std::size_t> occurrences;
    for (const auto& item : doc[key]) {
        if (!item.is_object() || !item.contains("name") || !item["name"].is_string())
            throw ParseError(std::string(origin) + ": entry of \"" + key + "\" needs a string \"name\"");
        LabelEntry entry;
        entry.name = item["name"].get<std::string>();
        const std::size_t occurrence = occurrences[entry.name]++;
        const auto context = [&] {
            return std::string(origin) + ":" + std::to_string(line_of_label(text, entry.name, occurrence)) +
                   ": label '" + entry.name + "'";
        };
        if (item.contains("words")) {
            if (!item["words"].is_array()) throw ParseError(context() + ": \"words\" must be an array");
            for (const auto& w : item["words"]) {
                if (!w.is_string()) throw ParseError(context() + ": words must be strings");
                entry.words.push_back(w.get<std::string>());
            }
            if (entry.words.empty()) throw ValidationError(context() + ": empty word set");
        } else {
            entry.words.push_back(entry.name);
        }
        const std::string normalized = normalize_word(entry.name);
        for (const auto& prev : entries)
            if (prev.name == normalized)
                throw ValidationError(context() + ": duplicate label");
        try {
            std::vector<LabelEntry> single{entry};
            normalize_entries(single, std::string_view(key) == "objects" ? Axis::object : Axis::state);
            entries.push_back(std::move(single.front()));
        } catch (const ValidationError& e) {
            throw ValidationError(context() + ": " + e.what());
        }
    }
    return entries;
}

}  // namespace

ClassCatalog parse_catalog(std::string_view text, std::string_view origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(origin) + ":" + std::to_string(line_at_offset(text, e.byte)) +
                         ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError(std::string(origin) + ": catalog must be a JSON object");
    auto objects = parse_entries(doc, "objects", text, origin);
    auto states = parse_entries(doc, "states", text, origin);
    return ClassCatalog(std::move(objects), std::move(states));
}

ClassCatalog load_catalog(const std::filesystem::path& path) {
    return parse_catalog(read_text_file(path), path.string());
}

std::string catalog_to_json(const ClassCatalog& catalog) {
    auto entries = [](const std::vector<LabelEntry>& list) {
        json arr = json::array();
        for (const auto& e : list) arr.push_back({{"name", e.name}, {"words", e.words}});
        return arr;
    };
    json doc = {{"objects", entries(catalog.objects())}, {"states", entries(catalog.states())}};
    return doc.dump(2) + "\n";
}

void save_catalog(const ClassCatalog& catalog, const std::filesystem::path& path) {
    write_text_file(path, catalog_to_json(catalog));
}

}  // namespace statefusion
