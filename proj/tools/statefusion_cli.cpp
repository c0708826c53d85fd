// statefusion: command-line driver for knowledge fetching, matrix building,
// synthetic data, training, gating, evaluation and charts.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "statefusion/catalog.hpp"
#include "statefusion/errors.hpp"
#include "statefusion/eval.hpp"
#include "statefusion/fusion.hpp"
#include "statefusion/gate.hpp"
#include "statefusion/io.hpp"
#include "statefusion/knowledge.hpp"
#include "statefusion/mlp.hpp"
#include "statefusion/relatedness.hpp"
#include "statefusion/rng.hpp"
#include "statefusion/synthdata.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace statefusion;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool offline = false;
    bool online = false;
    std::string source;
    std::string agg;
    std::optional<double> epsilon;
    std::string alpha_grid;
    std::string out;
    std::size_t top_k = 5;
    std::string sample;
};

struct WorldConfig {
    std::size_t n_objects = 15;
    std::size_t n_states = 9;
    std::size_t plausible_states = 3;
    std::size_t n_samples = 3000;
    double signal = 1.2;
    double sigma = 0.5;
    double rho = 1.0;
    double kappa = 0.0;
};

struct RunConfig {
    fs::path base_dir;  // relative paths resolve against the config file's directory
    std::string catalog;
    std::string cache;
    std::string dataset;
    std::map<std::string, std::string> knowledge;
    std::optional<WorldConfig> world;
    KnowledgeSource source = KnowledgeSource::conceptnet;
    Aggregation agg = Aggregation::max;
    double epsilon = kDefaultSmoothing;
    std::vector<double> alpha_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<std::string> variants{"raw", "linear_blend:conceptnet", "fused_mlp:conceptnet",
                                      "fused_mlp+gate:conceptnet"};
    double gate_threshold = kDefaultGateThreshold;
    PipelineConfigs mlp = default_pipeline_configs();
    std::vector<std::uint64_t> seeds{0};
    bool offline = true;
    std::string out = "runs";

    fs::path resolve(const std::string& p) const {
        const fs::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    }
};

// ------------------------------------------------------------------ config

json mlp_to_config(const MlpConfig& c) {
    return {{"hidden_dims", c.hidden_dims}, {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},   {"patience", c.patience}};
}

void mlp_from_config(const json& j, MlpConfig& c) {
    c.hidden_dims = j.value("hidden_dims", c.hidden_dims);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
}

// Everything that influences outputs. The output directory, the seed (named
// separately in the run directory) and the offline switch are left out.
json to_json(const RunConfig& c) {
    json j = {{"catalog", c.catalog},
              {"cache", c.cache},
              {"dataset", c.dataset},
              {"knowledge", c.knowledge},
              {"source", to_string(c.source)},
              {"agg", to_string(c.agg)},
              {"epsilon", c.epsilon},
              {"alpha_grid", c.alpha_grid},
              {"variants", c.variants},
              {"gate_threshold", c.gate_threshold},
              {"mlp",
               {{"fusion_object", mlp_to_config(c.mlp.fusion_object)},
                {"fusion_state", mlp_to_config(c.mlp.fusion_state)},
                {"selector", mlp_to_config(c.mlp.selector)}}}};
    if (c.world)
        j["world"] = {{"n_objects", c.world->n_objects}, {"n_states", c.world->n_states},
                      {"plausible_states", c.world->plausible_states}, {"n_samples", c.world->n_samples},
                      {"signal", c.world->signal}, {"sigma", c.world->sigma},
                      {"rho", c.world->rho}, {"kappa", c.world->kappa}};
    return j;
}

std::vector<double> parse_alpha_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            grid.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError("--alpha-grid: '" + item + "' is not a number");
        }
    }
    if (grid.empty()) throw ValidationError("--alpha-grid is empty");
    return grid;
}

RunConfig load_config(const Flags& flags) {
    RunConfig c;
    c.base_dir = fs::current_path();
    if (!flags.config.empty()) {
        const fs::path path(flags.config);
        c.base_dir = fs::absolute(path).parent_path();
        try {
            const json j = json::parse(read_text_file(path));
            c.catalog = j.value("catalog", c.catalog);
            c.cache = j.value("cache", c.cache);
            c.dataset = j.value("dataset", c.dataset);
            if (j.contains("knowledge")) c.knowledge = j["knowledge"].get<std::map<std::string, std::string>>();
            if (j.contains("world")) {
                const auto& w = j["world"];
                WorldConfig wc;
                wc.n_objects = w.value("n_objects", wc.n_objects);
                wc.n_states = w.value("n_states", wc.n_states);
                wc.plausible_states = w.value("plausible_states", wc.plausible_states);
                wc.n_samples = w.value("n_samples", wc.n_samples);
                wc.signal = w.value("signal", wc.signal);
                wc.sigma = w.value("sigma", wc.sigma);
                wc.rho = w.value("rho", wc.rho);
                wc.kappa = w.value("kappa", wc.kappa);
                c.world = wc;
            }
            if (j.contains("source")) c.source = source_from_string(j["source"].get<std::string>());
            if (j.contains("agg")) c.agg = aggregation_from_string(j["agg"].get<std::string>());
            c.epsilon = j.value("epsilon", c.epsilon);
            c.alpha_grid = j.value("alpha_grid", c.alpha_grid);
            c.variants = j.value("variants", c.variants);
            c.gate_threshold = j.value("gate_threshold", c.gate_threshold);
            if (j.contains("mlp")) {
                const auto& m = j["mlp"];
                if (m.contains("fusion_object")) mlp_from_config(m["fusion_object"], c.mlp.fusion_object);
                if (m.contains("fusion_state")) mlp_from_config(m["fusion_state"], c.mlp.fusion_state);
                if (m.contains("selector")) mlp_from_config(m["selector"], c.mlp.selector);
            }
            if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
            if (j.contains("seed")) c.seeds = {j["seed"].get<std::uint64_t>()};
            c.offline = j.value("offline", c.offline);
            c.out = j.value("out", c.out);
        } catch (const json::exception& e) {
            throw ValidationError(flags.config + ": " + e.what());
        }
    }
    if (flags.seed) c.seeds = {*flags.seed};
    if (!flags.source.empty()) c.source = source_from_string(flags.source);
    if (!flags.agg.empty()) c.agg = aggregation_from_string(flags.agg);
    if (flags.epsilon) c.epsilon = *flags.epsilon;
    if (!flags.alpha_grid.empty()) c.alpha_grid = parse_alpha_grid(flags.alpha_grid);
    if (flags.online) c.offline = false;
    if (flags.offline) c.offline = true;
    if (!flags.out.empty()) c.out = flags.out;

    if (c.seeds.empty()) throw ValidationError("config lists no seeds");
    if (!(c.epsilon >= 0.0)) throw ValidationError("epsilon must be >= 0");
    for (const auto& [name, path] : c.knowledge) {
        source_from_string(name);
        if (!fs::exists(c.resolve(path))) throw ValidationError("knowledge file not found: " + path);
    }
    if (!c.catalog.empty() && !fs::exists(c.resolve(c.catalog)))
        throw ValidationError("catalog not found: " + c.catalog);
    if (!c.dataset.empty() && !fs::exists(c.resolve(c.dataset)))
        throw ValidationError("dataset directory not found: " + c.dataset);
    return c;
}

// ------------------------------------------------------------------ run dir

struct Run {
    RunConfig config;
    fs::path dir;
    std::string config_hash;
};

Run open_run(const RunConfig& config, const std::string& command, const std::string& catalog_fingerprint) {
    Run run{config, {}, fnv1a_hex(to_json(config).dump())};
    std::string seeds;
    for (auto s : config.seeds) seeds += (seeds.empty() ? "" : "_") + std::to_string(s);
    run.dir = fs::path(config.out) / ("run-" + run.config_hash + "-seed" + seeds);
    fs::create_directories(run.dir);
    json record = {{"config", to_json(config)},
                   {"config_hash", run.config_hash},
                   {"seeds", config.seeds},
                   {"command", command},
                   {"catalog_fingerprint", catalog_fingerprint}};
    write_text_file(run.dir / ("run_config." + command + ".json"), record.dump(2) + "\n");
    return run;
}

// ------------------------------------------------------------------ inputs

std::uint64_t single_seed(const RunConfig& c) { return c.seeds.front(); }

WorldSpec world_spec(const RunConfig& c, std::uint64_t seed) {
    const WorldConfig w = c.world.value_or(WorldConfig{});
    WorldSpec spec;
    spec.n_objects = w.n_objects;
    spec.n_states = w.n_states;
    spec.joint = make_structured_joint(w.n_objects, w.n_states, w.plausible_states, seed);
    spec.signal = w.signal;
    spec.sigma = w.sigma;
    spec.rho = w.rho;
    spec.kappa = w.kappa;
    spec.seed = seed;
    return spec;
}

SyntheticDataset make_world(const RunConfig& c, std::uint64_t seed) {
    return sample_dataset(world_spec(c, seed), c.world.value_or(WorldConfig{}).n_samples);
}

CorrectnessTable optional_correctness(const fs::path& path) {
    return fs::exists(path) ? load_correctness(path) : CorrectnessTable{};
}

/// Dataset, correctness and knowledge for one seed. A dataset directory wins
/// over a synthetic world; explicit knowledge files win over the matrices a
/// previous `matrix` run left in the run directory, which win over the
/// world's own knowledge.
PipelineInputs load_inputs(const RunConfig& c, std::uint64_t seed, const fs::path& run_dir) {
    PipelineInputs in;
    std::optional<ConditionalPair> world_knowledge;
    if (!c.dataset.empty()) {
        const fs::path dir = c.resolve(c.dataset);
        in.catalog = load_catalog(c.catalog.empty() ? dir / "catalog.json" : c.resolve(c.catalog));
        in.samples = load_samples(dir / "samples.jsonl", in.catalog);
        in.object_correctness = optional_correctness(dir / "correctness_object.jsonl");
        in.state_correctness = optional_correctness(dir / "correctness_state.jsonl");
        if (fs::exists(dir / "knowledge.json"))
            world_knowledge = load_conditionals(dir / "knowledge.json", in.catalog.fingerprint());
    } else {
        const SyntheticDataset data = make_world(c, seed);
        in.catalog = data.catalog;
        in.samples = data.samples;
        for (const auto& r : data.object_correctness) in.object_correctness[r.id] = r;
        for (const auto& r : data.state_correctness) in.state_correctness[r.id] = r;
        world_knowledge = data.knowledge;
    }
    in.catalog.require_classifiable();
    for (KnowledgeSource source : {KnowledgeSource::conceptnet, KnowledgeSource::ngram}) {
        const std::string name(to_string(source));
        const fs::path from_matrix = run_dir / ("conditionals_" + name + ".json");
        if (auto it = c.knowledge.find(name); it != c.knowledge.end())
            in.knowledge[source] = load_conditionals(c.resolve(it->second), in.catalog.fingerprint());
        else if (fs::exists(from_matrix))
            in.knowledge[source] = load_conditionals(from_matrix, in.catalog.fingerprint());
    }
    // Synthetic knowledge stands in for the configured source only.
    if (world_knowledge && !in.knowledge.count(c.source)) in.knowledge[c.source] = *world_knowledge;
    return in;
}

std::string catalog_fingerprint_of(const RunConfig& c) {
    if (!c.catalog.empty()) return load_catalog(c.resolve(c.catalog)).fingerprint();
    if (!c.dataset.empty()) return load_catalog(c.resolve(c.dataset) / "catalog.json").fingerprint();
    const WorldConfig w = c.world.value_or(WorldConfig{});
    return synthetic_catalog(w.n_objects, w.n_states).fingerprint();
}

ClassCatalog require_catalog(const RunConfig& c) {
    if (c.catalog.empty()) throw ValidationError("this command needs a \"catalog\" in the config");
    return load_catalog(c.resolve(c.catalog));
}

fs::path cache_path(const RunConfig& c) {
    return resolve_cache_path(c.cache.empty() ? fs::path("relatedness_cache.json") : c.resolve(c.cache));
}

Variant parse_variant(const std::string& text) {
    const auto colon = text.find(':');
    Variant v;
    v.method = method_from_string(text.substr(0, colon));
    if (colon != std::string::npos) v.source = source_from_string(text.substr(colon + 1));
    return v;
}

MlpConfig seeded(MlpConfig c, std::uint64_t seed, std::string_view name) {
    c.seed = derive_seed(seed, name);
    return c;
}

// ------------------------------------------------------------------ commands

int cmd_fetch(const RunConfig& c) {
    const ClassCatalog catalog = require_catalog(c);
    const Run run = open_run(c, "fetch", catalog.fingerprint());
    const fs::path path = cache_path(c);
    RelatednessCache cache = RelatednessCache::load(path);
    std::unique_ptr<HttpTransport> transport;
    if (!c.offline) transport = make_network_transport();
    RelatednessClient client(cache, transport.get());
    const auto missing = client.missing_pairs(catalog, c.source);
    if (c.offline) {
        if (!missing.empty()) {
            std::cerr << "statefusion: error: " << missing.size() << " " << to_string(c.source)
                      << " pairs missing from " << path.string() << " and network access is disabled:\n";
            for (const auto& [o, s] : missing) std::cerr << "  " << o << " | " << s << "\n";
            return 1;
        }
    } else {
        client.prefetch(catalog, c.source);
        cache.save(path);
    }
    json summary = {{"cache", path.string()}, {"source", to_string(c.source)}, {"entries", cache.size()},
                    {"fetched", c.offline ? 0 : missing.size()}};
    write_text_file(run.dir / ("fetch_" + std::string(to_string(c.source)) + ".json"), summary.dump(2) + "\n");
    std::cout << run.dir.string() << "\n";
    return 0;
}

int cmd_matrix(const RunConfig& c) {
    const ClassCatalog catalog = require_catalog(c);
    const Run run = open_run(c, "matrix", catalog.fingerprint());
    const fs::path path = cache_path(c);
    RelatednessCache cache = RelatednessCache::load(path);
    std::unique_ptr<HttpTransport> transport;
    if (!c.offline) transport = make_network_transport();
    RelatednessClient client(cache, transport.get());
    const RawRelatednessMatrix raw = build_raw_matrix(catalog, c.source, c.agg, client.lookup(c.source));
    if (!c.offline) cache.save(path);
    const ConditionalPair pair = normalize(raw, c.epsilon);
    check_conditional(pair.object_given_state);
    check_conditional(pair.state_given_object);
    const std::string name(to_string(c.source));
    write_text_file(run.dir / ("raw_" + name + ".json"), raw_matrix_to_json(raw));
    save_conditionals(pair, run.dir / ("conditionals_" + name + ".json"));
    std::cout << run.dir.string() << "\n";
    return 0;
}

int cmd_synth(const RunConfig& c) {
    const std::uint64_t seed = single_seed(c);
    const WorldSpec spec = world_spec(c, seed);
    const std::size_t n = c.world.value_or(WorldConfig{}).n_samples;
    const Run run = open_run(c, "synth", synthetic_catalog(spec.n_objects, spec.n_states).fingerprint());
    write_dataset(sample_dataset(spec, n), spec, n, run.dir / "dataset");
    std::cout << (run.dir / "dataset").string() << "\n";
    return 0;
}

int cmd_features(const RunConfig& c) {
    const std::uint64_t seed = single_seed(c);
    const Run run = open_run(c, "features", catalog_fingerprint_of(c));
    const PipelineInputs in = load_inputs(c, seed, run.dir);
    const auto it = in.knowledge.find(c.source);
    if (it == in.knowledge.end()) throw ValidationError("no " + std::string(to_string(c.source)) + " knowledge");
    const FusedBatch batch = fuse_samples(in.samples, it->second);
    std::string out = json{{"format", "statefusion.features/1"},
                           {"layout", batch.layout.descriptor()},
                           {"catalog_fingerprint", in.catalog.fingerprint()},
                           {"source", to_string(c.source)}}
                          .dump() +
                      "\n";
    for (std::size_t n = 0; n < in.samples.size(); ++n) {
        const auto row = batch.features.row(n);
        out += json{{"id", in.samples[n].id},
                    {"split", to_string(in.samples[n].split)},
                    {"features", std::vector<double>(row.begin(), row.end())}}
                   .dump() +
               "\n";
    }
    write_text_file(run.dir / ("features_" + std::string(to_string(c.source)) + ".jsonl"), out);
    std::cout << run.dir.string() << "\n";
    return 0;
}

int cmd_train(const RunConfig& c) {
    const std::uint64_t seed = single_seed(c);
    const Run run = open_run(c, "train", catalog_fingerprint_of(c));
    const PipelineInputs in = load_inputs(c, seed, run.dir);
    const auto it = in.knowledge.find(c.source);
    if (it == in.knowledge.end()) throw ValidationError("no " + std::string(to_string(c.source)) + " knowledge");
    const auto train_samples = select_split(in.samples, Split::train);
    const auto val_samples = select_split(in.samples, Split::validation);
    if (train_samples.empty() || val_samples.empty()) throw ValidationError("dataset needs train and val samples");
    const FusedBatch tr = fuse_samples(train_samples, it->second);
    const FusedBatch va = fuse_samples(val_samples, it->second);
    for (Axis axis : {Axis::object, Axis::state}) {
        const bool object = axis == Axis::object;
        MlpConfig cfg = seeded(object ? c.mlp.fusion_object : c.mlp.fusion_state, seed,
                               object ? "fusion_object" : "fusion_state");
        cfg.input_dim = tr.layout.length();
        cfg.output_dim = in.catalog.count(axis);
        LabeledSet train_set{tr.features, {}}, val_set{va.features, {}};
        for (const auto& s : train_samples) train_set.labels.push_back(s.truth(axis));
        for (const auto& s : val_samples) val_set.labels.push_back(s.truth(axis));
        const auto result = train(init_mlp(cfg), train_set, val_set);
        const std::string stem = object ? "fusion_object" : "fusion_state";
        save_mlp(result.model, in.catalog.fingerprint(), run.dir / (stem + ".json"));
        write_text_file(run.dir / (stem + "_report.json"), train_report_to_json(result.report));
    }
    std::cout << run.dir.string() << "\n";
    return 0;
}

int cmd_gate_train(const RunConfig& c) {
    const std::uint64_t seed = single_seed(c);
    const Run run = open_run(c, "gate-train", catalog_fingerprint_of(c));
    const PipelineInputs in = load_inputs(c, seed, run.dir);
    const auto train_samples = select_split(in.samples, Split::train);
    const auto val_samples = select_split(in.samples, Split::validation);
    for (Axis axis : {Axis::object, Axis::state}) {
        const bool object = axis == Axis::object;
        const CorrectnessTable& table = object ? in.object_correctness : in.state_correctness;
        if (table.empty()) throw ValidationError("dataset has no " + std::string(to_string(axis)) + " correctness file");
        const auto result = train_selector(build_selector_set(train_samples, table, axis),
                                           build_selector_set(val_samples, table, axis),
                                           seeded(c.mlp.selector, seed, object ? "selector_object" : "selector_state"));
        const std::string stem = object ? "selector_object" : "selector_state";
        save_mlp(result.model, in.catalog.fingerprint(), run.dir / (stem + ".json"));
        write_text_file(run.dir / (stem + "_report.json"), train_report_to_json(result.report));
    }
    std::cout << run.dir.string() << "\n";
    return 0;
}

void write_outcome_models(const PipelineOutcome& o, const std::string& fingerprint, const fs::path& dir,
                          const std::string& prefix) {
    save_mlp(o.fusion_object_model, fingerprint, dir / (prefix + "fusion_object.json"));
    save_mlp(o.fusion_state_model, fingerprint, dir / (prefix + "fusion_state.json"));
    if (!o.selector_object_model.layers.empty()) {
        save_mlp(o.selector_object_model, fingerprint, dir / (prefix + "selector_object.json"));
        save_mlp(o.selector_state_model, fingerprint, dir / (prefix + "selector_state.json"));
    }
}

void write_reports(const std::vector<EvalReport>& reports, const fs::path& dir, const std::string& stem) {
    write_text_file(dir / (stem + ".json"), reports_to_json(reports));
    write_text_file(dir / (stem + ".md"), reports_to_markdown(reports));
}

int cmd_eval(const RunConfig& c) {
    const std::uint64_t seed = single_seed(c);
    const Run run = open_run(c, "eval", catalog_fingerprint_of(c));
    const PipelineInputs in = load_inputs(c, seed, run.dir);
    PipelineOptions opts;
    opts.alpha_grid = c.alpha_grid;
    opts.gate_threshold = c.gate_threshold;
    opts.train_selectors = !in.object_correctness.empty() && !in.state_correctness.empty();
    const PipelineOutcome outcome = run_pipeline(in, c.source, c.mlp, seed, opts);
    const std::string fp = dataset_fingerprint(in.samples, in.catalog);
    std::vector<EvalReport> reports;
    for (Method m : {Method::raw, Method::linear_blend, Method::fused_mlp, Method::fused_mlp_gate}) {
        if (m == Method::fused_mlp_gate && !opts.train_selectors) continue;
        reports.push_back(make_report({m, c.source}, outcome, in.catalog, fp));
    }
    write_reports(reports, run.dir, "eval_report");
    write_outcome_models(outcome, in.catalog.fingerprint(), run.dir, "eval_");
    std::cout << reports_to_markdown(reports);
    return 0;
}

int cmd_ablate(const RunConfig& c) {
    const Run run = open_run(c, "ablate", catalog_fingerprint_of(c));
    AblationSpec spec;
    for (const auto& v : c.variants) spec.variants.push_back(parse_variant(v));
    spec.alpha_grid = c.alpha_grid;
    spec.gate_threshold = c.gate_threshold;
    std::vector<EvalReport> reports;
    // A synthetic world is redrawn per seed, so each seed is its own ablation.
    for (auto seed : c.seeds) {
        spec.seeds = {seed};
        const PipelineInputs in = load_inputs(c, seed, run.dir);
        std::vector<PipelineOutcome> outcomes;
        const auto part = run_ablation(spec, in, c.mlp, &outcomes);
        reports.insert(reports.end(), part.begin(), part.end());
        for (const auto& o : outcomes)
            write_outcome_models(o, in.catalog.fingerprint(), run.dir / "models",
                                 std::string(to_string(o.source)) + "_seed" + std::to_string(seed) + "_");
    }
    write_reports(reports, run.dir, "ablation_report");
    std::cout << reports_to_markdown(reports);
    return 0;
}

int cmd_chart(const RunConfig& c, const Flags& flags) {
    const std::uint64_t seed = single_seed(c);
    const Run run = open_run(c, "chart", catalog_fingerprint_of(c));
    const PipelineInputs in = load_inputs(c, seed, run.dir);
    const auto it = in.knowledge.find(c.source);
    if (it == in.knowledge.end()) throw ValidationError("no " + std::string(to_string(c.source)) + " knowledge");
    const Sample* chosen = nullptr;
    for (const auto& s : in.samples) {
        if (flags.sample.empty() ? s.split == Split::test : s.id == flags.sample) {
            chosen = &s;
            break;
        }
    }
    if (!chosen) throw ValidationError(flags.sample.empty() ? "dataset has no test samples"
                                                            : "no sample with id '" + flags.sample + "'");
    ChartInput chart;
    chart.sample_id = chosen->id;
    for (const auto& e : in.catalog.objects()) chart.object_labels.push_back(e.name);
    for (const auto& e : in.catalog.states()) chart.state_labels.push_back(e.name);
    chart.raw_objects = chosen->object_conf.values;
    chart.raw_states = chosen->state_conf.values;
    chart.fused_objects = marginal_objects(chosen->state_conf, it->second.object_given_state).values;
    chart.fused_states = marginal_states(chosen->object_conf, it->second.state_given_object).values;
    const auto files = emit_probability_chart(chart, flags.top_k, run.dir, "chart_" + chosen->id);
    std::cout << files.svg.string() << "\n" << files.csv.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Object/state classification fusion with language knowledge"};
    app.require_subcommand(1);
    Flags flags;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", flags.seed, "Root seed (overrides the config)");
        sub->add_flag("--offline", flags.offline, "Never touch the network (default)");
        sub->add_flag("--online", flags.online, "Allow network fetches for cache misses");
        sub->add_option("--source", flags.source, "Knowledge source")->check(CLI::IsMember({"conceptnet", "ngram"}));
        sub->add_option("--agg", flags.agg, "Word-set aggregation")->check(CLI::IsMember({"max", "mean"}));
        sub->add_option("--epsilon", flags.epsilon, "Smoothing added before normalization");
        sub->add_option("--alpha-grid", flags.alpha_grid, "Comma-separated linear blend weights");
        sub->add_option("--out", flags.out, "Output root directory");
    };

    struct Command {
        const char* name;
        const char* help;
    };
    const std::vector<Command> commands = {
        {"fetch", "Fill the relatedness cache for the catalog"},
        {"matrix", "Build and normalize the conditional matrices"},
        {"synth", "Generate a synthetic world dataset"},
        {"features", "Write fusion feature vectors for a dataset"},
        {"train", "Train the object and state fusion MLPs"},
        {"gate-train", "Train the object and state selectors"},
        {"eval", "Run the full pipeline and score the test split"},
        {"ablate", "Run every configured variant and seed"},
        {"chart", "Raw vs fused probability chart for one sample"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& cmd : commands) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        add_common(sub);
        subs[cmd.name] = sub;
    }
    subs["chart"]->add_option("--top-k", flags.top_k, "Classes shown per axis")->check(CLI::PositiveNumber);
    subs["chart"]->add_option("--sample", flags.sample, "Sample id (default: first test sample)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const RunConfig config = load_config(flags);
        if (subs["fetch"]->parsed()) return cmd_fetch(config);
        if (subs["matrix"]->parsed()) return cmd_matrix(config);
        if (subs["synth"]->parsed()) return cmd_synth(config);
        if (subs["features"]->parsed()) return cmd_features(config);
        if (subs["train"]->parsed()) return cmd_train(config);
        if (subs["gate-train"]->parsed()) return cmd_gate_train(config);
        if (subs["eval"]->parsed()) return cmd_eval(config);
        if (subs["ablate"]->parsed()) return cmd_ablate(config);
        if (subs["chart"]->parsed()) return cmd_chart(config, flags);
    } catch (const std::exception& e) {
        std::cerr << "statefusion: error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
