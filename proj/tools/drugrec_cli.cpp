// drugrec: batch front end for ingesting data, training, recommending and
// evaluating. Exit codes: 0 success, 1 invalid input, 2 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "drugrec/dataset.hpp"
#include "drugrec/error.hpp"
#include "drugrec/evaluation.hpp"
#include "drugrec/io.hpp"
#include "drugrec/random.hpp"
#include "drugrec/recommender.hpp"
#include "drugrec/serialize.hpp"
#include "drugrec/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace drugrec;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailure = 2;

struct DataSource {
    std::optional<DatasetPaths> paths;
    std::optional<synthetic::SyntheticConfig> synthetic;
};

struct RunConfig {
    std::uint64_t seed = 0;
    DataSource data;
    rec::PipelineConfig pipeline;
    eval::EvaluationOptions evaluation;
    std::string output_dir;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : fs::absolute(base / path).lexically_normal();
}

DataSource decode_data(const json& j, const fs::path& base) {
    DataSource src;
    if (!j.is_object()) throw ArgumentError("data: expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const char* kKeys[] = {"dir", "ratings", "drugs", "interactions", "adverse_events"};
        if (std::find(std::begin(kKeys), std::end(kKeys), it.key()) == std::end(kKeys))
            throw ArgumentError("data: unknown field '" + it.key() + "'");
        if (!it->is_string()) throw ArgumentError("data." + it.key() + ": expected a path string");
    }
    DatasetPaths p;
    if (j.contains("dir")) p = DatasetPaths::in_directory(resolve(base, j["dir"].get<std::string>()));
    if (j.contains("ratings")) p.ratings = resolve(base, j["ratings"].get<std::string>());
    if (j.contains("drugs")) p.drugs = resolve(base, j["drugs"].get<std::string>());
    if (j.contains("interactions")) p.interactions = resolve(base, j["interactions"].get<std::string>());
    if (j.contains("adverse_events"))
        p.adverse_events = resolve(base, j["adverse_events"].get<std::string>());
    if (p.ratings.empty() || p.drugs.empty() || p.interactions.empty() || p.adverse_events.empty())
        throw ArgumentError("data: give 'dir' or all four table paths");
    src.paths = p;
    return src;
}

json encode_data(const DataSource& d) {
    if (d.synthetic) return serial::encode(*d.synthetic);
    return {{"ratings", d.paths->ratings.string()},
            {"drugs", d.paths->drugs.string()},
            {"interactions", d.paths->interactions.string()},
            {"adverse_events", d.paths->adverse_events.string()}};
}

RunConfig load_config(const std::string& file) {
    RunConfig cfg;
    if (file.empty()) return cfg;
    json j;
    try {
        j = json::parse(io::read_file(file));
    } catch (const json::parse_error& e) {
        throw ArgumentError(file + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) throw ArgumentError(file + ": expected a JSON object");
    const fs::path base = fs::absolute(file).parent_path();
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "seed") cfg.seed = it->get<std::uint64_t>();
        else if (k == "data") cfg.data = decode_data(*it, base);
        else if (k == "synthetic") {
            synthetic::SyntheticConfig sc;
            serial::decode(*it, sc);
            cfg.data.synthetic = sc;
        } else if (k == "pipeline") serial::decode(*it, cfg.pipeline);
        else if (k == "evaluation") serial::decode(*it, cfg.evaluation);
        else if (k == "output_dir") cfg.output_dir = resolve(base, it->get<std::string>()).string();
        else throw ArgumentError(file + ": unknown field '" + k + "'");
    }
    if (j.contains("data") && j.contains("synthetic"))
        throw ArgumentError(file + ": give either 'data' or 'synthetic', not both");
    return cfg;
}

// Resolved configuration without output_dir; hashed into the manifest.
json config_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j[cfg.data.synthetic ? "synthetic" : "data"] = encode_data(cfg.data);
    j["pipeline"] = serial::encode(cfg.pipeline);
    j["evaluation"] = serial::encode(cfg.evaluation);
    return j;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

DatasetBundle load_data(const RunConfig& cfg, Diagnostics* diag) {
    if (cfg.data.synthetic)
        return synthetic::generate_synthetic(*cfg.data.synthetic, derive_seed(cfg.seed, "synthetic"));
    if (!cfg.data.paths) throw ArgumentError("no data source: give --data, or 'data'/'synthetic' in --config");
    return load_bundle(*cfg.data.paths, diag);
}

// Records every file in dir's manifest with its content hash.
void write_manifest(const fs::path& dir, const std::string& command, const json& config,
                    const std::vector<std::string>& files, const std::map<std::string, std::uint64_t>& seeds) {
    json manifest;
    const fs::path path = dir / "manifest.json";
    if (fs::exists(path)) {
        try {
            manifest = json::parse(io::read_file(path));
        } catch (const json::parse_error&) {
            manifest = json::object();
        }
    }
    manifest["tool"] = "drugrec";
    manifest["version"] = "0.1.0";
    manifest["config_hash"] = hex64(fnv1a64(config.dump()));
    json s = json::object();
    for (const auto& [k, v] : seeds) s[k] = v;
    manifest["seeds"] = s;
    json& listed = manifest["files"];
    if (!listed.is_object()) listed = json::object();
    for (const auto& f : files)
        listed[f] = {{"fnv1a64", hex64(fnv1a64(io::read_file(dir / f)))}, {"written_by", command}};
    io::write_file_atomic(path, serial::dump(manifest));
}

// --- commands -------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, const std::string& out_dir) {
    if (out_dir.empty()) throw ArgumentError("synth: --out is required");
    synthetic::SyntheticConfig sc = cfg.data.synthetic.value_or(synthetic::SyntheticConfig{});
    const std::uint64_t seed = derive_seed(cfg.seed, "synthetic");
    const DatasetBundle bundle = synthetic::generate_synthetic(sc, seed);
    write_bundle(out_dir, bundle);
    json c = {{"seed", cfg.seed}, {"synthetic", serial::encode(sc)}};
    write_manifest(out_dir, "synth", c,
                   {"ratings.csv", "drugs.csv", "interactions.csv", "adverse_events.csv"},
                   {{"synthetic", seed}});
    std::cout << "wrote " << bundle.ratings.size() << " ratings, " << bundle.drugs.size()
              << " drugs, " << bundle.interactions.size() << " interactions, "
              << bundle.adverse_events.size() << " adverse events to " << out_dir << "\n";
    return kOk;
}

int cmd_ingest(const RunConfig& cfg, const std::string& report_path) {
    json report;
    int status = kOk;
    Diagnostics diag;
    try {
        const DatasetBundle bundle = load_data(cfg, &diag);
        const ValidationReport v = validate(bundle);
        report = serial::encode(v);
        report["errors"] = json::array();
        if (!v.ok()) status = kInvalid;
    } catch (const SchemaError& e) {
        report = {{"ok", false}, {"error_count", 1}, {"errors", {e.what()}}};
        status = kInvalid;
    } catch (const RowError& e) {
        report = {{"ok", false}, {"error_count", 1}, {"errors", {e.what()}}};
        status = kInvalid;
    }
    report["warnings"] = diag.messages;
    const std::string text = serial::dump(report);
    if (report_path.empty()) std::cout << text;
    else io::write_file_atomic(report_path, text);
    if (status != kOk) {
        std::cerr << "drugrec ingest: validation failed";
        for (const auto& table : {"ratings", "interactions", "adverse_events"}) {
            if (!report.contains("unresolved_drugs")) break;
            for (const auto& d : report["unresolved_drugs"][table])
                std::cerr << "\n  unknown drug in " << table << ": " << d.get<std::string>();
        }
        if (report.contains("errors"))
            for (const auto& e : report["errors"]) std::cerr << "\n  " << e.get<std::string>();
        std::cerr << "\n";
    }
    return status;
}

int cmd_train(RunConfig cfg, const std::string& out_dir) {
    const fs::path dir = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
    if (dir.empty()) throw ArgumentError("train: --out (or output_dir in the config) is required");
    cfg.pipeline.seed = cfg.seed;
    const DatasetBundle bundle = load_data(cfg, nullptr);
    const rec::PreparedData prepared = rec::prepare_splits(bundle, cfg.pipeline);
    const rec::PipelineArtifacts art = rec::build_pipeline(prepared.training, cfg.pipeline);
    std::vector<std::string> files = serial::save_artifacts(dir, art);
    const json c = config_json(cfg);
    io::write_file_atomic(dir / "config.json", serial::dump(c));
    files.push_back("config.json");
    write_manifest(dir, "train", c, files, art.seeds);
    std::cout << "trained on " << prepared.training.ratings.size() << " ratings: "
              << art.user_clusters.final_k() << " user clusters, " << art.drug_clusters.final_k()
              << " drug clusters, final loss " << art.loss_trace.back().combined << "\n"
              << "artifacts in " << dir.string() << "\n";
    return kOk;
}

void print_table(const rec::RecommendResult& r, bool explain) {
    std::printf("%-4s  %-28s  %7s  %s\n", "rank", "drug", "rating", "warnings");
    for (const auto& x : r.recommendations) {
        std::string warn;
        for (const auto& w : x.warnings) warn += (warn.empty() ? "" : "; ") + w;
        std::printf("%-4zu  %-28s  %7.2f  %s\n", x.rank, x.drug_name.c_str(), x.display_rating,
                    warn.c_str());
    }
    for (const auto& d : r.diagnostics.messages) std::printf("note: %s\n", d.c_str());
    if (explain)
        for (const auto& m : r.removed)
            std::printf("removed %s (%s rule): %s\n", m.drug_name.c_str(),
                        std::string(kb::to_string(m.reason)).c_str(), m.detail.c_str());
}

int cmd_recommend(const std::string& artifacts_dir, const std::string& patient_file, std::size_t n,
                  bool no_kb, bool explain, const std::string& format, const std::string& output) {
    const rec::PipelineArtifacts art = serial::load_artifacts(artifacts_dir);
    json pj;
    try {
        pj = json::parse(io::read_file(patient_file));
    } catch (const json::parse_error& e) {
        throw ArgumentError(patient_file + ": malformed JSON: " + e.what());
    }
    const rec::PatientQuery q = serial::decode_patient(pj);
    const rec::RecommendResult r = rec::recommend(q, art, {n, !no_kb});
    const std::string text = serial::dump(serial::encode(r, explain));
    if (!output.empty()) io::write_file_atomic(output, text);
    if (format == "json") std::cout << text;
    else print_table(r, explain);
    return kOk;
}

int cmd_evaluate(const std::string& artifacts_dir, const std::string& config_override,
                 const std::optional<std::size_t>& top_n) {
    const fs::path dir(artifacts_dir);
    const fs::path cfg_path = dir / "config.json";
    if (!fs::exists(cfg_path)) throw IoError(cfg_path.string(), "missing artifact config.json");
    RunConfig cfg = load_config(cfg_path.string());
    if (!config_override.empty()) {
        const RunConfig over = load_config(config_override);
        cfg.evaluation = over.evaluation;
    }
    if (top_n) cfg.evaluation.top_n = *top_n;
    const rec::PipelineArtifacts art = serial::load_artifacts(dir);
    const DatasetBundle bundle = load_data(cfg, nullptr);
    cfg.pipeline.seed = cfg.seed;
    const rec::PreparedData prepared = rec::prepare_splits(bundle, cfg.pipeline);
    const eval::MetricsReport report =
        eval::evaluate_pipeline(art, prepared.training.ratings, prepared.held_out.test_ratings,
                                prepared.held_out.test_adverse_events, cfg.evaluation);
    io::write_file_atomic(dir / "evaluation" / "metrics.json", serial::dump(serial::encode(report)));
    io::write_file_atomic(dir / "evaluation" / "metrics.csv", serial::metrics_csv(report));
    io::write_file_atomic(dir / "evaluation" / "roc.csv", serial::roc_csv(report));
    write_manifest(dir, "evaluate", config_json(cfg),
                   {"evaluation/metrics.json", "evaluation/metrics.csv", "evaluation/roc.csv"},
                   art.seeds);
    std::printf("%-18s %9s %9s\n", "metric", "proposed", "baseline");
    auto row = [](const char* name, double a, double b) { std::printf("%-18s %9.4f %9.4f\n", name, a, b); };
    row("accuracy", report.proposed.scalars.accuracy, report.baseline.scalars.accuracy);
    row("sensitivity", report.proposed.scalars.sensitivity, report.baseline.scalars.sensitivity);
    row("f2", report.proposed.scalars.f2, report.baseline.scalars.f2);
    row("mcc", report.proposed.scalars.mcc, report.baseline.scalars.mcc);
    row("hit_rate", report.proposed.hit_rate, report.baseline.hit_rate);
    row("cumulative_hit", report.proposed.cumulative_hit_rate, report.baseline.cumulative_hit_rate);
    if (report.ablation)
        std::printf("death ratio without kb %.4f, with kb %.4f\n", report.ablation->without_kb.death,
                    report.ablation->with_kb.death);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drugrec: drug recommendation pipeline"};
    app.require_subcommand(1);

    std::string config_file, data_dir, out_dir, report_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> learning_rate;
    std::optional<std::size_t> epochs;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--config", config_file, "Run config JSON (uses its 'synthetic' section)");
    synth->add_option("--seed", seed, "Master seed");
    synth->add_option("--out", out_dir, "Output directory")->required();

    auto* ingest = app.add_subcommand("ingest", "Load and validate a dataset");
    ingest->add_option("--config", config_file, "Run config JSON");
    ingest->add_option("--data", data_dir, "Directory holding the four CSV tables");
    ingest->add_option("--seed", seed, "Master seed (synthetic sources)");
    ingest->add_option("--report", report_path, "Write the report here instead of stdout");

    auto* train = app.add_subcommand("train", "Train the pipeline and write artifacts");
    train->add_option("--config", config_file, "Run config JSON");
    train->add_option("--data", data_dir, "Directory holding the four CSV tables");
    train->add_option("--seed", seed, "Master seed");
    train->add_option("--out", out_dir, "Artifact directory");
    train->add_option("--learning-rate", learning_rate, "Override training.learning_rate");
    train->add_option("--epochs", epochs, "Override training.epochs");

    std::string artifacts_dir, patient_file, format = "table", output;
    std::size_t n = 10;
    bool no_kb = false, explain = false;
    auto* recommend = app.add_subcommand("recommend", "Recommend drugs for a patient");
    recommend->add_option("--artifacts", artifacts_dir, "Artifact directory")->required();
    recommend->add_option("--patient", patient_file, "Patient query JSON")->required();
    recommend->add_option("-n,--top", n, "Number of recommendations")->check(CLI::PositiveNumber);
    recommend->add_flag("--no-kb", no_kb, "Disable the knowledge-base filter");
    recommend->add_flag("--explain", explain, "List removed drugs and the rule that removed them");
    recommend->add_option("--format", format, "table or json")->check(CLI::IsMember({"table", "json"}));
    recommend->add_option("--output", output, "Also write the JSON result here");

    std::optional<std::size_t> top_n;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate trained artifacts on the test split");
    evaluate->add_option("--artifacts", artifacts_dir, "Artifact directory")->required();
    evaluate->add_option("--config", config_file, "Config whose 'evaluation' section overrides");
    evaluate->add_option("--top-n", top_n, "Recommendation list length for hit rates");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (evaluate->parsed()) return cmd_evaluate(artifacts_dir, config_file, top_n);
        if (recommend->parsed())
            return cmd_recommend(artifacts_dir, patient_file, n, no_kb, explain, format, output);

        RunConfig cfg = load_config(config_file);
        if (seed) cfg.seed = *seed;
        if (!data_dir.empty()) {
            cfg.data = DataSource{};
            cfg.data.paths = DatasetPaths::in_directory(fs::absolute(data_dir).lexically_normal());
        }
        if (learning_rate) cfg.pipeline.training.learning_rate = *learning_rate;
        if (epochs) cfg.pipeline.training.epochs = *epochs;
        cfg.pipeline.training.validate();

        if (synth->parsed()) return cmd_synth(cfg, out_dir);
        if (ingest->parsed()) return cmd_ingest(cfg, report_path);
        if (train->parsed()) return cmd_train(cfg, out_dir);
    } catch (const StageError& e) {
        std::cerr << "drugrec: " << e.what() << "\n";
        return e.validation() ? kInvalid : kFailure;
    } catch (const IoError& e) {
        std::cerr << "drugrec: " << e.what() << "\n";
        return kFailure;
    } catch (const ValidationError& e) {
        std::cerr << "drugrec: " << e.what() << "\n";
        return kInvalid;
    } catch (const ArgumentError& e) {
        std::cerr << "drugrec: " << e.what() << "\n";
        return kInvalid;
    } catch (const SchemaError& e) {
        std::cerr << "drugrec: " << e.what() << "\n";
        return kInvalid;
    } catch (const RowError& e) {
        std::cerr << "drugrec: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "drugrec: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
