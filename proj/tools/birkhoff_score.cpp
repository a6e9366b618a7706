// birkhoff_score: command-line front end for corpus generation, feature
// extraction, training, scoring, evaluation and ablation.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <zlib.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "birkhoff/corpus.hpp"
#include "birkhoff/evaluation.hpp"
#include "birkhoff/ingest.hpp"
#include "birkhoff/io.hpp"
#include "birkhoff/model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace birkhoff;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2 };

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string crc_hex(std::string_view s) {
    const auto c = crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size()));
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(c));
    return buf;
}

/// One per run. Written last, next to the primary output.
struct RunManifest {
    std::string command;
    json config = json::object();
    std::optional<std::uint64_t> seed;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string started_at = utc_now();

    void write(const fs::path& path) const {
        json j = {{"command", command},
                  {"config", config},
                  {"config_hash", crc_hex(config.dump())},
                  {"seed", seed ? json(*seed) : json(nullptr)},
                  {"tool_version", BIRKHOFF_VERSION},
                  {"started_at", started_at},
                  {"finished_at", utc_now()},
                  {"inputs", inputs},
                  {"outputs", outputs}};
        write_file_atomic(path, j.dump(2) + "\n");
        spdlog::debug("manifest written to {}", path.string());
    }
};

fs::path manifest_for_file(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string model;
    std::string data;
    std::string format = "text";
    std::string split = "all";
    unsigned jobs = 1;
    std::vector<std::string> inputs;
};

json read_json_file(const fs::path& p) {
    try {
        return json::parse(read_text_file(p));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::SchemaError, p.string() + ": " + e.what());
    }
}

/// Training options: {"learning_rate", "iterations", "split_ratio"}.
struct TrainFile {
    TrainingConfig training;
    double split_ratio = 0.7;
};

TrainFile read_train_config(const std::string& path) {
    TrainFile t;
    if (path.empty()) return t;
    const auto j = read_json_file(path);
    if (!j.is_object()) throw Error(ErrorKind::SchemaError, path + ": expected an object");
    try {
        for (const auto& [k, v] : j.items()) {
            if (k == "learning_rate") t.training.learning_rate = v.get<double>();
            else if (k == "iterations") t.training.iterations = v.get<std::size_t>();
            else if (k == "split_ratio") t.split_ratio = v.get<double>();
            else throw Error(ErrorKind::SchemaError, path + ": unknown field '" + k + "'");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, path + ": " + e.what());
    }
    if (!(t.training.learning_rate > 0)) throw Error(ErrorKind::InvalidArgument, "learning_rate must be positive");
    return t;
}

json train_config_json(const TrainFile& t) {
    return {{"learning_rate", t.training.learning_rate},
            {"iterations", t.training.iterations},
            {"split_ratio", t.split_ratio}};
}

std::uint64_t split_seed(const Options& o) { return o.seed.value_or(42); }

/// Applies --split {all,train,test} to a labeled dataset.
std::vector<Score> select_split(std::vector<Score> scores, const Options& o, double ratio) {
    if (o.split == "all") return scores;
    auto s = split_dataset(scores, ratio, split_seed(o));
    return o.split == "train" ? std::move(s.train) : std::move(s.test);
}

std::vector<Score> load_inputs(const std::vector<std::string>& paths) {
    std::vector<Score> out;
    for (const auto& p : paths) {
        if (ends_with(p, ".jsonl")) {
            auto ds = read_dataset(p);
            out.insert(out.end(), std::make_move_iterator(ds.begin()), std::make_move_iterator(ds.end()));
        } else {
            auto r = load_score_file(p);
            for (const auto& w : r.diagnostics.warnings) spdlog::warn("{}: {}: {}", p, w.location, w.message);
            out.push_back(std::move(r.score));
        }
    }
    return out;
}

json named(const std::array<double, kFeatureCount>& v) {
    json j = json::object();
    for (std::size_t i = 0; i < kFeatureCount; ++i) j[std::string(kFeatureNames[i])] = v[i];
    return j;
}

std::string label_text(const std::optional<Label>& l) { return l ? std::string(to_string(*l)) : ""; }

int cmd_gen(const Options& o) {
    RunManifest m{.command = "gen"};
    GenConfig cfg;
    if (!o.config.empty()) {
        cfg = gen_config_from_json(read_json_file(o.config));
        m.inputs.push_back(o.config);
    }
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate();
    m.config = gen_config_to_json(cfg);
    m.seed = cfg.seed;
    const auto corpus = generate_corpus(cfg, o.jobs);
    write_dataset(corpus, o.out);
    spdlog::info("generated {} scores ({} pairs, seed {}) into {}", corpus.size(), cfg.n_pairs, cfg.seed, o.out);
    m.outputs.push_back(o.out);
    m.write(manifest_for_file(o.out));
    return kOk;
}

int cmd_extract(const Options& o) {
    RunManifest m{.command = "extract", .inputs = o.inputs};
    std::optional<ModelParams> model;
    FeatureConfig fcfg;
    if (!o.model.empty()) {
        model = read_model(o.model);
        fcfg = model->features;
        m.inputs.push_back(o.model);
    }
    m.config = {{"format", o.format}, {"model", o.model}};
    const auto scores = load_inputs(o.inputs);
    const auto feats = extract_all(scores, fcfg, o.jobs);

    std::string text;
    if (o.format == "csv") {
        text = "id,label";
        for (auto n : kFeatureNames) text += "," + std::string(n);
        if (model) text += ",H,S,E,K,measure,probability";
        text += "\n";
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& f = feats[i];
        std::optional<Prediction> p;
        if (model) p = predict_features(f, *model);
        if (o.format == "csv") {
            text += scores[i].id + "," + label_text(scores[i].label);
            for (double v : f.values) text += "," + detail::exact(v);
            if (p) {
                for (double v : p->aesthetic.values) text += "," + detail::exact(v);
                text += "," + detail::exact(p->measure) + "," + detail::exact(p->probability);
            }
            text += "\n";
            continue;
        }
        json j = {{"id", scores[i].id}, {"label", scores[i].label ? json(label_text(scores[i].label)) : json(nullptr)},
                  {"raw", named(f.values)}};
        json flags = json::array();
        for (std::size_t k = 0; k < kFeatureCount; ++k)
            if (f.degenerate[k]) flags.push_back(std::string(kFeatureNames[k]));
        j["degenerate"] = flags;
        if (p) {
            j["normalized"] = named(p->normalized);
            j["aesthetic"] = {{"H", p->aesthetic.values[0]},
                              {"S", p->aesthetic.values[1]},
                              {"E", p->aesthetic.values[2]},
                              {"K", p->aesthetic.values[3]}};
            j["measure"] = p->measure;
            j["probability"] = p->probability;
            j["predicted"] = std::string(to_string(p->label));
        }
        text += j.dump() + "\n";
    }
    write_file_atomic(o.out, text);
    spdlog::info("extracted features for {} scores into {}", scores.size(), o.out);
    m.outputs.push_back(o.out);
    m.write(manifest_for_file(o.out));
    return kOk;
}

int cmd_train(const Options& o) {
    const auto tf = read_train_config(o.config);
    RunManifest m{.command = "train", .inputs = {o.data}};
    if (!o.config.empty()) m.inputs.push_back(o.config);
    m.config = train_config_json(tf);
    m.config["split"] = o.split;
    if (o.split != "all") m.seed = split_seed(o);
    const auto train = select_split(read_dataset(o.data), o, tf.split_ratio);
    spdlog::info("training on {} scores", train.size());
    const auto model = train_pipeline(train, {}, tf.training, o.jobs);
    write_model(o.out, model);
    const auto w = model.quotient.weights();
    spdlog::info("quotient weights: omega=({:.4f}, {:.4f}, {:.4f}, {:.4f}) theta=({:.4f}, {:.4f})", w.omega1, w.omega2,
                 w.omega3, w.omega4, w.theta1, w.theta2);
    m.outputs.push_back(o.out);
    m.write(manifest_for_file(o.out));
    return kOk;
}

int cmd_score(const Options& o) {
    RunManifest m{.command = "score", .inputs = o.inputs};
    m.inputs.push_back(o.model);
    m.config = {{"format", o.format}, {"model", o.model}};
    const auto model = read_model(o.model);
    const auto scores = load_inputs(o.inputs);
    const auto feats = extract_all(scores, model.features, o.jobs);
    std::string text = o.format == "csv" ? "id,measure,probability,label\n" : "";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto p = predict_features(feats[i], model);
        if (o.format == "csv")
            text += scores[i].id + "," + detail::exact(p.measure) + "," + detail::exact(p.probability) + "," +
                    std::string(to_string(p.label)) + "\n";
        else {
            char buf[128];
            std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\t", p.measure, p.probability);
            text += scores[i].id + buf + std::string(to_string(p.label)) + "\n";
        }
    }
    if (o.out.empty()) {
        std::cout << text << std::flush;
        m.write("birkhoff_score.manifest.json");
    } else {
        write_file_atomic(o.out, text);
        m.outputs.push_back(o.out);
        m.write(manifest_for_file(o.out));
    }
    return kOk;
}

int cmd_eval(const Options& o) {
    const auto tf = read_train_config(o.config);
    RunManifest m{.command = "eval", .inputs = {o.model, o.data}};
    m.config = train_config_json(tf);
    m.config["split"] = o.split;
    if (o.split != "all") m.seed = split_seed(o);
    const auto model = read_model(o.model);
    const auto test = select_split(read_dataset(o.data), o, tf.split_ratio);
    const auto r = evaluate(model, test, o.jobs);
    spdlog::info("precision={:.4f} recall={:.4f} f1={:.4f} auc={:.4f}", r.metrics.precision, r.metrics.recall,
                 r.metrics.f1, r.roc.auc);
    for (const auto& p : emit_report(r, o.out)) m.outputs.push_back(p.string());
    std::cout << metrics_text(r) << std::flush;
    m.write(fs::path(o.out) / "manifest.json");
    return kOk;
}

int cmd_ablate(const Options& o) {
    const auto tf = read_train_config(o.config);
    RunManifest m{.command = "ablate", .inputs = {o.data}};
    AblationConfig cfg;
    cfg.split_ratio = tf.split_ratio;
    cfg.split_seed = split_seed(o);
    cfg.training = tf.training;
    cfg.jobs = o.jobs;
    m.config = train_config_json(tf);
    m.seed = cfg.split_seed;
    EvalReport r;
    r.ablation = run_ablation(read_dataset(o.data), cfg);
    for (const auto& e : r.ablation) spdlog::info("{}: auc={:.4f}", e.model, e.auc);
    for (const auto& p : emit_report(r, o.out)) m.outputs.push_back(p.string());
    std::cout << ablation_csv(r.ablation) << std::flush;
    m.write(fs::path(o.out) / "manifest.json");
    return kOk;
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("birkhoff_score");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("BIRKHOFF_SCORE_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    Options o;
    CLI::App app{"Order/complexity aesthetic measure for symbolic homophonic scores", "birkhoff_score"};
    app.set_version_flag("--version", BIRKHOFF_VERSION);
    app.require_subcommand(1);

    auto jobs = [&](CLI::App* c) {
        c->add_option("--jobs", o.jobs, "Worker threads for extraction")->check(CLI::Range(1u, 256u));
    };
    auto seed = [&](CLI::App* c, const char* help) { c->add_option("--seed", o.seed, help); };
    auto split = [&](CLI::App* c) {
        c->add_option("--split", o.split, "Which part of a seeded 7:3 group split to use")
            ->check(CLI::IsMember({"all", "train", "test"}));
    };
    auto format = [&](CLI::App* c) {
        c->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "csv"}));
    };

    auto* gen = app.add_subcommand("gen", "Generate a paired composer-like / AI-like corpus");
    gen->add_option("--config", o.config, "Generator config (JSON)")->check(CLI::ExistingFile);
    seed(gen, "Override the config seed");
    gen->add_option("--out", o.out, "Dataset output (.jsonl)")->required();
    jobs(gen);

    auto* extract = app.add_subcommand("extract", "Dump per-score features");
    extract->add_option("inputs", o.inputs, "Score files or .jsonl datasets")->required()->check(CLI::ExistingFile);
    extract->add_option("--model", o.model, "Also emit normalized/aesthetic/measure columns")->check(CLI::ExistingFile);
    extract->add_option("--out", o.out, "Feature dump output")->required();
    format(extract);
    jobs(extract);

    auto* train = app.add_subcommand("train", "Train a model on a labeled dataset");
    train->add_option("--data", o.data, "Labeled dataset (.jsonl)")->required()->check(CLI::ExistingFile);
    train->add_option("--config", o.config, "Training config (JSON)")->check(CLI::ExistingFile);
    train->add_option("--out", o.out, "Model output (.bam.json)")->required();
    seed(train, "Split seed (default 42)");
    split(train);
    jobs(train);

    auto* score = app.add_subcommand("score", "Score files with a trained model");
    score->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
    score->add_option("inputs", o.inputs, "Score files or .jsonl datasets")->required()->check(CLI::ExistingFile);
    score->add_option("--out", o.out, "Write results here instead of stdout");
    format(score);
    jobs(score);

    auto* eval = app.add_subcommand("eval", "Evaluate a model and write a report directory");
    eval->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", o.data, "Labeled dataset (.jsonl)")->required()->check(CLI::ExistingFile);
    eval->add_option("--config", o.config, "Training config (JSON), for the split ratio")->check(CLI::ExistingFile);
    eval->add_option("--out", o.out, "Report directory")->required();
    seed(eval, "Split seed (default 42)");
    split(eval);
    jobs(eval);

    auto* ablate = app.add_subcommand("ablate", "Train the full and four ablated models and compare test AUCs");
    ablate->add_option("--data", o.data, "Labeled dataset (.jsonl)")->required()->check(CLI::ExistingFile);
    ablate->add_option("--config", o.config, "Training config (JSON)")->check(CLI::ExistingFile);
    ablate->add_option("--out", o.out, "Report directory")->required();
    seed(ablate, "Split seed (default 42)");
    jobs(ablate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (*gen) return cmd_gen(o);
        if (*extract) return cmd_extract(o);
        if (*train) return cmd_train(o);
        if (*score) return cmd_score(o);
        if (*eval) return cmd_eval(o);
        if (*ablate) return cmd_ablate(o);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return kData;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kData;
    }
    return kUsage;
}
