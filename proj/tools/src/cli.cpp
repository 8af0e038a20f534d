// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "documents.hpp"
#include "service.hpp"

#include "lagm/error.hpp"
#include "lagm/evaluation.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace lagm::interface {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("file_not_found", "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidArgument("malformed_file", path.string() + ": " + e.what());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io_error", "cannot write " + path.string());
    out << text;
    if (!out) throw Error("io_error", "write failed for " + path.string());
}

// Training config files hold {"model": {...}} plus optimizer and loop keys.
struct TrainFile {
    json model = json::object();
    std::optional<int> epochs;
    std::optional<int> batch_size;
    std::optional<double> learning_rate;
    std::optional<double> weight_decay;
    std::optional<double> condition_dropout;
    std::optional<std::uint64_t> seed;
};

TrainFile read_train_file(const std::string& path) {
    TrainFile f;
    if (path.empty()) return f;
    const json j = read_json_file(path);
    try {
        if (j.contains("model")) f.model = j.at("model");
        if (j.contains("epochs")) f.epochs = j.at("epochs").get<int>();
        if (j.contains("batch_size")) f.batch_size = j.at("batch_size").get<int>();
        if (j.contains("learning_rate")) f.learning_rate = j.at("learning_rate").get<double>();
        if (j.contains("weight_decay")) f.weight_decay = j.at("weight_decay").get<double>();
        if (j.contains("condition_dropout")) f.condition_dropout = j.at("condition_dropout").get<double>();
        if (j.contains("seed")) f.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw InvalidArgument("malformed_file", path + ": " + e.what());
    }
    return f;
}

template <class Train>
void apply_common(const TrainFile& f, Train& t) {
    if (f.epochs) t.epochs = *f.epochs;
    if (f.batch_size) t.batch_size = *f.batch_size;
    if (f.learning_rate) t.optimizer.learning_rate = *f.learning_rate;
    if (f.weight_decay) t.optimizer.weight_decay = *f.weight_decay;
    if (f.seed) t.seed = *f.seed;
}

template <class Config>
Config model_config(const TrainFile& f, Config base) {
    if (f.model.empty()) return base;
    json merged = base.to_json();
    merged.merge_patch(f.model);
    return Config::from_json(merged);
}

double last_or_zero(const std::vector<double>& v) { return v.empty() ? 0.0 : v.back(); }

std::vector<double> parse_weights(const std::string& spec, std::size_t actions) {
    std::vector<double> multipliers(actions, 1.0);
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InvalidArgument("bad_weights", "expected k=v in --weights, got " + item);
        std::size_t k = 0;
        double v = 0.0;
        try {
            k = std::stoul(item.substr(0, eq));
            v = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw InvalidArgument("bad_weights", "expected integer=number in --weights, got " + item);
        }
        if (k >= actions)
            throw InvalidArgument("bad_weights", "action index " + std::to_string(k) + " out of range for " +
                                                     std::to_string(actions) + " actions");
        multipliers[k] = v;
    }
    return multipliers;
}

// Syntax-only validator so malformed --weights is a usage error.
struct WeightsSyntax : CLI::Validator {
    WeightsSyntax() {
        name_ = "WEIGHTS";
        func_ = [](const std::string& s) -> std::string {
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ',')) {
                const auto eq = item.find('=');
                if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
                    return "expected k=v pairs separated by commas";
                if (item.substr(0, eq).find_first_not_of("0123456789") != std::string::npos)
                    return "action index must be a non-negative integer";
            }
            return {};
        };
    }
};

struct Options {
    int precision_bits = 64;
    bool json_output = false;
};

Precision precision_of(const Options& o) { return precision_from_bits(o.precision_bits); }

void emit(std::ostream& out, const Options& o, const json& doc, const std::string& human) {
    if (o.json_output)
        out << doc.dump(2) << '\n';
    else
        out << human << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Text-to-motion generation guided by local actions", "lagm"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--precision", opt.precision_bits, "Floating-point precision in bits")
        ->check(CLI::IsMember({32, 64}));
    app.add_flag("--json", opt.json_output, "Print machine-readable JSON");

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic paired corpus");
    std::uint64_t corpus_seed = 1;
    std::size_t corpus_size = 200;
    std::string corpus_out;
    gen->add_option("--seed", corpus_seed, "Corpus seed");
    gen->add_option("--size", corpus_size, "Number of entries")->check(CLI::PositiveNumber);
    gen->add_option("--out", corpus_out, "Output corpus file")->required();

    // train
    auto* train = app.add_subcommand("train", "Train a model component");
    train->require_subcommand(1);
    std::string train_corpus, train_config, train_out;
    std::optional<int> train_epochs;
    std::optional<std::uint64_t> train_seed;
    auto add_train_options = [&](CLI::App* c) {
        c->add_option("--corpus", train_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
        c->add_option("--config", train_config, "JSON config file")->check(CLI::ExistingFile);
        c->add_option("--out", train_out, "Model directory")->required();
        c->add_option("--epochs", train_epochs, "Override epochs")->check(CLI::NonNegativeNumber);
        c->add_option("--seed", train_seed, "Override seed");
    };
    auto* train_vae_cmd = train->add_subcommand("vae", "Train a level VAE");
    std::string vae_level = "all";
    add_train_options(train_vae_cmd);
    train_vae_cmd->add_option("--level", vae_level, "motion, action, specific or all")
        ->check(CLI::IsMember({"motion", "action", "specific", "all"}));
    auto* train_emb_cmd = train->add_subcommand("embedder", "Train the text-motion embedder");
    add_train_options(train_emb_cmd);
    auto* train_diff_cmd = train->add_subcommand("diffusion", "Train the hierarchical denoisers");
    add_train_options(train_diff_cmd);

    // parse
    auto* parse_cmd = app.add_subcommand("parse", "Print the semantic graph of a description");
    std::string parse_text, parse_models;
    double parse_rho = 0.01;
    parse_cmd->add_option("--text", parse_text, "Description")->required();
    parse_cmd->add_option("--models", parse_models, "Model directory for the weight preview");
    parse_cmd->add_option("--rho", parse_rho, "Guidance scale")->check(CLI::NonNegativeNumber);

    // sample-action
    auto* action_cmd = app.add_subcommand("sample-action", "Sample candidate local actions");
    std::string action_text, action_models;
    int action_seeds = 3;
    std::uint64_t action_seed = 1;
    action_cmd->add_option("--text", action_text, "Local action description")->required();
    action_cmd->add_option("--models", action_models, "Model directory")->required()->check(CLI::ExistingDirectory);
    action_cmd->add_option("--seeds", action_seeds, "Number of candidates")->check(CLI::PositiveNumber);
    action_cmd->add_option("--seed", action_seed, "First seed");

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Generate a motion");
    std::string gen_text, gen_models, gen_weights, gen_refs, gen_out, gen_corpus;
    std::optional<double> gen_rho;
    std::optional<std::vector<int>> gen_steps;
    std::optional<std::uint64_t> gen_seed;
    std::optional<double> gen_alpha;
    std::optional<Index> gen_length;
    std::string gen_step_mode, gen_guidance_mode;
    gen_cmd->add_option("--text", gen_text, "Description")->required();
    gen_cmd->add_option("--models", gen_models, "Model directory")->required()->check(CLI::ExistingDirectory);
    gen_cmd->add_option("--weights", gen_weights, "Per-action multipliers as index=value,...")
        ->check(WeightsSyntax());
    gen_cmd->add_option("--rho", gen_rho, "Guidance scale")->check(CLI::NonNegativeNumber);
    gen_cmd->add_option("--steps", gen_steps, "Sampling steps per stage as m,a,s")
        ->delimiter(',')
        ->expected(3)
        ->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen_seed, "Sampling seed");
    gen_cmd->add_option("--cfg", gen_alpha, "Classifier-free guidance scale");
    gen_cmd->add_option("--length", gen_length, "Output frames")->check(CLI::Range(1, 240));
    gen_cmd->add_option("--step-mode", gen_step_mode, "deterministic or ancestral")
        ->check(CLI::IsMember({"deterministic", "ddim", "ancestral"}));
    gen_cmd->add_option("--guidance-mode", gen_guidance_mode, "scaled-reference or clean-estimate")
        ->check(CLI::IsMember({"scaled-reference", "clean-estimate"}));
    gen_cmd->add_option("--refs", gen_refs, "JSON file of reference latents")->check(CLI::ExistingFile);
    gen_cmd->add_option("--corpus", gen_corpus, "Corpus for reference retrieval")->check(CLI::ExistingFile);
    gen_cmd->add_option("--out", gen_out, "Output JSON file; stdout when omitted");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Score generated motions on the held-out split");
    std::string eval_corpus, eval_models, eval_out;
    int eval_repeats = 20;
    std::size_t eval_max_prompts = 0;
    std::optional<std::vector<int>> eval_steps;
    std::uint64_t eval_seed = 1;
    eval_cmd->add_option("--corpus", eval_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--models", eval_models, "Model directory")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--repeats", eval_repeats, "Evaluation repeats")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--max-prompts", eval_max_prompts, "Limit held-out prompts; 0 keeps all");
    eval_cmd->add_option("--steps", eval_steps, "Sampling steps per stage as m,a,s")
        ->delimiter(',')
        ->expected(3)
        ->check(CLI::PositiveNumber);
    eval_cmd->add_option("--seed", eval_seed, "Evaluation seed");
    eval_cmd->add_option("--out", eval_out, "Write the JSON report here");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    std::string serve_host = "127.0.0.1", serve_models, serve_corpus;
    int serve_port = 8080;
    std::size_t serve_queue = 64;
    serve_cmd->add_option("--port", serve_port, "TCP port")->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--host", serve_host, "Bind address");
    serve_cmd->add_option("--models", serve_models, "Model directory");
    serve_cmd->add_option("--corpus", serve_corpus, "Corpus for reference retrieval")->check(CLI::ExistingFile);
    serve_cmd->add_option("--max-queue", serve_queue, "Queued job limit")->check(CLI::PositiveNumber);

    for (auto* sub : {gen, train, parse_cmd, action_cmd, gen_cmd, eval_cmd, serve_cmd}) sub->fallthrough();
    for (auto* sub : {train_vae_cmd, train_emb_cmd, train_diff_cmd}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << app.get_name() << ": " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        const Precision prec = precision_of(opt);

        if (gen->parsed()) {
            const auto entries = generate_corpus(corpus_seed, corpus_size);
            save_corpus(entries, corpus_out);
            emit(out, opt, {{"entries", entries.size()}, {"path", corpus_out}},
                 "wrote " + std::to_string(entries.size()) + " entries to " + corpus_out);
            return kExitOk;
        }

        if (train->parsed()) {
            const auto corpus = load_corpus(train_corpus);
            TrainFile file = read_train_file(train_config);
            if (train_epochs) file.epochs = train_epochs;
            if (train_seed) file.seed = train_seed;
            fs::create_directories(train_out);
            const fs::path dir = train_out;

            if (train_vae_cmd->parsed()) {
                std::vector<Level> levels;
                if (vae_level == "all")
                    levels = {Level::motion, Level::action, Level::specific};
                else
                    levels = {level_from_string(vae_level)};
                json reports = json::array();
                std::ostringstream human;
                for (Level level : levels) {
                    VaeTrainConfig tc;
                    tc.precision = prec;
                    apply_common(file, tc);
                    const VaeConfig config = model_config(file, VaeConfig::for_level(level));
                    const auto trained = train_vae(corpus, config, tc);
                    const fs::path path = dir / ("vae_" + std::string(to_string(level)) + ".ckpt");
                    save_checkpoint(trained.vae.to_checkpoint(), path);
                    reports.push_back({{"level", to_string(level)},
                                       {"path", path.string()},
                                       {"epoch_losses", trained.report.epoch_losses},
                                       {"final_reconstruction", trained.report.final_reconstruction}});
                    human << "vae " << to_string(level) << ": reconstruction "
                          << trained.report.final_reconstruction << " -> " << path.string() << '\n';
                }
                std::string h = human.str();
                if (!h.empty()) h.pop_back();
                emit(out, opt, reports, h);
                return kExitOk;
            }

            if (train_emb_cmd->parsed()) {
                ContrastiveConfig tc;
                tc.precision = prec;
                apply_common(file, tc);
                const EmbedderConfig config = model_config(file, EmbedderConfig{});
                const auto trained = train_contrastive(corpus, config, tc);
                const fs::path path = dir / "embedder.ckpt";
                save_checkpoint(trained.embedder.to_checkpoint(), path);
                std::ostringstream human;
                human << "embedder: final loss " << last_or_zero(trained.report.epoch_losses) << ", validation top-1 "
                      << trained.report.validation_top1 << " -> " << path.string();
                emit(out, opt,
                     {{"path", path.string()},
                      {"epoch_losses", trained.report.epoch_losses},
                      {"validation_top1", trained.report.validation_top1},
                      {"target_met", trained.report.target_met}},
                     human.str());
                return kExitOk;
            }

            if (train_diff_cmd->parsed()) {
                const Embedder embedder = Embedder::from_checkpoint(load_checkpoint(dir / "embedder.ckpt"));
                const MotionVae vm = MotionVae::from_checkpoint(load_checkpoint(dir / "vae_motion.ckpt"));
                const MotionVae va = MotionVae::from_checkpoint(load_checkpoint(dir / "vae_action.ckpt"));
                const MotionVae vs = MotionVae::from_checkpoint(load_checkpoint(dir / "vae_specific.ckpt"));
                DiffusionConfig base;
                base.node_width = embedder.config().width;
                base.latent = vm.config().latent;
                const DiffusionConfig config = model_config(file, base);
                DiffusionTrainConfig tc;
                tc.precision = prec;
                apply_common(file, tc);
                if (file.condition_dropout) tc.condition_dropout = *file.condition_dropout;
                const auto trained = train_diffusion(corpus, embedder, vm, va, vs, config, tc);
                const fs::path path = dir / "diffusion.ckpt";
                save_checkpoint(trained.model.to_checkpoint(), path);
                std::ostringstream human;
                human << "diffusion: final loss " << last_or_zero(trained.report.epoch_losses) << " -> "
                      << path.string();
                emit(out, opt, {{"path", path.string()}, {"epoch_losses", trained.report.epoch_losses}}, human.str());
                return kExitOk;
            }
        }

        if (parse_cmd->parsed()) {
            std::optional<ModelBundle> models;
            if (!parse_models.empty()) models = ModelBundle::load(parse_models);
            const json doc = parse_document(parse_text, models ? &*models : nullptr, parse_rho, std::nullopt, prec);
            out << doc.dump(2) << '\n';
            return kExitOk;
        }

        if (action_cmd->parsed()) {
            const ModelBundle models = ModelBundle::load(action_models);
            json candidates = json::array();
            std::ostringstream human;
            for (int i = 0; i < action_seeds; ++i) {
                SamplingPlan plan;
                plan.precision = prec;
                plan.seed = action_seed + static_cast<std::uint64_t>(i);
                const auto s = sample_local_action(action_text, plan, models);
                candidates.push_back({{"seed", plan.seed},
                                      {"latent", latent_to_json(s.latent)},
                                      {"motion", motion_document(s.motion)}});
                human << "candidate seed " << plan.seed << ": " << s.motion.length() << " frames\n";
            }
            if (opt.json_output) {
                out << json{{"text", action_text}, {"candidates", candidates}}.dump(2) << '\n';
            } else {
                out << human.str();
            }
            return kExitOk;
        }

        if (gen_cmd->parsed()) {
            const ModelBundle models = ModelBundle::load(gen_models);
            SamplingPlan plan;
            plan.precision = prec;
            if (gen_rho) plan.rho = *gen_rho;
            if (gen_steps) plan.steps = {(*gen_steps)[0], (*gen_steps)[1], (*gen_steps)[2]};
            if (gen_seed) plan.seed = *gen_seed;
            if (gen_alpha) plan.cfg_alpha = *gen_alpha;
            if (gen_length) plan.length = *gen_length;
            if (!gen_step_mode.empty()) plan.step_mode = step_mode_from_string(gen_step_mode);
            if (!gen_guidance_mode.empty()) plan.guidance_mode = guidance_mode_from_string(gen_guidance_mode);
            if (!gen_weights.empty()) {
                const auto actions = parse(gen_text).action_nodes().size();
                plan.multipliers = parse_weights(gen_weights, actions);
            }
            std::optional<std::vector<LatentEmbedding>> refs;
            if (!gen_refs.empty()) refs = references_from_json(read_json_file(gen_refs));
            std::optional<ExemplarBank> bank;
            if (!gen_corpus.empty() && !refs && plan.rho > 0.0)
                bank = build_exemplar_bank(load_corpus(gen_corpus), models.embedder, prec);
            const SampleResult result = sample(gen_text, plan, models, refs, bank ? &*bank : nullptr);
            const json doc = generation_document(result, plan);
            if (gen_out.empty()) {
                out << doc.dump(2) << '\n';
            } else {
                write_text_file(gen_out, doc.dump(2) + "\n");
                std::ostringstream human;
                human << "wrote " << result.motion.length() << " frames to " << gen_out;
                if (!result.diagnostics.lambdas.empty())
                    human << "; mean final action energy " << result.diagnostics.mean_final_action_energy;
                emit(out, opt, {{"path", gen_out}, {"diagnostics", result.diagnostics.to_json()}}, human.str());
            }
            return kExitOk;
        }

        if (eval_cmd->parsed()) {
            const auto corpus = load_corpus(eval_corpus);
            const ModelBundle models = ModelBundle::load(eval_models);
            EvaluationConfig config;
            config.repeats = eval_repeats;
            config.max_prompts = eval_max_prompts;
            config.seed = eval_seed;
            config.plan.precision = prec;
            if (eval_steps) config.plan.steps = {(*eval_steps)[0], (*eval_steps)[1], (*eval_steps)[2]};
            const auto result = evaluate(corpus, models, config, [&](int r) {
                if (!opt.json_output) err << "repeat " << (r + 1) << "/" << config.repeats << " done\n";
            });
            json doc = result.to_json();
            doc["config"] = config.to_json();
            if (!eval_out.empty()) write_text_file(eval_out, doc.dump(2) + "\n");
            emit(out, opt, doc, result.table());
            return kExitOk;
        }

        if (serve_cmd->parsed()) {
            ServiceConfig config;
            // Interactive serving defaults to 32-bit unless --precision is given.
            config.precision = app.count("--precision") > 0 ? prec : Precision::f32;
            config.max_queue = serve_queue;
            if (!serve_models.empty()) config.models_dir = serve_models;
            if (!serve_corpus.empty()) config.corpus = serve_corpus;
            Service service(config);
            err << "listening on " << serve_host << ":" << serve_port
                << (service.models_loaded() ? "" : " (models not loaded)") << '\n';
            if (!service.listen(serve_host, serve_port))
                throw Error("io_error", "cannot bind " + serve_host + ":" + std::to_string(serve_port));
            return kExitOk;
        }
    } catch (const Error& e) {
        err << json{{"error", {{"code", e.code()}, {"message", e.what()}}}}.dump() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << '\n';
        return kExitRuntime;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace lagm::interface
