// gestsel: command-line front end for corpus checks, prompt rendering,
// experiment runs, evaluation and the review API.
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gestsel/corpus.hpp"
#include "gestsel/dictionary_matcher.hpp"
#include "gestsel/error.hpp"
#include "gestsel/evaluator.hpp"
#include "gestsel/experiment_runner.hpp"
#include "gestsel/io.hpp"
#include "gestsel/normalizer.hpp"
#include "gestsel/prompt_builder.hpp"
#include "gestsel/service.hpp"
#include "gestsel/text.hpp"

using namespace gestsel;
using nlohmann::json;

namespace {

ModelConfig load_model_config(const std::string& path) {
    if (path.empty()) return ModelConfig{};   // mock provider, hashed embeddings
    try {
        auto j = json::parse(io::read_file(path));
        // Relative paths in a model file are relative to the file.
        const auto base = std::filesystem::path(path).parent_path();
        for (const char* key : {"script", "cache_dir"}) {
            if (j.contains(key) && j[key].is_string() && std::filesystem::path(j[key].get<std::string>()).is_relative()) {
                j[key] = (base / j[key].get<std::string>()).string();
            }
        }
        return ModelConfig::from_json(j);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, path + ": " + e.what());
    }
}

SpecLevel level_arg(const std::string& s) {
    auto l = parse_spec_level(s);
    if (!l) throw Error(ErrorKind::Usage, "unknown level '" + s + "' (category, physical, semantic_gesture, semantic_only)");
    return *l;
}

ExamplePlan plan_arg(const std::string& s, std::optional<std::uint64_t> shuffle, bool grouped) {
    ExamplePlan p;
    if (s == "loo") {
        p = ExamplePlan::leave_one_out();
    } else if (s == "zeroshot" || s == "zero_shot") {
        p = ExamplePlan::zero_shot();
    } else if (s.size() > 1 && s[0] == 'k' && s.find_first_not_of("0123456789", 1) == std::string::npos) {
        p = ExamplePlan::per_category(std::stoi(s.substr(1)));
    } else {
        throw Error(ErrorKind::Usage, "unknown plan '" + s + "' (k<N>, loo, zeroshot)");
    }
    if (shuffle) {
        p.ordering = ExampleOrdering::SeededShuffle;
        p.seed = *shuffle;
    }
    if (grouped) p.grouping = ExampleGrouping::ByCategory;
    return p;
}

void print_stats(const CorpusStats& s) {
    std::cout << s.n_annotations << " annotations, " << s.n_categories << " categories, " << s.n_physical
              << " physical gestures, " << s.n_semantic_gestures << " semantic gestures, " << s.n_semantic_descriptors
              << " semantic descriptors\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gesture selection with language models"};
    app.require_subcommand(1);

    std::string corpus_path, target, level = "category", plan = "k2", templates, out, model_cfg, labels_file;
    std::string policy = "first", dict_path, name, version, context, host = "127.0.0.1";
    std::optional<std::uint64_t> shuffle;
    bool grouped = false, as_json = false;
    double threshold = kDefaultMatchThreshold;
    int port = 8080;

    auto* validate_cmd = app.add_subcommand("validate", "Check a corpus file against the schema and invariants");
    validate_cmd->add_option("corpus", corpus_path)->required();

    auto* stats_cmd = app.add_subcommand("stats", "Print corpus cardinalities");
    stats_cmd->add_option("corpus", corpus_path)->required();
    stats_cmd->add_flag("--json", as_json);

    std::string csv_path;
    auto* convert_cmd = app.add_subcommand("convert", "Convert a CSV annotation sheet to corpus JSON");
    convert_cmd->add_option("csv", csv_path)->required();
    convert_cmd->add_option("-o,--output", out)->required();
    convert_cmd->add_option("--name", name)->required();
    convert_cmd->add_option("--version", version)->default_val("1.0.0");
    convert_cmd->add_option("--context", context)->required();

    auto* prompt_cmd = app.add_subcommand("prompt", "Render the prompt for one target");
    prompt_cmd->add_option("corpus", corpus_path)->required();
    prompt_cmd->add_option("--target", target)->required();
    prompt_cmd->add_option("--level", level);
    prompt_cmd->add_option("--plan", plan, "k<N>, loo or zeroshot");
    prompt_cmd->add_option("--shuffle", shuffle, "seeded shuffle of the examples");
    prompt_cmd->add_flag("--grouped", grouped, "group examples by category");
    prompt_cmd->add_option("--templates", templates);

    std::string kind = "explain", utterance, gesture_label;
    std::vector<std::string> examples;
    bool send = false;
    auto* probe_cmd = app.add_subcommand("probe", "Render (and optionally send) an elicitation probe");
    probe_cmd->add_option("--kind", kind)->check(CLI::IsMember({"explain", "next", "visualize", "opaque"}));
    probe_cmd->add_option("--context", context);
    probe_cmd->add_option("--utterance", utterance);
    probe_cmd->add_option("--label", gesture_label);
    probe_cmd->add_option("--example", examples, "utterance=label, for opaque probes");
    probe_cmd->add_option("--model-config", model_cfg);
    probe_cmd->add_flag("--send", send, "send the probe and print the completion");

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment grid");
    run_cmd->add_option("config", config_path)->required();

    std::string output_dir;
    std::vector<std::string> overrides;
    auto* resume_cmd = app.add_subcommand("resume", "Retry missing or failed records of an experiment");
    resume_cmd->add_option("output_dir", output_dir)->required();
    resume_cmd->add_option("--model-config", overrides, "replacement model config (matched by model_name)");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate an experiment and write report files");
    eval_cmd->add_option("output_dir", output_dir)->required();
    eval_cmd->add_option("--labels", labels_file, "appropriateness labels file");
    eval_cmd->add_option("--embed-config", model_cfg, "embedding model config; omit to skip cosine");
    eval_cmd->add_option("--policy", policy)->check(CLI::IsMember({"first", "any"}));
    eval_cmd->add_option("-o,--out", out, "report directory (default <output_dir>/report)");

    auto* report_cmd = app.add_subcommand("report", "Print the accuracy grid of an experiment");
    report_cmd->add_option("output_dir", output_dir)->required();
    report_cmd->add_option("--policy", policy)->check(CLI::IsMember({"first", "any"}));
    std::string normalizer_path;
    report_cmd->add_option("--normalizer", normalizer_path, "keyword file overriding the built-in vocabulary");

    std::string query;
    auto* match_cmd = app.add_subcommand("match", "Match a gesture description against a dictionary");
    match_cmd->add_option("query", query)->required();
    match_cmd->add_option("--dictionary", dict_path)->required();
    match_cmd->add_option("--threshold", threshold);
    match_cmd->add_option("--embed-config", model_cfg);

    std::string seed_phrase;
    std::vector<std::string> phrases;
    auto* rank_cmd = app.add_subcommand("rank", "Rank phrases by similarity to a seed phrase");
    rank_cmd->add_option("seed", seed_phrase)->required();
    rank_cmd->add_option("phrases", phrases)->required();
    rank_cmd->add_option("--embed-config", model_cfg);

    auto* serve_cmd = app.add_subcommand("serve", "Serve the review API");
    serve_cmd->add_option("output_dir", output_dir)->required();
    serve_cmd->add_option("--corpus", corpus_path);
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--port", port);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code_for(ErrorKind::Usage);
    }

    try {
        if (*validate_cmd) {
            const auto c = load_corpus(corpus_path);
            std::cout << "ok: ";
            print_stats(compute_stats(c));
        } else if (*stats_cmd) {
            const auto s = compute_stats(load_corpus(corpus_path));
            if (as_json) {
                nlohmann::ordered_json j;
                j["annotations"] = s.n_annotations;
                j["categories"] = s.n_categories;
                j["physical_gestures"] = s.n_physical;
                j["semantic_gestures"] = s.n_semantic_gestures;
                j["semantic_descriptors"] = s.n_semantic_descriptors;
                for (const auto& [cat, n] : s.per_category_counts) j["per_category"][std::string(to_string(cat))] = n;
                std::cout << j.dump(2) << "\n";
            } else {
                print_stats(s);
                for (const auto& [cat, n] : s.per_category_counts) std::cout << "  " << to_string(cat) << ": " << n << "\n";
            }
        } else if (*convert_cmd) {
            const auto c = corpus_from_csv(io::read_file(csv_path), name, version, context);
            save_corpus(c, out);
            std::cout << "wrote " << out << " (" << c.annotations.size() << " annotations)\n";
        } else if (*prompt_cmd) {
            const auto c = load_corpus(corpus_path);
            const auto t = templates.empty() ? default_templates() : load_templates(templates);
            const auto b = build_prompt(c, target, level_arg(level), plan_arg(plan, shuffle, grouped), t);
            std::cout << b.rendered << "\n";
        } else if (*probe_cmd) {
            ProbeRequest req;
            req.kind = kind == "explain" ? ProbeKind::ExplainGesture
                     : kind == "next"    ? ProbeKind::NextGesture
                     : kind == "visualize" ? ProbeKind::Visualize
                                           : ProbeKind::OpaqueLabelCompletion;
            req.context = context;
            req.utterance = utterance;
            if (!gesture_label.empty()) req.gesture_label = gesture_label;
            for (const auto& e : examples) {
                const auto eq = e.rfind('=');
                if (eq == std::string::npos) throw Error(ErrorKind::Usage, "--example expects utterance=label");
                req.examples.emplace_back(e.substr(0, eq), e.substr(eq + 1));
            }
            const auto b = build_probe(req);
            if (send) {
                Gateway g(load_model_config(model_cfg));
                std::cout << g.complete(b).raw_response << "\n";
            } else {
                std::cout << b.rendered << "\n";
            }
        } else if (*run_cmd) {
            const auto m = run_experiment(load_experiment_config(config_path));
            std::cout << "runs: " << m.runs.size() << ", records: " << m.total_records() << ", failed: " << m.total_failed()
                      << "\nmanifest: " << manifest_path(m.config.output_dir).string() << "\n";
        } else if (*resume_cmd) {
            std::vector<ModelConfig> models;
            for (const auto& o : overrides) models.push_back(load_model_config(o));
            const auto m = resume(load_manifest(manifest_path(output_dir)), models);
            std::cout << "runs: " << m.runs.size() << ", records: " << m.total_records() << ", failed: " << m.total_failed()
                      << "\n";
        } else if (*eval_cmd) {
            const auto manifest = load_manifest(manifest_path(output_dir));
            const auto corpus = load_corpus(manifest.config.corpus_path);
            const auto runs = load_runs(output_dir);
            std::vector<AppropriatenessLabel> labels;
            if (!labels_file.empty()) {
                labels = load_labels(labels_file);
            } else {
                for (const auto& r : runs) {
                    auto l = load_labels(labels_path(output_dir, r.run_id));
                    labels.insert(labels.end(), l.begin(), l.end());
                }
            }
            std::unique_ptr<Gateway> embedder;
            if (!model_cfg.empty()) embedder = std::make_unique<Gateway>(load_model_config(model_cfg));
            const auto report = build_eval_report(runs, corpus, labels, embedder.get(), *parse_scoring_policy(policy));
            const std::filesystem::path dir = out.empty() ? std::filesystem::path(output_dir) / "report" : std::filesystem::path(out);
            write_report_files(report, dir);
            std::cout << accuracy_csv(report) << "report: " << (dir / "report.json").string() << "\n";
        } else if (*report_cmd) {
            const auto manifest = load_manifest(manifest_path(output_dir));
            const auto corpus = load_corpus(manifest.config.corpus_path);
            const auto norm = normalizer_path.empty() ? default_normalizer_config() : load_normalizer_config(normalizer_path);
            const auto cells = accuracy_table(load_runs(output_dir), corpus, *parse_scoring_policy(policy), norm);
            std::printf("%-24s %-17s %-12s %5s %8s %8s %8s\n", "model", "level", "examples", "n", "first", "any",
                        "chance");
            for (const auto& c : cells) {
                std::printf("%-24s %-17s %-12s %5zu %7s%% %7s%% %7s%%\n", c.model_name.c_str(),
                            std::string(to_string(c.spec_level)).c_str(), c.k_label.c_str(), c.n,
                            text::percent_1dp(c.accuracy_first).c_str(), text::percent_1dp(c.accuracy_any).c_str(),
                            text::percent_1dp(c.chance).c_str());
            }
        } else if (*match_cmd) {
            auto dict = load_dictionary(dict_path);
            Gateway g(load_model_config(model_cfg));
            const auto r = match(query, dict, threshold, g);
            nlohmann::ordered_json j;
            j["query"] = r.query;
            j["decision"] = r.decision == MatchDecision::Matched ? "matched" : "novel";
            j["threshold"] = r.threshold;
            if (r.best) j["best"] = {{"entry_id", r.best->first}, {"similarity", r.best->second}};
            if (r.runner_up) j["runner_up"] = {{"entry_id", r.runner_up->first}, {"similarity", r.runner_up->second}};
            std::cout << j.dump(2) << "\n";
        } else if (*rank_cmd) {
            Gateway g(load_model_config(model_cfg));
            for (const auto& [p, sim] : rank_phrases(seed_phrase, phrases, g)) {
                std::cout << text::fixed_3dp(sim) << "\t" << p << "\n";
            }
        } else if (*serve_cmd) {
            ReviewService svc(ServiceConfig{output_dir, corpus_path, host, port});
            svc.serve_forever();
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.kind_name() << ": " << e.what();
        if (e.line() >= 0) std::cerr << " (line " << e.line() << ")";
        std::cerr << "\n";
        return exit_code_for(e.kind());
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind_name() << ": " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
