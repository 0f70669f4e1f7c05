// corpus-forge: command-line front end for the filtering pipeline and the
// planning utilities.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "corpus_forge/bpe.hpp"
#include "corpus_forge/error.hpp"
#include "corpus_forge/lr_schedule.hpp"
#include "corpus_forge/mixture.hpp"
#include "corpus_forge/ngram_lm.hpp"
#include "corpus_forge/pipeline.hpp"
#include "corpus_forge/records.hpp"
#include "corpus_forge/sft_templates.hpp"

namespace cf = corpus_forge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

int exit_code_for(cf::ErrorCode code) {
    switch (code) {
        case cf::ErrorCode::ConfigError:
        case cf::ErrorCode::InvalidCategory:
        case cf::ErrorCode::EmptyInstruction:
        case cf::ErrorCode::StepOutOfRange:
        case cf::ErrorCode::ZeroAvailability:
        case cf::ErrorCode::InvalidVocab:
            return kExitConfig;
        case cf::ErrorCode::IoError:
        case cf::ErrorCode::FormatError:
            return kExitIo;
        default:
            return kExitFailure;
    }
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("corpus-forge");
    logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("CORPUS_FORGE_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to "off"
        if (level != spdlog::level::off || std::string_view(env) == "off") {
            spdlog::set_level(level);
        } else {
            spdlog::warn("unknown CORPUS_FORGE_LOG level '{}', using info", env);
        }
    }
}

std::string read_stream(std::istream& in) {
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_text_arg(const std::string& file) {
    if (file.empty() || file == "-") return read_stream(std::cin);
    std::ifstream in(file, std::ios::binary);
    if (!in) throw cf::Error(cf::ErrorCode::IoError, "cannot open '" + file + "'");
    return read_stream(in);
}

std::map<std::string, double> parse_kv_doubles(const std::vector<std::string>& items, const char* what) {
    std::map<std::string, double> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw cf::Error(cf::ErrorCode::ConfigError, std::string(what) + " expects KEY=VALUE, got '" + item + "'");
        }
        try {
            std::size_t used = 0;
            const double v = std::stod(item.substr(eq + 1), &used);
            if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
            out[item.substr(0, eq)] = v;
        } catch (const std::exception&) {
            throw cf::Error(cf::ErrorCode::ConfigError, std::string(what) + ": '" + item + "' is not numeric");
        }
    }
    return out;
}

// Options shared by the pipeline-style subcommands.
struct CommonOptions {
    std::string config;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::string phase;
    bool stable_order = false;
    bool resume = false;
};

void add_common(CLI::App& app, CommonOptions& o) {
    app.add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", o.seed, "seed for all randomness");
    app.add_option("--phase", o.phase, "training phase")->check(CLI::IsMember({"1", "2", "3", "P1", "P2", "P3", "p1", "p2", "p3"}));
    app.add_flag("--stable-order", o.stable_order, "write survivors in input order");
    app.add_flag("--resume", o.resume, "skip shards completed by an interrupted run");
}

cf::PipelineConfig load_config(const CommonOptions& o) {
    cf::PipelineConfig cfg = o.config.empty() ? cf::PipelineConfig{} : cf::PipelineConfig::load(o.config);
    if (o.workers) cfg.workers = *o.workers;
    if (o.seed) cfg.seed = *o.seed;
    if (!o.phase.empty()) cfg.phase = cf::parse_phase(o.phase);
    if (o.stable_order) cfg.stable_order = true;
    cfg.resume = o.resume;
    return cfg;
}

void log_report(const cf::RunReport& rep) {
    for (const auto& s : rep.stages) {
        std::ostringstream rej;
        for (const auto& [reason, n] : s.rejected) rej << ' ' << reason << '=' << n;
        spdlog::info("{:<12} in={} passed={}{}{}", s.name, s.in, s.passed,
                     s.bypassed ? " bypassed=" + std::to_string(s.bypassed) : std::string(), rej.str());
    }
    spdlog::info("{} -> {} records in {:.3f}s ({:.0f} docs/s, {:.2f} MB/s)", rep.input_records, rep.output_records,
                 rep.wall_seconds, rep.docs_per_second(), rep.bytes_per_second() / 1e6);
}

int run_filter(const CommonOptions& common, const std::vector<std::string>& inputs, const std::string& output,
               const std::string& stages, bool write_rejects, bool bitext) {
    cf::PipelineConfig cfg = load_config(common);
    if (!inputs.empty()) cfg.inputs = inputs;
    if (!output.empty()) cfg.output_dir = output;
    if (!stages.empty()) {
        cfg.stages.clear();
        std::stringstream ss(stages);
        for (std::string s; std::getline(ss, s, ',');) {
            if (!s.empty()) cfg.stages.push_back(s);
        }
    }
    if (write_rejects) cfg.write_rejects = true;
    cfg.validate_common();
    spdlog::info("config digest {}", cfg.digest());
    const auto progress = [](std::size_t shard, std::size_t total, const cf::RunReport& r) {
        spdlog::info("shard {}/{}: {} -> {} records", shard + 1, total, r.input_records, r.output_records);
    };
    const cf::RunReport rep = bitext ? cf::run_bitext_pipeline(cfg, progress) : cf::run_pipeline(cfg, progress);
    log_report(rep);
    std::cout << rep.to_json(true).dump(2) << '\n';
    if (!rep.accounting_ok()) {
        spdlog::error("report accounting identity violated");
        return kExitFailure;
    }
    return kExitOk;
}

std::vector<cf::Document> read_all_documents(const std::vector<std::string>& inputs) {
    std::vector<cf::Document> docs;
    for (const auto& f : cf::expand_inputs(inputs, ".jsonl")) {
        auto part = cf::read_documents(f);
        docs.insert(docs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return docs;
}

int run_fertility(const CommonOptions& common, const std::vector<std::string>& vocab_args,
                  const std::vector<std::string>& corpora, const std::string& format) {
    cf::PipelineConfig cfg = load_config(common);
    std::map<std::string, std::string> vocab_dirs = cfg.fertility.vocabs;
    for (const auto& v : vocab_args) {
        const auto eq = v.find('=');
        if (eq == std::string::npos || eq == 0) throw cf::Error(cf::ErrorCode::ConfigError, "--vocab expects NAME=DIR");
        vocab_dirs[v.substr(0, eq)] = v.substr(eq + 1);
    }
    std::vector<std::string> corpus_files = corpora.empty() ? cfg.fertility.corpora : corpora;
    if (vocab_dirs.empty()) throw cf::Error(cf::ErrorCode::ConfigError, "no tokenizer vocabularies given");
    if (corpus_files.empty()) throw cf::Error(cf::ErrorCode::ConfigError, "no evaluation corpora given");

    std::vector<std::pair<std::string, cf::BpeVocab>> vocabs;
    for (const auto& [name, dir] : vocab_dirs) vocabs.emplace_back(name, cf::BpeVocab::load_dir(dir));
    cf::NamedVocabs named;
    for (const auto& [name, v] : vocabs) named.emplace_back(name, &v);
    cf::LanguageCorpora by_lang;
    for (auto& d : read_all_documents(corpus_files)) {
        const std::string lang = d.language.empty() ? "und" : d.language;
        by_lang[lang].push_back(std::move(d));
    }
    const cf::FertilityReport rep = cf::fertility_report(named, by_lang);
    std::cout << (format == "table" ? rep.to_table() : rep.to_tsv());
    spdlog::info("corpus fingerprint {}", rep.fingerprint_hex());
    return kExitOk;
}

struct PlanArgs {
    std::string preset;
    std::uint64_t total_tokens = 0;
    std::vector<std::string> availability;
    std::string availability_file;
    std::vector<std::string> overrides;
    std::optional<double> max_repetition;
    std::string format = "tsv";
};

int run_plan(const CommonOptions& common, const PlanArgs& a) {
    const cf::PipelineConfig cfg = load_config(common);
    std::string name = !a.preset.empty() ? a.preset : cfg.mixture.preset;
    if (name.empty()) name = std::string(cf::phase_name(cfg.phase));
    cf::MixtureSpec spec = cf::preset(name);
    spec.availability = cfg.mixture.availability;
    spec.overrides = cfg.mixture.overrides;
    spec.max_repetition = cfg.mixture.max_repetition;
    if (!a.availability_file.empty()) {
        try {
            const json j = json::parse(read_text_arg(a.availability_file));
            for (const auto& [k, v] : j.items()) spec.availability[k] = v.get<double>();
        } catch (const json::exception& e) {
            throw cf::Error(cf::ErrorCode::ConfigError, std::string("availability file: ") + e.what());
        }
    }
    for (const auto& [k, v] : parse_kv_doubles(a.availability, "--availability")) spec.availability[k] = v;
    for (const auto& [k, v] : parse_kv_doubles(a.overrides, "--override")) spec.overrides[k] = v;
    if (a.max_repetition) spec.max_repetition = *a.max_repetition;
    const std::uint64_t total = a.total_tokens ? a.total_tokens : cfg.mixture.phase_total_tokens;
    if (total == 0) throw cf::Error(cf::ErrorCode::ConfigError, "phase total tokens not given");

    const cf::MixturePlan plan = cf::plan_phase(spec, total);
    for (const auto& w : plan.warnings) spdlog::warn("{}", w);
    std::cout << (a.format == "json" ? plan.to_json() + "\n" : plan.to_tsv());
    return kExitOk;
}

struct ScheduleArgs {
    std::optional<std::int64_t> main_steps;
    std::optional<double> main_tokens;
    std::optional<double> peak_lr;
    std::optional<double> warmup_frac;
    std::optional<double> decay_frac;
    std::optional<double> floor_ratio;
    std::optional<std::int64_t> final_anneal_steps;
    std::optional<std::int64_t> tokens_per_step;
    std::int64_t every = 0;
    std::optional<std::int64_t> at;
    bool boundaries = false;
};

int run_schedule(const CommonOptions& common, const ScheduleArgs& a) {
    cf::ScheduleConfig sc = load_config(common).schedule;
    if (a.peak_lr) sc.peak_lr = *a.peak_lr;
    if (a.warmup_frac) sc.warmup_frac = *a.warmup_frac;
    if (a.decay_frac) sc.decay_frac = *a.decay_frac;
    if (a.floor_ratio) sc.decay_floor_ratio = *a.floor_ratio;
    if (a.final_anneal_steps) sc.final_anneal_steps = *a.final_anneal_steps;
    if (a.tokens_per_step) sc.tokens_per_step = *a.tokens_per_step;
    if (a.main_steps) sc.main_steps = *a.main_steps;
    if (a.main_tokens) sc.main_steps = cf::round_half_up(*a.main_tokens / static_cast<double>(sc.tokens_per_step));
    const cf::PhaseBoundaries b = cf::phase_boundaries(sc);
    if (a.boundaries) {
        std::cout << "warmup_end\t" << b.warmup_end << "\nstable_end\t" << b.stable_end << "\ndecay_end\t"
                  << b.decay_end << "\nfinal_end\t" << b.final_end << '\n';
        return kExitOk;
    }
    if (a.at) {
        const cf::LrPoint p = cf::lr_at(sc, *a.at);
        std::cout << cf::schedule_tsv({p});
        return kExitOk;
    }
    const std::int64_t every = a.every > 0 ? a.every : std::max<std::int64_t>(1, b.final_end / 1000);
    std::cout << cf::schedule_tsv(cf::emit_schedule(sc, every));
    return kExitOk;
}

struct SftArgs {
    std::string kind = "instruction";
    std::string language;
    std::string category;
    std::string text;
    std::string text_file;
    std::string instruction;
    bool jsonl = false;
};

std::string display_language(const std::string& lang) {
    // tags map to names; names pass through
    return lang.size() <= 3 ? cf::language_display_name(lang) : lang;
}

int run_sft_render(const SftArgs& a) {
    if (a.kind != "instruction" && a.kind != "answer") throw cf::Error(cf::ErrorCode::ConfigError, "--kind must be instruction or answer");
    if (!a.jsonl) {
        const std::string text = !a.text_file.empty() ? read_text_arg(a.text_file) : a.text;
        if (a.kind == "instruction") {
            std::cout << cf::render_instruction_prompt({display_language(a.language), text, a.category});
        } else {
            std::cout << cf::render_answer_prompt(display_language(a.language), text, a.instruction);
        }
        return kExitOk;
    }
    // record protocol: one JSON object per stdin line, one prompt record per stdout line
    std::size_t lineno = 0;
    std::size_t failed = 0;
    for (std::string line; std::getline(std::cin, line);) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const json in = json::parse(line);
            const std::string lang = in.at("language").get<std::string>();
            json out = {{"document_id", in.value("document_id", "")}, {"language", lang}};
            if (a.kind == "instruction") {
                const std::string category = in.value("category", a.category);
                out["category"] = category;
                out["prompt"] = cf::render_instruction_prompt({display_language(lang), in.at("text").get<std::string>(), category});
            } else {
                out["instruction"] = in.at("instruction").get<std::string>();
                out["prompt"] = cf::render_answer_prompt(display_language(lang), in.at("text").get<std::string>(),
                                                         out["instruction"].get<std::string>());
            }
            std::cout << out.dump() << '\n';
        } catch (const std::exception& e) {
            ++failed;
            spdlog::warn("line {}: {}", lineno, e.what());
        }
    }
    if (failed) spdlog::warn("{} records could not be rendered", failed);
    return kExitOk;
}

std::string trim_copy(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

int run_sft_parse(const SftArgs& a) {
    if (!a.jsonl) {
        const cf::ParsedInstruction p = cf::parse_instruction_response(read_text_arg(a.text_file));
        std::cout << json{{"summary", p.summary}, {"instruction", p.instruction},
                          {"category", std::string(cf::category_name(p.category))}}
                         .dump()
                  << '\n';
        return kExitOk;
    }
    std::size_t lineno = 0;
    std::size_t failed = 0;
    for (std::string line; std::getline(std::cin, line);) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const json in = json::parse(line);
            cf::SftRecord r;
            r.language = in.at("language").get<std::string>();
            r.document_id = in.value("document_id", "");
            const std::string response = in.at("response").get<std::string>();
            if (a.kind == "answer") {
                r.summary = in.value("summary", "");
                r.instruction = in.at("instruction").get<std::string>();
                r.category = in.value("category", "");
                r.answer = trim_copy(response);
            } else {
                const cf::ParsedInstruction p = cf::parse_instruction_response(response);
                r.summary = p.summary;
                r.instruction = p.instruction;
                r.category = std::string(cf::category_name(p.category));
            }
            std::cout << r.to_json_line() << '\n';
        } catch (const std::exception& e) {
            ++failed;
            spdlog::warn("line {}: {}", lineno, e.what());
        }
    }
    if (failed) spdlog::warn("{} responses rejected", failed);
    return kExitOk;
}

int run_stats(const std::vector<std::string>& inputs) {
    std::cout << cf::stats_report(read_all_documents(inputs)).to_tsv();
    return kExitOk;
}

int run_train_lm(const std::vector<std::string>& inputs, int order, const std::string& lang, const std::string& out) {
    auto docs = read_all_documents(inputs);
    if (!lang.empty()) std::erase_if(docs, [&](const cf::Document& d) { return d.language != lang; });
    const cf::NgramModel model = cf::train_lm(docs, order);
    model.save(out);
    spdlog::info("trained order-{} model on {} documents: {} types, {} tokens", order, docs.size(), model.vocab_size(),
                 model.unigram_total());
    return kExitOk;
}

int run_train_langid(const std::vector<std::string>& inputs, const std::string& out) {
    cf::LangCorpora corpora;
    for (auto& d : read_all_documents(inputs)) {
        if (d.language.empty() || d.language == "und") continue;
        corpora[d.language].push_back(std::move(d.text));
    }
    const auto profiles = cf::train_langid(corpora);
    cf::save_profiles(profiles, out);
    spdlog::info("trained {} language profiles", profiles.size());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"corpus-forge: multilingual pretraining-data filtering and planning"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "corpus-forge 0.1.0");
    CommonOptions common;

    std::vector<std::string> inputs;
    std::string output;
    std::string stages;
    bool write_rejects = false;
    const auto add_pipeline = [&](CLI::App* sub) {
        add_common(*sub, common);
        sub->add_option("--input,-i", inputs, "input files or directories (overrides config)");
        sub->add_option("--output,-o", output, "output directory (overrides config)");
        sub->add_option("--stages", stages, "comma-separated stage list (overrides config)");
        sub->add_flag("--write-rejects", write_rejects, "also write rejected records with their reasons");
    };
    auto* filter = app.add_subcommand("filter", "run the web-document pipeline");
    add_pipeline(filter);
    auto* bitext = app.add_subcommand("bitext", "run the sentence-pair pipeline");
    add_pipeline(bitext);

    auto* fert = app.add_subcommand("fertility", "tokens-per-word table for tokenizers x languages");
    add_common(*fert, common);
    std::vector<std::string> vocab_args;
    std::vector<std::string> corpora;
    std::string fert_format = "tsv";
    fert->add_option("--vocab", vocab_args, "NAME=DIR with pieces.txt and merges.txt");
    fert->add_option("--corpus", corpora, "JSONL evaluation documents");
    fert->add_option("--format", fert_format)->check(CLI::IsMember({"tsv", "table"}));

    auto* plan = app.add_subcommand("plan", "token budgets for one training phase");
    add_common(*plan, common);
    PlanArgs plan_args;
    plan->add_option("--preset", plan_args.preset, "P1, P2, P3 or a variant such as P2-v1");
    plan->add_option("--total-tokens", plan_args.total_tokens, "phase token budget");
    plan->add_option("--availability", plan_args.availability, "SOURCE=TOKENS");
    plan->add_option("--availability-file", plan_args.availability_file, "JSON object of source -> tokens");
    plan->add_option("--override", plan_args.overrides, "LANG=WEIGHT for the remainder split");
    plan->add_option("--max-repetition", plan_args.max_repetition);
    plan->add_option("--format", plan_args.format)->check(CLI::IsMember({"tsv", "json"}));

    auto* sched = app.add_subcommand("schedule", "learning-rate table");
    add_common(*sched, common);
    ScheduleArgs sa;
    sched->add_option("--main-steps", sa.main_steps);
    sched->add_option("--main-tokens", sa.main_tokens, "derive main steps from a token count");
    sched->add_option("--peak-lr", sa.peak_lr);
    sched->add_option("--warmup-frac", sa.warmup_frac);
    sched->add_option("--decay-frac", sa.decay_frac);
    sched->add_option("--floor-ratio", sa.floor_ratio);
    sched->add_option("--final-anneal-steps", sa.final_anneal_steps);
    sched->add_option("--tokens-per-step", sa.tokens_per_step);
    sched->add_option("--every", sa.every, "sample every N steps");
    sched->add_option("--at", sa.at, "print one step only");
    sched->add_flag("--boundaries", sa.boundaries, "print phase boundaries only");

    auto* sft = app.add_subcommand("sft", "synthetic-instruction prompts");
    sft->require_subcommand(1);
    SftArgs sft_args;
    const auto add_sft = [&](CLI::App* sub) {
        sub->add_option("--kind", sft_args.kind)->check(CLI::IsMember({"instruction", "answer"}));
        sub->add_flag("--jsonl", sft_args.jsonl, "JSONL record protocol on stdin/stdout");
        sub->add_option("--file", sft_args.text_file, "document (render) or response (parse) file; - for stdin");
    };
    auto* render = sft->add_subcommand("render", "render a prompt");
    add_sft(render);
    render->add_option("--language", sft_args.language, "tag or display name");
    render->add_option("--category", sft_args.category);
    render->add_option("--text", sft_args.text, "document text");
    render->add_option("--instruction", sft_args.instruction);
    auto* parse = sft->add_subcommand("parse", "parse model responses");
    add_sft(parse);

    auto* stats = app.add_subcommand("stats", "per-language document/token/byte tallies");
    std::vector<std::string> stats_inputs;
    stats->add_option("inputs", stats_inputs, "JSONL files or directories")->required();

    auto* train_lm = app.add_subcommand("train-lm", "train an n-gram model for perplexity filtering");
    std::vector<std::string> lm_inputs;
    int lm_order = 5;
    std::string lm_lang;
    std::string lm_out;
    train_lm->add_option("--input,-i", lm_inputs)->required();
    train_lm->add_option("--order", lm_order)->check(CLI::Range(1, 5));
    train_lm->add_option("--lang", lm_lang, "only documents with this tag");
    train_lm->add_option("--out,-o", lm_out)->required();

    auto* train_lid = app.add_subcommand("train-langid", "train character n-gram language profiles");
    std::vector<std::string> lid_inputs;
    std::string lid_out;
    train_lid->add_option("--input,-i", lid_inputs)->required();
    train_lid->add_option("--out,-o", lid_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*filter) return run_filter(common, inputs, output, stages, write_rejects, false);
        if (*bitext) return run_filter(common, inputs, output, stages, write_rejects, true);
        if (*fert) return run_fertility(common, vocab_args, corpora, fert_format);
        if (*plan) return run_plan(common, plan_args);
        if (*sched) return run_schedule(common, sa);
        if (*render) return run_sft_render(sft_args);
        if (*parse) return run_sft_parse(sft_args);
        if (*stats) return run_stats(stats_inputs);
        if (*train_lm) return run_train_lm(lm_inputs, lm_order, lm_lang, lm_out);
        if (*train_lid) return run_train_langid(lid_inputs, lid_out);
    } catch (const cf::Error& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitFailure;
    }
    return kExitFailure;
}
