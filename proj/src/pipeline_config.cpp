#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "corpus_forge/error.hpp"
#include "corpus_forge/hash.hpp"
#include "corpus_forge/pipeline.hpp"

namespace corpus_forge {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

// Reads typed fields from one config object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) config_error(where() + " must be an object");
    }
    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.contains(k)) config_error("unknown key '" + (path_.empty() ? k : path_ + "." + k) + "'");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            config_error("bad value for '" + qualified(key) + "'");
        }
    }

    void get_double(const std::string& key, double& out) {
        get(key, out);
        if (!std::isfinite(out)) config_error("'" + qualified(key) + "' must be finite");
    }

    const json& sub(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Phase phase_from_json(const json& j) {
    if (j.is_number_integer()) return parse_phase(std::to_string(j.get<int>()));
    if (j.is_string()) return parse_phase(j.get<std::string>());
    config_error("phase must be 1, 2, 3 or \"P1\"..\"P3\"");
}

std::string policy_name(ParagraphPolicy p) {
    return p == ParagraphPolicy::DropParagraph ? "drop_paragraph" : "drop_document";
}

void check_stages(const std::vector<std::string>& stages) {
    std::set<std::string> seen;
    for (const auto& s : stages) {
        const auto& web = registered_web_stages();
        const auto& bitext = registered_bitext_stages();
        if (std::find(web.begin(), web.end(), s) == web.end() &&
            std::find(bitext.begin(), bitext.end(), s) == bitext.end()) {
            config_error("unknown stage '" + s + "'");
        }
        if (!seen.insert(s).second) config_error("stage '" + s + "' listed twice");
    }
}

void resolve(std::string& path, const std::filesystem::path& base) {
    if (path.empty()) return;
    const std::filesystem::path p(path);
    if (p.is_relative()) path = (base / p).lexically_normal().string();
}

}  // namespace

const std::vector<std::string>& registered_web_stages() { return kDefaultWebStages; }
const std::vector<std::string>& registered_bitext_stages() { return kDefaultBitextStages; }

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    Section top(j, "");
    top.get("stages", c.stages);
    if (top.has("inputs")) {
        const json& in = top.sub("inputs");
        if (in.is_string()) {
            c.inputs = {in.get<std::string>()};
        } else {
            top.get("inputs", c.inputs);
        }
    }
    top.get("output", c.output_dir);
    top.get("workers", c.workers);
    if (top.has("phase")) c.phase = phase_from_json(top.sub("phase"));
    top.get("seed", c.seed);
    top.get("languages", c.languages);
    top.get("stable_order", c.stable_order);
    top.get("write_rejects", c.write_rejects);

    if (top.has("heuristics")) {
        Section s(top.sub("heuristics"), "heuristics");
        auto& h = c.heuristics;
        s.get("min_chars", h.min_chars);
        s.get("banned_phrases", h.banned_phrases);
        s.get("ban_curly_brackets", h.ban_curly_brackets);
        s.get_double("max_uppercase_fraction", h.max_uppercase_fraction);
        s.get_double("max_symbol_to_word", h.max_symbol_to_word);
        s.get_double("max_nonalpha_word_fraction", h.max_nonalpha_word_fraction);
        std::string policy = policy_name(h.paragraph_policy);
        s.get("paragraph_policy", policy);
        if (policy == "drop_paragraph") {
            h.paragraph_policy = ParagraphPolicy::DropParagraph;
        } else if (policy == "drop_document") {
            h.paragraph_policy = ParagraphPolicy::DropDocument;
        } else {
            config_error("heuristics.paragraph_policy must be drop_paragraph or drop_document");
        }
    }
    if (top.has("dedup")) {
        Section s(top.sub("dedup"), "dedup");
        s.get("num_permutations", c.dedup.minhash.num_permutations);
        s.get("shingle_size", c.dedup.minhash.shingle_size);
        s.get("bands", c.dedup.lsh.bands);
        s.get("rows", c.dedup.lsh.rows);
        s.get_double("threshold", c.dedup.lsh.threshold);
    }
    if (top.has("langid")) {
        Section s(top.sub("langid"), "langid");
        s.get("profiles", c.langid.profiles);
        s.get("trust_tags", c.langid.trust_tags);
    }
    if (top.has("perplexity")) {
        Section s(top.sub("perplexity"), "perplexity");
        s.get("models", c.perplexity.models);
        s.get("keep_below", c.perplexity.keep_below);
        s.get("calibration", c.perplexity.calibration);
        s.get_double("percentile", c.perplexity.percentile);
        s.get("reject_uncalibrated", c.perplexity.reject_uncalibrated);
    }
    if (top.has("quality")) {
        Section s(top.sub("quality"), "quality");
        auto& q = c.quality;
        s.get_double("edu_min_phase1", q.edu_min_phase1);
        s.get_double("edu_min_phase23", q.edu_min_phase23);
        s.get_double("bicleaner_default", q.bicleaner_default);
        s.get("bicleaner_overrides", q.bicleaner_overrides);
        s.get_double("cometkiwi_min", q.cometkiwi_min);
        s.get("strict", q.strict);
    }
    if (top.has("routing")) {
        Section s(top.sub("routing"), "routing");
        s.get("edu_only_sources", c.routing.edu_only_sources);
    }
    if (top.has("schedule")) {
        Section s(top.sub("schedule"), "schedule");
        auto& sc = c.schedule;
        s.get_double("peak_lr", sc.peak_lr);
        s.get("main_steps", sc.main_steps);
        s.get_double("warmup_frac", sc.warmup_frac);
        s.get_double("decay_frac", sc.decay_frac);
        s.get_double("decay_floor_ratio", sc.decay_floor_ratio);
        s.get("final_anneal_steps", sc.final_anneal_steps);
        s.get("tokens_per_step", sc.tokens_per_step);
    }
    if (top.has("mixture")) {
        Section s(top.sub("mixture"), "mixture");
        s.get("preset", c.mixture.preset);
        s.get("phase_total_tokens", c.mixture.phase_total_tokens);
        s.get("availability", c.mixture.availability);
        s.get("overrides", c.mixture.overrides);
        s.get_double("max_repetition", c.mixture.max_repetition);
    }
    if (top.has("fertility")) {
        Section s(top.sub("fertility"), "fertility");
        s.get("vocabs", c.fertility.vocabs);
        s.get("corpora", c.fertility.corpora);
    }

    c.validate_common();
    return c;
}

void PipelineConfig::validate_common() const {
    if (workers < 1) config_error("workers must be >= 1");
    check_stages(stages);
    for (const auto& in : inputs) {
        if (in.empty()) config_error("input paths must be nonempty");
    }
    heuristics.validate();
    quality.validate();
    validate_lsh(dedup.lsh, dedup.minhash);
    if (!(perplexity.percentile >= 0.0 && perplexity.percentile <= 100.0)) {
        config_error("perplexity.percentile must lie in [0, 100]");
    }
    for (const auto& [lang, cut] : perplexity.keep_below) {
        if (!(cut > 0.0) || !std::isfinite(cut)) config_error("perplexity.keep_below." + lang + " must be > 0");
    }
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(detail::read_file(path.string()), nullptr, true, true);
    } catch (const json::exception& e) {
        config_error(path.string() + ": " + e.what());
    }
    PipelineConfig c = from_json(j);
    const auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
    for (auto& in : c.inputs) resolve(in, base);
    resolve(c.output_dir, base);
    resolve(c.langid.profiles, base);
    for (auto& [k, v] : c.perplexity.models) resolve(v, base);
    for (auto& [k, v] : c.perplexity.calibration) resolve(v, base);
    for (auto& [k, v] : c.fertility.vocabs) resolve(v, base);
    for (auto& v : c.fertility.corpora) resolve(v, base);
    return c;
}

json PipelineConfig::to_json() const {
    const auto& h = heuristics;
    const auto& q = quality;
    const auto& sc = schedule;
    json j = {
        {"stages", stages},
        {"inputs", inputs},
        {"output", output_dir},
        {"workers", workers},
        {"phase", std::string(phase_name(phase))},
        {"seed", seed},
        {"languages", languages},
        {"stable_order", stable_order},
        {"write_rejects", write_rejects},
        {"heuristics",
         {{"min_chars", h.min_chars},
          {"banned_phrases", h.banned_phrases},
          {"ban_curly_brackets", h.ban_curly_brackets},
          {"max_uppercase_fraction", h.max_uppercase_fraction},
          {"max_symbol_to_word", h.max_symbol_to_word},
          {"max_nonalpha_word_fraction", h.max_nonalpha_word_fraction},
          {"paragraph_policy", policy_name(h.paragraph_policy)}}},
        {"dedup",
         {{"num_permutations", dedup.minhash.num_permutations},
          {"shingle_size", dedup.minhash.shingle_size},
          {"bands", dedup.lsh.bands},
          {"rows", dedup.lsh.rows},
          {"threshold", dedup.lsh.threshold}}},
        {"langid", {{"profiles", langid.profiles}, {"trust_tags", langid.trust_tags}}},
        {"perplexity",
         {{"models", perplexity.models},
          {"keep_below", perplexity.keep_below},
          {"calibration", perplexity.calibration},
          {"percentile", perplexity.percentile},
          {"reject_uncalibrated", perplexity.reject_uncalibrated}}},
        {"quality",
         {{"edu_min_phase1", q.edu_min_phase1},
          {"edu_min_phase23", q.edu_min_phase23},
          {"bicleaner_default", q.bicleaner_default},
          {"bicleaner_overrides", q.bicleaner_overrides},
          {"cometkiwi_min", q.cometkiwi_min},
          {"strict", q.strict}}},
        {"routing", {{"edu_only_sources", routing.edu_only_sources}}},
        {"schedule",
         {{"peak_lr", sc.peak_lr},
          {"main_steps", sc.main_steps},
          {"warmup_frac", sc.warmup_frac},
          {"decay_frac", sc.decay_frac},
          {"decay_floor_ratio", sc.decay_floor_ratio},
          {"final_anneal_steps", sc.final_anneal_steps},
          {"tokens_per_step", sc.tokens_per_step}}},
        {"mixture",
         {{"preset", mixture.preset},
          {"phase_total_tokens", mixture.phase_total_tokens},
          {"availability", mixture.availability},
          {"overrides", mixture.overrides},
          {"max_repetition", mixture.max_repetition}}},
        {"fertility", {{"vocabs", fertility.vocabs}, {"corpora", fertility.corpora}}},
    };
    return j;
}

std::string PipelineConfig::digest() const {
    json j = to_json();
    for (const char* k : {"workers", "stable_order", "write_rejects", "output", "inputs"}) j.erase(k);
    const Hash128 h = murmur3_128(j.dump());
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << h.hi << std::setw(16) << h.lo;
    return os.str();
}

}  // namespace corpus_forge
