#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus_forge/corpus.hpp"
#include "corpus_forge/dedup.hpp"
#include "corpus_forge/heuristics.hpp"
#include "corpus_forge/lr_schedule.hpp"
#include "corpus_forge/quality_gate.hpp"

namespace corpus_forge {

// Web-document stages, in the default order.
inline const std::vector<std::string> kDefaultWebStages{"exact_dedup", "near_dedup", "langid",
                                                        "perplexity", "heuristics", "edu"};
inline const std::vector<std::string> kDefaultBitextStages{"pair_dedup", "bitext_gate"};

const std::vector<std::string>& registered_web_stages();
const std::vector<std::string>& registered_bitext_stages();

struct DedupSection {
    MinHashParams minhash;
    LshParams lsh;
};

struct LangIdSection {
    std::string profiles;      // JSON profile file from train_langid; empty = none
    bool trust_tags = false;   // keep the record's own tag when it has one
};

struct PerplexitySection {
    std::map<std::string, std::string> models;         // language -> model file
    std::map<std::string, double> keep_below;          // language -> cutoff
    std::map<std::string, std::string> calibration;    // language -> JSONL sample
    double percentile = 67.0;
    // Languages without a model or cutoff pass by default.
    bool reject_uncalibrated = false;
};

struct RoutingSection {
    // Documents from these sources are gated by the edu score only.
    std::vector<std::string> edu_only_sources{"fineweb-edu"};
};

struct MixtureSection {
    std::string preset;  // empty: follow the phase selector
    std::uint64_t phase_total_tokens = 0;
    std::map<std::string, double> availability;
    std::map<std::string, double> overrides;
    double max_repetition = 4.0;
};

struct FertilitySection {
    std::map<std::string, std::string> vocabs;  // tokenizer name -> vocab directory
    std::vector<std::string> corpora;           // JSONL files, grouped by "lang"
};

struct PipelineConfig {
    std::vector<std::string> stages;  // empty: the default stack for the pipeline kind
    std::vector<std::string> inputs;  // files or directories
    std::string output_dir;
    int workers = 1;
    Phase phase = Phase::P1;
    std::uint64_t seed = 0;
    std::vector<std::string> languages;  // registry; empty accepts any tag
    bool stable_order = true;
    bool resume = false;
    bool write_rejects = false;

    HeuristicConfig heuristics;
    DedupSection dedup;
    LangIdSection langid;
    PerplexitySection perplexity;
    QualityThresholds quality;
    RoutingSection routing;
    ScheduleConfig schedule;
    MixtureSection mixture;
    FertilitySection fertility;

    // Throws Error(ConfigError) for unknown keys, bad values or stage names.
    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    // Digest of every setting that can change results (workers, resume and
    // output ordering excluded).
    std::string digest() const;
    void validate_common() const;
};

struct StageReport {
    std::string name;
    std::uint64_t in = 0;
    std::uint64_t passed = 0;
    std::uint64_t bypassed = 0;  // counted in `passed`; routed around the stage
    std::map<std::string, std::uint64_t> rejected;
    std::map<std::string, std::map<std::string, std::uint64_t>> rejected_by_language;

    std::uint64_t rejected_total() const;
    void merge(const StageReport& other);
    bool operator==(const StageReport&) const = default;
};

struct LanguageTally {
    std::uint64_t documents = 0;
    std::uint64_t tokens = 0;  // word_segment words
    std::uint64_t bytes = 0;
    void add(const LanguageTally& o) {
        documents += o.documents;
        tokens += o.tokens;
        bytes += o.bytes;
    }
    bool operator==(const LanguageTally&) const = default;
};

struct RunReport {
    std::vector<StageReport> stages;  // "ingest" first
    std::map<std::string, LanguageTally> input_by_language;
    std::map<std::string, LanguageTally> output_by_language;
    std::uint64_t input_records = 0;
    std::uint64_t output_records = 0;
    std::uint64_t input_bytes = 0;
    double wall_seconds = 0.0;
    std::string config_digest;
    bool complete = false;
    std::vector<std::string> outputs;

    // in = passed + rejected for every stage, and stage i+1 sees what stage i passed.
    bool accounting_ok() const;
    void merge(const RunReport& other);
    double docs_per_second() const;
    double bytes_per_second() const;
    nlohmann::json to_json(bool include_timing = true) const;
    static RunReport from_json(const nlohmann::json& j);
};

using ProgressFn = std::function<void(std::size_t shard, std::size_t total, const RunReport& shard_report)>;

/// Sharded web-document pipeline. Each input file is one shard; survivors
/// go to output_dir/part-NNNNN.jsonl in input order. Dedup stages are
/// first-wins over the whole run, so results do not depend on `workers`.
/// While running, output_dir holds an _INCOMPLETE marker and progress.json;
/// `resume` skips shards recorded as complete.
RunReport run_pipeline(const PipelineConfig& config, const ProgressFn& progress = {});

/// Same engine over TSV sentence pairs.
RunReport run_bitext_pipeline(const PipelineConfig& config, const ProgressFn& progress = {});

// In-memory variant of the web pipeline for one batch; no files touched.
// Survivors are returned in input order.
std::pair<std::vector<Document>, RunReport> filter_documents(const std::vector<Document>& docs,
                                                             const PipelineConfig& config);

struct StatsReport {
    std::map<std::string, LanguageTally> by_language;
    LanguageTally totals;
    std::string to_tsv() const;
};

StatsReport stats_report(const std::vector<Document>& corpus);
LanguageTally tally(const Document& doc);

// Input files named by `inputs`: files as given, directories expanded to
// their sorted regular files with the given extension.
std::vector<std::filesystem::path> expand_inputs(const std::vector<std::string>& inputs,
                                                 const std::string& extension);

}  // namespace corpus_forge
