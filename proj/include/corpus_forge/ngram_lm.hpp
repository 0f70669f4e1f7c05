#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corpus_forge/corpus.hpp"

namespace corpus_forge {

// LM tokens: case-folded words of one newline-delimited sentence.
std::vector<std::string> lm_tokens(std::string_view sentence);

/// Accumulates n-gram counts keyed by word strings. Private counters from
/// parallel workers merge by pointwise sum.
class NgramCounter {
public:
    explicit NgramCounter(int order);

    void add_sentence(std::span<const std::string> tokens);
    // Every non-empty line of `text` is one sentence.
    void add_text(std::string_view text);
    void merge(const NgramCounter& other);

    int order() const { return order_; }
    std::size_t sentences() const { return sentences_; }
    // Joined with '\x1f'; index k-1 holds the k-grams.
    const std::vector<std::unordered_map<std::string, std::uint64_t>>& tables() const {
        return tables_;
    }

private:
    int order_;
    std::size_t sentences_ = 0;
    std::vector<std::unordered_map<std::string, std::uint64_t>> tables_;
};

/// Word n-gram model scored with stupid backoff.
class NgramModel {
public:
    static constexpr std::uint32_t kBos = 0;  // "<s>"
    static constexpr std::uint32_t kEos = 1;  // "</s>"
    static constexpr std::uint32_t kUnknown = 0xFFFFFFFFu;
    static constexpr double kDefaultAlpha = 0.4;

    NgramModel() = default;
    static NgramModel from_counter(const NgramCounter& counter, double backoff_alpha = kDefaultAlpha);

    int order() const { return order_; }
    double backoff_alpha() const { return alpha_; }
    // Distinct unigram types, including "</s>".
    std::size_t vocab_size() const { return counts_.empty() ? 0 : counts_[0].size(); }
    std::uint64_t unigram_total() const { return unigram_total_; }

    std::uint32_t token_id(std::string_view word) const;
    const std::string& token(std::uint32_t id) const { return vocab_.at(id); }

    // Raw count of an n-gram given as words ("<s>", "</s>" allowed).
    std::uint64_t count(std::span<const std::string> ngram) const;
    std::uint64_t count_ids(std::span<const std::uint32_t> ngram) const;

    // Natural-log stupid-backoff score of the last id given the preceding ids
    // (at most order - 1 of them are used).
    double log_score(std::span<const std::uint32_t> history, std::uint32_t word) const;

    // Sum of log scores over every sentence of `text` and the number of scored
    // positions (tokens plus one end marker per sentence).
    std::pair<double, std::size_t> log_likelihood(std::string_view text) const;

    void save(const std::filesystem::path& path) const;
    static NgramModel load(const std::filesystem::path& path);
    std::string serialize() const;
    static NgramModel deserialize(std::string_view bytes);

    // Sorted (ids, count) entries for order k (1-based).
    std::vector<std::pair<std::vector<std::uint32_t>, std::uint64_t>> entries(int k) const;

private:
    using Table = std::unordered_map<std::string, std::uint64_t>;
    static std::string pack(std::span<const std::uint32_t> ids);
    void rebuild_context_totals();

    int order_ = 0;
    double alpha_ = kDefaultAlpha;
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, std::uint32_t> ids_;
    std::vector<Table> counts_;          // index k-1: k-grams
    std::vector<Table> context_totals_;  // index k-1: sum over w of c(h w), |h| = k
    std::uint64_t unigram_total_ = 0;
};

NgramModel train_lm(const std::vector<Document>& corpus, int order = 5,
                    double backoff_alpha = NgramModel::kDefaultAlpha);

/// exp(-(1/T) * sum log p), T counting end markers.
double perplexity(const NgramModel& model, std::string_view text);

/// Per-language perplexity cutoffs.
class PerplexityBands {
public:
    void set(const std::string& language, double keep_below);
    bool has(const std::string& language) const { return cutoffs_.contains(language); }
    double keep_below(const std::string& language) const;
    const std::map<std::string, double>& cutoffs() const { return cutoffs_; }

    // Cutoff = `percentile` (0..100, linear interpolation) of the sample's
    // perplexities.
    void calibrate(const std::string& language, const NgramModel& model,
                   const std::vector<Document>& sample, double percentile = 67.0);

private:
    std::map<std::string, double> cutoffs_;
};

double percentile_linear(std::vector<double> values, double percentile);

FilterVerdict perplexity_gate(const Document& doc, const NgramModel& model,
                              const PerplexityBands& bands);

/// Character 1..3-gram log-frequency tables for one language.
struct LangProfile {
    static constexpr int kMaxOrder = 3;
    std::string language;
    std::array<std::unordered_map<std::uint64_t, double>, kMaxOrder> log_freq;
    std::array<double, kMaxOrder> unseen_log{};

    double log_prob(int order, std::uint64_t key) const;
};

using LangCorpora = std::map<std::string, std::vector<std::string>>;

struct LanguageGuess {
    std::string language;
    double score = 0.0;  // margin over the runner-up
};

inline constexpr std::size_t kMinLangIdChars = 20;
inline constexpr std::size_t kMinLangTrainingChars = 1000;

std::vector<LangProfile> train_langid(const LangCorpora& corpora);
LanguageGuess identify_language(const std::vector<LangProfile>& profiles, std::string_view text);
// Mean per-character log-likelihood under one profile.
double mean_char_log_likelihood(const LangProfile& profile, std::string_view text);

void save_profiles(const std::vector<LangProfile>& profiles, const std::filesystem::path& path);
std::vector<LangProfile> load_profiles(const std::filesystem::path& path);

}  // namespace corpus_forge
