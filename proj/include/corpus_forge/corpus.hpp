#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace corpus_forge {

using ScoreMap = std::map<std::string, double>;

/// One web-crawl text record. `scores` holds externally computed annotations
/// such as "edu".
struct Document {
    std::string id;
    std::string text;
    std::string language;
    ScoreMap scores;
    std::string source;

    bool operator==(const Document&) const = default;
};

/// One bitext record; exactly one side is English.
struct SentencePair {
    std::string src_text;
    std::string tgt_text;
    std::string src_lang;
    std::string tgt_lang;
    ScoreMap scores;  // "bicleaner", "cometkiwi"

    bool operator==(const SentencePair&) const = default;

    // The non-English side's tag, or empty when the pair is not xx-en / en-xx.
    std::string foreign_language() const;
};

enum class Reason {
    None,
    TooShort,
    BannedPhrase,
    UppercaseRatio,
    SymbolRatio,
    NonalphaRatio,
    Perplexity,
    Duplicate,
    NearDuplicate,
    EduScore,
    Bicleaner,
    Cometkiwi,
    LangMismatch,
    MissingScore,
    NoBands,
    InvalidRecord,
};

std::string_view reason_name(Reason reason);
std::optional<Reason> parse_reason(std::string_view name);

struct FilterVerdict {
    bool passed = true;
    Reason reason = Reason::None;
    std::optional<double> detail;

    static FilterVerdict pass() { return {}; }
    static FilterVerdict reject(Reason reason, std::optional<double> detail = std::nullopt) {
        return {false, reason, detail};
    }

    bool operator==(const FilterVerdict&) const = default;
};

struct TextStats {
    std::size_t char_count = 0;
    std::size_t word_count = 0;
    double uppercase_fraction = 0.0;
    double symbol_to_word = 0.0;
    double nonalpha_word_fraction = 0.0;
};

struct Segmentation {
    std::vector<std::string> words;
    // Whitespace-delimited runs made only of punctuation; dropped from `words`.
    std::size_t punctuation_runs = 0;
};

/// Words are maximal non-whitespace runs, split further at dashes and
/// ellipses, with punctuation stripped from both ends.
Segmentation segment(std::string_view text);
std::vector<std::string> word_segment(std::string_view text);
std::size_t count_words(std::string_view text);

/// Splits on every run of '\n'; empty segments are removed.
std::vector<std::string_view> paragraph_split(std::string_view text);

/// Occurrences of '#', U+2026 and "..." (non-overlapping).
std::size_t count_symbols(std::string_view text);

TextStats text_stats(std::string_view text);

}  // namespace corpus_forge
