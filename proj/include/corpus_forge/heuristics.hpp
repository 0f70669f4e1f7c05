#pragma once

#include <string>
#include <utility>
#include <vector>

#include "corpus_forge/corpus.hpp"

namespace corpus_forge {

enum class ParagraphPolicy { DropParagraph, DropDocument };

struct HeuristicConfig {
    std::size_t min_chars = 200;
    std::vector<std::string> banned_phrases{"lorem ipsum", "javascript"};
    bool ban_curly_brackets = true;
    double max_uppercase_fraction = 0.40;
    double max_symbol_to_word = 0.1;
    double max_nonalpha_word_fraction = 0.2;
    ParagraphPolicy paragraph_policy = ParagraphPolicy::DropParagraph;

    // Throws Error(ConfigError) on non-finite or out-of-range thresholds.
    void validate() const;
};

struct ParagraphResult {
    FilterVerdict verdict;
    std::string cleaned_text;
    std::size_t paragraphs_removed = 0;
};

FilterVerdict doc_length_gate(const Document& doc, const HeuristicConfig& cfg);
FilterVerdict banned_content_gate(const Document& doc, const HeuristicConfig& cfg);

// Verdict for a single paragraph against the three ratio rules, checked in
// the order uppercase, symbol, non-alpha.
FilterVerdict paragraph_verdict(std::string_view paragraph, const HeuristicConfig& cfg);

ParagraphResult paragraph_quality_gate(const Document& doc, const HeuristicConfig& cfg);

/// length -> banned content -> paragraph gates -> length again on the
/// cleaned text. The returned document carries the cleaned text.
std::pair<FilterVerdict, Document> apply_heuristics(const Document& doc,
                                                    const HeuristicConfig& cfg);

}  // namespace corpus_forge
