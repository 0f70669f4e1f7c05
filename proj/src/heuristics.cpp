#include "corpus_forge/heuristics.hpp"

#include <cmath>

#include "corpus_forge/error.hpp"
#include "corpus_forge/unicode.hpp"

namespace corpus_forge {

void HeuristicConfig::validate() const {
    const auto fraction = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (!fraction(max_uppercase_fraction) || !fraction(max_nonalpha_word_fraction)) {
        throw Error(ErrorCode::ConfigError, "heuristic fractions must lie in [0, 1]");
    }
    if (!std::isfinite(max_symbol_to_word) || max_symbol_to_word < 0.0) {
        throw Error(ErrorCode::ConfigError, "max_symbol_to_word must be finite and >= 0");
    }
}

FilterVerdict doc_length_gate(const Document& doc, const HeuristicConfig& cfg) {
    const std::size_t chars = utf8::count_scalars(doc.text);
    if (chars < cfg.min_chars) return FilterVerdict::reject(Reason::TooShort, double(chars));
    return FilterVerdict::pass();
}

FilterVerdict banned_content_gate(const Document& doc, const HeuristicConfig& cfg) {
    if (cfg.ban_curly_brackets && doc.text.find_first_of("{}") != std::string::npos) {
        return FilterVerdict::reject(Reason::BannedPhrase);
    }
    if (cfg.banned_phrases.empty()) return FilterVerdict::pass();
    const std::string folded = unicode::fold_case(doc.text);
    for (const auto& phrase : cfg.banned_phrases) {
        if (!phrase.empty() && folded.find(phrase) != std::string::npos) {
            return FilterVerdict::reject(Reason::BannedPhrase);
        }
    }
    return FilterVerdict::pass();
}

FilterVerdict paragraph_verdict(std::string_view paragraph, const HeuristicConfig& cfg) {
    const TextStats stats = text_stats(paragraph);
    if (stats.uppercase_fraction > cfg.max_uppercase_fraction) {
        return FilterVerdict::reject(Reason::UppercaseRatio, stats.uppercase_fraction);
    }
    if (stats.symbol_to_word > cfg.max_symbol_to_word) {
        return FilterVerdict::reject(Reason::SymbolRatio, stats.symbol_to_word);
    }
    if (stats.nonalpha_word_fraction > cfg.max_nonalpha_word_fraction) {
        return FilterVerdict::reject(Reason::NonalphaRatio, stats.nonalpha_word_fraction);
    }
    return FilterVerdict::pass();
}

ParagraphResult paragraph_quality_gate(const Document& doc, const HeuristicConfig& cfg) {
    ParagraphResult result;
    const auto paragraphs = paragraph_split(doc.text);
    std::vector<std::string_view> kept;
    kept.reserve(paragraphs.size());
    FilterVerdict first_reject = FilterVerdict::pass();

    for (const auto paragraph : paragraphs) {
        const FilterVerdict v = paragraph_verdict(paragraph, cfg);
        if (v.passed) {
            kept.push_back(paragraph);
            continue;
        }
        ++result.paragraphs_removed;
        if (first_reject.passed) first_reject = v;
        if (cfg.paragraph_policy == ParagraphPolicy::DropDocument) {
            result.verdict = v;
            return result;
        }
    }

    if (result.paragraphs_removed == 0) {
        result.cleaned_text = doc.text;
        return result;
    }
    if (kept.empty()) {
        result.verdict = first_reject;
        return result;
    }
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (i > 0) result.cleaned_text.push_back('\n');
        result.cleaned_text.append(kept[i]);
    }
    return result;
}

std::pair<FilterVerdict, Document> apply_heuristics(const Document& doc,
                                                    const HeuristicConfig& cfg) {
    if (auto v = doc_length_gate(doc, cfg); !v.passed) return {v, doc};
    if (auto v = banned_content_gate(doc, cfg); !v.passed) return {v, doc};

    ParagraphResult para = paragraph_quality_gate(doc, cfg);
    if (!para.verdict.passed) return {para.verdict, doc};

    Document cleaned = doc;
    cleaned.text = std::move(para.cleaned_text);
    if (auto v = doc_length_gate(cleaned, cfg); !v.passed) return {v, doc};
    return {FilterVerdict::pass(), std::move(cleaned)};
}

}  // namespace corpus_forge
