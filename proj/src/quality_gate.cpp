#include "corpus_forge/quality_gate.hpp"

#include <cmath>

#include "corpus_forge/error.hpp"

namespace corpus_forge {

Phase parse_phase(std::string_view text) {
    if (text == "1" || text == "P1" || text == "p1") return Phase::P1;
    if (text == "2" || text == "P2" || text == "p2") return Phase::P2;
    if (text == "3" || text == "P3" || text == "p3") return Phase::P3;
    throw Error(ErrorCode::ConfigError, "unknown phase '" + std::string(text) + "'");
}

std::string_view phase_name(Phase phase) {
    switch (phase) {
        case Phase::P1: return "P1";
        case Phase::P2: return "P2";
        case Phase::P3: return "P3";
    }
    return "P1";
}

void QualityThresholds::validate() const {
    const auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    const auto edu = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 5.0; };
    if (!edu(edu_min_phase1) || !edu(edu_min_phase23)) {
        throw Error(ErrorCode::ConfigError, "edu thresholds must lie in [0, 5]");
    }
    if (!unit(bicleaner_default) || !unit(cometkiwi_min)) {
        throw Error(ErrorCode::ConfigError, "bicleaner/cometkiwi thresholds must lie in [0, 1]");
    }
    for (const auto& [lang, v] : bicleaner_overrides) {
        if (!unit(v)) throw Error(ErrorCode::ConfigError, "bicleaner override for '" + lang + "' outside [0, 1]");
    }
}

double QualityThresholds::bicleaner_threshold(const std::string& language) const {
    const auto it = bicleaner_overrides.find(language);
    return it == bicleaner_overrides.end() ? bicleaner_default : it->second;
}

FilterVerdict edu_score_gate(const Document& doc, const QualityThresholds& thresholds, Phase phase) {
    const auto it = doc.scores.find("edu");
    if (it == doc.scores.end()) throw Error(ErrorCode::MissingScore, "document '" + doc.id + "' has no edu score");
    if (it->second <= thresholds.edu_threshold(phase)) return FilterVerdict::reject(Reason::EduScore, it->second);
    return FilterVerdict::pass();
}

FilterVerdict bitext_gate(const SentencePair& pair, const QualityThresholds& thresholds) {
    const std::string foreign = pair.foreign_language();
    if (foreign.empty()) return FilterVerdict::reject(Reason::LangMismatch);

    if (const auto it = pair.scores.find("bicleaner"); it != pair.scores.end()) {
        if (it->second < thresholds.bicleaner_threshold(foreign)) {
            return FilterVerdict::reject(Reason::Bicleaner, it->second);
        }
    } else if (thresholds.strict) {
        return FilterVerdict::reject(Reason::MissingScore);
    }

    if (const auto it = pair.scores.find("cometkiwi"); it != pair.scores.end()) {
        if (it->second < thresholds.cometkiwi_min) return FilterVerdict::reject(Reason::Cometkiwi, it->second);
    } else if (thresholds.strict) {
        return FilterVerdict::reject(Reason::MissingScore);
    }
    return FilterVerdict::pass();
}

DedupKey pair_dedup_key(const SentencePair& pair) {
    std::string joined = normalize_for_dedup(pair.src_text);
    joined.push_back('\t');
    joined += normalize_for_dedup(pair.tgt_text);
    return {murmur3_128(joined)};
}

}  // namespace corpus_forge
