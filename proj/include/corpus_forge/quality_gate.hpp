#pragma once

#include <map>
#include <string>

#include "corpus_forge/corpus.hpp"
#include "corpus_forge/dedup.hpp"

namespace corpus_forge {

enum class Phase { P1, P2, P3 };

Phase parse_phase(std::string_view text);  // "1"/"P1"/"p1" ...
std::string_view phase_name(Phase phase);

struct QualityThresholds {
    double edu_min_phase1 = 2.0;
    double edu_min_phase23 = 3.0;
    double bicleaner_default = 0.5;
    std::map<std::string, double> bicleaner_overrides{{"pt", 0.6}};
    double cometkiwi_min = 0.7;
    // Reject pairs lacking a score instead of skipping the rule.
    bool strict = false;

    void validate() const;
    double edu_threshold(Phase phase) const {
        return phase == Phase::P1 ? edu_min_phase1 : edu_min_phase23;
    }
    double bicleaner_threshold(const std::string& language) const;
};

/// Keeps documents whose "edu" score is strictly above the phase threshold.
/// Throws Error(MissingScore) when the document has no "edu" score.
FilterVerdict edu_score_gate(const Document& doc, const QualityThresholds& thresholds, Phase phase);

/// Keeps pairs scoring >= the cutoff: Bicleaner per the non-English
/// language, CometKiwi globally. Missing scores skip their rule unless
/// `strict`, where they reject with MISSING_SCORE.
FilterVerdict bitext_gate(const SentencePair& pair, const QualityThresholds& thresholds);

DedupKey pair_dedup_key(const SentencePair& pair);

}  // namespace corpus_forge
