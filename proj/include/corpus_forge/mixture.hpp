#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "corpus_forge/quality_gate.hpp"

namespace corpus_forge {

inline constexpr std::string_view kEnglishSource = "en";
inline constexpr std::string_view kCodeMathSource = "code_math";
inline constexpr std::string_view kParallelSource = "parallel";

struct MixtureSpec {
    std::string name;
    Phase phase = Phase::P1;
    double english_share = 0.0;
    double codemath_share = 0.0;
    std::optional<double> parallel_share;
    // Available tokens per source after filtering. Keys other than "en",
    // "code_math" and "parallel" are the languages sharing the remainder.
    std::map<std::string, double> availability;
    // Optional relative weights replacing availability for the remainder split.
    std::map<std::string, double> overrides;
    double max_repetition = 4.0;

    void validate() const;
};

struct PlanEntry {
    std::string source;
    double share = 0.0;
    std::uint64_t budget_tokens = 0;
    std::optional<double> availability;
    std::optional<double> repetition;
    std::string warning;
};

struct MixturePlan {
    std::string name;
    Phase phase = Phase::P1;
    std::uint64_t phase_total_tokens = 0;
    std::vector<PlanEntry> entries;  // en, code_math, parallel (if any), then languages by tag
    std::vector<std::string> warnings;

    double share_sum() const;
    std::uint64_t budget_sum() const;
    const PlanEntry* find(std::string_view source) const;

    std::string to_tsv() const;
    std::string to_json() const;
};

/// Category-level constants for the three training phases and the six
/// experimental second/third-phase variants.
std::map<std::string, MixtureSpec> phase_presets();
MixtureSpec preset(const std::string& name);

MixturePlan plan_phase(const MixtureSpec& spec, std::uint64_t phase_total_tokens);

// weight(source) = share / availability, normalized over sources with tokens.
std::map<std::string, double> sampling_weights(const MixturePlan& plan);

// Integer apportionment of `total` proportional to `shares` (largest remainder,
// ties to the earlier index).
std::vector<std::uint64_t> largest_remainder(const std::vector<double>& shares, std::uint64_t total);

}  // namespace corpus_forge
