#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace corpus_forge {

inline constexpr double kFinalAnnealTokens = 40e9;

/// Warmup-stable-decay schedule followed by a linear anneal to zero.
struct ScheduleConfig {
    double peak_lr = 3e-4;
    std::int64_t main_steps = 0;
    double warmup_frac = 0.10;
    double decay_frac = 0.10;
    double decay_floor_ratio = 0.10;
    // Negative selects the default: ~40B tokens worth of steps.
    std::int64_t final_anneal_steps = -1;
    std::int64_t tokens_per_step = 12'000'000;

    std::int64_t resolved_final_anneal_steps() const;
    double floor_lr() const { return decay_floor_ratio * peak_lr; }
    void validate() const;
};

enum class SchedulePhase { Warmup, Stable, Decay, FinalAnneal, Done };
std::string_view schedule_phase_name(SchedulePhase phase);

struct PhaseBoundaries {
    std::int64_t warmup_end;
    std::int64_t stable_end;
    std::int64_t decay_end;
    std::int64_t final_end;
};

struct LrPoint {
    std::int64_t step;
    double lr;
    SchedulePhase phase;
};

std::int64_t round_half_up(double x);

PhaseBoundaries phase_boundaries(const ScheduleConfig& cfg);
LrPoint lr_at(const ScheduleConfig& cfg, std::int64_t step);
// Steps 0, k, 2k, ... plus final_end.
std::vector<LrPoint> emit_schedule(const ScheduleConfig& cfg, std::int64_t sample_every);
std::string schedule_tsv(const std::vector<LrPoint>& points);

}  // namespace corpus_forge
