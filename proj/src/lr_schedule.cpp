#include "corpus_forge/lr_schedule.hpp"

#include <cmath>
#include <sstream>

#include "corpus_forge/error.hpp"
#include "format.hpp"

namespace corpus_forge {

std::int64_t round_half_up(double x) { return static_cast<std::int64_t>(std::floor(x + 0.5)); }

std::int64_t ScheduleConfig::resolved_final_anneal_steps() const {
    if (final_anneal_steps >= 0) return final_anneal_steps;
    return round_half_up(kFinalAnnealTokens / static_cast<double>(tokens_per_step));
}

void ScheduleConfig::validate() const {
    const auto bad = [](const char* what) { throw Error(ErrorCode::ConfigError, what); };
    if (!(peak_lr > 0.0) || !std::isfinite(peak_lr)) bad("peak_lr must be > 0");
    if (main_steps <= 0) bad("main_steps must be > 0");
    if (tokens_per_step <= 0) bad("tokens_per_step must be > 0");
    if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0) || !(decay_frac >= 0.0 && decay_frac <= 1.0)) {
        bad("warmup_frac and decay_frac must lie in [0, 1]");
    }
    if (warmup_frac + decay_frac > 1.0) bad("warmup_frac + decay_frac must be <= 1");
    if (!(decay_floor_ratio >= 0.0 && decay_floor_ratio <= 1.0)) bad("decay_floor_ratio must lie in [0, 1]");
}

std::string_view schedule_phase_name(SchedulePhase phase) {
    switch (phase) {
        case SchedulePhase::Warmup: return "WARMUP";
        case SchedulePhase::Stable: return "STABLE";
        case SchedulePhase::Decay: return "DECAY";
        case SchedulePhase::FinalAnneal: return "FINAL_ANNEAL";
        case SchedulePhase::Done: return "DONE";
    }
    return "DONE";
}

PhaseBoundaries phase_boundaries(const ScheduleConfig& cfg) {
    cfg.validate();
    const auto steps = static_cast<double>(cfg.main_steps);
    PhaseBoundaries b{};
    b.warmup_end = round_half_up(cfg.warmup_frac * steps);
    b.stable_end = round_half_up((1.0 - cfg.decay_frac) * steps);
    b.decay_end = cfg.main_steps;
    b.final_end = cfg.main_steps + cfg.resolved_final_anneal_steps();
    if (b.stable_end < b.warmup_end) b.stable_end = b.warmup_end;
    return b;
}

namespace {

double ramp(double from, double to, std::int64_t step, std::int64_t begin, std::int64_t end) {
    const double t = static_cast<double>(step - begin) / static_cast<double>(end - begin);
    return std::lerp(from, to, t);
}

LrPoint lr_at_bounded(const ScheduleConfig& cfg, const PhaseBoundaries& b, std::int64_t step) {
    if (step < 0 || step > b.final_end) {
        throw Error(ErrorCode::StepOutOfRange, "step " + std::to_string(step) + " outside [0, " +
                                                   std::to_string(b.final_end) + "]");
    }
    const double peak = cfg.peak_lr;
    const double floor = cfg.floor_lr();
    if (step <= b.warmup_end && b.warmup_end > 0) {
        return {step, ramp(0.0, peak, step, 0, b.warmup_end), SchedulePhase::Warmup};
    }
    if (step <= b.stable_end) return {step, peak, SchedulePhase::Stable};
    if (step <= b.decay_end) return {step, ramp(peak, floor, step, b.stable_end, b.decay_end), SchedulePhase::Decay};
    if (step == b.final_end) return {step, 0.0, SchedulePhase::Done};
    return {step, ramp(floor, 0.0, step, b.decay_end, b.final_end), SchedulePhase::FinalAnneal};
}

}  // namespace

LrPoint lr_at(const ScheduleConfig& cfg, std::int64_t step) {
    return lr_at_bounded(cfg, phase_boundaries(cfg), step);
}

std::vector<LrPoint> emit_schedule(const ScheduleConfig& cfg, std::int64_t sample_every) {
    if (sample_every < 1) throw Error(ErrorCode::ConfigError, "sample_every must be >= 1");
    const PhaseBoundaries b = phase_boundaries(cfg);
    std::vector<LrPoint> points;
    points.reserve(static_cast<std::size_t>(b.final_end / sample_every + 2));
    for (std::int64_t step = 0; step <= b.final_end; step += sample_every) {
        points.push_back(lr_at_bounded(cfg, b, step));
    }
    if (points.back().step != b.final_end) points.push_back(lr_at_bounded(cfg, b, b.final_end));
    return points;
}

std::string schedule_tsv(const std::vector<LrPoint>& points) {
    std::ostringstream os;
    os << "step\tlr\tphase\n";
    for (const auto& p : points) os << p.step << '\t' << detail::format_double(p.lr) << '\t' << schedule_phase_name(p.phase) << '\n';
    return os.str();
}

}  // namespace corpus_forge
