#include "corpus_forge/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "corpus_forge/error.hpp"
#include "format.hpp"

namespace corpus_forge {
namespace {

bool is_category_source(const std::string& s) {
    return s == kEnglishSource || s == kCodeMathSource || s == kParallelSource;
}

bool unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

constexpr double kShareSlack = 1e-12;

}  // namespace

void MixtureSpec::validate() const {
    if (!unit(english_share) || !unit(codemath_share) || (parallel_share && !unit(*parallel_share))) {
        throw Error(ErrorCode::ConfigError, "mixture shares must lie in [0, 1]");
    }
    const double fixed = english_share + codemath_share + parallel_share.value_or(0.0);
    if (fixed > 1.0 + kShareSlack) {
        throw Error(ErrorCode::ConfigError, "category shares sum to more than 1");
    }
    for (const auto& [k, v] : availability) {
        if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::ConfigError, "availability of '" + k + "' must be >= 0");
    }
    for (const auto& [k, v] : overrides) {
        if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::ConfigError, "override of '" + k + "' must be >= 0");
    }
    if (!(max_repetition >= 1.0)) throw Error(ErrorCode::ConfigError, "max_repetition must be >= 1");
}

double MixturePlan::share_sum() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.share;
    return s;
}

std::uint64_t MixturePlan::budget_sum() const {
    std::uint64_t s = 0;
    for (const auto& e : entries) s += e.budget_tokens;
    return s;
}

const PlanEntry* MixturePlan::find(std::string_view source) const {
    for (const auto& e : entries) {
        if (e.source == source) return &e;
    }
    return nullptr;
}

std::string MixturePlan::to_tsv() const {
    std::ostringstream os;
    os << "source\tshare\tbudget_tokens\trepetition\twarning\n";
    for (const auto& e : entries) {
        os << e.source << '\t' << detail::format_double(e.share) << '\t' << e.budget_tokens << '\t';
        if (e.repetition) os << detail::format_double(*e.repetition);
        os << '\t' << e.warning << '\n';
    }
    return os.str();
}

std::string MixturePlan::to_json() const {
    nlohmann::json j = {{"name", name},
                        {"phase", std::string(phase_name(phase))},
                        {"phase_total_tokens", phase_total_tokens},
                        {"sources", nlohmann::json::array()},
                        {"warnings", warnings}};
    std::map<std::string, double> weights;
    try {
        weights = sampling_weights(*this);
    } catch (const Error&) {
        weights.clear();
    }
    for (const auto& e : entries) {
        nlohmann::json s = {{"source", e.source}, {"share", e.share}, {"budget_tokens", e.budget_tokens}};
        s["availability"] = e.availability ? nlohmann::json(*e.availability) : nlohmann::json(nullptr);
        s["repetition"] = e.repetition ? nlohmann::json(*e.repetition) : nlohmann::json(nullptr);
        const auto w = weights.find(e.source);
        s["sampling_weight"] = w == weights.end() ? nlohmann::json(nullptr) : nlohmann::json(w->second);
        if (!e.warning.empty()) s["warning"] = e.warning;
        j["sources"].push_back(std::move(s));
    }
    return j.dump(2);
}

std::map<std::string, MixtureSpec> phase_presets() {
    const auto make = [](std::string name, Phase phase, double en, double cm,
                         std::optional<double> parallel = std::nullopt) {
        MixtureSpec s;
        s.name = std::move(name);
        s.phase = phase;
        s.english_share = en;
        s.codemath_share = cm;
        s.parallel_share = parallel;
        return s;
    };
    std::map<std::string, MixtureSpec> out;
    for (auto spec : {
             make("P1", Phase::P1, 0.50, 0.05),
             make("P2", Phase::P2, 0.325, 0.07),
             make("P3", Phase::P3, 0.325, 0.23),
             make("P2-v1", Phase::P2, 0.48, 0.07),
             make("P2-v2", Phase::P2, 0.40, 0.15),
             make("P2-v3", Phase::P2, 0.325, 0.07),
             make("P3-v1", Phase::P3, 0.30, 0.095),
             make("P3-v2", Phase::P3, 0.325, 0.23),
             make("P3-v3", Phase::P3, 0.325, 0.23, 0.02),
         }) {
        out.emplace(spec.name, spec);
    }
    return out;
}

MixtureSpec preset(const std::string& name) {
    const auto presets = phase_presets();
    const auto it = presets.find(name);
    if (it == presets.end()) throw Error(ErrorCode::ConfigError, "unknown mixture preset '" + name + "'");
    return it->second;
}

std::vector<std::uint64_t> largest_remainder(const std::vector<double>& shares, std::uint64_t total) {
    const long double sum = std::accumulate(shares.begin(), shares.end(), 0.0L);
    std::vector<std::uint64_t> out(shares.size(), 0);
    if (shares.empty()) return out;
    if (!(sum > 0.0L)) throw Error(ErrorCode::ConfigError, "cannot apportion with zero total share");

    std::vector<long double> fractional(shares.size());
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        const long double quota = static_cast<long double>(shares[i]) / sum * static_cast<long double>(total);
        const long double whole = std::floor(quota);
        out[i] = static_cast<std::uint64_t>(whole);
        fractional[i] = quota - whole;
        assigned += out[i];
    }
    std::vector<std::size_t> order(shares.size());
    std::iota(order.begin(), order.end(), 0);
    if (assigned <= total) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fractional[a] > fractional[b]; });
        for (std::uint64_t k = 0, left = total - assigned; k < left; ++k) ++out[order[k % order.size()]];
    } else {
        // rounding pushed the floors past the total: take back from the smallest remainders
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fractional[a] < fractional[b]; });
        for (std::uint64_t k = 0, extra = assigned - total; k < extra;) {
            const std::size_t i = order[k % order.size()];
            if (out[i] > 0) {
                --out[i];
                ++k;
            }
        }
    }
    return out;
}

MixturePlan plan_phase(const MixtureSpec& spec, std::uint64_t phase_total_tokens) {
    spec.validate();
    if (phase_total_tokens == 0) throw Error(ErrorCode::ConfigError, "phase_total_tokens must be > 0");

    const double fixed = spec.english_share + spec.codemath_share + spec.parallel_share.value_or(0.0);
    const double remainder = std::max(0.0, 1.0 - fixed);

    std::vector<std::string> languages;
    std::vector<double> weights;
    const auto& source_map = spec.overrides.empty() ? spec.availability : spec.overrides;
    for (const auto& [lang, v] : source_map) {
        if (is_category_source(lang)) continue;
        languages.push_back(lang);
        weights.push_back(v);
    }
    const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (remainder > kShareSlack && !(weight_sum > 0.0)) {
        throw Error(ErrorCode::ConfigError,
                    spec.overrides.empty() ? "availability is empty or all zero and no overrides given"
                                           : "overrides are all zero");
    }

    MixturePlan plan;
    plan.name = spec.name;
    plan.phase = spec.phase;
    plan.phase_total_tokens = phase_total_tokens;
    const auto add = [&](const std::string& source, double share) {
        PlanEntry e;
        e.source = source;
        e.share = share;
        if (const auto it = spec.availability.find(source); it != spec.availability.end()) e.availability = it->second;
        plan.entries.push_back(std::move(e));
    };
    add(std::string(kEnglishSource), spec.english_share);
    add(std::string(kCodeMathSource), spec.codemath_share);
    if (spec.parallel_share) add(std::string(kParallelSource), *spec.parallel_share);
    for (std::size_t i = 0; i < languages.size(); ++i) {
        add(languages[i], weight_sum > 0.0 ? remainder * weights[i] / weight_sum : 0.0);
    }

    std::vector<double> shares;
    for (const auto& e : plan.entries) shares.push_back(e.share);
    const auto budgets = largest_remainder(shares, phase_total_tokens);
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        PlanEntry& e = plan.entries[i];
        e.budget_tokens = budgets[i];
        if (!e.availability) continue;
        if (*e.availability > 0.0) {
            e.repetition = static_cast<double>(e.budget_tokens) / *e.availability;
            if (*e.repetition > spec.max_repetition) {
                std::ostringstream os;
                os << e.source << ": repetition " << std::setprecision(4) << *e.repetition << " exceeds max "
                   << spec.max_repetition;
                e.warning = os.str();
            }
        } else if (e.budget_tokens > 0) {
            e.warning = e.source + ": budget assigned but no tokens available";
        }
        if (!e.warning.empty()) plan.warnings.push_back(e.warning);
    }
    return plan;
}

std::map<std::string, double> sampling_weights(const MixturePlan& plan) {
    std::map<std::string, double> weights;
    double total = 0.0;
    for (const auto& e : plan.entries) {
        const double avail = e.availability.value_or(0.0);
        if (avail > 0.0) {
            const double w = e.share / avail;
            weights[e.source] = w;
            total += w;
        } else if (e.share > 0.0) {
            throw Error(ErrorCode::ZeroAvailability, "source '" + e.source + "' has a positive share but no tokens");
        }
    }
    if (total > 0.0) {
        for (auto& [source, w] : weights) w /= total;
    }
    return weights;
}

}  // namespace corpus_forge
