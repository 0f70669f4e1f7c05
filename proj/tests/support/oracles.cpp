#include "oracles.hpp"

#include <algorithm>
#include <cwctype>
#include <locale.h>
#include <stdexcept>
#include <unordered_map>
#include <wctype.h>

namespace oracle {
namespace {

locale_t loc() {
    static locale_t l = [] {
        locale_t x = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
        if (!x) throw std::runtime_error("C.UTF-8 locale missing");
        return x;
    }();
    return l;
}

bool in(long c, long lo, long hi) { return c >= lo && c <= hi; }

// Unicode Table 3-7: (lead range, second-byte range) for multi-byte forms.
int sequence_length(const unsigned char* p, std::size_t avail) {
    const unsigned b0 = p[0];
    const auto cont = [&](std::size_t i, unsigned lo = 0x80, unsigned hi = 0xBF) {
        return i < avail && p[i] >= lo && p[i] <= hi;
    };
    if (b0 <= 0x7F) return 1;
    if (in(b0, 0xC2, 0xDF)) return cont(1) ? 2 : 0;
    if (b0 == 0xE0) return cont(1, 0xA0, 0xBF) && cont(2) ? 3 : 0;
    if (in(b0, 0xE1, 0xEC) || in(b0, 0xEE, 0xEF)) return cont(1) && cont(2) ? 3 : 0;
    if (b0 == 0xED) return cont(1, 0x80, 0x9F) && cont(2) ? 3 : 0;
    if (b0 == 0xF0) return cont(1, 0x90, 0xBF) && cont(2) && cont(3) ? 4 : 0;
    if (in(b0, 0xF1, 0xF3)) return cont(1) && cont(2) && cont(3) ? 4 : 0;
    if (b0 == 0xF4) return cont(1, 0x80, 0x8F) && cont(2) && cont(3) ? 4 : 0;
    return 0;
}

long decode(const unsigned char* p, int len) {
    if (len == 1) return p[0];
    long cp = p[0] & (0x7F >> len);
    for (int i = 1; i < len; ++i) cp = (cp << 6) | (p[i] & 0x3F);
    return cp;
}

bool is_space(long c) {
    if (c == ' ' || in(c, 0x09, 0x0D)) return true;
    static const long extra[] = {0x00A0, 0x1680, 0x2007, 0x2028, 0x2029, 0x202F, 0x205F, 0x3000, 0xFEFF};
    if (in(c, 0x2000, 0x200A)) return true;
    return std::find(std::begin(extra), std::end(extra), c) != std::end(extra);
}

bool is_break(long c) { return c == 0x2013 || c == 0x2014 || c == 0x2015 || c == 0x2026; }

bool is_wordlike(long c) {
    if (c < 0) return false;
    if (c < 0x80) return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    static const long marks[][2] = {{0x0300, 0x036F}, {0x0483, 0x0489}, {0x0591, 0x05BD}, {0x064B, 0x065F},
                                    {0x0900, 0x0903}, {0x093A, 0x094F}, {0x1AB0, 0x1AFF}, {0x1DC0, 0x1DFF},
                                    {0x20D0, 0x20FF}, {0x3099, 0x309A}, {0xFE00, 0xFE0F}, {0xFE20, 0xFE2F},
                                    {0x200D, 0x200D}};
    for (const auto& r : marks) {
        if (in(c, r[0], r[1])) return true;
    }
    if (is_space(c)) return false;
    return iswalnum_l(static_cast<wint_t>(c), loc()) != 0;
}

void append_utf8(std::string& out, long cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

}  // namespace

std::vector<Unit> utf8_units(std::string_view text) {
    std::vector<Unit> units;
    const auto* p = reinterpret_cast<const unsigned char*>(text.data());
    std::size_t i = 0;
    while (i < text.size()) {
        const int len = sequence_length(p + i, text.size() - i);
        if (len == 0) {
            units.push_back({-1, std::string(1, text[i])});
            ++i;
        } else {
            units.push_back({decode(p + i, len), std::string(text.substr(i, static_cast<std::size_t>(len)))});
            i += static_cast<std::size_t>(len);
        }
    }
    return units;
}

std::vector<std::string> segment(std::string_view text) {
    std::vector<std::vector<Unit>> runs(1);
    for (auto& u : utf8_units(text)) {
        if (is_space(u.codepoint) || is_break(u.codepoint)) {
            runs.emplace_back();
        } else {
            runs.back().push_back(std::move(u));
        }
    }
    std::vector<std::string> words;
    for (const auto& run : runs) {
        std::size_t b = 0;
        std::size_t e = run.size();
        while (b < e && !is_wordlike(run[b].codepoint)) ++b;
        while (e > b && !is_wordlike(run[e - 1].codepoint)) --e;
        if (b == e) continue;
        std::string w;
        for (std::size_t i = b; i < e; ++i) w += run[i].bytes;
        words.push_back(std::move(w));
    }
    return words;
}

std::string lowercase(std::string_view text) {
    std::string out;
    for (const auto& u : utf8_units(text)) {
        if (u.codepoint < 0) {
            out += u.bytes;
        } else if (u.codepoint < 0x80) {
            const long c = u.codepoint;
            out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c));
        } else {
            append_utf8(out, static_cast<long>(towlower_l(static_cast<wint_t>(u.codepoint), loc())));
        }
    }
    return out;
}

// ---- BPE ----

std::vector<std::uint32_t> bpe_encode(const Vocab& vocab, std::string_view text) {
    const std::string marker = "\xE2\x96\x81";
    std::map<std::string, std::uint32_t> ids;
    for (std::uint32_t i = 0; i < vocab.pieces.size(); ++i) ids.emplace(vocab.pieces[i], 256 + i);
    std::map<std::pair<std::string, std::string>, std::size_t> rank;
    for (std::size_t r = 0; r < vocab.merges.size(); ++r) rank.emplace(vocab.merges[r], r);

    struct Sym {
        std::string s;
        bool literal;
    };
    std::vector<std::vector<Sym>> chunks;
    if (!text.empty()) chunks.push_back({{marker, false}});
    for (const auto& u : utf8_units(text)) {
        if (u.bytes == " ") {
            chunks.push_back({{marker, false}});
        } else {
            chunks.back().push_back({u.bytes, u.bytes == marker});
        }
    }

    if (!chunks.empty() && !ids.count(marker)) chunks.front().erase(chunks.front().begin());

    std::vector<std::uint32_t> out;
    for (auto& syms : chunks) {
        while (true) {
            std::size_t best_rank = SIZE_MAX;
            std::size_t best_pos = 0;
            for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
                if (syms[i].literal || syms[i + 1].literal) continue;
                const auto it = rank.find({syms[i].s, syms[i + 1].s});
                if (it != rank.end() && it->second < best_rank) {
                    best_rank = it->second;
                    best_pos = i;
                }
            }
            if (best_rank == SIZE_MAX) break;
            syms[best_pos].s += syms[best_pos + 1].s;
            syms.erase(syms.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
        }
        for (const auto& sym : syms) {
            if (!sym.literal) {
                if (const auto it = ids.find(sym.s); it != ids.end()) {
                    out.push_back(it->second);
                    continue;
                }
            }
            std::string bytes = sym.s;
            if (!sym.literal && bytes == marker) bytes = " ";
            for (const unsigned char b : bytes) out.push_back(b);
        }
    }
    return out;
}

// ---- n-grams ----

std::map<std::vector<std::string>, std::uint64_t> ngram_counts(const std::vector<std::string>& texts, int order) {
    std::map<std::vector<std::string>, std::uint64_t> counts;
    for (const auto& text : texts) {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t nl = text.find('\n', pos);
            if (nl == std::string::npos) nl = text.size();
            std::vector<std::string> toks{"<s>"};
            for (const auto& w : segment(std::string_view(text).substr(pos, nl - pos))) toks.push_back(lowercase(w));
            pos = nl + 1;
            if (toks.size() == 1) continue;
            toks.push_back("</s>");
            for (std::size_t i = 0; i < toks.size(); ++i) {
                for (int k = 1; k <= order && i + static_cast<std::size_t>(k) <= toks.size(); ++k) {
                    std::vector<std::string> g(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                               toks.begin() + static_cast<std::ptrdiff_t>(i) + k);
                    if (g.size() == 1 && g[0] == "<s>") continue;
                    ++counts[g];
                }
            }
        }
    }
    return counts;
}

// ---- dedup ----

std::string normalize(std::string_view text) {
    std::string folded;
    for (const char c : lowercase(text)) {
        if (c < '0' || c > '9') folded.push_back(c);
    }
    std::string out;
    bool pending_space = false;
    for (const auto& u : utf8_units(folded)) {
        if (is_space(u.codepoint)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out += u.bytes;
    }
    return out;
}

std::size_t distinct_normalized(const std::vector<std::string>& texts) {
    std::set<std::string> seen;
    for (const auto& t : texts) seen.insert(normalize(t));
    return seen.size();
}

std::set<std::string> shingles(std::string_view text, std::size_t k) {
    std::vector<std::string> words;
    for (const auto& w : segment(text)) words.push_back(lowercase(w));
    std::set<std::string> out;
    const auto join = [&](std::size_t b, std::size_t e) {
        std::string s;
        for (std::size_t i = b; i < e; ++i) {
            if (i > b) s.push_back(' ');
            s += words[i];
        }
        return s;
    };
    if (words.size() < k) {
        out.insert(join(0, words.size()));
        return out;
    }
    for (std::size_t i = 0; i + k <= words.size(); ++i) out.insert(join(i, i + k));
    return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& s : a) inter += b.count(s);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

std::vector<double> max_jaccard_to_earlier(const std::vector<std::string>& texts, std::size_t k,
                                           const std::vector<bool>& active) {
    std::vector<std::set<std::string>> sets(texts.size());
    std::unordered_map<std::string, std::vector<std::size_t>> index;
    std::vector<double> best(texts.size(), 0.0);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        sets[i] = shingles(texts[i], k);
        std::set<std::size_t> candidates;
        for (const auto& s : sets[i]) {
            if (const auto it = index.find(s); it != index.end()) candidates.insert(it->second.begin(), it->second.end());
        }
        for (const std::size_t j : candidates) best[i] = std::max(best[i], jaccard(sets[i], sets[j]));
        if (!active[i]) continue;
        for (const auto& s : sets[i]) index[s].push_back(i);
    }
    return best;
}

// ---- schedule ----

double trapezoid_lr(double peak, double floor_ratio, long long warmup_end, long long stable_end, long long decay_end,
                    long long final_end, long long step) {
    const double floor = peak * floor_ratio;
    if (step <= warmup_end && warmup_end > 0) return peak * static_cast<double>(step) / static_cast<double>(warmup_end);
    if (step <= stable_end) return peak;
    if (step <= decay_end) {
        const double t = static_cast<double>(step - stable_end) / static_cast<double>(decay_end - stable_end);
        return peak + (floor - peak) * t;
    }
    if (step >= final_end) return 0.0;
    const double t = static_cast<double>(step - decay_end) / static_cast<double>(final_end - decay_end);
    return floor * (1.0 - t);
}

}  // namespace oracle
