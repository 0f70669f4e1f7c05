#include "corpus_forge/corpus.hpp"

#include <array>
#include <utility>

#include "corpus_forge/unicode.hpp"

namespace corpus_forge {
namespace {

enum class CharClass { Space, Break, Punct, Word };

struct ClassifiedChar {
    CharClass cls;
    bool letter;
    bool upper;
    std::size_t length;
};

ClassifiedChar classify_at(std::string_view text, std::size_t pos) {
    const auto lead = static_cast<unsigned char>(text[pos]);
    if (lead < 0x80) {
        const char32_t c = lead;
        if (unicode::is_space(c)) return {CharClass::Space, false, false, 1};
        const bool letter = unicode::is_letter(c);
        if (letter) return {CharClass::Word, true, unicode::is_upper(c), 1};
        if (unicode::is_digit(c)) return {CharClass::Word, false, false, 1};
        return {CharClass::Punct, false, false, 1};
    }
    const utf8::Decoded d = utf8::decode_at(text, pos);
    const char32_t c = d.codepoint;
    if (!d.valid) return {CharClass::Punct, false, false, d.length};
    if (unicode::is_space(c)) return {CharClass::Space, false, false, d.length};
    if (unicode::is_word_break(c)) return {CharClass::Break, false, false, d.length};
    if (unicode::is_punct(c)) return {CharClass::Punct, false, false, d.length};
    const bool letter = unicode::is_letter(c);
    return {CharClass::Word, letter, letter && unicode::is_upper(c), d.length};
}

struct RunTally {
    std::size_t letters = 0;
    std::size_t uppercase = 0;
    std::size_t chars = 0;
    std::size_t punctuation_runs = 0;
};

// Calls on_word(word, has_letter) for each word in order.
template <typename OnWord>
RunTally scan_words(std::string_view text, OnWord&& on_word) {
    RunTally tally;
    std::size_t pos = 0;
    // Current run state: byte range of the run, and the byte range between the
    // first and last Word-class characters.
    bool in_run = false;
    bool prev_break = false;
    std::size_t word_begin = 0;
    std::size_t word_end = 0;
    bool run_has_word = false;
    bool run_has_letter = false;

    auto close_run = [&] {
        if (!in_run) return;
        if (run_has_word) {
            on_word(text.substr(word_begin, word_end - word_begin), run_has_letter);
        } else {
            ++tally.punctuation_runs;
        }
        in_run = false;
        run_has_word = false;
        run_has_letter = false;
    };

    while (pos < text.size()) {
        const ClassifiedChar cc = classify_at(text, pos);
        ++tally.chars;
        if (cc.letter) {
            ++tally.letters;
            if (cc.upper) ++tally.uppercase;
        }
        switch (cc.cls) {
            case CharClass::Space:
                close_run();
                prev_break = false;
                break;
            case CharClass::Break:
                close_run();
                if (!prev_break) ++tally.punctuation_runs;
                prev_break = true;
                break;
            case CharClass::Punct:
                if (!in_run) {
                    in_run = true;
                    word_begin = pos;
                }
                prev_break = false;
                break;
            case CharClass::Word:
                if (!in_run) in_run = true;
                if (!run_has_word) {
                    run_has_word = true;
                    word_begin = pos;
                }
                word_end = pos + cc.length;
                run_has_letter = run_has_letter || cc.letter;
                prev_break = false;
                break;
        }
        pos += cc.length;
    }
    close_run();
    return tally;
}

}  // namespace

std::string SentencePair::foreign_language() const {
    const bool src_en = src_lang == "en";
    const bool tgt_en = tgt_lang == "en";
    if (src_en == tgt_en) return {};
    return src_en ? tgt_lang : src_lang;
}

namespace {
constexpr std::array<std::pair<Reason, std::string_view>, 16> kReasonNames{{
    {Reason::None, "NONE"},
    {Reason::TooShort, "TOO_SHORT"},
    {Reason::BannedPhrase, "BANNED_PHRASE"},
    {Reason::UppercaseRatio, "UPPERCASE_RATIO"},
    {Reason::SymbolRatio, "SYMBOL_RATIO"},
    {Reason::NonalphaRatio, "NONALPHA_RATIO"},
    {Reason::Perplexity, "PERPLEXITY"},
    {Reason::Duplicate, "DUPLICATE"},
    {Reason::NearDuplicate, "NEAR_DUPLICATE"},
    {Reason::EduScore, "EDU_SCORE"},
    {Reason::Bicleaner, "BICLEANER"},
    {Reason::Cometkiwi, "COMETKIWI"},
    {Reason::LangMismatch, "LANG_MISMATCH"},
    {Reason::MissingScore, "MISSING_SCORE"},
    {Reason::NoBands, "NO_BANDS"},
    {Reason::InvalidRecord, "INVALID_RECORD"},
}};
}  // namespace

std::string_view reason_name(Reason reason) {
    for (const auto& [r, name] : kReasonNames) {
        if (r == reason) return name;
    }
    return "UNKNOWN";
}

std::optional<Reason> parse_reason(std::string_view name) {
    for (const auto& [r, n] : kReasonNames) {
        if (n == name) return r;
    }
    return std::nullopt;
}

Segmentation segment(std::string_view text) {
    Segmentation seg;
    const RunTally tally = scan_words(
        text, [&](std::string_view word, bool) { seg.words.emplace_back(word); });
    seg.punctuation_runs = tally.punctuation_runs;
    return seg;
}

std::vector<std::string> word_segment(std::string_view text) { return segment(text).words; }

std::size_t count_words(std::string_view text) {
    std::size_t n = 0;
    scan_words(text, [&](std::string_view, bool) { ++n; });
    return n;
}

std::vector<std::string_view> paragraph_split(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t nl = text.find('\n', start);
        const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
        if (end > start) out.push_back(text.substr(start, end - start));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return out;
}

std::size_t count_symbols(std::string_view text) {
    std::size_t n = 0;
    std::size_t dots = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '.') {
            ++dots;
            continue;
        }
        n += dots / 3;
        dots = 0;
        if (c == '#') {
            ++n;
        } else if (c == '\xE2' && i + 2 < text.size() && text[i + 1] == '\x80' &&
                   text[i + 2] == '\xA6') {
            ++n;
            i += 2;
        }
    }
    return n + dots / 3;
}

TextStats text_stats(std::string_view text) {
    std::size_t words = 0;
    std::size_t nonalpha = 0;
    const RunTally tally = scan_words(text, [&](std::string_view, bool has_letter) {
        ++words;
        if (!has_letter) ++nonalpha;
    });
    TextStats stats;
    stats.char_count = tally.chars;
    stats.word_count = words;
    stats.uppercase_fraction =
        tally.letters == 0 ? 0.0
                           : static_cast<double>(tally.uppercase) / static_cast<double>(tally.letters);
    if (words > 0) {
        stats.symbol_to_word =
            static_cast<double>(count_symbols(text)) / static_cast<double>(words);
        stats.nonalpha_word_fraction = static_cast<double>(nonalpha) / static_cast<double>(words);
    }
    return stats;
}

}  // namespace corpus_forge
