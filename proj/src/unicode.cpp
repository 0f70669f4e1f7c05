#include "corpus_forge/unicode.hpp"

#include <clocale>
#include <cwctype>
#include <locale.h>
#include <stdexcept>
#include <wctype.h>

namespace corpus_forge::utf8 {

Decoded decode_at(std::string_view text, std::size_t pos) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
    const unsigned char lead = byte(pos);
    if (lead < 0x80) return {lead, 1, true};

    std::size_t need = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((lead & 0xE0) == 0xC0) {
        need = 1;
        cp = lead & 0x1F;
        min = 0x80;
    } else if ((lead & 0xF0) == 0xE0) {
        need = 2;
        cp = lead & 0x0F;
        min = 0x800;
    } else if ((lead & 0xF8) == 0xF0) {
        need = 3;
        cp = lead & 0x07;
        min = 0x10000;
    } else {
        return {kReplacement, 1, false};
    }
    if (pos + need >= text.size()) return {kReplacement, 1, false};
    for (std::size_t i = 1; i <= need; ++i) {
        const unsigned char b = byte(pos + i);
        if ((b & 0xC0) != 0x80) return {kReplacement, 1, false};
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        return {kReplacement, 1, false};
    }
    return {cp, need + 1, true};
}

std::u32string decode(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    for (std::size_t pos = 0; pos < text.size();) {
        const Decoded d = decode_at(text, pos);
        out.push_back(d.codepoint);
        pos += d.length;
    }
    return out;
}

void append(std::string& out, char32_t cp) {
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

std::string encode(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t cp : text) append(out, cp);
    return out;
}

std::size_t count_scalars(std::string_view text) {
    std::size_t n = 0;
    for (std::size_t pos = 0; pos < text.size(); ++n) {
        const auto lead = static_cast<unsigned char>(text[pos]);
        pos += lead < 0x80 ? 1 : decode_at(text, pos).length;
    }
    return n;
}

}  // namespace corpus_forge::utf8

namespace corpus_forge::unicode {
namespace {

locale_t utf8_locale() {
    static const locale_t loc = [] {
        locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
        if (l == static_cast<locale_t>(nullptr)) {
            l = newlocale(LC_CTYPE_MASK, "en_US.UTF-8", static_cast<locale_t>(nullptr));
        }
        if (l == static_cast<locale_t>(nullptr)) {
            throw std::runtime_error("no UTF-8 locale available for character classification");
        }
        return l;
    }();
    return loc;
}

bool is_ascii_letter(char32_t c) { return (c | 0x20) >= 'a' && (c | 0x20) <= 'z'; }

}  // namespace

bool is_space(char32_t c) {
    if (c < 0x80) return c == ' ' || (c >= '\t' && c <= '\r');
    if (c == 0x00A0 || c == 0x2007 || c == 0x202F || c == 0xFEFF) return true;
    return iswspace_l(static_cast<wint_t>(c), utf8_locale()) != 0;
}

bool is_letter(char32_t c) {
    if (c < 0x80) return is_ascii_letter(c);
    return iswalpha_l(static_cast<wint_t>(c), utf8_locale()) != 0;
}

bool is_upper(char32_t c) {
    if (c < 0x80) return c >= 'A' && c <= 'Z';
    return iswupper_l(static_cast<wint_t>(c), utf8_locale()) != 0;
}

bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

bool is_mark(char32_t c) {
    return (c >= 0x0300 && c <= 0x036F) || (c >= 0x0483 && c <= 0x0489) ||
           (c >= 0x0591 && c <= 0x05BD) || (c >= 0x064B && c <= 0x065F) ||
           (c >= 0x0900 && c <= 0x0903) || (c >= 0x093A && c <= 0x094F) ||
           (c >= 0x1AB0 && c <= 0x1AFF) || (c >= 0x1DC0 && c <= 0x1DFF) ||
           (c >= 0x20D0 && c <= 0x20FF) || (c >= 0x3099 && c <= 0x309A) ||
           (c >= 0xFE00 && c <= 0xFE0F) || (c >= 0xFE20 && c <= 0xFE2F) || c == 0x200D;
}

bool is_punct(char32_t c) {
    if (c < 0x80) return c > ' ' && c < 0x7F && !is_ascii_letter(c) && !is_digit(c);
    if (is_space(c) || is_mark(c)) return false;
    return iswalnum_l(static_cast<wint_t>(c), utf8_locale()) == 0;
}

bool is_word_break(char32_t c) {
    return c == 0x2013 || c == 0x2014 || c == 0x2015 || c == 0x2026;
}

char32_t to_lower(char32_t c) {
    if (c < 0x80) return (c >= 'A' && c <= 'Z') ? c + 0x20 : c;
    return static_cast<char32_t>(towlower_l(static_cast<wint_t>(c), utf8_locale()));
}

std::string fold_case(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t pos = 0; pos < text.size();) {
        const auto lead = static_cast<unsigned char>(text[pos]);
        if (lead < 0x80) {
            out.push_back(static_cast<char>(to_lower(lead)));
            ++pos;
            continue;
        }
        const utf8::Decoded d = utf8::decode_at(text, pos);
        if (d.valid) {
            utf8::append(out, to_lower(d.codepoint));
        } else {
            out.append(text.substr(pos, d.length));
        }
        pos += d.length;
    }
    return out;
}

}  // namespace corpus_forge::unicode
