#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace corpus_forge::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

struct Decoded {
    char32_t codepoint;
    std::size_t length;  // bytes consumed, always >= 1
    bool valid;
};

// Decodes the scalar starting at `pos`. Malformed sequences consume one byte
// and report U+FFFD with valid = false.
Decoded decode_at(std::string_view text, std::size_t pos);

std::u32string decode(std::string_view text);
void append(std::string& out, char32_t codepoint);
std::string encode(std::u32string_view text);
std::size_t count_scalars(std::string_view text);

}  // namespace corpus_forge::utf8

namespace corpus_forge::unicode {

bool is_space(char32_t c);
bool is_letter(char32_t c);
bool is_upper(char32_t c);
bool is_digit(char32_t c);
// Combining marks stay attached to the word they follow.
bool is_mark(char32_t c);
// Anything graphic that is neither a letter, digit nor mark.
bool is_punct(char32_t c);
// Punctuation that separates words even without surrounding whitespace
// (en/em dashes, horizontal bar, ellipsis).
bool is_word_break(char32_t c);
char32_t to_lower(char32_t c);

std::string fold_case(std::string_view text);

}  // namespace corpus_forge::unicode
