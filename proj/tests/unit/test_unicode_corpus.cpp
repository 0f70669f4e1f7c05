#include <doctest.h>

#include <cmath>
#include <random>

#include "corpus_forge/corpus.hpp"
#include "corpus_forge/unicode.hpp"
#include "oracles.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace corpus_forge;

namespace {

std::string join_space(const std::vector<std::string>& words) {
    std::string s;
    for (const auto& w : words) {
        if (!s.empty()) s.push_back(' ');
        s += w;
    }
    return s;
}

// Alphabet mixing every character class the segmenter distinguishes.
std::string random_text(std::mt19937_64& rng) {
    static const std::vector<std::string> pieces{
        "a",  "Z",  "7",  "é",  "ß",  "中",  "Ж",  "\xCC\x81", " ",    "  ",   "\t",   "\n",      "\xC2\xA0",
        "\xE3\x80\x80",   ".",  ",",  "!",  "-",  "'",  "\"",       "#",    "...",  "\xE2\x80\xA6", "\xE2\x80\x94",
        "\xE2\x80\x93",   "(",  ")",  "\xF0\x9F\x98\x80", "\xFF",   "\xC3", "\xE2\x80\x8B", "\xF0\x9D\x90\x80"};
    std::uniform_int_distribution<std::size_t> len(0, 40), idx(0, pieces.size() - 1);
    std::string s;
    for (std::size_t n = len(rng); n > 0; --n) s += pieces[idx(rng)];
    return s;
}

}  // namespace

TEST_SUITE("unicode_corpus") {
    TEST_CASE("utf8 decoding rejects malformed forms one byte at a time") {
        const std::string bad = "\xC0\xAF" "\xED\xA0\x80" "\xF4\x90\x80\x80" "\xE2\x82";
        std::size_t pos = 0;
        std::size_t count = 0;
        while (pos < bad.size()) {
            const auto d = utf8::decode_at(bad, pos);
            CHECK_FALSE(d.valid);
            CHECK(d.codepoint == utf8::kReplacement);
            CHECK(d.length == 1);
            pos += d.length;
            ++count;
        }
        CHECK(count == bad.size());

        const auto d = utf8::decode_at("\xF0\x9F\x98\x80", 0);
        CHECK(d.valid);
        CHECK(d.codepoint == 0x1F600);
        CHECK(d.length == 4);
        CHECK(utf8::count_scalars("État") == 4);
        CHECK(utf8::encode(utf8::decode("naïve 中文")) == "naïve 中文");
    }

    TEST_CASE("decoder agrees with the table-driven oracle on random bytes") {
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<int> byte(0, 255), len(0, 24);
        for (int t = 0; t < 2000; ++t) {
            std::string s;
            for (int n = len(rng); n > 0; --n) s.push_back(static_cast<char>(byte(rng)));
            const auto units = oracle::utf8_units(s);
            std::size_t pos = 0;
            for (const auto& u : units) {
                const auto d = utf8::decode_at(s, pos);
                REQUIRE(d.length == u.bytes.size());
                REQUIRE(d.valid == (u.codepoint >= 0));
                if (d.valid) REQUIRE(static_cast<long>(d.codepoint) == u.codepoint);
                pos += d.length;
            }
            REQUIRE(pos == s.size());
        }
    }

    TEST_CASE("character classes") {
        CHECK(unicode::is_space(0x00A0));
        CHECK(unicode::is_space(0x3000));
        CHECK(unicode::is_space(0x2009));
        CHECK_FALSE(unicode::is_space(0x200B));
        CHECK(unicode::is_letter(U'é'));
        CHECK(unicode::is_letter(U'中'));
        CHECK(unicode::is_upper(U'É'));
        CHECK_FALSE(unicode::is_upper(U'é'));
        CHECK(unicode::is_mark(0x0301));
        CHECK(unicode::is_punct(U'#'));
        CHECK(unicode::is_punct(0x2014));
        CHECK(unicode::is_word_break(0x2026));
        CHECK_FALSE(unicode::is_word_break(U'-'));
        CHECK(unicode::fold_case("ÉTAT Straße ΣΟΦΊΑ") == "état straße σοφία");
    }

    TEST_CASE("segmenter fixture matches both the library and the reference segmenter") {
        const auto cases = testutil::read_jsonl(testutil::data_path("segmenter_fixture.jsonl"));
        REQUIRE(cases.size() == 50);
        for (const auto& c : cases) {
            const auto text = c.at("text").get<std::string>();
            const auto expected = c.at("words").get<std::vector<std::string>>();
            CAPTURE(text);
            CHECK(word_segment(text) == expected);
            CHECK(oracle::segment(text) == expected);
        }
    }

    TEST_CASE("documented segmentation examples") {
        CHECK(word_segment("hello world") == std::vector<std::string>{"hello", "world"});
        CHECK(word_segment("").empty());
        CHECK(word_segment("État—par exemple, 42.") == std::vector<std::string>{"État", "par", "exemple", "42"});
        const auto seg = segment("ok # … go !!");
        CHECK(seg.words == std::vector<std::string>{"ok", "go"});
        CHECK(seg.punctuation_runs == 3);
    }

    TEST_CASE("segmenter matches the reference on random text") {
        std::mt19937_64 rng(5);
        for (int t = 0; t < 3000; ++t) {
            const std::string s = random_text(rng);
            CAPTURE(s);
            REQUIRE(word_segment(s) == oracle::segment(s));
            REQUIRE(count_words(s) == oracle::segment(s).size());
        }
    }

    TEST_CASE("segmentation is idempotent under rejoining") {
        std::mt19937_64 rng(6);
        for (int t = 0; t < 1000; ++t) {
            const auto words = word_segment(random_text(rng));
            REQUIRE(word_segment(join_space(words)) == words);
        }
    }

    TEST_CASE("paragraph_split") {
        using V = std::vector<std::string_view>;
        CHECK(paragraph_split("a\n\nb") == V{"a", "b"});
        CHECK(paragraph_split("a\nb") == V{"a", "b"});
        CHECK(paragraph_split("\n\n").empty());
        CHECK(paragraph_split("").empty());
        CHECK(paragraph_split("\nx\n\n\ny\n") == V{"x", "y"});
        std::mt19937_64 rng(9);
        for (int t = 0; t < 500; ++t) {
            const std::string s = random_text(rng);
            std::size_t sum = 0;
            for (const auto p : paragraph_split(s)) {
                REQUIRE_FALSE(p.empty());
                REQUIRE(p.find('\n') == std::string_view::npos);
                sum += utf8::count_scalars(p);
            }
            REQUIRE(sum <= utf8::count_scalars(s));
        }
    }

    TEST_CASE("text_stats examples") {
        CHECK(text_stats("ABCd").uppercase_fraction == doctest::Approx(0.75));
        const auto s = text_stats("ok # … go");
        CHECK(s.word_count == 2);
        CHECK(s.symbol_to_word == doctest::Approx(1.0));
        CHECK(text_stats("123 456").nonalpha_word_fraction == doctest::Approx(1.0));
        const auto empty = text_stats("");
        CHECK(empty.word_count == 0);
        CHECK(empty.uppercase_fraction == 0.0);
        CHECK(empty.symbol_to_word == 0.0);
        CHECK(empty.nonalpha_word_fraction == 0.0);
        CHECK(text_stats("### ...").symbol_to_word == 0.0);  // no words
        CHECK(count_symbols("a...... b..") == 2);
        CHECK(count_symbols("#…#") == 3);
        CHECK(text_stats("naïve").char_count == 5);
    }

    TEST_CASE("text_stats fields stay finite and in range") {
        std::mt19937_64 rng(10);
        for (int t = 0; t < 2000; ++t) {
            const auto s = text_stats(random_text(rng));
            REQUIRE(std::isfinite(s.uppercase_fraction));
            REQUIRE(std::isfinite(s.symbol_to_word));
            REQUIRE(s.uppercase_fraction >= 0.0);
            REQUIRE(s.uppercase_fraction <= 1.0);
            REQUIRE(s.nonalpha_word_fraction >= 0.0);
            REQUIRE(s.nonalpha_word_fraction <= 1.0);
            REQUIRE(s.symbol_to_word >= 0.0);
        }
    }

    TEST_CASE("verdict and reason helpers") {
        CHECK(FilterVerdict::pass().passed);
        CHECK(FilterVerdict::pass().reason == Reason::None);
        CHECK_FALSE(FilterVerdict::pass().detail.has_value());
        CHECK(reason_name(Reason::TooShort) == "TOO_SHORT");
        CHECK(parse_reason("UPPERCASE_RATIO") == Reason::UppercaseRatio);
        CHECK_FALSE(parse_reason("nope").has_value());
        SentencePair p{"hi", "hallo", "en", "de", {}};
        CHECK(p.foreign_language() == "de");
        p.src_lang = "fr";
        CHECK(p.foreign_language().empty());
    }
}
