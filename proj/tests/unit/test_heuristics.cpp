#include <doctest.h>

#include <cctype>
#include <cmath>
#include <random>

#include "corpus_forge/error.hpp"
#include "corpus_forge/heuristics.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace corpus_forge;

namespace {

Document doc(std::string text) { return Document{"d", std::move(text), "en", {}, ""}; }

std::string prose(std::size_t n) {
    std::string s;
    while (s.size() < n) s += "quiet river stones ";
    s.resize(n);
    if (s.back() == ' ') s.back() = 'x';
    return s;
}

}  // namespace

TEST_SUITE("heuristics") {
    TEST_CASE("hand-labeled fixture reproduces every verdict") {
        const HeuristicConfig cfg;
        const auto cases = testutil::read_jsonl(testutil::data_path("heuristics_fixture.jsonl"));
        REQUIRE(cases.size() == 20);
        for (const auto& c : cases) {
            const Document d{c.at("id").get<std::string>(), c.at("text").get<std::string>(), "en", {}, ""};
            CAPTURE(d.id);
            const auto [verdict, cleaned] = apply_heuristics(d, cfg);
            if (c.at("expect") == "pass") {
                CHECK(verdict.passed);
                CHECK(cleaned.text == c.value("cleaned", d.text));
            } else {
                CHECK_FALSE(verdict.passed);
                CHECK(reason_name(verdict.reason) == c.at("reason").get<std::string>());
            }
        }
    }

    TEST_CASE("length gate is strict at 200") {
        const HeuristicConfig cfg;
        CHECK(doc_length_gate(doc(prose(200)), cfg).passed);
        const auto v = doc_length_gate(doc(prose(199)), cfg);
        CHECK(v.reason == Reason::TooShort);
        CHECK(v.detail == 199.0);
        CHECK(doc_length_gate(doc(""), cfg).reason == Reason::TooShort);
    }

    TEST_CASE("banned content") {
        const HeuristicConfig cfg;
        CHECK(banned_content_gate(doc("...Lorem Ipsum dolor..."), cfg).reason == Reason::BannedPhrase);
        CHECK(banned_content_gate(doc("function f() { return 1 }"), cfg).reason == Reason::BannedPhrase);
        CHECK(banned_content_gate(doc("plain prose with no banned tokens"), cfg).passed);
        CHECK(banned_content_gate(doc("JAVASCRIPT"), cfg).reason == Reason::BannedPhrase);
        HeuristicConfig lax;
        lax.ban_curly_brackets = false;
        CHECK(banned_content_gate(doc("{ok}"), lax).passed);
    }

    TEST_CASE("paragraph ratios are strict") {
        const HeuristicConfig cfg;
        CHECK(paragraph_verdict("THIS IS ALL CAPS TEXT", cfg).reason == Reason::UppercaseRatio);
        CHECK(paragraph_verdict("ABcde ABcde", cfg).passed);       // 0.40
        CHECK_FALSE(paragraph_verdict("ABCde ABcde", cfg).passed);  // 0.50
        // 1 symbol / 10 words
        CHECK(paragraph_verdict("a b c d e f g h i j #", cfg).passed);
        CHECK(paragraph_verdict("a b c d e f g h i # #", cfg).reason == Reason::SymbolRatio);
        // 1 digit word / 5 words
        CHECK(paragraph_verdict("a b c d 1", cfg).passed);
        CHECK(paragraph_verdict("a b c 1 2", cfg).reason == Reason::NonalphaRatio);
        const auto v = paragraph_verdict("a b c 1 2", cfg);
        REQUIRE(v.detail.has_value());
        CHECK(*v.detail == doctest::Approx(0.4));
    }

    TEST_CASE("drop paragraph vs drop document") {
        HeuristicConfig cfg;
        const std::string good1 = prose(120);
        const std::string good2 = prose(130);
        const Document d = doc(good1 + "\nALL CAPS PARAGRAPH HERE\n" + good2);
        const auto r = paragraph_quality_gate(d, cfg);
        CHECK(r.verdict.passed);
        CHECK(r.paragraphs_removed == 1);
        CHECK(r.cleaned_text == good1 + "\n" + good2);
        const auto [v, cleaned] = apply_heuristics(d, cfg);
        CHECK(v.passed);
        CHECK(cleaned.text == good1 + "\n" + good2);

        cfg.paragraph_policy = ParagraphPolicy::DropDocument;
        const auto strict = apply_heuristics(d, cfg);
        CHECK(strict.first.reason == Reason::UppercaseRatio);
    }

    TEST_CASE("composition order and re-check after cleaning") {
        const HeuristicConfig cfg;
        CHECK(apply_heuristics(doc(prose(138) + " javascript"), cfg).first.reason == Reason::TooShort);
        const std::string clean = prose(500);
        const auto [v, out] = apply_heuristics(doc(clean), cfg);
        CHECK(v.passed);
        CHECK(out.text == clean);
        std::string caps;
        while (caps.size() < 300) caps += "LOUD WORDS ";
        CHECK(apply_heuristics(doc(caps + "\n" + prose(50)), cfg).first.reason == Reason::TooShort);
        // every paragraph removed: first triggered reason
        CHECK(apply_heuristics(doc(caps + "\n" + "a b 1 2 3 " + prose(10)), cfg).first.reason ==
              Reason::UppercaseRatio);
    }

    TEST_CASE("config validation") {
        HeuristicConfig cfg;
        cfg.max_uppercase_fraction = 1.5;
        CHECK_THROWS_AS(cfg.validate(), Error);
        cfg = {};
        cfg.max_symbol_to_word = -1;
        CHECK_THROWS_AS(cfg.validate(), Error);
        cfg = {};
        cfg.max_nonalpha_word_fraction = std::nan("");
        CHECK_THROWS_AS(cfg.validate(), Error);
        CHECK_NOTHROW(HeuristicConfig{}.validate());
    }

    TEST_CASE("idempotent, deterministic and monotone") {
        auto langs = synth::languages(3);
        std::mt19937_64 rng(4);
        std::uniform_int_distribution<int> kind(0, 4);
        const HeuristicConfig base;
        for (int t = 0; t < 300; ++t) {
            std::string text;
            const int paragraphs = 1 + t % 4;
            for (int p = 0; p < paragraphs; ++p) {
                std::string para = synth::text(langs[static_cast<std::size_t>(t) % langs.size()], rng, 40 + 60 * (t % 5));
                switch (kind(rng)) {
                    case 0:
                        for (auto& c : para) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
                        break;
                    case 1: para += " # ## 1999 2000 ..."; break;
                    default: break;
                }
                if (p) text += "\n";
                text += para;
            }
            const Document d = doc(text);
            const auto a = apply_heuristics(d, base);
            const auto b = apply_heuristics(d, base);
            REQUIRE(a.first == b.first);
            REQUIRE(a.second == b.second);
            if (a.first.passed) {
                const auto again = apply_heuristics(a.second, base);
                REQUIRE(again.first.passed);
                REQUIRE(again.second.text == a.second.text);
            } else {
                HeuristicConfig stricter = base;
                stricter.min_chars += 50;
                stricter.max_uppercase_fraction = 0.3;
                stricter.max_symbol_to_word = 0.05;
                stricter.max_nonalpha_word_fraction = 0.1;
                REQUIRE_FALSE(apply_heuristics(d, stricter).first.passed);
            }
        }
    }
}
