#include <doctest.h>

#include <random>

#include "bpe_train.hpp"
#include "corpus_forge/bpe.hpp"
#include "corpus_forge/error.hpp"
#include "oracles.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace corpus_forge;

namespace {

BpeVocab to_vocab(const oracle::Vocab& v) { return BpeVocab(v.pieces, v.merges); }

std::vector<Document> as_docs(const std::vector<std::string>& texts) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < texts.size(); ++i) docs.push_back({std::to_string(i), texts[i], "", {}, ""});
    return docs;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::ConfigError;
}

const std::string kMarker = "\xE2\x96\x81";

}  // namespace

TEST_SUITE("bpe") {
    TEST_CASE("documented encoding examples") {
        const BpeVocab v({"a", "b", "c", "ab", "abc"}, {{"a", "b"}, {"ab", "c"}});
        CHECK(v.size() == 261);
        CHECK(v.piece(0) == "<0x00>");
        CHECK(v.piece(255) == "<0xFF>");
        CHECK(bpe_encode(v, "abc") == std::vector<TokenId>{static_cast<TokenId>(v.find("abc"))});
        CHECK(bpe_encode(v, "abd") == std::vector<TokenId>{static_cast<TokenId>(v.find("ab")), 'd'});
        CHECK(bpe_encode(v, "").empty());
        // later words carry their separating space as a byte
        CHECK(bpe_encode(v, "abc abc") ==
              std::vector<TokenId>{static_cast<TokenId>(v.find("abc")), ' ', static_cast<TokenId>(v.find("abc"))});
        CHECK(bpe_decode(v, bpe_encode(v, "abc abd")) == "abc abd");
    }

    TEST_CASE("marker pieces") {
        const BpeVocab v({kMarker, "a", kMarker + "a", "b"}, {{kMarker, "a"}});
        const auto ma = static_cast<TokenId>(v.find(kMarker + "a"));
        CHECK(bpe_encode(v, "a a") == std::vector<TokenId>{ma, ma});
        CHECK(bpe_encode(v, "b") == std::vector<TokenId>{static_cast<TokenId>(v.find(kMarker)), static_cast<TokenId>(v.find("b"))});
        // a literal marker never merges and is emitted as bytes
        const auto lit = bpe_encode(v, kMarker + "a");
        CHECK(lit == std::vector<TokenId>{static_cast<TokenId>(v.find(kMarker)), 0xE2, 0x96, 0x81, static_cast<TokenId>(v.find("a"))});
        for (const std::string& s : std::vector<std::string>{"a a", " a", "  a  ", kMarker + "a", "a" + kMarker, "", " ", "b" + kMarker + kMarker}) {
            CAPTURE(s);
            CHECK(bpe_decode(v, bpe_encode(v, s)) == s);
        }
    }

    TEST_CASE("byte-only vocab encodes to the raw bytes") {
        const BpeVocab v({}, {});
        for (const std::string& s : std::vector<std::string>{"hello world", " lead", "naïve 中文", "\xFF\xC3 x", kMarker + " z"}) {
            const auto ids = bpe_encode(v, s);
            REQUIRE(ids.size() == s.size());
            for (std::size_t i = 0; i < s.size(); ++i) CHECK(ids[i] == static_cast<unsigned char>(s[i]));
            CHECK(bpe_decode(v, ids) == s);
        }
    }

    TEST_CASE("vocab validation") {
        CHECK(code_of([] { BpeVocab({"a", "a"}, {}); }) == ErrorCode::InvalidVocab);
        CHECK(code_of([] { BpeVocab({"a", ""}, {}); }) == ErrorCode::InvalidVocab);
        CHECK(code_of([] { BpeVocab({"a", "b"}, {{"a", "b"}}); }) == ErrorCode::InvalidVocab);
        CHECK(code_of([] { BpeVocab({"a", "ab"}, {{"a", "b"}}); }) == ErrorCode::InvalidVocab);
        CHECK(code_of([] { BpeVocab({"<0x41>"}, {}); }) == ErrorCode::InvalidVocab);
        CHECK(code_of([] { BpeVocab({"<0x41>a"}, {{"<0x41>", "a"}}); }) == ErrorCode::InvalidVocab);
    }

    TEST_CASE("vocab files") {
        testutil::TempDir dir("cf-vocab");
        const BpeVocab v({kMarker, "a", "b", kMarker + "a", "ab"}, {{kMarker, "a"}, {"a", "b"}});
        v.save_dir(dir.path());
        const auto back = BpeVocab::load_dir(dir.path());
        CHECK(back.pieces() == v.pieces());
        CHECK(back.merges() == v.merges());
        testutil::spit(dir / "bad/pieces.txt", "a\nb\n");
        testutil::spit(dir / "bad/merges.txt", "a b c\n");
        CHECK(code_of([&] { BpeVocab::load_dir(dir / "bad"); }) == ErrorCode::FormatError);
        CHECK(code_of([&] { BpeVocab::load_dir(dir / "missing"); }) == ErrorCode::IoError);
    }

    TEST_CASE("encoder matches the naive merge oracle on random vocabs") {
        synth::Rng rng(101);
        for (int t = 0; t < 300; ++t) {
            const auto ov = synth::random_vocab(rng);
            const auto v = to_vocab(ov);
            for (int k = 0; k < 5; ++k) {
                const std::string s = synth::random_bpe_input(rng);
                CAPTURE(s);
                REQUIRE(bpe_encode(v, s) == oracle::bpe_encode(ov, s));
                REQUIRE(bpe_decode(v, bpe_encode(v, s)) == s);
            }
        }
    }

    TEST_CASE("round trip on random unicode with a trained vocab") {
        auto langs = synth::languages(1);
        synth::Rng rng(5);
        std::vector<std::string> texts;
        for (auto& l : langs) texts.push_back(synth::text(l, rng, 3000));
        const auto ov = oracle::train_bpe(texts, 300);
        const auto v = to_vocab(ov);
        for (int t = 0; t < 300; ++t) {
            const std::string s = synth::random_unicode(rng);
            REQUIRE(bpe_decode(v, bpe_encode(v, s)) == s);
        }
        for (const auto& text : texts) {
            REQUIRE(bpe_encode(v, text) == oracle::bpe_encode(ov, text));
            REQUIRE(bpe_decode(v, bpe_encode(v, text)) == text);
        }
    }

    TEST_CASE("fertility arithmetic") {
        const BpeVocab bytes({}, {});
        CHECK(fertility(bytes, as_docs({"ab cde"})) == doctest::Approx(6.0 / 2.0));
        // two words, six tokens: the separating space is a byte token
        const BpeVocab v({"a", "b"}, {});
        CHECK(fertility(v, as_docs({"ab bab"})) == 3.0);
        CHECK(code_of([&] { fertility(v, as_docs({"", "..."})); }) == ErrorCode::EmptyCorpus);

        // every word one token
        std::vector<std::string> words{"river", "stone", "garden"};
        std::vector<std::string> text;
        for (int i = 0; i < 30; ++i) text.push_back(words[static_cast<std::size_t>(i) % 3] + " " + words[static_cast<std::size_t>(i * 7) % 3]);
        const auto trained = to_vocab(oracle::train_bpe(text, 100));
        CHECK(fertility(trained, as_docs(text)) == 1.0);
    }

    TEST_CASE("byte-only fertility equals bytes per word") {
        auto langs = synth::languages(2);
        synth::Rng rng(6);
        const BpeVocab bytes({}, {});
        for (auto& l : langs) {
            std::vector<std::string> texts;
            std::size_t total_bytes = 0, total_words = 0;
            for (int i = 0; i < 10; ++i) {
                texts.push_back(synth::text(l, rng, 200));
                total_bytes += texts.back().size();
                total_words += oracle::segment(texts.back()).size();
            }
            const auto t = fertility_totals(bytes, as_docs(texts));
            CHECK(t.tokens == total_bytes);
            CHECK(t.words == total_words);
        }
    }

    TEST_CASE("report rows, ranking and fingerprint") {
        auto langs = synth::languages(3);
        synth::Rng rng(7);
        LanguageCorpora corpora;
        std::vector<std::string> all;
        for (auto& l : langs) {
            for (int i = 0; i < 5; ++i) {
                corpora[l.tag].push_back({l.tag + std::to_string(i), synth::text(l, rng, 300), l.tag, {}, ""});
                all.push_back(corpora[l.tag].back().text);
            }
        }
        const auto small = to_vocab(oracle::train_bpe(all, 50));
        const auto large = to_vocab(oracle::train_bpe(all, 400));
        const auto report = fertility_report({{"small", &small}, {"large", &large}}, corpora);
        REQUIRE(report.rows.size() == 10);
        for (std::size_t i = 1; i < report.rows.size(); ++i) {
            const auto& a = report.rows[i - 1];
            const auto& b = report.rows[i];
            CHECK(std::tie(a.language, a.tokenizer) < std::tie(b.language, b.tokenizer));
        }
        for (const auto& r : report.rows) {
            CHECK(r.fertility == static_cast<double>(r.token_count) / static_cast<double>(r.word_count));
            CHECK(r.token_count >= r.word_count);
            const BpeVocab& v = r.tokenizer == "small" ? small : large;
            CHECK(r.fertility == fertility(v, corpora.at(r.language)));
        }
        for (const auto& [lang, names] : report.ranking) CHECK(names.front() == "large");
        const auto again = fertility_report({{"large", &large}}, corpora);
        CHECK(again.fingerprint_hex() == report.fingerprint_hex());
        CHECK(report.fingerprint_hex().size() == 32);
        CHECK(report.to_tsv().rfind("tokenizer\tlanguage\tfertility", 0) == 0);
        CHECK(report.to_table().find("corpus fingerprint") != std::string::npos);
        auto changed = corpora;
        changed["en"][0].text += " extra";
        CHECK(fertility_report({{"large", &large}}, changed).fingerprint_hex() != report.fingerprint_hex());
        CHECK(code_of([&] { fertility_report({}, corpora); }) == ErrorCode::EmptyCorpus);
    }

    TEST_CASE("appending merges never increases token counts") {
        synth::Rng rng(8);
        for (int t = 0; t < 50; ++t) {
            auto big = synth::random_vocab(rng, 60);
            oracle::Vocab small = big;
            small.merges.resize(big.merges.size() / 2);
            const BpeVocab vs = to_vocab(small), vb = to_vocab(big);
            for (int k = 0; k < 10; ++k) {
                const std::string s = synth::random_bpe_input(rng);
                REQUIRE(bpe_encode(vb, s).size() <= bpe_encode(vs, s).size());
            }
        }
    }
}
