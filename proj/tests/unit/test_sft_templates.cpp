#include <doctest.h>

#include "corpus_forge/error.hpp"
#include "corpus_forge/sft_templates.hpp"
#include "test_util.hpp"

using namespace corpus_forge;

namespace {

ErrorCode parse_error_code(const std::string& raw) {
    try {
        parse_instruction_response(raw);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("parsed a malformed response");
    return ErrorCode::ConfigError;
}

}  // namespace

TEST_SUITE("sft_templates") {
    TEST_CASE("templates are pinned") {
        CHECK(template_digest(instruction_template()) == "0b1c2c1361f3fef45e533f2f50e76ca3");
        CHECK(template_digest(answer_template()) == "e38773d67d44e6274064c2192ea49bdd");
        CHECK(instruction_template().find("three-step analysis") != std::string_view::npos);
        CHECK(answer_template().find("cannot directly reference the document") != std::string_view::npos);
        CHECK(instruction_template() == testutil::slurp(std::filesystem::path(CF_TEMPLATE_DIR) / "instruction_prompt.txt"));
        CHECK(answer_template() == testutil::slurp(std::filesystem::path(CF_TEMPLATE_DIR) / "answer_prompt.txt"));
    }

    TEST_CASE("rendering") {
        const auto p = render_instruction_prompt({"German", "Ein kurzer Text über {text} Häfen.", "advisory"});
        CHECK(p.find("three-step analysis") != std::string::npos);
        CHECK(p.find("analyze the following German web document") != std::string::npos);
        CHECK(p.find("<document> Ein kurzer Text über {text} Häfen. <document/>") != std::string::npos);
        CHECK(p.find("falls into the Advisory category") != std::string::npos);
        CHECK(p.find("{language}") == std::string::npos);
        CHECK(p.find("{category}") == std::string::npos);

        const auto a = render_answer_prompt("French", "Le port {instruction}.", "Résumez le texte.");
        CHECK(a.find("cannot directly reference the document") != std::string::npos);
        CHECK(a.find("<document> Le port {instruction}. </document>") != std::string::npos);
        CHECK(a.find("<instruction> Résumez le texte. </instruction>") != std::string::npos);
        CHECK(a.find("response should also be in French") != std::string::npos);

        CHECK_THROWS_AS(render_instruction_prompt({"German", "t", "Sports"}), Error);
        CHECK_THROWS_AS(render_instruction_prompt({"German", "t", "Coding"}), Error);
        try {
            render_answer_prompt("French", "doc", "  \n");
            FAIL("expected");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptyInstruction);
        }
    }

    TEST_CASE("placeholder filling is single pass") {
        CHECK(fill_placeholders("{a}-{b}", {{"a", "{b}"}, {"b", "x"}}) == "{b}-x");
        CHECK(fill_placeholders("{unknown} {a", {{"a", "1"}}) == "{unknown} {a");
        CHECK(fill_placeholders("{{a}}", {{"a", "1"}}) == "{1}");
        CHECK(fill_placeholders("", {}).empty());
    }

    TEST_CASE("categories") {
        CHECK(all_categories().size() == 9);
        CHECK(category_name(Category::GeneralMiscellaneous) == "General / Miscellaneous");
        CHECK(category_name(Category::DomainSpecificKnowledge) == "Domain-Specific Knowledge");
        for (const auto c : all_categories()) CHECK(parse_category(category_name(c)) == c);
        CHECK(parse_category("7. Advisory") == Category::Advisory);
        CHECK(parse_category("coding") == Category::ProblemSolving);
        CHECK(parse_category("Problem Solving: Coding") == Category::ProblemSolving);
        CHECK(parse_category("<Roleplay and Simulation>") == Category::RoleplayAndSimulation);
        CHECK(parse_category("**question answering**") == Category::QuestionAnswering);
        CHECK_FALSE(parse_category("Sports").has_value());
        CHECK_FALSE(parse_category("").has_value());
        CHECK(language_display_name("de") == "German");
        CHECK(language_display_name("xx") == "xx");
    }

    TEST_CASE("well-formed fixtures round trip byte-exactly") {
        const auto cases = testutil::read_jsonl(testutil::data_path("sft_wellformed.jsonl"));
        REQUIRE(cases.size() == 50);
        for (const auto& c : cases) {
            const std::string raw = c.at("response");
            CAPTURE(raw);
            const auto p = parse_instruction_response(raw);
            CHECK(p.summary == c.at("summary").get<std::string>());
            CHECK(p.instruction == c.at("instruction").get<std::string>());
            CHECK(category_name(p.category) == c.at("category").get<std::string>());
            CHECK(format_instruction_response(p.summary, p.instruction, p.category) == raw);
        }
    }

    TEST_CASE("malformed fixtures are rejected") {
        const auto cases = testutil::read_jsonl(testutil::data_path("sft_malformed.jsonl"));
        REQUIRE(cases.size() >= 10);
        for (const auto& c : cases) {
            const std::string raw = c.at("response");
            CAPTURE(raw);
            CHECK(error_code_name(parse_error_code(raw)) == c.at("error").get<std::string>());
        }
    }

    TEST_CASE("tolerant parsing of model output") {
        const auto p = parse_instruction_response("Some preamble\nSummary: a b\n  Instruction: line one\nline two\n\n"
                                                  "Category: 3. Information Processing\nextra trailing text");
        CHECK(p.summary == "a b");
        CHECK(p.instruction == "line one\nline two");
        CHECK(p.category == Category::InformationProcessing);
        const auto dup = parse_instruction_response("Summary: s\nInstruction: first\nCategory: Advisory\nInstruction: second");
        CHECK(dup.instruction == "first");
    }

    TEST_CASE("sft record json") {
        SftRecord r{"de", "doc-1", "sum", "instr \"quoted\"\n", "Advisory", std::nullopt};
        CHECK(SftRecord::from_json_line(r.to_json_line()) == r);
        r.answer = "antwort";
        CHECK(SftRecord::from_json_line(r.to_json_line()) == r);
        CHECK(r.to_json_line().rfind("{\"language\":\"de\",\"document_id\":\"doc-1\"", 0) == 0);
        CHECK_THROWS_AS(SftRecord::from_json_line("{\"language\":1}"), Error);
        CHECK_THROWS_AS(SftRecord::from_json_line("nope"), Error);
    }
}
