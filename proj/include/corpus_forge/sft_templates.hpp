#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace corpus_forge {

enum class Category {
    ProblemSolving,
    CreativeTasks,
    InformationProcessing,
    QuestionAnswering,
    TextTransformation,
    RoleplayAndSimulation,
    Advisory,
    DomainSpecificKnowledge,
    GeneralMiscellaneous,
};

const std::vector<Category>& all_categories();
std::string_view category_name(Category category);
// Case-insensitive; accepts list numbering ("7. Advisory") and sub-items,
// which map to their parent ("Coding" -> Problem Solving).
std::optional<Category> parse_category(std::string_view text);

struct InstructionPromptInput {
    std::string language;  // display name, e.g. "German"
    std::string text;
    std::string category;
};

struct ParsedInstruction {
    std::string summary;
    std::string instruction;
    Category category = Category::GeneralMiscellaneous;
    std::string category_text;  // as written by the model
};

std::string_view instruction_template();
std::string_view answer_template();
// Hex MurmurHash3-128 of a template's bytes.
std::string template_digest(std::string_view tmpl);

// Replaces every "{name}" placeholder in one left-to-right pass; substituted
// values are never rescanned.
std::string fill_placeholders(std::string_view tmpl,
                              const std::vector<std::pair<std::string, std::string>>& values);

std::string render_instruction_prompt(const InstructionPromptInput& input);
std::string render_answer_prompt(std::string_view language, std::string_view document,
                                 std::string_view instruction);

ParsedInstruction parse_instruction_response(std::string_view raw);
// Inverse of parse for well-formed fields.
std::string format_instruction_response(std::string_view summary, std::string_view instruction,
                                        Category category);

// English display name for a language tag ("de" -> "German"); the tag itself
// when unknown.
std::string language_display_name(std::string_view tag);

struct SftRecord {
    std::string language;
    std::string document_id;
    std::string summary;
    std::string instruction;
    std::string category;
    std::optional<std::string> answer;

    bool operator==(const SftRecord&) const = default;
    std::string to_json_line() const;
    static SftRecord from_json_line(std::string_view line);
};

}  // namespace corpus_forge
