#include "corpus_forge/sft_templates.hpp"

#include <algorithm>
#include <array>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "corpus_forge/error.hpp"
#include "corpus_forge/hash.hpp"
#include "corpus_forge/unicode.hpp"
#include "embedded_templates.hpp"

namespace corpus_forge {
namespace {

constexpr std::array<std::pair<Category, std::string_view>, 9> kCategoryNames{{
    {Category::ProblemSolving, "Problem Solving"},
    {Category::CreativeTasks, "Creative Tasks"},
    {Category::InformationProcessing, "Information Processing"},
    {Category::QuestionAnswering, "Question Answering"},
    {Category::TextTransformation, "Text Transformation"},
    {Category::RoleplayAndSimulation, "Roleplay and Simulation"},
    {Category::Advisory, "Advisory"},
    {Category::DomainSpecificKnowledge, "Domain-Specific Knowledge"},
    {Category::GeneralMiscellaneous, "General / Miscellaneous"},
}};

// Sub-items listed under each category, lowercase.
const std::map<std::string, Category, std::less<>>& sub_items() {
    static const std::map<std::string, Category, std::less<>> items{
        {"coding", Category::ProblemSolving},
        {"mathematical reasoning", Category::ProblemSolving},
        {"knowledge and reasoning", Category::ProblemSolving},
        {"creative writing", Category::CreativeTasks},
        {"brainstorming", Category::CreativeTasks},
        {"summarization", Category::InformationProcessing},
        {"extraction", Category::InformationProcessing},
        {"classification", Category::InformationProcessing},
        {"translation", Category::InformationProcessing},
        {"open-ended", Category::QuestionAnswering},
        {"closed-ended", Category::QuestionAnswering},
        {"multiple choice", Category::QuestionAnswering},
        {"rewriting", Category::TextTransformation},
        {"inhabiting a character/persona", Category::RoleplayAndSimulation},
        {"roleplay", Category::RoleplayAndSimulation},
        {"asking for advice", Category::Advisory},
        {"humanity, history, and social studies", Category::DomainSpecificKnowledge},
        {"humanity", Category::DomainSpecificKnowledge},
        {"history", Category::DomainSpecificKnowledge},
        {"social studies", Category::DomainSpecificKnowledge},
        {"other", Category::DomainSpecificKnowledge},
        {"general", Category::GeneralMiscellaneous},
        {"miscellaneous", Category::GeneralMiscellaneous},
        {"general/miscellaneous", Category::GeneralMiscellaneous},
    };
    return items;
}

std::string_view trim(std::string_view s) {
    const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
    return s;
}

std::optional<Category> match_exact(std::string_view lowered) {
    for (const auto& [cat, name] : kCategoryNames) {
        if (unicode::fold_case(name) == lowered) return cat;
    }
    if (const auto it = sub_items().find(lowered); it != sub_items().end()) return it->second;
    return std::nullopt;
}

constexpr std::array<std::string_view, 3> kLabels{"Summary:", "Instruction:", "Category:"};

}  // namespace

const std::vector<Category>& all_categories() {
    static const std::vector<Category> cats = [] {
        std::vector<Category> v;
        for (const auto& [c, n] : kCategoryNames) v.push_back(c);
        return v;
    }();
    return cats;
}

std::string_view category_name(Category category) {
    for (const auto& [c, n] : kCategoryNames) {
        if (c == category) return n;
    }
    return "General / Miscellaneous";
}

std::optional<Category> parse_category(std::string_view text) {
    std::string_view s = trim(text);
    // "7. Advisory", "7) Advisory"
    std::size_t digits = 0;
    while (digits < s.size() && s[digits] >= '0' && s[digits] <= '9') ++digits;
    if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')')) s = trim(s.substr(digits + 1));
    while (!s.empty() && (s.front() == '<' || s.front() == '*' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == '>' || s.back() == '*' || s.back() == '"' || s.back() == '.')) s.remove_suffix(1);
    s = trim(s);
    if (s.empty()) return std::nullopt;

    const std::string lowered = unicode::fold_case(s);
    if (auto c = match_exact(lowered)) return c;
    // "Problem Solving: Coding" or "Coding (Problem Solving)"
    if (const auto colon = lowered.find(':'); colon != std::string::npos) {
        if (auto c = match_exact(std::string(trim(std::string_view(lowered).substr(0, colon))))) return c;
        if (auto c = match_exact(std::string(trim(std::string_view(lowered).substr(colon + 1))))) return c;
    }
    if (const auto paren = lowered.find('('); paren != std::string::npos) {
        if (auto c = match_exact(std::string(trim(std::string_view(lowered).substr(0, paren))))) return c;
    }
    return std::nullopt;
}

std::string_view instruction_template() { return detail::kInstructionTemplate; }
std::string_view answer_template() { return detail::kAnswerTemplate; }

std::string template_digest(std::string_view tmpl) {
    const Hash128 h = murmur3_128(tmpl);
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << h.hi << std::setw(16) << h.lo;
    return os.str();
}

std::string fill_placeholders(std::string_view tmpl,
                              const std::vector<std::pair<std::string, std::string>>& values) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const std::size_t open = tmpl.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const std::size_t close = tmpl.find('}', open);
        bool replaced = false;
        if (close != std::string_view::npos) {
            const std::string_view name = tmpl.substr(open + 1, close - open - 1);
            for (const auto& [key, value] : values) {
                if (key == name) {
                    out.append(value);
                    pos = close + 1;
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) {
            out.push_back('{');
            pos = open + 1;
        }
    }
    return out;
}

std::string render_instruction_prompt(const InstructionPromptInput& input) {
    const auto category = parse_category(input.category);
    if (!category || unicode::fold_case(trim(input.category)) != unicode::fold_case(category_name(*category))) {
        throw Error(ErrorCode::InvalidCategory, "'" + input.category + "' is not one of the instruction categories");
    }
    if (input.language.empty()) throw Error(ErrorCode::ConfigError, "language name must be nonempty");
    return fill_placeholders(instruction_template(), {{"language", input.language},
                                                      {"text", input.text},
                                                      {"category", std::string(category_name(*category))}});
}

std::string render_answer_prompt(std::string_view language, std::string_view document, std::string_view instruction) {
    if (trim(instruction).empty()) throw Error(ErrorCode::EmptyInstruction, "instruction must be nonempty");
    if (language.empty()) throw Error(ErrorCode::ConfigError, "language name must be nonempty");
    return fill_placeholders(answer_template(), {{"language", std::string(language)},
                                                 {"document", std::string(document)},
                                                 {"instruction", std::string(instruction)}});
}

ParsedInstruction parse_instruction_response(std::string_view raw) {
    std::array<std::optional<std::string>, 3> fields;
    int current = -1;
    std::string body;
    const auto flush = [&] {
        if (current >= 0 && !fields[static_cast<std::size_t>(current)]) {
            fields[static_cast<std::size_t>(current)] = std::string(trim(body));
        }
        body.clear();
    };

    std::size_t pos = 0;
    while (pos <= raw.size()) {
        const std::size_t nl = raw.find('\n', pos);
        const std::string_view line = raw.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        std::string_view lead = line;
        while (!lead.empty() && (lead.front() == ' ' || lead.front() == '\t')) lead.remove_prefix(1);
        int label = -1;
        for (std::size_t i = 0; i < kLabels.size(); ++i) {
            if (lead.starts_with(kLabels[i])) label = static_cast<int>(i);
        }
        if (label >= 0) {
            flush();
            current = label;
            body.assign(lead.substr(kLabels[static_cast<std::size_t>(label)].size()));
        } else if (current >= 0) {
            body.push_back('\n');
            body.append(line);
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    flush();

    for (std::size_t i = 0; i < kLabels.size(); ++i) {
        if (!fields[i]) {
            throw Error(ErrorCode::ParseError, "response lacks the '" + std::string(kLabels[i]) + "' label");
        }
    }
    if (fields[1]->empty()) throw Error(ErrorCode::ParseError, "instruction field is empty");
    ParsedInstruction out;
    out.summary = std::move(*fields[0]);
    out.instruction = std::move(*fields[1]);
    out.category_text = std::move(*fields[2]);
    const std::string_view first_line = std::string_view(out.category_text).substr(0, out.category_text.find('\n'));
    const auto cat = parse_category(first_line);
    if (!cat) throw Error(ErrorCode::InvalidCategory, "unrecognized category '" + out.category_text + "'");
    out.category = *cat;
    return out;
}

std::string format_instruction_response(std::string_view summary, std::string_view instruction, Category category) {
    std::string out = "Summary: ";
    out.append(summary);
    out.append("\n\nInstruction: ");
    out.append(instruction);
    out.append("\n\nCategory: ");
    out.append(category_name(category));
    out.push_back('\n');
    return out;
}

std::string language_display_name(std::string_view tag) {
    static const std::map<std::string, std::string, std::less<>> names{
        {"ar", "Arabic"},     {"bg", "Bulgarian"}, {"ca", "Catalan"},    {"cs", "Czech"},
        {"da", "Danish"},     {"de", "German"},    {"el", "Greek"},      {"en", "English"},
        {"es", "Spanish"},    {"et", "Estonian"},  {"fi", "Finnish"},    {"fr", "French"},
        {"ga", "Irish"},      {"gl", "Galician"},  {"hi", "Hindi"},      {"hr", "Croatian"},
        {"hu", "Hungarian"},  {"it", "Italian"},   {"ja", "Japanese"},   {"ko", "Korean"},
        {"lt", "Lithuanian"}, {"lv", "Latvian"},   {"mt", "Maltese"},    {"nl", "Dutch"},
        {"no", "Norwegian"},  {"pl", "Polish"},    {"pt", "Portuguese"}, {"ro", "Romanian"},
        {"ru", "Russian"},    {"sk", "Slovak"},    {"sl", "Slovenian"},  {"sv", "Swedish"},
        {"tr", "Turkish"},    {"uk", "Ukrainian"}, {"zh", "Chinese"},
    };
    const auto it = names.find(tag);
    return it == names.end() ? std::string(tag) : it->second;
}

std::string SftRecord::to_json_line() const {
    nlohmann::ordered_json j = {{"language", language}, {"document_id", document_id}, {"summary", summary},
                                {"instruction", instruction}, {"category", category}};
    j["answer"] = answer ? nlohmann::ordered_json(*answer) : nlohmann::ordered_json(nullptr);
    return j.dump();
}

SftRecord SftRecord::from_json_line(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        SftRecord r;
        r.language = j.at("language").get<std::string>();
        r.document_id = j.at("document_id").get<std::string>();
        r.summary = j.value("summary", "");
        r.instruction = j.at("instruction").get<std::string>();
        r.category = j.value("category", "");
        if (j.contains("answer") && !j["answer"].is_null()) r.answer = j["answer"].get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("bad SFT record: ") + e.what());
    }
}

}  // namespace corpus_forge
