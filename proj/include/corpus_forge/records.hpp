#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "corpus_forge/corpus.hpp"

namespace corpus_forge {

// JSONL document records: {"id", "text", "lang", "scores", "source"}.
// Only "text" is required. Throws Error(FormatError).
Document parse_document_json(std::string_view line);
std::string document_to_json(const Document& doc);

inline constexpr std::string_view kPairTsvHeader = "src\ttgt\tsrc_lang\ttgt_lang\tbicleaner\tcometkiwi";

// TSV pair records. Text fields escape '\\', '\t', '\n' and '\r' with a
// backslash; empty score columns mean "absent".
SentencePair parse_pair_tsv(std::string_view line);
std::string pair_to_tsv(const SentencePair& pair);
std::string tsv_escape(std::string_view text);
std::string tsv_unescape(std::string_view text);

// Whole-file helpers; throw on the first malformed record.
std::vector<Document> read_documents(const std::filesystem::path& path);
void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs);
std::vector<SentencePair> read_pairs(const std::filesystem::path& path);
void write_pairs(const std::filesystem::path& path, const std::vector<SentencePair>& pairs);

// Lines of a file with any trailing '\r' removed; the final empty line after
// a terminating '\n' is not returned.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace corpus_forge
