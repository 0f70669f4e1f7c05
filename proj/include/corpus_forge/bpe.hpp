#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corpus_forge/corpus.hpp"
#include "corpus_forge/hash.hpp"

namespace corpus_forge {

using TokenId = std::uint32_t;

// U+2581, prefixed to every space-delimited chunk.
inline constexpr std::string_view kWordBoundary = "\xE2\x96\x81";

/// BPE vocabulary with byte fallback. Ids 0..255 are the byte tokens
/// "<0x00>".."<0xFF>"; regular pieces follow in file order.
class BpeVocab {
public:
    BpeVocab() = default;
    BpeVocab(std::vector<std::string> pieces,
             std::vector<std::pair<std::string, std::string>> merges);

    // Pieces/merges files: one piece per line; "left right" per line.
    static BpeVocab load(const std::filesystem::path& pieces_file,
                         const std::filesystem::path& merges_file);
    // Directory holding pieces.txt and merges.txt.
    static BpeVocab load_dir(const std::filesystem::path& dir);
    void save_dir(const std::filesystem::path& dir) const;

    std::size_t size() const { return pieces_.size(); }
    const std::vector<std::string>& pieces() const { return pieces_; }
    const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }
    const std::string& piece(TokenId id) const { return pieces_.at(id); }

    // Piece id or -1.
    std::int64_t find(std::string_view piece) const;
    static TokenId byte_token(unsigned char b) { return b; }
    static bool is_byte_token(TokenId id) { return id < 256; }
    // Merge rank for (left, right) given as piece strings, or -1.
    std::int64_t merge_rank(std::string_view left, std::string_view right) const;

private:
    std::vector<std::string> pieces_;
    std::vector<std::pair<std::string, std::string>> merges_;
    std::unordered_map<std::string, TokenId> index_;
    std::unordered_map<std::string, std::uint32_t> ranks_;  // left '\0' right
};

/// Symbol sequence for one chunk before merging: the boundary marker and
/// each character. Literal U+2581 in the input is flagged so it is emitted
/// as bytes and never merged.
struct InitialSymbol {
    std::string text;
    bool literal_marker = false;
};

// Space-delimited chunks, each starting with the boundary marker.
std::vector<std::vector<InitialSymbol>> pretokenize(std::string_view text);

// The leading chunk's marker is dropped when the vocab has no bare marker
// piece, so a byte-only vocab encodes any text to exactly its bytes.
std::vector<TokenId> bpe_encode(const BpeVocab& vocab, std::string_view text);
// Inverse of bpe_encode: markers become spaces, and a leading space is
// removed when the first token is a regular piece.
std::string bpe_decode(const BpeVocab& vocab, const std::vector<TokenId>& ids);

struct FertilityTotals {
    std::uint64_t tokens = 0;
    std::uint64_t words = 0;
    double fertility() const;
};

FertilityTotals fertility_totals(const BpeVocab& vocab, const std::vector<Document>& corpus);
double fertility(const BpeVocab& vocab, const std::vector<Document>& corpus);

struct FertilityRow {
    std::string tokenizer;
    std::string language;
    double fertility = 0.0;
    std::uint64_t token_count = 0;
    std::uint64_t word_count = 0;
};

struct FertilityReport {
    std::vector<FertilityRow> rows;  // sorted by language, then tokenizer
    Hash128 corpus_fingerprint;
    // Tokenizer names per language, best (lowest fertility) first.
    std::map<std::string, std::vector<std::string>> ranking;

    std::string to_tsv() const;
    std::string to_table() const;
    std::string fingerprint_hex() const;
};

using NamedVocabs = std::vector<std::pair<std::string, const BpeVocab*>>;
using LanguageCorpora = std::map<std::string, std::vector<Document>>;

FertilityReport fertility_report(const NamedVocabs& vocabs, const LanguageCorpora& corpora);
Hash128 corpus_fingerprint(const LanguageCorpora& corpora);

}  // namespace corpus_forge
