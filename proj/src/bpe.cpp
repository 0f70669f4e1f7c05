#include "corpus_forge/bpe.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <queue>
#include <tuple>
#include <sstream>
#include <unordered_set>

#include "corpus_forge/error.hpp"
#include "corpus_forge/unicode.hpp"

namespace corpus_forge {
namespace {

std::string byte_piece(unsigned b) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "<0x%02X>", b);
    return buf;
}

std::string merge_key(std::string_view left, std::string_view right) {
    std::string key;
    key.reserve(left.size() + right.size() + 1);
    key.append(left);
    key.push_back('\0');
    key.append(right);
    return key;
}

// Surface bytes of a (non-literal) symbol: boundary markers stand for spaces.
void append_surface(std::string& out, std::string_view piece) {
    std::size_t pos = 0;
    while (pos < piece.size()) {
        const std::size_t hit = piece.find(kWordBoundary, pos);
        if (hit == std::string_view::npos) {
            out.append(piece.substr(pos));
            break;
        }
        out.append(piece.substr(pos, hit - pos));
        out.push_back(' ');
        pos = hit + kWordBoundary.size();
    }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

BpeVocab::BpeVocab(std::vector<std::string> pieces,
                   std::vector<std::pair<std::string, std::string>> merges)
    : merges_(std::move(merges)) {
    pieces_.reserve(pieces.size() + 256);
    for (unsigned b = 0; b < 256; ++b) pieces_.push_back(byte_piece(b));
    for (auto& p : pieces) pieces_.push_back(std::move(p));

    for (TokenId id = 0; id < pieces_.size(); ++id) {
        if (pieces_[id].empty()) throw Error(ErrorCode::InvalidVocab, "empty piece at id " + std::to_string(id));
        if (!index_.emplace(pieces_[id], id).second) {
            throw Error(ErrorCode::InvalidVocab, "duplicate piece '" + pieces_[id] + "'");
        }
    }
    for (std::uint32_t rank = 0; rank < merges_.size(); ++rank) {
        const auto& [left, right] = merges_[rank];
        const std::string joined = left + right;
        if (!index_.contains(left) || !index_.contains(right) || !index_.contains(joined)) {
            throw Error(ErrorCode::InvalidVocab, "merge '" + left + " " + right + "' refers to a missing piece");
        }
        if (index_.at(joined) < 256 || index_.at(left) < 256 || index_.at(right) < 256) {
            throw Error(ErrorCode::InvalidVocab, "merge '" + left + " " + right + "' involves a byte token");
        }
        ranks_.emplace(merge_key(left, right), rank);
    }
}

BpeVocab BpeVocab::load(const std::filesystem::path& pieces_file, const std::filesystem::path& merges_file) {
    std::vector<std::string> pieces;
    for (auto& line : read_lines(pieces_file)) {
        if (!line.empty()) pieces.push_back(std::move(line));
    }
    std::vector<std::pair<std::string, std::string>> merges;
    std::size_t lineno = 0;
    for (const auto& line : read_lines(merges_file)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t sp = line.find(' ');
        if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size() || line.find(' ', sp + 1) != std::string::npos) {
            throw Error(ErrorCode::FormatError, merges_file.string() + ":" + std::to_string(lineno) + ": expected 'left right'");
        }
        merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
    }
    return BpeVocab(std::move(pieces), std::move(merges));
}

BpeVocab BpeVocab::load_dir(const std::filesystem::path& dir) {
    return load(dir / "pieces.txt", dir / "merges.txt");
}

void BpeVocab::save_dir(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream pieces(dir / "pieces.txt", std::ios::binary | std::ios::trunc);
    std::ofstream merges(dir / "merges.txt", std::ios::binary | std::ios::trunc);
    if (!pieces || !merges) throw Error(ErrorCode::IoError, "cannot write vocab to " + dir.string());
    for (std::size_t i = 256; i < pieces_.size(); ++i) pieces << pieces_[i] << '\n';
    for (const auto& [l, r] : merges_) merges << l << ' ' << r << '\n';
}

std::int64_t BpeVocab::find(std::string_view piece) const {
    const auto it = index_.find(std::string(piece));
    return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::int64_t BpeVocab::merge_rank(std::string_view left, std::string_view right) const {
    const auto it = ranks_.find(merge_key(left, right));
    return it == ranks_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::vector<std::vector<InitialSymbol>> pretokenize(std::string_view text) {
    std::vector<std::vector<InitialSymbol>> chunks;
    if (text.empty()) return chunks;
    chunks.emplace_back();
    chunks.back().push_back({std::string(kWordBoundary), false});
    for (std::size_t pos = 0; pos < text.size();) {
        if (text[pos] == ' ') {
            chunks.emplace_back();
            chunks.back().push_back({std::string(kWordBoundary), false});
            ++pos;
            continue;
        }
        const utf8::Decoded d = utf8::decode_at(text, pos);
        const std::string_view ch = text.substr(pos, d.length);
        chunks.back().push_back({std::string(ch), ch == kWordBoundary});
        pos += d.length;
    }
    return chunks;
}

namespace {

struct Symbol {
    std::string text;
    bool literal = false;
    int prev = -1;
    int next = -1;
    bool alive = true;
};

struct Candidate {
    std::int64_t rank;
    int left;
    std::size_t left_len;
    std::size_t right_len;
    // min-heap on (rank, left position)
    bool operator>(const Candidate& o) const {
        return rank != o.rank ? rank > o.rank : left > o.left;
    }
};

void encode_chunk(const BpeVocab& vocab, const std::vector<InitialSymbol>& chunk, std::vector<TokenId>& out) {
    std::vector<Symbol> syms;
    syms.reserve(chunk.size());
    for (std::size_t i = 0; i < chunk.size(); ++i) {
        Symbol s;
        s.text = chunk[i].text;
        s.literal = chunk[i].literal_marker;
        s.prev = static_cast<int>(i) - 1;
        s.next = i + 1 < chunk.size() ? static_cast<int>(i) + 1 : -1;
        syms.push_back(std::move(s));
    }

    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> queue;
    const auto try_push = [&](int left) {
        if (left < 0) return;
        const int right = syms[left].next;
        if (right < 0 || syms[left].literal || syms[right].literal) return;
        const std::int64_t rank = vocab.merge_rank(syms[left].text, syms[right].text);
        if (rank >= 0) queue.push({rank, left, syms[left].text.size(), syms[right].text.size()});
    };
    for (int i = 0; i + 1 < static_cast<int>(syms.size()); ++i) try_push(i);

    while (!queue.empty()) {
        const Candidate c = queue.top();
        queue.pop();
        Symbol& left = syms[c.left];
        if (!left.alive || left.next < 0 || left.text.size() != c.left_len) continue;
        Symbol& right = syms[left.next];
        if (right.text.size() != c.right_len) continue;
        left.text += right.text;
        right.alive = false;
        left.next = right.next;
        if (right.next >= 0) syms[right.next].prev = c.left;
        try_push(left.prev);
        try_push(c.left);
    }

    std::string surface;
    for (int i = 0; i >= 0; i = syms[i].next) {
        const Symbol& s = syms[i];
        if (!s.literal) {
            if (const std::int64_t id = vocab.find(s.text); id >= 0) {
                out.push_back(static_cast<TokenId>(id));
                continue;
            }
            surface.clear();
            append_surface(surface, s.text);
        } else {
            surface = s.text;
        }
        for (const unsigned char b : surface) out.push_back(BpeVocab::byte_token(b));
    }
}

}  // namespace

std::vector<TokenId> bpe_encode(const BpeVocab& vocab, std::string_view text) {
    std::vector<TokenId> out;
    auto chunks = pretokenize(text);
    // Without a bare marker piece nothing can merge with the leading marker,
    // and decoding would strip its space anyway.
    if (!chunks.empty() && vocab.find(kWordBoundary) < 0) chunks.front().erase(chunks.front().begin());
    for (const auto& chunk : chunks) {
        if (!chunk.empty()) encode_chunk(vocab, chunk, out);
    }
    return out;
}

std::string bpe_decode(const BpeVocab& vocab, const std::vector<TokenId>& ids) {
    std::string out;
    for (const TokenId id : ids) {
        if (BpeVocab::is_byte_token(id)) {
            out.push_back(static_cast<char>(id));
        } else {
            append_surface(out, vocab.piece(id));
        }
    }
    // Only a leading marker piece carries the implicit space.
    if (!ids.empty() && !BpeVocab::is_byte_token(ids.front()) && !out.empty() && out.front() == ' ') out.erase(0, 1);
    return out;
}

double FertilityTotals::fertility() const {
    if (words == 0) throw Error(ErrorCode::EmptyCorpus, "fertility needs at least one word");
    return static_cast<double>(tokens) / static_cast<double>(words);
}

FertilityTotals fertility_totals(const BpeVocab& vocab, const std::vector<Document>& corpus) {
    FertilityTotals totals;
    for (const auto& doc : corpus) {
        totals.tokens += bpe_encode(vocab, doc.text).size();
        totals.words += count_words(doc.text);
    }
    return totals;
}

double fertility(const BpeVocab& vocab, const std::vector<Document>& corpus) {
    return fertility_totals(vocab, corpus).fertility();
}

Hash128 corpus_fingerprint(const LanguageCorpora& corpora) {
    Hash128 h{};
    for (const auto& [language, docs] : corpora) {
        for (const auto& doc : docs) {
            std::string rec = language;
            rec.push_back('\0');
            rec += doc.text;
            const Hash128 part = murmur3_128(rec, h.lo ^ (h.hi * 31));
            h = {part.lo, part.hi ^ h.lo};
        }
    }
    return h;
}

FertilityReport fertility_report(const NamedVocabs& vocabs, const LanguageCorpora& corpora) {
    if (vocabs.empty() || corpora.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "fertility report needs at least one tokenizer and one language");
    }
    FertilityReport report;
    for (const auto& [language, docs] : corpora) {
        for (const auto& [name, vocab] : vocabs) {
            const FertilityTotals t = fertility_totals(*vocab, docs);
            report.rows.push_back({name, language, t.fertility(), t.tokens, t.words});
        }
    }
    std::sort(report.rows.begin(), report.rows.end(), [](const FertilityRow& a, const FertilityRow& b) {
        return std::tie(a.language, a.tokenizer) < std::tie(b.language, b.tokenizer);
    });
    std::map<std::string, std::vector<const FertilityRow*>> by_lang;
    for (const auto& row : report.rows) by_lang[row.language].push_back(&row);
    for (auto& [language, rows] : by_lang) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const FertilityRow* a, const FertilityRow* b) { return a->fertility < b->fertility; });
        auto& names = report.ranking[language];
        for (const auto* r : rows) names.push_back(r->tokenizer);
    }
    report.corpus_fingerprint = corpus_fingerprint(corpora);
    return report;
}

std::string FertilityReport::fingerprint_hex() const {
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << corpus_fingerprint.hi << std::setw(16)
       << corpus_fingerprint.lo;
    return os.str();
}

std::string FertilityReport::to_tsv() const {
    std::ostringstream os;
    os << "tokenizer\tlanguage\tfertility\ttoken_count\tword_count\n";
    os << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.tokenizer << '\t' << r.language << '\t' << r.fertility << '\t' << r.token_count << '\t'
           << r.word_count << '\n';
    }
    return os.str();
}

std::string FertilityReport::to_table() const {
    std::size_t w_tok = 9;
    std::size_t w_lang = 8;
    for (const auto& r : rows) {
        w_tok = std::max(w_tok, r.tokenizer.size());
        w_lang = std::max(w_lang, r.language.size());
    }
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(w_lang) + 2) << "language" << std::setw(static_cast<int>(w_tok) + 2)
       << "tokenizer" << std::right << std::setw(10) << "fertility" << std::setw(12) << "tokens" << std::setw(12)
       << "words" << '\n';
    for (const auto& r : rows) {
        os << std::left << std::setw(static_cast<int>(w_lang) + 2) << r.language << std::setw(static_cast<int>(w_tok) + 2)
           << r.tokenizer << std::right << std::setw(10) << std::fixed << std::setprecision(4) << r.fertility
           << std::setw(12) << r.token_count << std::setw(12) << r.word_count << '\n';
    }
    os << "corpus fingerprint: " << fingerprint_hex() << '\n';
    return os.str();
}

}  // namespace corpus_forge
