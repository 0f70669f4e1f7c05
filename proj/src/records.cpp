#include "corpus_forge/records.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "corpus_forge/error.hpp"

namespace corpus_forge {

Document parse_document_json(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::FormatError, "record is not a JSON object");
    const auto str_field = [&](const char* key, bool required, bool allow_int = false) -> std::string {
        const auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            if (required) throw Error(ErrorCode::FormatError, std::string("missing '") + key + "'");
            return {};
        }
        if (it->is_string()) return it->get<std::string>();
        if (allow_int && it->is_number_integer()) return std::to_string(it->get<long long>());
        throw Error(ErrorCode::FormatError, std::string("'") + key + "' must be a string");
    };
    Document doc;
    doc.text = str_field("text", true);
    doc.id = str_field("id", false, true);
    doc.language = str_field("lang", false);
    doc.source = str_field("source", false);
    if (const auto it = j.find("scores"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw Error(ErrorCode::FormatError, "'scores' must be an object");
        for (const auto& [k, v] : it->items()) {
            if (v.is_null()) continue;
            if (!v.is_number()) throw Error(ErrorCode::FormatError, "score '" + k + "' is not a number");
            const double d = v.get<double>();
            if (!std::isfinite(d)) throw Error(ErrorCode::FormatError, "score '" + k + "' is not finite");
            doc.scores[k] = d;
        }
    }
    return doc;
}

std::string document_to_json(const Document& doc) {
    nlohmann::ordered_json j;
    j["id"] = doc.id;
    j["text"] = doc.text;
    j["lang"] = doc.language;
    j["scores"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : doc.scores) j["scores"][k] = v;
    j["source"] = doc.source;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string tsv_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (const char c : text) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string tsv_unescape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\\' || i + 1 == text.size()) {
            out.push_back(text[i]);
            continue;
        }
        switch (text[++i]) {
            case 't': out.push_back('\t'); break;
            case 'n': out.push_back('\n'); break;
            case 'r': out.push_back('\r'); break;
            case '\\': out.push_back('\\'); break;
            default:
                out.push_back('\\');
                out.push_back(text[i]);
        }
    }
    return out;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cols;
    std::size_t pos = 0;
    while (true) {
        const std::size_t tab = line.find('\t', pos);
        cols.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
        if (tab == std::string_view::npos) break;
        pos = tab + 1;
    }
    return cols;
}

void parse_score(std::string_view col, const char* name, ScoreMap& scores) {
    if (col.empty()) return;
    std::string tmp(col);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::FormatError, std::string("bad ") + name + " score '" + tmp + "'");
    }
    if (v < 0.0 || v > 1.0) throw Error(ErrorCode::FormatError, std::string(name) + " score outside [0, 1]");
    scores[name] = v;
}

}  // namespace

SentencePair parse_pair_tsv(std::string_view line) {
    const auto cols = split_tabs(line);
    if (cols.size() != 4 && cols.size() != 6) {
        throw Error(ErrorCode::FormatError, "expected 4 or 6 tab-separated columns, got " + std::to_string(cols.size()));
    }
    SentencePair p;
    p.src_text = tsv_unescape(cols[0]);
    p.tgt_text = tsv_unescape(cols[1]);
    p.src_lang = std::string(cols[2]);
    p.tgt_lang = std::string(cols[3]);
    if (cols.size() == 6) {
        parse_score(cols[4], "bicleaner", p.scores);
        parse_score(cols[5], "cometkiwi", p.scores);
    }
    return p;
}

std::string pair_to_tsv(const SentencePair& pair) {
    std::string out = tsv_escape(pair.src_text);
    out.push_back('\t');
    out += tsv_escape(pair.tgt_text);
    out.push_back('\t');
    out += pair.src_lang;
    out.push_back('\t');
    out += pair.tgt_lang;
    for (const char* key : {"bicleaner", "cometkiwi"}) {
        out.push_back('\t');
        if (const auto it = pair.scores.find(key); it != pair.scores.end()) {
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof buf, it->second);
            out.append(buf, res.ptr);
        }
    }
    return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    const std::string data = detail::read_file(path.string());
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < data.size()) {
        std::size_t nl = data.find('\n', pos);
        if (nl == std::string::npos) nl = data.size();
        std::string_view line(data.data() + pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        pos = nl + 1;
    }
    return lines;
}

std::vector<Document> read_documents(const std::filesystem::path& path) {
    std::vector<Document> docs;
    std::size_t lineno = 0;
    for (const auto& line : read_lines(path)) {
        ++lineno;
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            docs.push_back(parse_document_json(line));
        } catch (const Error& e) {
            throw Error(ErrorCode::FormatError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (docs.back().id.empty()) docs.back().id = path.filename().string() + ":" + std::to_string(lineno);
    }
    return docs;
}

void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs) {
    std::string out;
    for (const auto& d : docs) {
        out += document_to_json(d);
        out.push_back('\n');
    }
    detail::write_file(path.string(), out);
}

std::vector<SentencePair> read_pairs(const std::filesystem::path& path) {
    std::vector<SentencePair> pairs;
    std::size_t lineno = 0;
    for (const auto& line : read_lines(path)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && line == kPairTsvHeader)) continue;
        try {
            pairs.push_back(parse_pair_tsv(line));
        } catch (const Error& e) {
            throw Error(ErrorCode::FormatError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return pairs;
}

void write_pairs(const std::filesystem::path& path, const std::vector<SentencePair>& pairs) {
    std::string out(kPairTsvHeader);
    out.push_back('\n');
    for (const auto& p : pairs) {
        out += pair_to_tsv(p);
        out.push_back('\n');
    }
    detail::write_file(path.string(), out);
}

}  // namespace corpus_forge
