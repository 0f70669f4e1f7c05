#include "corpus_forge/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "corpus_forge/error.hpp"
#include "corpus_forge/unicode.hpp"

namespace corpus_forge {
namespace {

constexpr char kSep = '\x1f';
constexpr std::string_view kBosToken = "<s>";
constexpr std::string_view kEosToken = "</s>";
constexpr std::string_view kModelMagic{"CFNGRAM\0", 8};
constexpr int kModelVersion = 1;

template <typename Fn>
void for_each_sentence(std::string_view text, Fn&& fn) {
    for (const auto line : paragraph_split(text)) {
        std::vector<std::string> tokens = lm_tokens(line);
        if (!tokens.empty()) fn(tokens);
    }
}

}  // namespace

std::vector<std::string> lm_tokens(std::string_view sentence) {
    std::vector<std::string> words = word_segment(sentence);
    for (auto& w : words) w = unicode::fold_case(w);
    return words;
}

NgramCounter::NgramCounter(int order) : order_(order) {
    if (order < 1 || order > 5) throw Error(ErrorCode::ConfigError, "n-gram order must lie in [1, 5]");
    tables_.resize(static_cast<std::size_t>(order));
}

void NgramCounter::add_sentence(std::span<const std::string> tokens) {
    std::vector<std::string_view> padded;
    padded.reserve(tokens.size() + 2);
    padded.push_back(kBosToken);
    for (const auto& t : tokens) padded.emplace_back(t);
    padded.push_back(kEosToken);

    std::string key;
    for (std::size_t end = 1; end < padded.size(); ++end) {
        for (int k = 1; k <= order_; ++k) {
            if (static_cast<std::size_t>(k) > end + 1) break;
            key.clear();
            const std::size_t start = end + 1 - static_cast<std::size_t>(k);
            for (std::size_t i = start; i <= end; ++i) {
                if (i != start) key.push_back(kSep);
                key.append(padded[i]);
            }
            ++tables_[static_cast<std::size_t>(k - 1)][key];
        }
    }
    ++sentences_;
}

void NgramCounter::add_text(std::string_view text) {
    for_each_sentence(text, [&](const std::vector<std::string>& tokens) { add_sentence(tokens); });
}

void NgramCounter::merge(const NgramCounter& other) {
    if (other.order_ != order_) throw Error(ErrorCode::ConfigError, "cannot merge counters of different order");
    for (std::size_t k = 0; k < tables_.size(); ++k) {
        for (const auto& [key, c] : other.tables_[k]) tables_[k][key] += c;
    }
    sentences_ += other.sentences_;
}

std::string NgramModel::pack(std::span<const std::uint32_t> ids) {
    std::string key(ids.size() * sizeof(std::uint32_t), '\0');
    std::memcpy(key.data(), ids.data(), key.size());
    return key;
}

NgramModel NgramModel::from_counter(const NgramCounter& counter, double backoff_alpha) {
    if (!(backoff_alpha > 0.0 && backoff_alpha < 1.0)) {
        throw Error(ErrorCode::ConfigError, "backoff alpha must lie in (0, 1)");
    }
    const auto& tables = counter.tables();
    if (tables.empty() || tables[0].empty()) throw Error(ErrorCode::EmptyCorpus, "no sentences to count");

    NgramModel model;
    model.order_ = counter.order();
    model.alpha_ = backoff_alpha;

    std::vector<std::string> words;
    for (const auto& [w, c] : tables[0]) {
        if (w != kEosToken) words.push_back(w);
    }
    std::sort(words.begin(), words.end());
    model.vocab_ = {std::string(kBosToken), std::string(kEosToken)};
    model.vocab_.insert(model.vocab_.end(), words.begin(), words.end());
    for (std::uint32_t i = 0; i < model.vocab_.size(); ++i) model.ids_.emplace(model.vocab_[i], i);

    model.counts_.resize(tables.size());
    std::vector<std::uint32_t> ids;
    for (std::size_t k = 0; k < tables.size(); ++k) {
        for (const auto& [key, c] : tables[k]) {
            ids.clear();
            std::size_t start = 0;
            while (true) {
                const std::size_t sep = key.find(kSep, start);
                const std::string_view w = std::string_view(key).substr(
                    start, sep == std::string::npos ? std::string::npos : sep - start);
                ids.push_back(model.ids_.at(std::string(w)));
                if (sep == std::string::npos) break;
                start = sep + 1;
            }
            model.counts_[k][pack(ids)] = c;
        }
    }
    model.rebuild_context_totals();
    return model;
}

void NgramModel::rebuild_context_totals() {
    unigram_total_ = 0;
    for (const auto& [key, c] : counts_[0]) unigram_total_ += c;
    context_totals_.assign(counts_.size() > 1 ? counts_.size() - 1 : 0, {});
    for (std::size_t k = 1; k < counts_.size(); ++k) {
        for (const auto& [key, c] : counts_[k]) {
            context_totals_[k - 1][key.substr(0, k * sizeof(std::uint32_t))] += c;
        }
    }
}

std::uint32_t NgramModel::token_id(std::string_view word) const {
    const auto it = ids_.find(std::string(word));
    return it == ids_.end() ? kUnknown : it->second;
}

std::uint64_t NgramModel::count_ids(std::span<const std::uint32_t> ngram) const {
    if (ngram.empty() || ngram.size() > counts_.size()) return 0;
    const auto& table = counts_[ngram.size() - 1];
    const auto it = table.find(pack(ngram));
    return it == table.end() ? 0 : it->second;
}

std::uint64_t NgramModel::count(std::span<const std::string> ngram) const {
    std::vector<std::uint32_t> ids;
    for (const auto& w : ngram) {
        const std::uint32_t id = token_id(w);
        if (id == kUnknown) return 0;
        ids.push_back(id);
    }
    return count_ids(ids);
}

double NgramModel::log_score(std::span<const std::uint32_t> history, std::uint32_t word) const {
    const std::size_t max_ctx = std::min<std::size_t>(history.size(), static_cast<std::size_t>(order_ - 1));
    std::vector<std::uint32_t> gram;
    gram.reserve(max_ctx + 1);
    const double log_alpha = std::log(alpha_);
    double penalty = 0.0;
    if (word != kUnknown) {
        for (std::size_t len = max_ctx; len >= 1; --len) {
            const auto ctx = history.subspan(history.size() - len);
            if (std::find(ctx.begin(), ctx.end(), kUnknown) == ctx.end()) {
                gram.assign(ctx.begin(), ctx.end());
                gram.push_back(word);
                const std::string key = pack(gram);
                const auto& table = counts_[len];
                if (const auto it = table.find(key); it != table.end()) {
                    const auto total = context_totals_[len - 1].at(key.substr(0, len * sizeof(std::uint32_t)));
                    return penalty + std::log(static_cast<double>(it->second) / static_cast<double>(total));
                }
            }
            penalty += log_alpha;
        }
        const std::uint32_t id = word;
        const auto it = counts_[0].find(pack(std::span<const std::uint32_t>(&id, 1)));
        if (it != counts_[0].end()) {
            return penalty + std::log(static_cast<double>(it->second) / static_cast<double>(unigram_total_));
        }
    } else {
        penalty = log_alpha * static_cast<double>(max_ctx);
    }
    return penalty - std::log(static_cast<double>(vocab_size() + 1));
}

std::pair<double, std::size_t> NgramModel::log_likelihood(std::string_view text) const {
    double total = 0.0;
    std::size_t positions = 0;
    std::vector<std::uint32_t> padded;
    for_each_sentence(text, [&](const std::vector<std::string>& tokens) {
        padded.assign(1, kBos);
        for (const auto& t : tokens) padded.push_back(token_id(t));
        padded.push_back(kEos);
        for (std::size_t i = 1; i < padded.size(); ++i) {
            total += log_score(std::span<const std::uint32_t>(padded.data(), i), padded[i]);
            ++positions;
        }
    });
    return {total, positions};
}

std::vector<std::pair<std::vector<std::uint32_t>, std::uint64_t>> NgramModel::entries(int k) const {
    std::vector<std::pair<std::vector<std::uint32_t>, std::uint64_t>> out;
    const auto& table = counts_.at(static_cast<std::size_t>(k - 1));
    out.reserve(table.size());
    for (const auto& [key, c] : table) {
        std::vector<std::uint32_t> ids(static_cast<std::size_t>(k));
        std::memcpy(ids.data(), key.data(), key.size());
        out.emplace_back(std::move(ids), c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string NgramModel::serialize() const {
    nlohmann::json header = {{"format", "corpus-forge-ngram"},
                             {"version", kModelVersion},
                             {"order", order_},
                             {"vocab_size", vocab_size()},
                             {"alpha", alpha_}};
    detail::ByteWriter w;
    w.bytes(kModelMagic);
    w.str(header.dump());
    w.u32(static_cast<std::uint32_t>(vocab_.size()));
    for (const auto& v : vocab_) w.str(v);
    for (int k = 1; k <= order_; ++k) {
        const auto rows = entries(k);
        w.u64(rows.size());
        for (const auto& [ids, c] : rows) {
            for (const auto id : ids) w.u32(id);
            w.u64(c);
        }
    }
    return w.data();
}

NgramModel NgramModel::deserialize(std::string_view bytes) {
    detail::ByteReader r(bytes);
    if (r.bytes(kModelMagic.size()) != kModelMagic) {
        throw Error(ErrorCode::FormatError, "not an n-gram model file");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.str());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("bad model header: ") + e.what());
    }
    if (header.value("version", 0) != kModelVersion) {
        throw Error(ErrorCode::FormatError, "unsupported model version");
    }
    NgramModel model;
    model.order_ = header.at("order").get<int>();
    model.alpha_ = header.at("alpha").get<double>();
    if (model.order_ < 1 || model.order_ > 5) throw Error(ErrorCode::FormatError, "bad model order");
    const std::uint32_t nvocab = r.u32();
    model.vocab_.reserve(nvocab);
    for (std::uint32_t i = 0; i < nvocab; ++i) {
        model.vocab_.push_back(r.str());
        model.ids_.emplace(model.vocab_.back(), i);
    }
    model.counts_.resize(static_cast<std::size_t>(model.order_));
    std::vector<std::uint32_t> ids;
    for (int k = 1; k <= model.order_; ++k) {
        const std::uint64_t n = r.u64();
        auto& table = model.counts_[static_cast<std::size_t>(k - 1)];
        table.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            ids.assign(static_cast<std::size_t>(k), 0);
            for (auto& id : ids) {
                id = r.u32();
                if (id >= nvocab) throw Error(ErrorCode::FormatError, "token id out of range");
            }
            table[pack(ids)] = r.u64();
        }
    }
    if (!r.done()) throw Error(ErrorCode::FormatError, "trailing bytes in model file");
    if (model.vocab_size() != header.at("vocab_size").get<std::size_t>()) {
        throw Error(ErrorCode::FormatError, "vocab size mismatch");
    }
    model.rebuild_context_totals();
    return model;
}

void NgramModel::save(const std::filesystem::path& path) const { detail::write_file(path.string(), serialize()); }

NgramModel NgramModel::load(const std::filesystem::path& path) {
    return deserialize(detail::read_file(path.string()));
}

NgramModel train_lm(const std::vector<Document>& corpus, int order, double backoff_alpha) {
    NgramCounter counter(order);
    for (const auto& doc : corpus) counter.add_text(doc.text);
    if (counter.sentences() == 0) throw Error(ErrorCode::EmptyCorpus, "LM training corpus has no sentences");
    return NgramModel::from_counter(counter, backoff_alpha);
}

double perplexity(const NgramModel& model, std::string_view text) {
    const auto [log_sum, positions] = model.log_likelihood(text);
    if (positions == 0) throw Error(ErrorCode::EmptyText, "no words to score");
    return std::exp(-log_sum / static_cast<double>(positions));
}

void PerplexityBands::set(const std::string& language, double keep_below) {
    if (!(keep_below > 0.0) || !std::isfinite(keep_below)) {
        throw Error(ErrorCode::ConfigError, "perplexity cutoff must be finite and > 0");
    }
    cutoffs_[language] = keep_below;
}

double PerplexityBands::keep_below(const std::string& language) const {
    const auto it = cutoffs_.find(language);
    if (it == cutoffs_.end()) throw Error(ErrorCode::NoBands, "no perplexity cutoff for language '" + language + "'");
    return it->second;
}

double percentile_linear(std::vector<double> values, double percentile) {
    if (values.empty()) throw Error(ErrorCode::EmptyCorpus, "percentile of an empty sample");
    if (!(percentile >= 0.0 && percentile <= 100.0)) throw Error(ErrorCode::ConfigError, "percentile must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double rank = percentile / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return std::lerp(values[lo], values[hi], rank - static_cast<double>(lo));
}

void PerplexityBands::calibrate(const std::string& language, const NgramModel& model,
                                const std::vector<Document>& sample, double percentile) {
    std::vector<double> ppl;
    ppl.reserve(sample.size());
    for (const auto& doc : sample) {
        if (model.log_likelihood(doc.text).second > 0) ppl.push_back(perplexity(model, doc.text));
    }
    set(language, percentile_linear(std::move(ppl), percentile));
}

FilterVerdict perplexity_gate(const Document& doc, const NgramModel& model, const PerplexityBands& bands) {
    const double cutoff = bands.keep_below(doc.language);
    const auto [log_sum, positions] = model.log_likelihood(doc.text);
    if (positions == 0) return FilterVerdict::reject(Reason::Perplexity);
    const double ppl = std::exp(-log_sum / static_cast<double>(positions));
    if (ppl > cutoff) return FilterVerdict::reject(Reason::Perplexity, ppl);
    return FilterVerdict::pass();
}

// ---- language identification ----

namespace {

// Case-folded scalars with digits dropped, whitespace collapsed and one space
// of padding on both ends.
std::u32string langid_chars(std::string_view text) {
    std::u32string out{U' '};
    for (const char32_t c : utf8::decode(text)) {
        if (unicode::is_digit(c)) continue;
        if (unicode::is_space(c)) {
            if (out.back() != U' ') out.push_back(U' ');
            continue;
        }
        out.push_back(unicode::to_lower(c));
    }
    if (out.back() != U' ') out.push_back(U' ');
    return out;
}

inline std::uint64_t gram_key(const std::u32string& s, std::size_t end, int order) {
    std::uint64_t key = 0;
    for (std::size_t i = end + 1 - static_cast<std::size_t>(order); i <= end; ++i) {
        key = (key << 21) | (static_cast<std::uint64_t>(s[i]) & 0x1FFFFF);
    }
    return key;
}

std::string key_to_utf8(std::uint64_t key, int order) {
    std::u32string chars(static_cast<std::size_t>(order), U'\0');
    for (int i = order - 1; i >= 0; --i) {
        chars[static_cast<std::size_t>(i)] = static_cast<char32_t>(key & 0x1FFFFF);
        key >>= 21;
    }
    return utf8::encode(chars);
}

std::uint64_t utf8_to_key(std::string_view s, int order) {
    const std::u32string chars = utf8::decode(s);
    if (chars.size() != static_cast<std::size_t>(order)) throw Error(ErrorCode::FormatError, "bad n-gram key in profile");
    return gram_key(chars, chars.size() - 1, order);
}

}  // namespace

double LangProfile::log_prob(int order, std::uint64_t key) const {
    const auto& table = log_freq[static_cast<std::size_t>(order - 1)];
    const auto it = table.find(key);
    return it == table.end() ? unseen_log[static_cast<std::size_t>(order - 1)] : it->second;
}

std::vector<LangProfile> train_langid(const LangCorpora& corpora) {
    if (corpora.size() < 2) throw Error(ErrorCode::InsufficientData, "language ID needs at least two languages");
    std::vector<LangProfile> profiles;
    for (const auto& [language, texts] : corpora) {
        std::size_t chars = 0;
        for (const auto& t : texts) chars += utf8::count_scalars(t);
        if (chars < kMinLangTrainingChars) {
            throw Error(ErrorCode::InsufficientData, "language '" + language + "' has fewer than 1000 characters");
        }
        std::array<std::unordered_map<std::uint64_t, std::uint64_t>, LangProfile::kMaxOrder> counts;
        std::array<std::uint64_t, LangProfile::kMaxOrder> totals{};
        for (const auto& t : texts) {
            const std::u32string s = langid_chars(t);
            for (std::size_t i = 1; i < s.size(); ++i) {
                for (int n = 1; n <= LangProfile::kMaxOrder; ++n) {
                    if (static_cast<std::size_t>(n) > i + 1) break;
                    ++counts[static_cast<std::size_t>(n - 1)][gram_key(s, i, n)];
                    ++totals[static_cast<std::size_t>(n - 1)];
                }
            }
        }
        LangProfile p;
        p.language = language;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            // add-one smoothing with a single bucket for every unseen n-gram
            const double denom = static_cast<double>(totals[k] + counts[k].size() + 1);
            p.unseen_log[k] = std::log(1.0 / denom);
            for (const auto& [key, c] : counts[k]) {
                p.log_freq[k][key] = std::log(static_cast<double>(c + 1) / denom);
            }
        }
        profiles.push_back(std::move(p));
    }
    return profiles;
}

double mean_char_log_likelihood(const LangProfile& profile, std::string_view text) {
    const std::u32string s = langid_chars(text);
    double total = 0.0;
    std::size_t positions = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        for (int n = 1; n <= LangProfile::kMaxOrder; ++n) {
            if (static_cast<std::size_t>(n) > i + 1) break;
            total += profile.log_prob(n, gram_key(s, i, n));
        }
        ++positions;
    }
    return positions == 0 ? 0.0 : total / static_cast<double>(positions);
}

LanguageGuess identify_language(const std::vector<LangProfile>& profiles, std::string_view text) {
    if (profiles.empty() || utf8::count_scalars(text) < kMinLangIdChars) return {"und", 0.0};
    std::vector<std::pair<double, const std::string*>> scored;
    scored.reserve(profiles.size());
    for (const auto& p : profiles) scored.emplace_back(mean_char_log_likelihood(p, text), &p.language);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return *a.second < *b.second;
    });
    const double margin = scored.size() > 1 ? scored[0].first - scored[1].first : 0.0;
    return {*scored[0].second, margin};
}

void save_profiles(const std::vector<LangProfile>& profiles, const std::filesystem::path& path) {
    nlohmann::json out = {{"format", "corpus-forge-langid"}, {"version", 1}, {"profiles", nlohmann::json::array()}};
    for (const auto& p : profiles) {
        nlohmann::json jp = {{"language", p.language}, {"orders", nlohmann::json::array()}};
        for (int n = 1; n <= LangProfile::kMaxOrder; ++n) {
            std::map<std::string, double> sorted;
            for (const auto& [key, lp] : p.log_freq[static_cast<std::size_t>(n - 1)]) {
                sorted.emplace(key_to_utf8(key, n), lp);
            }
            jp["orders"].push_back({{"unseen", p.unseen_log[static_cast<std::size_t>(n - 1)]}, {"grams", sorted}});
        }
        out["profiles"].push_back(std::move(jp));
    }
    detail::write_file(path.string(), out.dump(1));
}

std::vector<LangProfile> load_profiles(const std::filesystem::path& path) {
    nlohmann::json in;
    try {
        in = nlohmann::json::parse(detail::read_file(path.string()));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("bad profile file: ") + e.what());
    }
    std::vector<LangProfile> profiles;
    for (const auto& jp : in.at("profiles")) {
        LangProfile p;
        p.language = jp.at("language").get<std::string>();
        const auto& orders = jp.at("orders");
        if (orders.size() != LangProfile::kMaxOrder) throw Error(ErrorCode::FormatError, "profile must have 3 orders");
        for (int n = 1; n <= LangProfile::kMaxOrder; ++n) {
            const auto& jo = orders[static_cast<std::size_t>(n - 1)];
            p.unseen_log[static_cast<std::size_t>(n - 1)] = jo.at("unseen").get<double>();
            for (const auto& [gram, lp] : jo.at("grams").items()) {
                p.log_freq[static_cast<std::size_t>(n - 1)][utf8_to_key(gram, n)] = lp.get<double>();
            }
        }
        profiles.push_back(std::move(p));
    }
    return profiles;
}

}  // namespace corpus_forge
