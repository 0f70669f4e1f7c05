#include "corpus_forge/dedup.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <random>

#include "corpus_forge/error.hpp"
#include "corpus_forge/unicode.hpp"

namespace corpus_forge {

std::string normalize_for_dedup(std::string_view text) {
    const std::string folded = unicode::fold_case(text);
    std::string out;
    out.reserve(folded.size());
    bool pending_space = false;
    for (std::size_t pos = 0; pos < folded.size();) {
        const utf8::Decoded d = utf8::decode_at(folded, pos);
        const char32_t c = d.codepoint;
        if (d.valid && unicode::is_digit(c)) {
            pos += d.length;
            continue;
        }
        if (d.valid && unicode::is_space(c)) {
            pending_space = !out.empty();
            pos += d.length;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.append(folded, pos, d.length);
        pos += d.length;
    }
    return out;
}

DedupKey dedup_key(std::string_view text) { return {murmur3_128(normalize_for_dedup(text))}; }

std::vector<DedupKey> ExactDedupStore::sorted_keys() const {
    std::vector<DedupKey> keys;
    keys.reserve(seen_.size());
    for (const auto& h : seen_) keys.push_back({h});
    std::sort(keys.begin(), keys.end());
    return keys;
}

namespace {

void put_le64(std::array<char, 16>& buf, std::size_t offset, std::uint64_t v) {
    for (std::size_t i = 0; i < 8; ++i) buf[offset + i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint64_t get_le64(const std::array<char, 16>& buf, std::size_t offset) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        v |= std::uint64_t(static_cast<unsigned char>(buf[offset + i])) << (8 * i);
    }
    return v;
}

}  // namespace

void ExactDedupStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write key store " + path.string());
    std::array<char, 16> buf{};
    for (const auto& key : sorted_keys()) {
        put_le64(buf, 0, key.digest.lo);
        put_le64(buf, 8, key.digest.hi);
        out.write(buf.data(), buf.size());
    }
    if (!out) throw Error(ErrorCode::IoError, "short write to key store " + path.string());
}

ExactDedupStore ExactDedupStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open key store " + path.string());
    ExactDedupStore store;
    std::array<char, 16> buf{};
    Hash128 prev{};
    bool first = true;
    while (in.read(buf.data(), buf.size())) {
        const Hash128 h{get_le64(buf, 0), get_le64(buf, 8)};
        if (!first && !(prev < h)) {
            throw Error(ErrorCode::FormatError, "key store not sorted ascending: " + path.string());
        }
        store.seen_.insert(h);
        prev = h;
        first = false;
    }
    if (in.gcount() != 0) {
        throw Error(ErrorCode::FormatError, "key store has a truncated record: " + path.string());
    }
    return store;
}

std::vector<Document> exact_dedup(const std::vector<Document>& docs) {
    ExactDedupStore store;
    std::vector<Document> out;
    for (const auto& doc : docs) {
        if (store.insert(dedup_key(doc.text))) out.push_back(doc);
    }
    return out;
}

std::vector<std::uint64_t> shingle_hashes(std::string_view text, std::size_t shingle_size) {
    std::vector<std::string> words = word_segment(text);
    for (auto& w : words) w = unicode::fold_case(w);
    std::vector<std::uint64_t> hashes;
    const std::size_t k = std::max<std::size_t>(1, shingle_size);
    const auto join = [&](std::size_t begin, std::size_t end) {
        std::string s;
        for (std::size_t i = begin; i < end; ++i) {
            if (i > begin) s.push_back(' ');
            s += words[i];
        }
        return hash64(s);
    };
    if (words.size() <= k) {
        hashes.push_back(join(0, words.size()));
    } else {
        hashes.reserve(words.size() - k + 1);
        for (std::size_t i = 0; i + k <= words.size(); ++i) hashes.push_back(join(i, i + k));
    }
    std::sort(hashes.begin(), hashes.end());
    hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());
    return hashes;
}

namespace {
constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

inline std::uint64_t mod_mersenne61(unsigned __int128 x) {
    std::uint64_t r = static_cast<std::uint64_t>(x & kMersenne61) + static_cast<std::uint64_t>(x >> 61);
    r = (r & kMersenne61) + (r >> 61);
    return r >= kMersenne61 ? r - kMersenne61 : r;
}
}  // namespace

MinHasher::MinHasher(MinHashParams params) : params_(params) {
    if (params_.num_permutations == 0) {
        throw Error(ErrorCode::ConfigError, "num_permutations must be positive");
    }
    std::mt19937_64 rng(params_.seed);
    std::uniform_int_distribution<std::uint64_t> mul_dist(1, kMersenne61 - 1);
    std::uniform_int_distribution<std::uint64_t> add_dist(0, kMersenne61 - 1);
    mul_.resize(params_.num_permutations);
    add_.resize(params_.num_permutations);
    for (std::size_t i = 0; i < params_.num_permutations; ++i) {
        mul_[i] = mul_dist(rng);
        add_[i] = add_dist(rng);
    }
}

MinHashSignature MinHasher::signature(std::string_view text) const {
    MinHashSignature sig;
    sig.shingle_size = params_.shingle_size;
    sig.values.assign(params_.num_permutations, std::numeric_limits<std::uint64_t>::max());
    for (const std::uint64_t h : shingle_hashes(text, params_.shingle_size)) {
        const std::uint64_t x = mod_mersenne61(h);
        for (std::size_t i = 0; i < mul_.size(); ++i) {
            const std::uint64_t v =
                mod_mersenne61(static_cast<unsigned __int128>(mul_[i]) * x + add_[i]);
            if (v < sig.values[i]) sig.values[i] = v;
        }
    }
    return sig;
}

MinHashSignature minhash_signature(std::string_view text, std::uint64_t seed,
                                   const MinHashParams& params) {
    MinHashParams p = params;
    p.seed = seed;
    return MinHasher(p).signature(text);
}

double estimated_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
    if (a.values.size() != b.values.size() || a.values.empty()) {
        throw Error(ErrorCode::ConfigError, "signature lengths differ");
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) same += a.values[i] == b.values[i];
    return static_cast<double>(same) / static_cast<double>(a.values.size());
}

void validate_lsh(const LshParams& lsh, const MinHashParams& minhash) {
    if (!(lsh.threshold > 0.0 && lsh.threshold <= 1.0)) {
        throw Error(ErrorCode::ConfigError, "near-dup threshold must lie in (0, 1]");
    }
    if (lsh.bands == 0 || lsh.rows == 0 || lsh.bands * lsh.rows != minhash.num_permutations) {
        throw Error(ErrorCode::ConfigError, "bands * rows must equal num_permutations");
    }
}

NearDupIndex::NearDupIndex(LshParams params) : params_(params), buckets_(params.bands) {
    if (!(params_.threshold > 0.0 && params_.threshold <= 1.0)) {
        throw Error(ErrorCode::ConfigError, "near-dup threshold must lie in (0, 1]");
    }
    if (params_.bands == 0 || params_.rows == 0) {
        throw Error(ErrorCode::ConfigError, "bands and rows must be positive");
    }
}

std::uint64_t NearDupIndex::band_hash(const MinHashSignature& sig, std::size_t band) const {
    const std::size_t begin = band * params_.rows;
    if (begin + params_.rows > sig.values.size()) {
        throw Error(ErrorCode::ConfigError, "signature shorter than bands * rows");
    }
    const auto* data = reinterpret_cast<const char*>(sig.values.data() + begin);
    return hash64(std::string_view(data, params_.rows * sizeof(std::uint64_t)), band);
}

bool NearDupIndex::has_near_duplicate(const MinHashSignature& sig) const {
    std::vector<std::uint32_t> checked;
    for (std::size_t b = 0; b < params_.bands; ++b) {
        const auto it = buckets_[b].find(band_hash(sig, b));
        if (it == buckets_[b].end()) continue;
        for (const std::uint32_t idx : it->second) {
            if (std::find(checked.begin(), checked.end(), idx) != checked.end()) continue;
            checked.push_back(idx);
            if (estimated_jaccard(sig, signatures_[idx]) >= params_.threshold) return true;
        }
    }
    return false;
}

void NearDupIndex::insert(MinHashSignature sig) {
    const auto idx = static_cast<std::uint32_t>(signatures_.size());
    for (std::size_t b = 0; b < params_.bands; ++b) buckets_[b][band_hash(sig, b)].push_back(idx);
    signatures_.push_back(std::move(sig));
}

bool NearDupIndex::insert_if_novel(const MinHashSignature& sig) {
    if (has_near_duplicate(sig)) return false;
    insert(sig);
    return true;
}

std::vector<Document> near_dup_cluster(const std::vector<Document>& docs, double threshold,
                                       const MinHashParams& params) {
    LshParams lsh;
    lsh.threshold = threshold;
    lsh.rows = params.num_permutations / lsh.bands;
    validate_lsh(lsh, params);
    const MinHasher hasher(params);
    NearDupIndex index(lsh);
    std::vector<Document> out;
    for (const auto& doc : docs) {
        if (index.insert_if_novel(hasher.signature(doc.text))) out.push_back(doc);
    }
    return out;
}

}  // namespace corpus_forge
