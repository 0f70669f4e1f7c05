#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "corpus_forge/corpus.hpp"
#include "corpus_forge/hash.hpp"

namespace corpus_forge {

struct DedupKey {
    Hash128 digest;
    friend bool operator==(const DedupKey&, const DedupKey&) = default;
    friend auto operator<=>(const DedupKey&, const DedupKey&) = default;
};

/// Case-fold, drop ASCII digits, collapse whitespace runs to one space, trim.
std::string normalize_for_dedup(std::string_view text);
DedupKey dedup_key(std::string_view text);

/// First-wins set of seen keys. Can be persisted as a key store: raw 16-byte
/// little-endian records (low word first), sorted ascending.
class ExactDedupStore {
public:
    // Returns true if the key had not been seen before.
    bool insert(const DedupKey& key) { return seen_.insert(key.digest).second; }
    bool contains(const DedupKey& key) const { return seen_.contains(key.digest); }
    std::size_t size() const { return seen_.size(); }

    std::vector<DedupKey> sorted_keys() const;
    void save(const std::filesystem::path& path) const;
    static ExactDedupStore load(const std::filesystem::path& path);

private:
    std::unordered_set<Hash128, Hash128Hasher> seen_;
};

std::vector<Document> exact_dedup(const std::vector<Document>& docs);

struct MinHashParams {
    std::size_t num_permutations = 128;
    std::size_t shingle_size = 5;
    std::uint64_t seed = 0;
};

struct MinHashSignature {
    std::vector<std::uint64_t> values;
    std::size_t shingle_size = 5;
    friend bool operator==(const MinHashSignature&, const MinHashSignature&) = default;
};

/// Hashes of the distinct word shingles of `text` (case-folded words from
/// word_segment). Texts with fewer words than `shingle_size` become a single
/// shingle; a text with no words yields the hash of the empty shingle.
std::vector<std::uint64_t> shingle_hashes(std::string_view text, std::size_t shingle_size);

class MinHasher {
public:
    explicit MinHasher(MinHashParams params = {});

    MinHashSignature signature(std::string_view text) const;
    const MinHashParams& params() const { return params_; }

private:
    MinHashParams params_;
    std::vector<std::uint64_t> mul_;
    std::vector<std::uint64_t> add_;
};

MinHashSignature minhash_signature(std::string_view text, std::uint64_t seed,
                                   const MinHashParams& params = {});

// Fraction of matching coordinates.
double estimated_jaccard(const MinHashSignature& a, const MinHashSignature& b);

struct LshParams {
    std::size_t bands = 32;
    std::size_t rows = 4;
    double threshold = 0.8;
};

/// Banded LSH index over the signatures of kept documents.
class NearDupIndex {
public:
    explicit NearDupIndex(LshParams params = {});

    // True if some indexed signature sharing a band bucket has estimated
    // Jaccard >= threshold.
    bool has_near_duplicate(const MinHashSignature& sig) const;
    void insert(MinHashSignature sig);
    // Inserts when no near duplicate exists; returns true if inserted.
    bool insert_if_novel(const MinHashSignature& sig);

    std::size_t size() const { return signatures_.size(); }
    const std::vector<MinHashSignature>& signatures() const { return signatures_; }
    const LshParams& params() const { return params_; }

private:
    std::uint64_t band_hash(const MinHashSignature& sig, std::size_t band) const;

    LshParams params_;
    std::vector<MinHashSignature> signatures_;
    std::vector<std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>> buckets_;
};

void validate_lsh(const LshParams& lsh, const MinHashParams& minhash);

std::vector<Document> near_dup_cluster(const std::vector<Document>& docs, double threshold = 0.8,
                                       const MinHashParams& params = {});

}  // namespace corpus_forge
