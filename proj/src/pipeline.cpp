#include "corpus_forge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <iomanip>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "binary_io.hpp"
#include "corpus_forge/error.hpp"
#include "corpus_forge/ngram_lm.hpp"
#include "corpus_forge/records.hpp"

namespace corpus_forge {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- reports ----

std::uint64_t StageReport::rejected_total() const {
    std::uint64_t n = 0;
    for (const auto& [k, v] : rejected) n += v;
    return n;
}

void StageReport::merge(const StageReport& o) {
    in += o.in;
    passed += o.passed;
    bypassed += o.bypassed;
    for (const auto& [k, v] : o.rejected) rejected[k] += v;
    for (const auto& [lang, m] : o.rejected_by_language) {
        for (const auto& [k, v] : m) rejected_by_language[lang][k] += v;
    }
}

bool RunReport::accounting_ok() const {
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& s = stages[i];
        if (s.in != s.passed + s.rejected_total()) return false;
        if (s.bypassed > s.passed) return false;
        if (i > 0 && s.in != stages[i - 1].passed) return false;
    }
    if (!stages.empty()) {
        if (stages.front().in != input_records) return false;
        if (stages.back().passed != output_records) return false;
    }
    return true;
}

void RunReport::merge(const RunReport& o) {
    if (stages.empty()) {
        stages = o.stages;
    } else {
        if (stages.size() != o.stages.size()) throw Error(ErrorCode::FormatError, "cannot merge reports with different stages");
        for (std::size_t i = 0; i < stages.size(); ++i) stages[i].merge(o.stages[i]);
    }
    for (const auto& [k, v] : o.input_by_language) input_by_language[k].add(v);
    for (const auto& [k, v] : o.output_by_language) output_by_language[k].add(v);
    input_records += o.input_records;
    output_records += o.output_records;
    input_bytes += o.input_bytes;
    wall_seconds += o.wall_seconds;
    outputs.insert(outputs.end(), o.outputs.begin(), o.outputs.end());
}

double RunReport::docs_per_second() const {
    return wall_seconds > 0.0 ? static_cast<double>(input_records) / wall_seconds : 0.0;
}

double RunReport::bytes_per_second() const {
    return wall_seconds > 0.0 ? static_cast<double>(input_bytes) / wall_seconds : 0.0;
}

namespace {

json tallies_to_json(const std::map<std::string, LanguageTally>& m) {
    json j = json::object();
    for (const auto& [lang, t] : m) j[lang] = {{"documents", t.documents}, {"tokens", t.tokens}, {"bytes", t.bytes}};
    return j;
}

std::map<std::string, LanguageTally> tallies_from_json(const json& j) {
    std::map<std::string, LanguageTally> m;
    for (const auto& [lang, t] : j.items()) {
        m[lang] = {t.at("documents").get<std::uint64_t>(), t.at("tokens").get<std::uint64_t>(),
                   t.at("bytes").get<std::uint64_t>()};
    }
    return m;
}

}  // namespace

json RunReport::to_json(bool include_timing) const {
    json j;
    j["config_digest"] = config_digest;
    j["complete"] = complete;
    j["input_records"] = input_records;
    j["output_records"] = output_records;
    j["input_bytes"] = input_bytes;
    j["accounting_ok"] = accounting_ok();
    j["stages"] = json::array();
    for (const auto& s : stages) {
        j["stages"].push_back({{"name", s.name},
                               {"in", s.in},
                               {"passed", s.passed},
                               {"bypassed", s.bypassed},
                               {"rejected", s.rejected},
                               {"rejected_by_language", s.rejected_by_language}});
    }
    j["input_by_language"] = tallies_to_json(input_by_language);
    j["output_by_language"] = tallies_to_json(output_by_language);
    j["outputs"] = outputs;
    if (include_timing) {
        j["wall_seconds"] = wall_seconds;
        j["docs_per_second"] = docs_per_second();
        j["bytes_per_second"] = bytes_per_second();
    }
    return j;
}

RunReport RunReport::from_json(const json& j) {
    try {
        RunReport r;
        r.config_digest = j.value("config_digest", "");
        r.complete = j.value("complete", false);
        r.input_records = j.at("input_records").get<std::uint64_t>();
        r.output_records = j.at("output_records").get<std::uint64_t>();
        r.input_bytes = j.value("input_bytes", std::uint64_t{0});
        for (const auto& s : j.at("stages")) {
            StageReport sr;
            sr.name = s.at("name").get<std::string>();
            sr.in = s.at("in").get<std::uint64_t>();
            sr.passed = s.at("passed").get<std::uint64_t>();
            sr.bypassed = s.value("bypassed", std::uint64_t{0});
            sr.rejected = s.at("rejected").get<std::map<std::string, std::uint64_t>>();
            sr.rejected_by_language =
                s.at("rejected_by_language").get<std::map<std::string, std::map<std::string, std::uint64_t>>>();
            r.stages.push_back(std::move(sr));
        }
        r.input_by_language = tallies_from_json(j.at("input_by_language"));
        r.output_by_language = tallies_from_json(j.at("output_by_language"));
        r.outputs = j.value("outputs", std::vector<std::string>{});
        r.wall_seconds = j.value("wall_seconds", 0.0);
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("bad run report: ") + e.what());
    }
}

LanguageTally tally(const Document& doc) {
    return {1, count_words(doc.text), doc.text.size()};
}

StatsReport stats_report(const std::vector<Document>& corpus) {
    StatsReport r;
    for (const auto& d : corpus) {
        const LanguageTally t = tally(d);
        r.by_language[d.language.empty() ? "und" : d.language].add(t);
        r.totals.add(t);
    }
    return r;
}

std::string StatsReport::to_tsv() const {
    std::ostringstream os;
    os << "language\tdocuments\ttokens\tbytes\n";
    for (const auto& [lang, t] : by_language) os << lang << '\t' << t.documents << '\t' << t.tokens << '\t' << t.bytes << '\n';
    os << "TOTAL\t" << totals.documents << '\t' << totals.tokens << '\t' << totals.bytes << '\n';
    return os.str();
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs, const std::string& extension) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        const fs::path p(in);
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(p)) {
                if (e.is_regular_file() && e.path().extension() == extension) files.push_back(e.path());
            }
            std::sort(files.begin(), files.end());
            out.insert(out.end(), files.begin(), files.end());
        } else if (fs::is_regular_file(p, ec)) {
            out.push_back(p);
        } else {
            throw Error(ErrorCode::IoError, "input '" + in + "' does not exist");
        }
    }
    return out;
}

// ---- engine ----

namespace {

void parallel_for(int workers, std::size_t n, const std::function<void(std::size_t)>& fn) {
    constexpr std::size_t kChunk = 16;
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), (n + kChunk - 1) / kChunk);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    const auto work = [&] {
        try {
            while (true) {
                const std::size_t begin = next.fetch_add(kChunk);
                if (begin >= n) break;
                const std::size_t end = std::min(n, begin + kChunk);
                for (std::size_t i = begin; i < end; ++i) fn(i);
            }
        } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
            next.store(n);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

template <class R>
struct Stage {
    std::string name;
    std::function<bool(const R&)> bypass;
    std::function<FilterVerdict(R&)> pure;
    // Sequential over the shard's live records in input order.
    std::function<void(std::vector<R*>&, std::vector<FilterVerdict>&)> batch;
};

template <class R>
struct RecordTraits;

template <>
struct RecordTraits<Document> {
    static std::string language(const Document& d) { return d.language.empty() ? "und" : d.language; }
    static LanguageTally tally_of(const Document& d) { return tally(d); }
};

template <>
struct RecordTraits<SentencePair> {
    static std::string language(const SentencePair& p) {
        const std::string f = p.foreign_language();
        return f.empty() ? "und" : f;
    }
    static LanguageTally tally_of(const SentencePair& p) {
        return {1, count_words(p.src_text) + count_words(p.tgt_text), p.src_text.size() + p.tgt_text.size()};
    }
};

template <class R>
struct Rejected {
    R record;
    std::string stage;
    FilterVerdict verdict;
};

// Runs one batch through the stages; `report` receives the stage counts.
template <class R>
std::vector<R> run_stages(std::vector<R> records, const std::vector<Stage<R>>& stages, int workers,
                          RunReport& report, std::vector<Rejected<R>>* rejects) {
    using Traits = RecordTraits<R>;
    std::vector<std::size_t> alive(records.size());
    for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;

    for (const auto& stage : stages) {
        StageReport sr;
        sr.name = stage.name;
        sr.in = alive.size();
        std::vector<char> bypass(alive.size(), 0);
        if (stage.bypass) {
            for (std::size_t k = 0; k < alive.size(); ++k) bypass[k] = stage.bypass(records[alive[k]]) ? 1 : 0;
        }
        std::vector<FilterVerdict> verdicts(alive.size());
        if (stage.pure) {
            parallel_for(workers, alive.size(), [&](std::size_t k) {
                if (!bypass[k]) verdicts[k] = stage.pure(records[alive[k]]);
            });
        } else {
            std::vector<R*> batch;
            std::vector<std::size_t> where;
            for (std::size_t k = 0; k < alive.size(); ++k) {
                if (bypass[k]) continue;
                batch.push_back(&records[alive[k]]);
                where.push_back(k);
            }
            std::vector<FilterVerdict> bv(batch.size());
            stage.batch(batch, bv);
            for (std::size_t b = 0; b < where.size(); ++b) verdicts[where[b]] = bv[b];
        }
        std::vector<std::size_t> next;
        next.reserve(alive.size());
        for (std::size_t k = 0; k < alive.size(); ++k) {
            if (bypass[k]) {
                ++sr.bypassed;
                ++sr.passed;
                next.push_back(alive[k]);
            } else if (verdicts[k].passed) {
                ++sr.passed;
                next.push_back(alive[k]);
            } else {
                const std::string reason(reason_name(verdicts[k].reason));
                ++sr.rejected[reason];
                ++sr.rejected_by_language[Traits::language(records[alive[k]])][reason];
                if (rejects) rejects->push_back({records[alive[k]], stage.name, verdicts[k]});
            }
        }
        alive = std::move(next);
        report.stages.push_back(std::move(sr));
    }

    std::vector<R> out;
    out.reserve(alive.size());
    for (const std::size_t i : alive) {
        report.output_by_language[Traits::language(records[i])].add(Traits::tally_of(records[i]));
        out.push_back(std::move(records[i]));
    }
    report.output_records = out.size();
    return out;
}

// Shared first-wins state of one run.
struct DedupState {
    ExactDedupStore keys;
    std::unique_ptr<NearDupIndex> near;
    std::unique_ptr<MinHasher> hasher;
};

constexpr std::string_view kSignatureMagic = "CFMINHS\0";

void save_signatures(const NearDupIndex& index, std::size_t num_perm, const fs::path& path) {
    detail::ByteWriter w;
    w.bytes(std::string_view(kSignatureMagic.data(), 8));
    w.u32(1);
    w.u64(index.size());
    w.u32(static_cast<std::uint32_t>(num_perm));
    for (const auto& sig : index.signatures()) {
        w.u32(static_cast<std::uint32_t>(sig.shingle_size));
        for (const auto v : sig.values) w.u64(v);
    }
    detail::write_file(path.string(), w.data());
}

void load_signatures(NearDupIndex& index, std::size_t num_perm, const fs::path& path) {
    const std::string data = detail::read_file(path.string());
    detail::ByteReader r(data);
    if (r.bytes(8) != std::string_view(kSignatureMagic.data(), 8) || r.u32() != 1) {
        throw Error(ErrorCode::FormatError, path.string() + " is not a signature store");
    }
    const std::uint64_t count = r.u64();
    if (r.u32() != num_perm) throw Error(ErrorCode::FormatError, path.string() + ": permutation count differs");
    for (std::uint64_t i = 0; i < count; ++i) {
        MinHashSignature sig;
        sig.shingle_size = r.u32();
        sig.values.resize(num_perm);
        for (auto& v : sig.values) v = r.u64();
        index.insert(std::move(sig));
    }
    if (!r.done()) throw Error(ErrorCode::FormatError, path.string() + ": trailing bytes");
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

// Resources shared by all web stages of one run.
struct WebResources {
    std::vector<LangProfile> profiles;
    std::map<std::string, NgramModel> models;
    PerplexityBands bands;
};

WebResources load_web_resources(const PipelineConfig& cfg, const std::vector<std::string>& stages) {
    WebResources res;
    if (contains(stages, "langid")) {
        if (!cfg.langid.profiles.empty()) {
            res.profiles = load_profiles(cfg.langid.profiles);
        } else if (!cfg.langid.trust_tags) {
            throw Error(ErrorCode::ConfigError, "langid stage needs langid.profiles or langid.trust_tags");
        }
    }
    if (contains(stages, "perplexity")) {
        for (const auto& [lang, path] : cfg.perplexity.models) res.models.emplace(lang, NgramModel::load(path));
        for (const auto& [lang, cut] : cfg.perplexity.keep_below) res.bands.set(lang, cut);
        for (const auto& [lang, path] : cfg.perplexity.calibration) {
            if (res.bands.has(lang)) continue;
            const auto it = res.models.find(lang);
            if (it == res.models.end()) {
                throw Error(ErrorCode::ConfigError, "perplexity.calibration." + lang + " has no model");
            }
            res.bands.calibrate(lang, it->second, read_documents(path), cfg.perplexity.percentile);
        }
    }
    return res;
}

std::vector<Stage<Document>> web_stages(const PipelineConfig& cfg, const std::vector<std::string>& names,
                                        const WebResources& res, DedupState& state) {
    const auto edu_only = [sources = cfg.routing.edu_only_sources](const Document& d) {
        return !d.source.empty() && contains(sources, d.source);
    };
    const int workers = cfg.workers;
    std::vector<Stage<Document>> stages;
    for (const auto& name : names) {
        Stage<Document> s;
        s.name = name;
        if (name != "edu") s.bypass = edu_only;
        if (name == "exact_dedup") {
            s.batch = [&state, workers](std::vector<Document*>& docs, std::vector<FilterVerdict>& out) {
                std::vector<DedupKey> keys(docs.size());
                parallel_for(workers, docs.size(), [&](std::size_t i) { keys[i] = dedup_key(docs[i]->text); });
                for (std::size_t i = 0; i < docs.size(); ++i) {
                    out[i] = state.keys.insert(keys[i]) ? FilterVerdict::pass() : FilterVerdict::reject(Reason::Duplicate);
                }
            };
        } else if (name == "near_dedup") {
            s.batch = [&state, workers](std::vector<Document*>& docs, std::vector<FilterVerdict>& out) {
                std::vector<MinHashSignature> sigs(docs.size());
                parallel_for(workers, docs.size(), [&](std::size_t i) { sigs[i] = state.hasher->signature(docs[i]->text); });
                for (std::size_t i = 0; i < docs.size(); ++i) {
                    out[i] = state.near->insert_if_novel(sigs[i]) ? FilterVerdict::pass()
                                                                   : FilterVerdict::reject(Reason::NearDuplicate);
                }
            };
        } else if (name == "langid") {
            s.pure = [&res, trust = cfg.langid.trust_tags](Document& d) {
                if (trust && !d.language.empty() && d.language != "und") return FilterVerdict::pass();
                if (res.profiles.empty()) return FilterVerdict::pass();
                const LanguageGuess g = identify_language(res.profiles, d.text);
                if (g.language == "und") return FilterVerdict::pass();
                if (d.language.empty() || d.language == "und") {
                    d.language = g.language;
                    return FilterVerdict::pass();
                }
                return g.language == d.language ? FilterVerdict::pass() : FilterVerdict::reject(Reason::LangMismatch, g.score);
            };
        } else if (name == "perplexity") {
            s.pure = [&res, strict = cfg.perplexity.reject_uncalibrated](Document& d) {
                const auto it = res.models.find(d.language);
                if (it == res.models.end() || !res.bands.has(d.language)) {
                    return strict ? FilterVerdict::reject(Reason::NoBands) : FilterVerdict::pass();
                }
                return perplexity_gate(d, it->second, res.bands);
            };
        } else if (name == "heuristics") {
            s.pure = [h = cfg.heuristics](Document& d) {
                auto [verdict, cleaned] = apply_heuristics(d, h);
                if (verdict.passed) d.text = std::move(cleaned.text);
                return verdict;
            };
        } else if (name == "edu") {
            s.pure = [q = cfg.quality, phase = cfg.phase](Document& d) {
                if (!d.scores.contains("edu")) {
                    return q.strict ? FilterVerdict::reject(Reason::MissingScore) : FilterVerdict::pass();
                }
                return edu_score_gate(d, q, phase);
            };
        } else {
            throw Error(ErrorCode::ConfigError, "stage '" + name + "' does not apply to documents");
        }
        stages.push_back(std::move(s));
    }
    return stages;
}

std::vector<Stage<SentencePair>> bitext_stages(const PipelineConfig& cfg, const std::vector<std::string>& names,
                                               DedupState& state) {
    const int workers = cfg.workers;
    std::vector<Stage<SentencePair>> stages;
    for (const auto& name : names) {
        Stage<SentencePair> s;
        s.name = name;
        if (name == "pair_dedup") {
            s.batch = [&state, workers](std::vector<SentencePair*>& pairs, std::vector<FilterVerdict>& out) {
                std::vector<DedupKey> keys(pairs.size());
                parallel_for(workers, pairs.size(), [&](std::size_t i) { keys[i] = pair_dedup_key(*pairs[i]); });
                for (std::size_t i = 0; i < pairs.size(); ++i) {
                    out[i] = state.keys.insert(keys[i]) ? FilterVerdict::pass() : FilterVerdict::reject(Reason::Duplicate);
                }
            };
        } else if (name == "bitext_gate") {
            s.pure = [q = cfg.quality](SentencePair& p) { return bitext_gate(p, q); };
        } else {
            throw Error(ErrorCode::ConfigError, "stage '" + name + "' does not apply to sentence pairs");
        }
        stages.push_back(std::move(s));
    }
    return stages;
}

StageReport named_report(std::string name) {
    StageReport r;
    r.name = std::move(name);
    return r;
}

// Parsed shard plus the ingest stage's verdicts.
template <class R>
struct Ingested {
    std::vector<R> records;
    StageReport ingest = named_report("ingest");
    std::map<std::string, LanguageTally> by_language;
    std::uint64_t bytes = 0;
    std::vector<Rejected<R>> rejects;
};

void reject_ingest(StageReport& ingest, const std::string& lang) {
    const std::string reason(reason_name(Reason::InvalidRecord));
    ++ingest.rejected[reason];
    ++ingest.rejected_by_language[lang][reason];
}

bool known_language(const PipelineConfig& cfg, const std::string& lang) {
    return cfg.languages.empty() || lang.empty() || lang == "und" || contains(cfg.languages, lang);
}

// Validates already-parsed documents: unique nonempty ids, registry tags.
void admit_documents(std::vector<Document> docs, const PipelineConfig& cfg, const std::string& id_prefix,
                     Ingested<Document>& out) {
    std::unordered_set<std::string> ids;
    std::size_t n = 0;
    for (auto& d : docs) {
        ++n;
        ++out.ingest.in;
        out.bytes += d.text.size();
        if (d.id.empty()) d.id = id_prefix + std::to_string(n);
        if (!known_language(cfg, d.language) || !ids.insert(d.id).second) {
            reject_ingest(out.ingest, d.language.empty() ? "und" : d.language);
            if (cfg.write_rejects) out.rejects.push_back({d, "ingest", FilterVerdict::reject(Reason::InvalidRecord)});
            continue;
        }
        ++out.ingest.passed;
        out.by_language[RecordTraits<Document>::language(d)].add(tally(d));
        out.records.push_back(std::move(d));
    }
}

Ingested<Document> ingest_documents(const fs::path& path, const PipelineConfig& cfg) {
    Ingested<Document> out;
    std::vector<Document> parsed;
    std::vector<std::size_t> linenos;
    std::size_t lineno = 0;
    std::uint64_t bad_bytes = 0;
    std::uint64_t bad = 0;
    for (const auto& line : read_lines(path)) {
        ++lineno;
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            parsed.push_back(parse_document_json(line));
            if (parsed.back().id.empty()) parsed.back().id = path.filename().string() + ":" + std::to_string(lineno);
        } catch (const Error&) {
            ++bad;
            bad_bytes += line.size();
            if (cfg.write_rejects) {
                Document d;
                d.id = path.filename().string() + ":" + std::to_string(lineno);
                d.text = line;
                out.rejects.push_back({std::move(d), "ingest", FilterVerdict::reject(Reason::InvalidRecord)});
            }
        }
    }
    admit_documents(std::move(parsed), cfg, path.filename().string() + ":", out);
    out.ingest.in += bad;
    out.bytes += bad_bytes;
    for (std::uint64_t i = 0; i < bad; ++i) reject_ingest(out.ingest, "und");
    return out;
}

Ingested<SentencePair> ingest_pairs(const fs::path& path, const PipelineConfig& cfg) {
    Ingested<SentencePair> out;
    std::size_t lineno = 0;
    for (const auto& line : read_lines(path)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && line == kPairTsvHeader)) continue;
        ++out.ingest.in;
        out.bytes += line.size();
        try {
            SentencePair p = parse_pair_tsv(line);
            const std::string lang = RecordTraits<SentencePair>::language(p);
            if (!known_language(cfg, p.foreign_language())) {
                reject_ingest(out.ingest, lang);
                continue;
            }
            ++out.ingest.passed;
            out.by_language[lang].add(RecordTraits<SentencePair>::tally_of(p));
            out.records.push_back(std::move(p));
        } catch (const Error&) {
            reject_ingest(out.ingest, "und");
        }
    }
    return out;
}

std::string part_name(std::size_t shard, std::string_view ext) {
    std::ostringstream os;
    os << "part-" << std::setw(5) << std::setfill('0') << shard << ext;
    return os.str();
}

void write_records(const fs::path& path, const std::vector<Document>& docs) { write_documents(path, docs); }
void write_records(const fs::path& path, const std::vector<SentencePair>& pairs) { write_pairs(path, pairs); }

void write_rejects(const fs::path& path, const std::vector<Rejected<Document>>& rejects) {
    std::string out;
    for (const auto& r : rejects) {
        json j = json::parse(document_to_json(r.record));
        j["stage"] = r.stage;
        j["reason"] = std::string(reason_name(r.verdict.reason));
        if (r.verdict.detail) j["detail"] = *r.verdict.detail;
        out += j.dump(-1, ' ', false, json::error_handler_t::replace);
        out.push_back('\n');
    }
    detail::write_file(path.string(), out);
}

void write_rejects(const fs::path& path, const std::vector<Rejected<SentencePair>>& rejects) {
    std::string out = std::string(kPairTsvHeader) + "\tstage\treason\n";
    for (const auto& r : rejects) {
        out += pair_to_tsv(r.record) + "\t" + r.stage + "\t" + std::string(reason_name(r.verdict.reason)) + "\n";
    }
    detail::write_file(path.string(), out);
}

struct ShardEntry {
    std::size_t shard;
    std::string input;
    std::string output;
    RunReport report;
};

struct Progress {
    std::string digest;
    std::vector<std::string> inputs;
    std::uint64_t generation = 0;
    std::vector<ShardEntry> completed;
};

void save_progress(const fs::path& path, const Progress& p) {
    json j = {{"config_digest", p.digest}, {"inputs", p.inputs}, {"generation", p.generation}, {"completed", json::array()}};
    for (const auto& e : p.completed) {
        j["completed"].push_back({{"shard", e.shard}, {"input", e.input}, {"output", e.output},
                                  {"report", e.report.to_json(true)}});
    }
    detail::write_file(path.string(), j.dump(1));
}

Progress load_progress(const fs::path& path) {
    try {
        const json j = json::parse(detail::read_file(path.string()));
        Progress p;
        p.digest = j.at("config_digest").get<std::string>();
        p.inputs = j.at("inputs").get<std::vector<std::string>>();
        p.generation = j.at("generation").get<std::uint64_t>();
        for (const auto& e : j.at("completed")) {
            p.completed.push_back({e.at("shard").get<std::size_t>(), e.at("input").get<std::string>(),
                                   e.at("output").get<std::string>(), RunReport::from_json(e.at("report"))});
        }
        return p;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
}

fs::path keys_file(const fs::path& dir, std::uint64_t gen) { return dir / ("keys-" + std::to_string(gen) + ".bin"); }
fs::path sigs_file(const fs::path& dir, std::uint64_t gen) { return dir / ("minhash-" + std::to_string(gen) + ".bin"); }

void save_state(const DedupState& st, std::size_t num_perm, const fs::path& dir, std::uint64_t gen) {
    st.keys.save(keys_file(dir, gen));
    if (st.near) save_signatures(*st.near, num_perm, sigs_file(dir, gen));
}

void load_state(DedupState& st, std::size_t num_perm, const fs::path& dir, std::uint64_t gen) {
    if (gen == 0) return;
    st.keys = ExactDedupStore::load(keys_file(dir, gen));
    if (st.near) load_signatures(*st.near, num_perm, sigs_file(dir, gen));
}

void remove_state(const fs::path& dir, std::uint64_t gen) {
    std::error_code ec;
    fs::remove(keys_file(dir, gen), ec);
    fs::remove(sigs_file(dir, gen), ec);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class R, class IngestFn, class StagesFn>
RunReport run_sharded(const PipelineConfig& cfg, std::string_view ext,
                      IngestFn ingest, StagesFn make_stages, bool use_near, const ProgressFn& progress) {
    cfg.validate_common();
    if (cfg.inputs.empty()) throw Error(ErrorCode::ConfigError, "no inputs configured");
    if (cfg.output_dir.empty()) throw Error(ErrorCode::ConfigError, "no output directory configured");
    const auto t0 = std::chrono::steady_clock::now();
    const auto files = expand_inputs(cfg.inputs, std::string(ext));
    std::vector<std::string> input_names;
    for (const auto& f : files) input_names.push_back(f.string());

    const fs::path out_dir(cfg.output_dir);
    const fs::path state_dir = out_dir / "state";
    std::error_code ec;
    fs::create_directories(state_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create '" + state_dir.string() + "': " + ec.message());
    const fs::path marker = out_dir / "_INCOMPLETE";
    const fs::path progress_path = out_dir / "progress.json";

    DedupState state;
    const std::size_t num_perm = cfg.dedup.minhash.num_permutations;
    if (use_near) {
        MinHashParams mp = cfg.dedup.minhash;
        mp.seed = cfg.seed;
        state.hasher = std::make_unique<MinHasher>(mp);
        state.near = std::make_unique<NearDupIndex>(cfg.dedup.lsh);
    }

    Progress prog;
    prog.digest = cfg.digest();
    prog.inputs = input_names;
    if (cfg.resume && fs::exists(progress_path)) {
        Progress old = load_progress(progress_path);
        if (old.digest != prog.digest || old.inputs != prog.inputs) {
            throw Error(ErrorCode::ConfigError, "cannot resume: configuration or inputs changed since the interrupted run");
        }
        // only a contiguous prefix of shards can be trusted with first-wins state
        std::sort(old.completed.begin(), old.completed.end(),
                  [](const ShardEntry& a, const ShardEntry& b) { return a.shard < b.shard; });
        for (std::size_t i = 0; i < old.completed.size(); ++i) {
            if (old.completed[i].shard != i || !fs::exists(out_dir / old.completed[i].output)) {
                throw Error(ErrorCode::FormatError, "progress file lists shards that are missing on disk");
            }
        }
        prog.completed = std::move(old.completed);
        prog.generation = old.generation;
        load_state(state, num_perm, state_dir, prog.generation);
    } else {
        for (const auto& stale : {progress_path, out_dir / "report.json"}) fs::remove(stale, ec);
    }
    detail::write_file(marker.string(), "run in progress\n");

    const auto stages = make_stages(state);
    RunReport total;
    total.config_digest = prog.digest;
    // an empty run still reports every stage
    total.stages.push_back(named_report("ingest"));
    for (const auto& s : stages) total.stages.push_back(named_report(s.name));

    for (const auto& e : prog.completed) total.merge(e.report);
    for (std::size_t shard = prog.completed.size(); shard < files.size(); ++shard) {
        const auto shard_t0 = std::chrono::steady_clock::now();
        Ingested<R> in = ingest(files[shard], cfg);
        RunReport rep;
        rep.stages.push_back(in.ingest);
        rep.input_records = in.ingest.in;
        rep.input_bytes = in.bytes;
        rep.input_by_language = in.by_language;
        std::vector<Rejected<R>> rejects = std::move(in.rejects);
        auto survivors = run_stages(std::move(in.records), stages, cfg.workers, rep, cfg.write_rejects ? &rejects : nullptr);
        const std::string name = part_name(shard, ext);
        write_records(out_dir / name, survivors);
        if (cfg.write_rejects) write_rejects(out_dir / ("rejects-" + name), rejects);
        rep.outputs.push_back(name);
        rep.config_digest = prog.digest;
        rep.complete = true;
        rep.wall_seconds = seconds_since(shard_t0);

        save_state(state, num_perm, state_dir, prog.generation + 1);
        prog.completed.push_back({shard, input_names[shard], name, rep});
        ++prog.generation;
        save_progress(progress_path, prog);
        remove_state(state_dir, prog.generation - 1);
        total.merge(rep);
        if (progress) progress(shard, files.size(), rep);
    }

    total.complete = true;
    total.wall_seconds = seconds_since(t0);
    detail::write_file((out_dir / "report.json").string(), total.to_json(true).dump(2) + "\n");
    fs::remove(marker, ec);
    return total;
}

std::vector<std::string> stage_list(const PipelineConfig& cfg, const std::vector<std::string>& defaults) {
    return cfg.stages.empty() ? defaults : cfg.stages;
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& config, const ProgressFn& progress) {
    const auto names = stage_list(config, kDefaultWebStages);
    const WebResources res = load_web_resources(config, names);
    return run_sharded<Document>(
        config, ".jsonl", ingest_documents,
        [&](DedupState& st) { return web_stages(config, names, res, st); }, contains(names, "near_dedup"), progress);
}

RunReport run_bitext_pipeline(const PipelineConfig& config, const ProgressFn& progress) {
    const auto names = stage_list(config, kDefaultBitextStages);
    return run_sharded<SentencePair>(
        config, ".tsv", ingest_pairs, [&](DedupState& st) { return bitext_stages(config, names, st); }, false,
        progress);
}

std::pair<std::vector<Document>, RunReport> filter_documents(const std::vector<Document>& docs,
                                                             const PipelineConfig& config) {
    config.validate_common();
    const auto names = stage_list(config, kDefaultWebStages);
    const WebResources res = load_web_resources(config, names);
    DedupState state;
    if (contains(names, "near_dedup")) {
        MinHashParams mp = config.dedup.minhash;
        mp.seed = config.seed;
        state.hasher = std::make_unique<MinHasher>(mp);
        state.near = std::make_unique<NearDupIndex>(config.dedup.lsh);
    }
    const auto stages = web_stages(config, names, res, state);
    const auto t0 = std::chrono::steady_clock::now();
    Ingested<Document> in;
    admit_documents(docs, config, "doc:", in);
    RunReport rep;
    rep.config_digest = config.digest();
    rep.stages.push_back(in.ingest);
    rep.input_records = in.ingest.in;
    rep.input_bytes = in.bytes;
    rep.input_by_language = in.by_language;
    auto survivors = run_stages<Document>(std::move(in.records), stages, config.workers, rep, nullptr);
    rep.complete = true;
    rep.wall_seconds = seconds_since(t0);
    return {std::move(survivors), std::move(rep)};
}

}  // namespace corpus_forge
