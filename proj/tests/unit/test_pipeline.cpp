#include <doctest.h>

#include <set>

#include "corpus_forge/error.hpp"
#include "corpus_forge/pipeline.hpp"
#include "corpus_forge/records.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace corpus_forge;
namespace fs = std::filesystem;

namespace {

PipelineConfig base_config() {
    PipelineConfig c;
    c.langid.trust_tags = true;
    return c;
}

void write_shards(const fs::path& dir, const std::vector<std::vector<Document>>& shards) {
    for (std::size_t i = 0; i < shards.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "shard-%03zu.jsonl", i);
        write_documents(dir / name, shards[i]);
    }
}

std::string outputs_of(const fs::path& dir) {
    std::string all;
    for (const auto& f : expand_inputs({dir.string()}, ".jsonl")) {
        if (f.filename().string().rfind("part-", 0) == 0) all += f.filename().string() + "\n" + testutil::slurp(f);
    }
    return all;
}

bool in_order_subset(const std::vector<Document>& out, const std::vector<Document>& in) {
    std::size_t j = 0;
    for (const auto& d : in) {
        if (j < out.size() && out[j].id == d.id) ++j;
    }
    return j == out.size();
}

struct Interrupt {};

}  // namespace

TEST_SUITE("pipeline") {
    TEST_CASE("in-memory filtering: accounting, order, workers") {
        const auto shards = synth::pipeline_corpus(1, 1, 400);
        auto cfg = base_config();
        const auto [out1, rep1] = filter_documents(shards[0], cfg);
        CHECK(rep1.accounting_ok());
        CHECK(rep1.input_records == 400);
        CHECK(rep1.output_records == out1.size());
        CHECK(in_order_subset(out1, shards[0]));
        REQUIRE(rep1.stages.size() == 1 + kDefaultWebStages.size());
        for (std::size_t i = 1; i < rep1.stages.size(); ++i) CHECK(rep1.stages[i].name == kDefaultWebStages[i - 1]);
        CHECK(rep1.stages[1].rejected.at("DUPLICATE") > 0);
        CHECK(rep1.stages[5].rejected.at("TOO_SHORT") > 0);
        CHECK(rep1.stages[5].rejected.at("BANNED_PHRASE") > 0);
        CHECK(rep1.stages[6].rejected.at("EDU_SCORE") > 0);
        CHECK(out1.size() > 50);
        for (const auto& d : out1) {
            if (d.source == "fineweb-edu") continue;
            CHECK(apply_heuristics(d, cfg.heuristics).first.passed);
        }
        for (const int w : {2, 4, 8}) {
            cfg.workers = w;
            const auto [out, rep] = filter_documents(shards[0], cfg);
            CHECK(out == out1);
            CHECK(rep.to_json(false) == rep1.to_json(false));
        }
    }

    TEST_CASE("edu-only sources bypass everything but the edu gate") {
        auto cfg = base_config();
        std::vector<Document> docs{{"a", "short edu text", "en", {{"edu", 2.5}}, "fineweb-edu"},
                                   {"b", "short edu text too", "en", {{"edu", 1.5}}, "fineweb-edu"},
                                   {"c", "short web text", "en", {{"edu", 4.5}}, "web"}};
        const auto [out, rep] = filter_documents(docs, cfg);
        REQUIRE(out.size() == 1);
        CHECK(out[0].id == "a");
        CHECK(rep.stages[5].bypassed == 2);
        CHECK(rep.stages[6].rejected.at("EDU_SCORE") == 1);
        cfg.phase = Phase::P2;
        CHECK(filter_documents(docs, cfg).first.empty());
        cfg.routing.edu_only_sources.clear();
        cfg.phase = Phase::P1;
        CHECK(filter_documents(docs, cfg).first.empty());
    }

    TEST_CASE("missing edu scores") {
        auto cfg = base_config();
        cfg.stages = {"edu"};
        const std::vector<Document> docs{{"a", "x", "en", {}, ""}};
        CHECK(filter_documents(docs, cfg).first.size() == 1);
        cfg.quality.strict = true;
        const auto [out, rep] = filter_documents(docs, cfg);
        CHECK(out.empty());
        CHECK(rep.stages[1].rejected.at("MISSING_SCORE") == 1);
    }

    TEST_CASE("ingest rejects duplicate ids and unknown languages") {
        auto cfg = base_config();
        cfg.stages = {"exact_dedup"};
        cfg.languages = {"en", "de"};
        const std::vector<Document> docs{{"a", "one", "en", {}, ""}, {"a", "two", "en", {}, ""},
                                         {"b", "three", "xx", {}, ""}, {"", "four", "de", {}, ""}};
        const auto [out, rep] = filter_documents(docs, cfg);
        CHECK(out.size() == 2);
        CHECK(rep.stages[0].rejected.at("INVALID_RECORD") == 2);
        CHECK(rep.accounting_ok());
    }

    TEST_CASE("sharded runs are identical at 1, 4 and 8 workers") {
        testutil::TempDir dir("cf-pipe");
        write_shards(dir / "in", synth::pipeline_corpus(2, 4, 150));
        std::string ref_out;
        nlohmann::json ref_rep;
        for (const int w : {1, 4, 8}) {
            auto cfg = base_config();
            cfg.inputs = {(dir / "in").string()};
            cfg.output_dir = (dir / ("out" + std::to_string(w))).string();
            cfg.workers = w;
            const auto rep = run_pipeline(cfg);
            CHECK(rep.accounting_ok());
            CHECK(rep.complete);
            CHECK(rep.input_records == 600);
            CHECK(rep.outputs.size() == 4);
            CHECK_FALSE(fs::exists(fs::path(cfg.output_dir) / "_INCOMPLETE"));
            const auto on_disk = nlohmann::json::parse(testutil::slurp(fs::path(cfg.output_dir) / "report.json"));
            CHECK(on_disk["accounting_ok"] == true);
            CHECK(RunReport::from_json(on_disk).to_json(false) == rep.to_json(false));
            const auto out = outputs_of(cfg.output_dir);
            if (w == 1) {
                ref_out = out;
                ref_rep = rep.to_json(false);
                // cross-shard copies are caught
                CHECK(rep.stages[1].rejected.at("DUPLICATE") > 10);
            } else {
                CHECK(out == ref_out);
                CHECK(rep.to_json(false) == ref_rep);
            }
        }
    }

    TEST_CASE("interrupted runs resume to the same result") {
        testutil::TempDir dir("cf-resume");
        write_shards(dir / "in", synth::pipeline_corpus(3, 5, 80));
        auto cfg = base_config();
        cfg.inputs = {(dir / "in").string()};
        cfg.output_dir = (dir / "full").string();
        const auto full = run_pipeline(cfg);

        cfg.output_dir = (dir / "part").string();
        CHECK_THROWS_AS(run_pipeline(cfg, [](std::size_t shard, std::size_t, const RunReport&) {
                            if (shard == 1) throw Interrupt{};
                        }),
                        Interrupt);
        CHECK(fs::exists(dir / "part/_INCOMPLETE"));
        CHECK(fs::exists(dir / "part/progress.json"));

        auto changed = cfg;
        changed.resume = true;
        changed.heuristics.min_chars = 300;
        CHECK_THROWS_AS(run_pipeline(changed), Error);

        cfg.resume = true;
        cfg.workers = 3;
        std::vector<std::size_t> seen;
        const auto resumed = run_pipeline(cfg, [&](std::size_t shard, std::size_t, const RunReport&) { seen.push_back(shard); });
        CHECK(seen == std::vector<std::size_t>{2, 3, 4});
        CHECK(resumed.to_json(false) == full.to_json(false));
        CHECK(outputs_of(dir / "part") == outputs_of(dir / "full"));
        CHECK_FALSE(fs::exists(dir / "part/_INCOMPLETE"));
    }

    TEST_CASE("malformed lines are counted, not fatal") {
        testutil::TempDir dir("cf-bad");
        testutil::spit(dir / "in/a.jsonl", "{\"id\":\"1\",\"text\":\"fine\"}\nnot json\n{\"id\":\"2\"}\n\n");
        auto cfg = base_config();
        cfg.stages = {"exact_dedup"};
        cfg.write_rejects = true;
        cfg.inputs = {(dir / "in").string()};
        cfg.output_dir = (dir / "out").string();
        const auto rep = run_pipeline(cfg);
        CHECK(rep.input_records == 3);
        CHECK(rep.output_records == 1);
        CHECK(rep.stages[0].rejected.at("INVALID_RECORD") == 2);
        CHECK(rep.accounting_ok());
        CHECK(read_lines(dir / "out/rejects-part-00000.jsonl").size() == 2);
    }

    TEST_CASE("bitext pipeline") {
        testutil::TempDir dir("cf-bitext");
        const std::vector<SentencePair> pairs{
            {"Hello world", "Olá mundo", "en", "pt", {{"bicleaner", 0.65}, {"cometkiwi", 0.8}}},
            {"Hello world", "Olá mundo", "en", "pt", {{"bicleaner", 0.9}, {"cometkiwi", 0.9}}},
            {"Good day", "Bom dia", "en", "pt", {{"bicleaner", 0.55}, {"cometkiwi", 0.8}}},
            {"Guten Tag", "Good day", "de", "en", {{"bicleaner", 0.55}, {"cometkiwi", 0.8}}},
            {"Danke", "Thanks", "de", "en", {{"bicleaner", 0.9}, {"cometkiwi", 0.6}}},
            {"Bitte", "Please", "de", "en", {}},
        };
        write_pairs(dir / "in/p.tsv", pairs);
        PipelineConfig cfg;
        cfg.inputs = {(dir / "in").string()};
        cfg.output_dir = (dir / "out").string();
        const auto rep = run_bitext_pipeline(cfg);
        CHECK(rep.accounting_ok());
        const auto kept = read_pairs(dir / "out/part-00000.tsv");
        REQUIRE(kept.size() == 3);
        CHECK(kept[0] == pairs[0]);
        CHECK(kept[1] == pairs[3]);
        CHECK(kept[2] == pairs[5]);
        CHECK(rep.stages[1].rejected.at("DUPLICATE") == 1);
        CHECK(rep.stages[2].rejected.at("BICLEANER") == 1);
        CHECK(rep.stages[2].rejected.at("COMETKIWI") == 1);
        cfg.quality.strict = true;
        cfg.output_dir = (dir / "strict").string();
        CHECK(run_bitext_pipeline(cfg).stages[2].rejected.at("MISSING_SCORE") == 1);
    }

    TEST_CASE("configuration") {
        const auto c = PipelineConfig::from_json(nlohmann::json::parse(
            R"({"stages":["heuristics","exact_dedup"],"workers":4,"phase":2,"heuristics":{"min_chars":100},
                "langid":{"trust_tags":true},"dedup":{"bands":16,"rows":8}})"));
        CHECK(c.stages == std::vector<std::string>{"heuristics", "exact_dedup"});
        CHECK(c.workers == 4);
        CHECK(c.phase == Phase::P2);
        CHECK(c.heuristics.min_chars == 100);
        CHECK(PipelineConfig::from_json(c.to_json()).to_json() == c.to_json());

        auto w8 = c;
        w8.workers = 8;
        w8.output_dir = "elsewhere";
        CHECK(w8.digest() == c.digest());
        auto other = c;
        other.quality.cometkiwi_min = 0.75;
        CHECK(other.digest() != c.digest());

        for (const char* bad : {R"({"wrokers":2})", R"({"stages":["nope"]})", R"({"stages":["edu","edu"]})",
                                R"({"workers":0})", R"({"heuristics":{"paragraph_policy":"x"}})",
                                R"({"dedup":{"bands":10}})", R"({"quality":{"cometkiwi_min":2}})", R"({"phase":4})",
                                R"({"heuristics":{"min_chars":"many"}})", R"([])"}) {
            CAPTURE(bad);
            try {
                PipelineConfig::from_json(nlohmann::json::parse(bad));
                FAIL("accepted");
            } catch (const Error& e) {
                CHECK(e.code() == ErrorCode::ConfigError);
            }
        }
        PipelineConfig needs_lid;
        CHECK_THROWS_AS(filter_documents({}, needs_lid), Error);
        PipelineConfig no_inputs = base_config();
        CHECK_THROWS_AS(run_pipeline(no_inputs), Error);
        auto wrong_kind = base_config();
        wrong_kind.stages = {"bitext_gate"};
        CHECK_THROWS_AS(filter_documents({}, wrong_kind), Error);
    }

    TEST_CASE("stats") {
        const std::vector<Document> docs{{"1", "one two three", "en", {}, ""}, {"2", "eins zwei", "de", {}, ""},
                                         {"3", "four", "en", {}, ""}};
        const auto s = stats_report(docs);
        CHECK(s.by_language.at("en").documents == 2);
        CHECK(s.by_language.at("en").tokens == 4);
        CHECK(s.by_language.at("de").bytes == 9);
        CHECK(s.totals.documents == 3);
        CHECK(s.to_tsv().rfind("language\t", 0) == 0);
    }
}
