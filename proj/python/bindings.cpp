#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "corpus_forge/bpe.hpp"
#include "corpus_forge/dedup.hpp"
#include "corpus_forge/error.hpp"
#include "corpus_forge/heuristics.hpp"
#include "corpus_forge/lr_schedule.hpp"
#include "corpus_forge/mixture.hpp"
#include "corpus_forge/ngram_lm.hpp"
#include "corpus_forge/pipeline.hpp"
#include "corpus_forge/quality_gate.hpp"
#include "corpus_forge/records.hpp"
#include "corpus_forge/sft_templates.hpp"

namespace py = pybind11;
using namespace corpus_forge;

namespace {

// Config sections arrive as JSON text and reuse the CLI config parser.
PipelineConfig config_from(const std::string& json_text) {
    return PipelineConfig::from_json(json_text.empty() ? nlohmann::json::object() : nlohmann::json::parse(json_text));
}

py::dict verdict_dict(const FilterVerdict& v) {
    py::dict d;
    d["passed"] = v.passed;
    d["reason"] = std::string(reason_name(v.reason));
    d["detail"] = v.detail ? py::cast(*v.detail) : py::none();
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "corpus-forge core";

    // message is "CODE: detail"
    py::register_exception<Error>(m, "CorpusForgeError");

    py::class_<Document>(m, "Document")
        .def(py::init([](std::string text, std::string id, std::string lang, ScoreMap scores, std::string source) {
                 return Document{std::move(id), std::move(text), std::move(lang), std::move(scores), std::move(source)};
             }),
             py::arg("text"), py::arg("id") = "", py::arg("lang") = "", py::arg("scores") = ScoreMap{},
             py::arg("source") = "")
        .def_readwrite("id", &Document::id)
        .def_readwrite("text", &Document::text)
        .def_readwrite("lang", &Document::language)
        .def_readwrite("scores", &Document::scores)
        .def_readwrite("source", &Document::source)
        .def("to_json", [](const Document& d) { return document_to_json(d); })
        .def_static("from_json", [](const std::string& line) { return parse_document_json(line); })
        .def("__eq__", [](const Document& a, const Document& b) { return a == b; })
        .def("__repr__", [](const Document& d) { return "<Document " + d.id + " " + std::to_string(d.text.size()) + "B>"; });

    py::class_<SentencePair>(m, "SentencePair")
        .def(py::init([](std::string src, std::string tgt, std::string src_lang, std::string tgt_lang, ScoreMap scores) {
                 return SentencePair{std::move(src), std::move(tgt), std::move(src_lang), std::move(tgt_lang), std::move(scores)};
             }),
             py::arg("src"), py::arg("tgt"), py::arg("src_lang"), py::arg("tgt_lang"), py::arg("scores") = ScoreMap{})
        .def_readwrite("src", &SentencePair::src_text)
        .def_readwrite("tgt", &SentencePair::tgt_text)
        .def_readwrite("src_lang", &SentencePair::src_lang)
        .def_readwrite("tgt_lang", &SentencePair::tgt_lang)
        .def_readwrite("scores", &SentencePair::scores);

    // text primitives
    m.def("word_segment", [](const std::string& t) { return word_segment(t); });
    m.def("text_stats", [](const std::string& t) {
        const auto s = text_stats(t);
        py::dict d;
        d["char_count"] = s.char_count;
        d["word_count"] = s.word_count;
        d["uppercase_fraction"] = s.uppercase_fraction;
        d["symbol_to_word"] = s.symbol_to_word;
        d["nonalpha_word_fraction"] = s.nonalpha_word_fraction;
        return d;
    });

    // heuristics and gates
    m.def("_apply_heuristics", [](const Document& doc, const std::string& cfg) {
        const auto [v, cleaned] = apply_heuristics(doc, config_from(cfg).heuristics);
        return py::make_tuple(verdict_dict(v), cleaned);
    });
    m.def("_edu_gate", [](const Document& doc, const std::string& phase, const std::string& cfg) {
        return verdict_dict(edu_score_gate(doc, config_from(cfg).quality, parse_phase(phase)));
    });
    m.def("_bitext_gate", [](const SentencePair& p, const std::string& cfg) {
        return verdict_dict(bitext_gate(p, config_from(cfg).quality));
    });

    // dedup
    m.def("normalize_for_dedup", [](const std::string& t) { return normalize_for_dedup(t); });
    m.def("exact_dedup", &exact_dedup);
    m.def("near_dup_cluster", [](const std::vector<Document>& docs, double threshold) { return near_dup_cluster(docs, threshold); },
          py::arg("docs"), py::arg("threshold") = 0.8);
    m.def("minhash_jaccard", [](const std::string& a, const std::string& b, std::uint64_t seed) {
        return estimated_jaccard(minhash_signature(a, seed), minhash_signature(b, seed));
    }, py::arg("a"), py::arg("b"), py::arg("seed") = 0);

    // n-gram LM and language id
    py::class_<NgramModel>(m, "NgramModel")
        .def_property_readonly("order", &NgramModel::order)
        .def_property_readonly("vocab_size", &NgramModel::vocab_size)
        .def("count", [](const NgramModel& model, const std::vector<std::string>& gram) { return model.count(gram); })
        .def("save", [](const NgramModel& model, const std::filesystem::path& p) { model.save(p); })
        .def_static("load", &NgramModel::load);
    m.def("train_lm", &train_lm, py::arg("corpus"), py::arg("order") = 5, py::arg("backoff_alpha") = NgramModel::kDefaultAlpha);
    m.def("perplexity", [](const NgramModel& model, const std::string& t) { return perplexity(model, t); });
    py::class_<LangProfile>(m, "LangProfile").def_readonly("language", &LangProfile::language);
    m.def("train_langid", &train_langid);
    m.def("identify_language", [](const std::vector<LangProfile>& profiles, const std::string& text) {
        const auto g = identify_language(profiles, text);
        return py::make_tuple(g.language, g.score);
    });

    // tokenizer
    py::class_<BpeVocab>(m, "BpeVocab")
        .def(py::init<std::vector<std::string>, std::vector<std::pair<std::string, std::string>>>(), py::arg("pieces"),
             py::arg("merges"))
        .def_static("load_dir", &BpeVocab::load_dir)
        .def("save_dir", &BpeVocab::save_dir)
        .def("__len__", &BpeVocab::size)
        .def("piece", &BpeVocab::piece)
        .def("find", &BpeVocab::find)
        .def("encode", [](const BpeVocab& v, const std::string& t) { return bpe_encode(v, t); })
        .def("decode", [](const BpeVocab& v, const std::vector<TokenId>& ids) { return py::bytes(bpe_decode(v, ids)); });
    m.def("fertility", &fertility);

    // mixture planning
    m.def("preset_names", [] {
        std::vector<std::string> names;
        for (const auto& [n, s] : phase_presets()) names.push_back(n);
        return names;
    });
    m.def("plan_phase", [](const std::string& preset_name, std::uint64_t total, std::map<std::string, double> availability,
                           std::map<std::string, double> overrides) {
        auto spec = preset(preset_name);
        spec.availability = std::move(availability);
        spec.overrides = std::move(overrides);
        return plan_phase(spec, total).to_json();
    }, py::arg("preset"), py::arg("phase_total_tokens"), py::arg("availability"),
          py::arg("overrides") = std::map<std::string, double>{});

    // schedule
    m.def("_lr_at", [](const std::string& cfg, std::int64_t step) {
        const auto p = lr_at(config_from(cfg).schedule, step);
        return py::make_tuple(p.lr, std::string(schedule_phase_name(p.phase)));
    });
    m.def("_phase_boundaries", [](const std::string& cfg) {
        const auto b = phase_boundaries(config_from(cfg).schedule);
        return py::make_tuple(b.warmup_end, b.stable_end, b.decay_end, b.final_end);
    });

    // SFT templates
    m.def("render_instruction_prompt", [](const std::string& language, const std::string& text, const std::string& category) {
        return render_instruction_prompt({language, text, category});
    });
    m.def("render_answer_prompt", [](const std::string& language, const std::string& doc, const std::string& instr) {
        return render_answer_prompt(language, doc, instr);
    });
    m.def("parse_instruction_response", [](const std::string& raw) {
        const auto p = parse_instruction_response(raw);
        py::dict d;
        d["summary"] = p.summary;
        d["instruction"] = p.instruction;
        d["category"] = std::string(category_name(p.category));
        return d;
    });

    // pipeline
    m.def("_filter_documents", [](const std::vector<Document>& docs, const std::string& cfg) {
        auto [out, rep] = filter_documents(docs, config_from(cfg));
        return py::make_tuple(std::move(out), rep.to_json(true).dump());
    });
}
