#pragma once

// Corpus loading, target-word occurrence search and candidate sampling.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "senseloom/error.hpp"
#include "senseloom/io.hpp"
#include "senseloom/random.hpp"
#include "senseloom/segment.hpp"
#include "senseloom/utf8.hpp"

namespace senseloom {

// Half-open [start, end) in Unicode scalar values.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct RawSentence {
  std::string id;
  std::string text;
  std::string source;
  bool operator==(const RawSentence&) const = default;
};

using Corpus = std::vector<RawSentence>;

struct SentenceRecord {
  std::string id;
  std::string lang;
  std::string lemma;
  std::string surface_form;
  std::string text;
  Span target_span;
  std::string source;
  bool operator==(const SentenceRecord&) const = default;
};

struct LemmaSpec {
  std::string lemma;
  std::vector<std::string> forms;
  std::string lang;
  std::vector<std::string> gloss_hints;
};

struct CorpusConfig {
  std::size_t min_tokens = 4;
  std::size_t max_tokens = 128;
  bool case_fold = false;
};

enum class CorpusFormat { jsonl, plain_lines };

inline void validate(const LemmaSpec& spec) {
  if (spec.lemma.empty()) fail(ErrorKind::validation, "lemma spec: empty lemma");
  if (spec.forms.empty()) {
    fail(ErrorKind::validation, "lemma spec \"" + spec.lemma + "\": no forms");
  }
  std::unordered_set<std::string> seen;
  for (const auto& f : spec.forms) {
    if (f.empty()) fail(ErrorKind::validation, "lemma spec \"" + spec.lemma + "\": empty form");
    if (!seen.insert(f).second) {
      fail(ErrorKind::validation,
           "lemma spec \"" + spec.lemma + "\": duplicate form \"" + f + "\"");
    }
  }
  if (!seen.contains(spec.lemma)) {
    fail(ErrorKind::validation,
         "lemma spec \"" + spec.lemma + "\": lemma is not among its forms");
  }
}

// Checks the SentenceRecord invariants that do not need the lemma spec.
inline void validate(const SentenceRecord& r) {
  utf8::require_valid(r.text, "sentence " + r.id);
  const std::size_t len = utf8::length(r.text);
  if (!(r.target_span.start < r.target_span.end && r.target_span.end <= len)) {
    fail(ErrorKind::validation, "sentence " + r.id + ": target span [" +
                                    std::to_string(r.target_span.start) + ", " +
                                    std::to_string(r.target_span.end) + ") invalid for length " +
                                    std::to_string(len));
  }
  if (utf8::slice(r.text, r.target_span.start, r.target_span.end) != r.surface_form) {
    fail(ErrorKind::validation,
         "sentence " + r.id + ": target span does not cover surface form \"" + r.surface_form +
             "\"");
  }
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const SentenceRecord& r) {
  return json{{"id", r.id},
              {"lang", r.lang},
              {"lemma", r.lemma},
              {"surface_form", r.surface_form},
              {"text", r.text},
              {"target_span", json::array({r.target_span.start, r.target_span.end})},
              {"source", r.source}};
}

inline Span span_from_json(const json& j, std::size_t line_no, std::string_view what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() ||
      !j[1].is_number_unsigned()) {
    fail(ErrorKind::validation,
         std::string(what) + " line " + std::to_string(line_no) + ": span must be [start, end]");
  }
  return Span{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

inline SentenceRecord sentence_from_json(const json& j, std::size_t line_no = 0,
                                         std::string_view what = "sentence") {
  if (!j.is_object()) {
    fail(ErrorKind::validation,
         std::string(what) + " line " + std::to_string(line_no) + ": expected an object");
  }
  SentenceRecord r;
  r.id = require_field<std::string>(j, "id", line_no, what);
  r.lang = require_field<std::string>(j, "lang", line_no, what);
  r.lemma = require_field<std::string>(j, "lemma", line_no, what);
  r.surface_form = require_field<std::string>(j, "surface_form", line_no, what);
  r.text = require_field<std::string>(j, "text", line_no, what);
  if (!j.contains("target_span")) {
    fail(ErrorKind::validation, std::string(what) + " line " + std::to_string(line_no) +
                                    ": missing field \"target_span\"");
  }
  r.target_span = span_from_json(j["target_span"], line_no, what);
  r.source = j.value("source", std::string{});
  validate(r);
  return r;
}

inline json to_json(const LemmaSpec& s) {
  json j{{"lemma", s.lemma}, {"forms", s.forms}, {"lang", s.lang}};
  if (!s.gloss_hints.empty()) j["gloss_hints"] = s.gloss_hints;
  return j;
}

inline LemmaSpec lemma_spec_from_json(const json& j, std::size_t line_no = 0,
                                      std::string_view what = "lemma spec") {
  LemmaSpec s;
  s.lemma = require_field<std::string>(j, "lemma", line_no, what);
  s.forms = require_field<std::vector<std::string>>(j, "forms", line_no, what);
  s.lang = j.value("lang", std::string{});
  if (j.contains("gloss_hints")) {
    s.gloss_hints = require_field<std::vector<std::string>>(j, "gloss_hints", line_no, what);
  }
  validate(s);
  return s;
}

inline std::vector<SentenceRecord> read_sentences(const fs::path& path) {
  std::vector<SentenceRecord> out;
  std::unordered_set<std::string> ids;
  for (auto& [line_no, j] : read_jsonl(path)) {
    out.push_back(sentence_from_json(j, line_no, path.string()));
    if (!ids.insert(out.back().id).second) {
      fail(ErrorKind::validation,
           path.string() + " line " + std::to_string(line_no) + ": duplicate id " + out.back().id);
    }
  }
  return out;
}

inline std::vector<LemmaSpec> read_lemma_specs(const fs::path& path) {
  std::vector<LemmaSpec> out;
  for (auto& [line_no, j] : read_jsonl(path)) {
    out.push_back(lemma_spec_from_json(j, line_no, path.string()));
  }
  return out;
}

inline std::string sentences_to_jsonl(const std::vector<SentenceRecord>& records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  return to_jsonl(rows);
}

// ---------------------------------------------------------------------------
// load_sentences

// Parses corpus bytes. Ids default to "<source>:<line>"; byte-identical texts
// after the first are dropped.
inline Corpus parse_corpus(std::string_view bytes, CorpusFormat format, const std::string& source) {
  if (auto bad = utf8::find_invalid(bytes)) {
    fail(ErrorKind::validation,
         source + ": malformed UTF-8 at byte offset " + std::to_string(*bad),
         std::to_string(*bad));
  }
  Corpus out;
  std::unordered_set<std::string> seen_text;
  std::unordered_set<std::string> seen_id;
  auto add = [&](RawSentence s, std::size_t line_no) {
    if (!seen_text.insert(s.text).second) return;
    if (!seen_id.insert(s.id).second) {
      fail(ErrorKind::validation,
           source + " line " + std::to_string(line_no) + ": duplicate id \"" + s.id + "\"");
    }
    out.push_back(std::move(s));
  };

  if (format == CorpusFormat::plain_lines) {
    for_each_line(bytes, [&](std::size_t line_no, std::string_view line) {
      if (is_blank(line)) return;
      add(RawSentence{source + ":" + std::to_string(line_no), std::string(line), source},
          line_no);
    });
    return out;
  }

  for (auto& [line_no, j] : parse_jsonl(bytes, source)) {
    if (!j.is_object()) {
      fail(ErrorKind::validation,
           source + " line " + std::to_string(line_no) + ": expected a JSON object");
    }
    RawSentence s;
    s.text = require_field<std::string>(j, "text", line_no, source);
    s.source = j.contains("source") ? require_field<std::string>(j, "source", line_no, source)
                                    : source;
    s.id = j.contains("id") ? require_field<std::string>(j, "id", line_no, source)
                            : s.source + ":" + std::to_string(line_no);
    if (is_blank(s.text)) continue;
    add(std::move(s), line_no);
  }
  return out;
}

inline Corpus load_sentences(const fs::path& path, CorpusFormat format,
                             std::optional<std::string> source = std::nullopt) {
  return parse_corpus(read_file(path), format, source.value_or(path.stem().string()));
}

inline json to_json(const RawSentence& s) {
  return json{{"id", s.id}, {"text", s.text}, {"source", s.source}};
}

// ---------------------------------------------------------------------------
// find_occurrences

// One record per whole-token match of any form. A sentence with several
// matches yields ids "<id>#1", "<id>#2", ... in text order; a single match
// keeps the sentence id.
inline std::vector<SentenceRecord> find_occurrences(const Corpus& corpus, const LemmaSpec& spec,
                                                    const CorpusConfig& config = {}) {
  validate(spec);
  std::unordered_set<std::string> forms;
  for (const auto& f : spec.forms) forms.insert(config.case_fold ? fold_case(f) : f);

  std::vector<SentenceRecord> out;
  for (const auto& s : corpus) {
    const auto tokens = word_tokens(s.text);
    if (tokens.size() < config.min_tokens || tokens.size() > config.max_tokens) continue;
    const auto offs = utf8::scalar_offsets(s.text);

    std::vector<SentenceRecord> hits;
    for (const auto& t : tokens) {
      std::string_view surface(s.text.data() + offs[t.start], offs[t.end] - offs[t.start]);
      const bool match = config.case_fold ? forms.contains(fold_case(surface))
                                          : forms.contains(std::string(surface));
      if (!match) continue;
      hits.push_back(SentenceRecord{s.id, spec.lang, spec.lemma, std::string(surface), s.text,
                                    Span{t.start, t.end}, s.source});
    }
    if (hits.size() > 1) {
      for (std::size_t k = 0; k < hits.size(); ++k) hits[k].id += "#" + std::to_string(k + 1);
    }
    for (auto& h : hits) out.push_back(std::move(h));
  }
  return out;
}

// ---------------------------------------------------------------------------
// sample_candidates

// Uniform sample without replacement (partial Fisher-Yates). Output is in
// draw order.
inline std::vector<SentenceRecord> sample_candidates(const std::vector<SentenceRecord>& records,
                                                     std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorKind::parameter, "sample size must be >= 1");
  std::vector<std::size_t> idx(records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  const std::size_t take = std::min(n, records.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<SentenceRecord> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(records[idx[i]]);
  return out;
}

}  // namespace senseloom
