#pragma once

// Sense-annotated sentence: the exported gold row consumed by dataset
// statistics and the WiC builder.

#include <string>
#include <unordered_set>
#include <vector>

#include "senseloom/corpus.hpp"
#include "senseloom/io.hpp"

namespace senseloom {

struct GoldRecord {
  SentenceRecord sentence;
  std::string sense_id;
  std::string annotator;
  std::string provenance;
  bool operator==(const GoldRecord&) const = default;
};

inline json to_json(const GoldRecord& g) {
  json j = to_json(g.sentence);
  j["sense_id"] = g.sense_id;
  j["annotator"] = g.annotator;
  j["provenance"] = g.provenance;
  return j;
}

inline GoldRecord gold_from_json(const json& j, std::size_t line_no = 0,
                                 std::string_view what = "gold") {
  GoldRecord g;
  g.sentence = sentence_from_json(j, line_no, what);
  g.sense_id = require_field<std::string>(j, "sense_id", line_no, what);
  if (g.sense_id.empty()) {
    fail(ErrorKind::validation,
         std::string(what) + " line " + std::to_string(line_no) + ": empty sense_id");
  }
  g.annotator = j.value("annotator", std::string{});
  g.provenance = j.value("provenance", std::string{});
  return g;
}

inline std::vector<GoldRecord> read_gold(const fs::path& path) {
  std::vector<GoldRecord> out;
  std::unordered_set<std::string> ids;
  for (auto& [line_no, j] : read_jsonl(path)) {
    out.push_back(gold_from_json(j, line_no, path.string()));
    if (!ids.insert(out.back().sentence.id).second) {
      fail(ErrorKind::validation, path.string() + " line " + std::to_string(line_no) +
                                      ": duplicate sentence id " + out.back().sentence.id);
    }
  }
  return out;
}

inline std::string gold_to_jsonl(const std::vector<GoldRecord>& rows) {
  std::vector<json> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(to_json(r));
  return to_jsonl(out);
}

}  // namespace senseloom
