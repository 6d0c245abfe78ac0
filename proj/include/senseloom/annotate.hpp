#pragma once

// Annotation projects. Every mutation is an event appended to one JSONL log
// per project; the in-memory state is the fold of the log, so replaying any
// prefix of the log reproduces the state at that revision.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "senseloom/corpus.hpp"
#include "senseloom/embedstore.hpp"
#include "senseloom/error.hpp"
#include "senseloom/gold.hpp"
#include "senseloom/io.hpp"
#include "senseloom/numerics.hpp"

namespace senseloom {

enum class Provenance { manual, model_suggested, verified };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::manual: return "manual";
    case Provenance::model_suggested: return "model-suggested";
    case Provenance::verified: return "verified";
  }
  return "?";
}

inline Provenance parse_provenance(const std::string& s) {
  if (s == "manual") return Provenance::manual;
  if (s == "model-suggested") return Provenance::model_suggested;
  if (s == "verified") return Provenance::verified;
  fail(ErrorKind::validation,
       "unknown provenance \"" + s + "\" (expected manual, model-suggested or verified)");
}

struct SenseDef {
  std::string sense_id;
  std::string gloss;
  std::optional<std::string> gloss_en;
};

inline json to_json(const SenseDef& s) {
  json j{{"sense_id", s.sense_id}, {"gloss", s.gloss}};
  if (s.gloss_en) j["gloss_en"] = *s.gloss_en;
  return j;
}

struct SenseAnnotation {
  std::string sentence_id;
  std::string lemma;
  std::string sense_id;
  std::string annotator;
  Provenance provenance = Provenance::manual;
  std::int64_t timestamp = 0;  // UTC seconds
};

struct LemmaProjection {
  ProjectionMethod method = ProjectionMethod::mds;
  std::string clustering;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> ids;
  std::vector<std::array<double, 2>> points;
  std::vector<std::size_t> clusters;
};

struct LemmaState {
  LemmaSpec spec;
  std::vector<SenseDef> senses;
  std::vector<std::string> sentence_ids;  // insertion order
  std::optional<LemmaProjection> projection;

  const SenseDef* find_sense(const std::string& id) const {
    for (const auto& s : senses) {
      if (s.sense_id == id) return &s;
    }
    return nullptr;
  }
};

struct CurrentLabel {
  SenseAnnotation annotation;
  std::uint64_t revision = 0;
};

// (sentence_id, lemma, annotator)
using AnnotationKey = std::tuple<std::string, std::string, std::string>;

// ---------------------------------------------------------------------------
// State

class ProjectState {
 public:
  const std::string& id() const { return id_; }
  const std::string& lang() const { return lang_; }
  std::uint64_t revision() const { return revision_; }
  const std::map<std::string, LemmaState>& lemmas() const { return lemmas_; }
  const std::map<std::string, SentenceRecord>& sentences() const { return sentences_; }
  const std::map<AnnotationKey, CurrentLabel>& current() const { return current_; }

  const LemmaState& lemma(const std::string& l) const {
    auto it = lemmas_.find(l);
    if (it == lemmas_.end()) fail(ErrorKind::not_found, "unknown lemma \"" + l + "\"", l);
    return it->second;
  }

  // Validates `event` against the current state, then applies it. Leaves
  // the state untouched on error.
  void apply(const json& event) {
    check(event);
    mutate(event);
    revision_ = event.at("rev").get<std::uint64_t>();
  }

  void check(const json& e) const {
    if (!e.is_object() || !e.contains("rev") || !e["rev"].is_number_integer() ||
        e["rev"].get<std::int64_t>() < 1 || !e.contains("type") || !e["type"].is_string()) {
      fail(ErrorKind::validation, "log event lacks rev/type");
    }
    if (e["rev"].get<std::uint64_t>() != revision_ + 1) {
      fail(ErrorKind::validation, "log event rev " + e["rev"].dump() + " does not follow " +
                                      std::to_string(revision_));
    }
    const auto type = e["type"].get<std::string>();
    if (revision_ == 0 && type != "project") {
      fail(ErrorKind::validation, "first log event must create the project");
    }
    if (type == "project") {
      if (revision_ != 0) fail(ErrorKind::validation, "project already created");
      const auto id = field<std::string>(e, "id");
      if (id.empty()) fail(ErrorKind::validation, "empty project id");
      field<std::string>(e, "lang");
    } else if (type == "lemma") {
      const auto spec = lemma_spec_from_json(e.at("spec"));
      if (lemmas_.contains(spec.lemma)) {
        fail(ErrorKind::conflict, "lemma \"" + spec.lemma + "\" already exists");
      }
    } else if (type == "sense") {
      const auto& l = lemma(field<std::string>(e, "lemma"));
      const auto sid = field<std::string>(e, "sense_id");
      if (sid.empty()) fail(ErrorKind::validation, "empty sense_id");
      field<std::string>(e, "gloss");
      if (l.find_sense(sid)) {
        fail(ErrorKind::conflict, "sense \"" + sid + "\" already defined for this lemma");
      }
    } else if (type == "sentence") {
      const auto r = sentence_from_json(e.at("record"));
      lemma(r.lemma);
      if (sentences_.contains(r.id)) {
        fail(ErrorKind::conflict, "sentence id \"" + r.id + "\" already exists");
      }
    } else if (type == "projection") {
      const auto& l = lemma(field<std::string>(e, "lemma"));
      const auto ids = field<std::vector<std::string>>(e, "ids");
      const auto pts = field<std::vector<std::array<double, 2>>>(e, "points");
      const auto cl = field<std::vector<std::size_t>>(e, "clusters");
      parse_projection_method(field<std::string>(e, "method"));
      if (pts.size() != ids.size() || cl.size() != ids.size()) {
        fail(ErrorKind::validation, "projection arrays are misaligned");
      }
      std::set<std::string> known(l.sentence_ids.begin(), l.sentence_ids.end());
      for (const auto& id : ids) {
        if (!known.contains(id)) {
          fail(ErrorKind::validation, "projection references unknown sentence " + id);
        }
      }
    } else if (type == "assign") {
      const auto a = annotation_from(e);
      check_refs(a.sentence_id, a.lemma);
      if (a.annotator.empty()) fail(ErrorKind::validation, "empty annotator");
      if (!lemma(a.lemma).find_sense(a.sense_id)) {
        fail(ErrorKind::not_found, "unknown sense \"" + a.sense_id + "\" for lemma " + a.lemma,
             a.sense_id);
      }
    } else if (type == "unassign") {
      const AnnotationKey key{field<std::string>(e, "sentence_id"), field<std::string>(e, "lemma"),
                              field<std::string>(e, "annotator")};
      if (!current_.contains(key)) {
        fail(ErrorKind::conflict, "nothing to unassign");
      }
    } else {
      fail(ErrorKind::validation, "unknown log event type \"" + type + "\"");
    }
  }

  // Canonical dump used to compare states.
  json snapshot() const {
    json j{{"id", id_}, {"lang", lang_}, {"revision", revision_}};
    json lem = json::object();
    for (const auto& [name, l] : lemmas_) {
      json senses = json::array();
      for (const auto& s : l.senses) senses.push_back(to_json(s));
      lem[name] = {{"spec", to_json(l.spec)},
                   {"senses", senses},
                   {"sentences", l.sentence_ids},
                   {"projection", l.projection ? json(l.projection->ids) : json(nullptr)}};
    }
    j["lemmas"] = lem;
    json cur = json::array();
    for (const auto& [key, c] : current_) {
      cur.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), c.annotation.sense_id,
                     to_string(c.annotation.provenance), c.revision});
    }
    j["current"] = cur;
    return j;
  }

  static SenseAnnotation annotation_from(const json& e) {
    SenseAnnotation a;
    a.sentence_id = field<std::string>(e, "sentence_id");
    a.lemma = field<std::string>(e, "lemma");
    a.sense_id = field<std::string>(e, "sense_id");
    a.annotator = field<std::string>(e, "annotator");
    a.provenance = parse_provenance(field<std::string>(e, "provenance"));
    a.timestamp = e.value("timestamp", std::int64_t{0});
    return a;
  }

 private:
  template <typename T>
  static T field(const json& e, const char* key) {
    auto it = e.find(key);
    if (it == e.end()) fail(ErrorKind::validation, std::string("missing field \"") + key + "\"");
    try {
      return it->get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::validation, std::string("field \"") + key + "\" has the wrong type");
    }
  }

  void check_refs(const std::string& sentence_id, const std::string& lemma_name) const {
    lemma(lemma_name);
    auto it = sentences_.find(sentence_id);
    if (it == sentences_.end()) {
      fail(ErrorKind::not_found, "unknown sentence \"" + sentence_id + "\"", sentence_id);
    }
    if (it->second.lemma != lemma_name) {
      fail(ErrorKind::validation,
           "sentence \"" + sentence_id + "\" belongs to lemma \"" + it->second.lemma + "\"");
    }
  }

  void mutate(const json& e) {
    const auto type = e["type"].get<std::string>();
    const auto rev = e["rev"].get<std::uint64_t>();
    if (type == "project") {
      id_ = e["id"].get<std::string>();
      lang_ = e["lang"].get<std::string>();
    } else if (type == "lemma") {
      auto spec = lemma_spec_from_json(e["spec"]);
      auto name = spec.lemma;
      lemmas_[name].spec = std::move(spec);
    } else if (type == "sense") {
      SenseDef s{e["sense_id"].get<std::string>(), e["gloss"].get<std::string>(), std::nullopt};
      if (e.contains("gloss_en") && e["gloss_en"].is_string()) s.gloss_en = e["gloss_en"];
      lemmas_[e["lemma"].get<std::string>()].senses.push_back(std::move(s));
    } else if (type == "sentence") {
      auto r = sentence_from_json(e["record"]);
      lemmas_[r.lemma].sentence_ids.push_back(r.id);
      auto id = r.id;
      sentences_.emplace(std::move(id), std::move(r));
    } else if (type == "projection") {
      LemmaProjection p;
      p.method = parse_projection_method(e["method"].get<std::string>());
      p.clustering = e.value("clustering", std::string{});
      p.k = e.value("k", std::size_t{0});
      p.seed = e.value("seed", std::uint64_t{0});
      p.ids = e["ids"].get<std::vector<std::string>>();
      p.points = e["points"].get<std::vector<std::array<double, 2>>>();
      p.clusters = e["clusters"].get<std::vector<std::size_t>>();
      lemmas_[e["lemma"].get<std::string>()].projection = std::move(p);
    } else if (type == "assign") {
      auto a = annotation_from(e);
      AnnotationKey key{a.sentence_id, a.lemma, a.annotator};
      current_[key] = CurrentLabel{std::move(a), rev};
    } else if (type == "unassign") {
      current_.erase(AnnotationKey{e["sentence_id"].get<std::string>(),
                                   e["lemma"].get<std::string>(),
                                   e["annotator"].get<std::string>()});
    }
  }

  std::string id_;
  std::string lang_;
  std::uint64_t revision_ = 0;
  std::map<std::string, LemmaState> lemmas_;
  std::map<std::string, SentenceRecord> sentences_;
  std::map<AnnotationKey, CurrentLabel> current_;
};

// Folds a log. A final line without its newline that does not parse is a
// torn write and is ignored; any other bad line is an error.
inline ProjectState replay(std::string_view log) {
  ProjectState st;
  const bool terminated = log.empty() || log.back() == '\n';
  std::size_t total_lines = 0;
  for_each_line(log, [&](std::size_t, std::string_view) { ++total_lines; });
  for_each_line(log, [&](std::size_t line_no, std::string_view line) {
    if (is_blank(line)) return;
    json e = json::parse(line, nullptr, false);
    if (e.is_discarded()) {
      if (!terminated && line_no == total_lines) return;
      fail(ErrorKind::validation, "project log line " + std::to_string(line_no) + " is not JSON");
    }
    try {
      st.apply(e);
    } catch (const Error& err) {
      fail(ErrorKind::validation,
           "project log line " + std::to_string(line_no) + ": " + err.what());
    }
  });
  return st;
}

// ---------------------------------------------------------------------------
// Views and export

struct AnnotationView {
  std::string lemma;
  std::vector<std::string> ids;
  std::vector<std::array<double, 2>> points;
  std::vector<std::size_t> clusters;
  std::vector<std::optional<std::string>> senses;  // current label per id
  std::vector<std::string> texts;
  std::vector<Span> spans;
  std::vector<SenseDef> inventory;
  std::map<std::string, std::size_t> counts;
};

// Label shown for a sentence: the named annotator's current label, or, when
// no annotator is named, the most recent current label of any annotator.
inline const CurrentLabel* label_for(const ProjectState& st, const std::string& sentence_id,
                                     const std::string& lemma,
                                     const std::optional<std::string>& annotator) {
  const auto& cur = st.current();
  if (annotator) {
    auto it = cur.find(AnnotationKey{sentence_id, lemma, *annotator});
    return it == cur.end() ? nullptr : &it->second;
  }
  const CurrentLabel* best = nullptr;
  for (auto it = cur.lower_bound(AnnotationKey{sentence_id, lemma, ""});
       it != cur.end() && std::get<0>(it->first) == sentence_id &&
       std::get<1>(it->first) == lemma;
       ++it) {
    if (!best || it->second.revision > best->revision) best = &it->second;
  }
  return best;
}

inline AnnotationView make_view(const ProjectState& st, const std::string& lemma_name,
                                const std::optional<std::string>& annotator = std::nullopt) {
  const auto& l = st.lemma(lemma_name);
  AnnotationView v;
  v.lemma = lemma_name;
  v.inventory = l.senses;
  for (const auto& s : l.senses) v.counts[s.sense_id] = 0;
  if (l.sentence_ids.empty()) return v;
  if (!l.projection) {
    fail(ErrorKind::conflict, "projection missing for lemma \"" + lemma_name +
                                  "\"; recompute required");
  }
  const auto& p = *l.projection;
  v.ids = p.ids;
  v.points = p.points;
  v.clusters = p.clusters;
  for (const auto& id : p.ids) {
    const auto& rec = st.sentences().at(id);
    v.texts.push_back(rec.text);
    v.spans.push_back(rec.target_span);
    const auto* c = label_for(st, id, lemma_name, annotator);
    if (c) {
      v.senses.emplace_back(c->annotation.sense_id);
      ++v.counts[c->annotation.sense_id];
    } else {
      v.senses.emplace_back(std::nullopt);
    }
  }
  return v;
}

inline json to_json(const AnnotationView& v) {
  json senses = json::array();
  for (const auto& s : v.senses) senses.push_back(s ? json(*s) : json(nullptr));
  json spans = json::array();
  for (const auto& s : v.spans) spans.push_back({s.start, s.end});
  json inv = json::array();
  for (const auto& s : v.inventory) inv.push_back(to_json(s));
  return json{{"lemma", v.lemma},   {"ids", v.ids},     {"points", v.points},
              {"clusters", v.clusters}, {"senses", senses}, {"texts", v.texts},
              {"spans", spans},     {"inventory", inv}, {"counts", v.counts}};
}

// Current manual/verified labels of lemmas with at least two senses that
// each have >= min_per_sense sentences. Senses below the threshold are
// dropped from an exported lemma. Ordered by (lemma, sentence id).
inline std::vector<GoldRecord> export_gold(const ProjectState& st, std::size_t min_per_sense,
                                           const std::optional<std::string>& adjudicator = {}) {
  std::vector<GoldRecord> out;
  for (const auto& [lemma_name, l] : st.lemmas()) {
    std::vector<std::string> ids = l.sentence_ids;
    std::sort(ids.begin(), ids.end());
    std::vector<GoldRecord> rows;
    std::map<std::string, std::size_t> counts;
    for (const auto& id : ids) {
      const auto* c = label_for(st, id, lemma_name, adjudicator);
      if (!c || c->annotation.provenance == Provenance::model_suggested) continue;
      rows.push_back(GoldRecord{st.sentences().at(id), c->annotation.sense_id,
                                c->annotation.annotator, to_string(c->annotation.provenance)});
      ++counts[c->annotation.sense_id];
    }
    std::set<std::string> attested;
    for (const auto& [sense, n] : counts) {
      if (n >= min_per_sense) attested.insert(sense);
    }
    if (attested.size() < 2) continue;
    for (auto& r : rows) {
      if (attested.contains(r.sense_id)) out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Store

struct AssignResult {
  std::uint64_t revision = 0;
  bool stored = false;  // false: identical to the current label, nothing appended
};

struct RecomputeOptions {
  std::optional<std::size_t> k;
  ProjectionMethod method = ProjectionMethod::mds;
  std::string clustering = "kmeans";
  std::uint64_t seed = 42;
};

using Clock = std::function<std::int64_t()>;

inline std::int64_t system_clock_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// A project on disk: <dir>/project.log.jsonl plus <dir>/embeddings/<lemma>.semb.
// One writer at a time; readers share.
class ProjectStore {
 public:
  static constexpr const char* kLogName = "project.log.jsonl";

  static std::unique_ptr<ProjectStore> create(const fs::path& dir, const std::string& id,
                                              const std::string& lang, Clock clock = {}) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
    if (fs::exists(dir / kLogName)) fail(ErrorKind::conflict, "project \"" + id + "\" exists");
    std::unique_ptr<ProjectStore> s(new ProjectStore(dir, std::move(clock)));
    s->append_locked(json{{"type", "project"}, {"id", id}, {"lang", lang}});
    return s;
  }

  static std::unique_ptr<ProjectStore> open(const fs::path& dir, Clock clock = {}) {
    std::unique_ptr<ProjectStore> s(new ProjectStore(dir, std::move(clock)));
    s->state_ = replay(read_file(dir / kLogName));
    return s;
  }

  const fs::path& dir() const { return dir_; }
  fs::path log_path() const { return dir_ / kLogName; }
  fs::path embeddings_path(const std::string& lemma) const {
    if (lemma.find('/') != std::string::npos || lemma == "." || lemma == "..") {
      fail(ErrorKind::validation, "lemma \"" + lemma + "\" cannot name a file");
    }
    return dir_ / "embeddings" / (lemma + ".semb");
  }

  ProjectState snapshot() const {
    std::shared_lock lock(mu_);
    return state_;
  }

  template <typename Fn>
  auto read(Fn&& fn) const {
    std::shared_lock lock(mu_);
    return fn(state_);
  }

  std::uint64_t add_lemma(const LemmaSpec& spec) {
    std::unique_lock lock(mu_);
    return append_locked(json{{"type", "lemma"}, {"spec", to_json(spec)}});
  }

  std::uint64_t add_sense(const std::string& lemma, const SenseDef& sense) {
    std::unique_lock lock(mu_);
    json e = to_json(sense);
    e["type"] = "sense";
    e["lemma"] = lemma;
    return append_locked(e);
  }

  std::uint64_t add_sentence(const SentenceRecord& r) {
    std::unique_lock lock(mu_);
    return append_locked(json{{"type", "sentence"}, {"record", to_json(r)}});
  }

  AssignResult assign(const std::string& sentence_id, const std::string& lemma,
                      const std::string& sense_id, const std::string& annotator,
                      Provenance provenance) {
    std::unique_lock lock(mu_);
    auto it = state_.current().find(AnnotationKey{sentence_id, lemma, annotator});
    if (it != state_.current().end() && it->second.annotation.sense_id == sense_id &&
        it->second.annotation.provenance == provenance) {
      return AssignResult{it->second.revision, false};
    }
    const auto rev = append_locked(json{{"type", "assign"},
                                        {"sentence_id", sentence_id},
                                        {"lemma", lemma},
                                        {"sense_id", sense_id},
                                        {"annotator", annotator},
                                        {"provenance", to_string(provenance)},
                                        {"timestamp", now()}});
    return AssignResult{rev, true};
  }

  // nullopt: there was no current annotation for the key.
  std::optional<std::uint64_t> unassign(const std::string& sentence_id, const std::string& lemma,
                                        const std::string& annotator) {
    std::unique_lock lock(mu_);
    state_.lemma(lemma);
    if (!state_.current().contains(AnnotationKey{sentence_id, lemma, annotator})) {
      return std::nullopt;
    }
    return append_locked(json{{"type", "unassign"},
                              {"sentence_id", sentence_id},
                              {"lemma", lemma},
                              {"annotator", annotator},
                              {"timestamp", now()}});
  }

  std::uint64_t set_projection(const std::string& lemma, const LemmaProjection& p) {
    std::unique_lock lock(mu_);
    return append_locked(json{{"type", "projection"},
                              {"lemma", lemma},
                              {"method", to_string(p.method)},
                              {"clustering", p.clustering},
                              {"k", p.k},
                              {"seed", p.seed},
                              {"ids", p.ids},
                              {"points", p.points},
                              {"clusters", p.clusters}});
  }

  // Clusters and projects the lemma's embedding file and records the result.
  std::uint64_t recompute(const std::string& lemma, const RecomputeOptions& opt) {
    std::vector<SentenceRecord> records;
    std::size_t default_k = 2;
    read([&](const ProjectState& st) {
      const auto& l = st.lemma(lemma);
      for (const auto& id : l.sentence_ids) records.push_back(st.sentences().at(id));
      if (!l.senses.empty()) {
        default_k = l.senses.size();
      } else if (!l.spec.gloss_hints.empty()) {
        default_k = l.spec.gloss_hints.size();
      }
      return 0;
    });
    const auto path = embeddings_path(lemma);
    if (!fs::exists(path)) {
      fail(ErrorKind::not_found, "no embeddings for lemma \"" + lemma + "\" at " + path.string());
    }
    const auto m = read_embeddings(path);
    validate_alignment(m, records);
    if (m.rows() < 3) {
      fail(ErrorKind::parameter, "lemma \"" + lemma + "\" has fewer than 3 sentences");
    }
    LemmaProjection p;
    p.method = opt.method;
    p.clustering = opt.clustering;
    p.seed = opt.seed;
    p.k = opt.k.value_or(std::min(default_k, m.rows()));
    if (opt.clustering == "kmeans") {
      KMeansOptions ko;
      ko.k = p.k;
      ko.seed = opt.seed;
      p.clusters = kmeans(m, ko).labels.labels;
    } else if (opt.clustering == "agglomerative") {
      if (p.k < 1 || p.k > m.rows()) fail(ErrorKind::parameter, "k out of range");
      p.clusters = agglomerative(pairwise_cosine_distance(m), p.k).labels;
    } else {
      fail(ErrorKind::parameter, "unknown clustering \"" + opt.clustering + "\"");
    }
    const auto proj = project(m, opt.method);
    p.ids = proj.ids;
    p.points = proj.points;
    return set_projection(lemma, p);
  }

 private:
  ProjectStore(fs::path dir, Clock clock) : dir_(std::move(dir)), clock_(std::move(clock)) {}

  std::int64_t now() const { return clock_ ? clock_() : system_clock_seconds(); }

  std::uint64_t append_locked(json event) {
    event["rev"] = state_.revision() + 1;
    ProjectState next = state_;
    next.apply(event);
    const std::string line = event.dump(-1, ' ', false, json::error_handler_t::strict) + "\n";
    {
      std::ofstream out(log_path(), std::ios::binary | std::ios::app);
      if (!out) fail(ErrorKind::io, "cannot open " + log_path().string());
      out.write(line.data(), static_cast<std::streamsize>(line.size()));
      out.flush();
      if (!out) fail(ErrorKind::io, "append failed: " + log_path().string());
    }
    state_ = std::move(next);
    return state_.revision();
  }

  fs::path dir_;
  Clock clock_;
  mutable std::shared_mutex mu_;
  ProjectState state_;
};

// All projects under one data root, one subdirectory each.
class Workspace {
 public:
  explicit Workspace(fs::path root, Clock clock = {})
      : root_(std::move(root)), clock_(std::move(clock)) {}

  const fs::path& root() const { return root_; }

  static void validate_project_id(const std::string& id) {
    if (id.empty() || id.size() > 128) fail(ErrorKind::validation, "bad project id");
    for (char c : id) {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '_' || c == '.';
      if (!ok) fail(ErrorKind::validation, "project id \"" + id + "\" has characters outside [A-Za-z0-9._-]");
    }
    if (id == "." || id == "..") fail(ErrorKind::validation, "bad project id");
  }

  std::vector<std::string> list() const {
    std::vector<std::string> out;
    std::error_code ec;
    if (!fs::exists(root_, ec)) return out;
    for (const auto& entry : fs::directory_iterator(root_, ec)) {
      if (entry.is_directory() && fs::exists(entry.path() / ProjectStore::kLogName)) {
        out.push_back(entry.path().filename().string());
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  ProjectStore& create(const std::string& id, const std::string& lang) {
    validate_project_id(id);
    std::lock_guard lock(mu_);
    if (open_.contains(id) || fs::exists(root_ / id / ProjectStore::kLogName)) {
      fail(ErrorKind::conflict, "project \"" + id + "\" already exists");
    }
    auto store = ProjectStore::create(root_ / id, id, lang, clock_);
    auto& ref = *store;
    open_[id] = std::move(store);
    return ref;
  }

  ProjectStore& get(const std::string& id) {
    validate_project_id(id);
    std::lock_guard lock(mu_);
    if (auto it = open_.find(id); it != open_.end()) return *it->second;
    if (!fs::exists(root_ / id / ProjectStore::kLogName)) {
      fail(ErrorKind::not_found, "unknown project \"" + id + "\"", id);
    }
    auto store = ProjectStore::open(root_ / id, clock_);
    auto& ref = *store;
    open_[id] = std::move(store);
    return ref;
  }

 private:
  fs::path root_;
  Clock clock_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<ProjectStore>> open_;
};

}  // namespace senseloom
