#pragma once

// JSON-over-HTTP front of the annotation workspace. All routes live under
// /api; errors are {code, message, detail} with the status of their kind.

#include <string>

#include <httplib.h>

#include "senseloom/annotate.hpp"
#include "senseloom/error.hpp"
#include "senseloom/io.hpp"

namespace senseloom {

namespace detail {

inline json error_body(const std::string& code, const std::string& message,
                       const std::string& detail) {
  json d = detail.empty() ? json(nullptr) : json::parse(detail, nullptr, false);
  if (d.is_discarded()) d = detail;
  return json{{"code", code}, {"message", message}, {"detail", d}};
}

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline json parse_body(const httplib::Request& req) {
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    fail(ErrorKind::validation, "request body must be a JSON object");
  }
  return j;
}

inline std::string path_param(const httplib::Request& req, const char* name) {
  return httplib::detail::decode_url(req.path_params.at(name), false);
}

template <typename T>
T body_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorKind::validation, std::string("missing field \"") + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::validation, std::string("field \"") + key + "\" has the wrong type");
  }
}

}  // namespace detail

class AnnotateService {
 public:
  explicit AnnotateService(Workspace& ws) : ws_(ws) {}

  void mount(httplib::Server& srv) {
    using httplib::Request;
    using httplib::Response;

    srv.Get("/api/projects", guard([this](const Request&, Response& res) {
              detail::send_json(res, 200, json{{"projects", ws_.list()}});
            }));

    srv.Post("/api/projects", guard([this](const Request& req, Response& res) {
               create_project(detail::parse_body(req), res);
             }));

    srv.Get("/api/projects/:p/lemmas", guard([this](const Request& req, Response& res) {
              auto& store = ws_.get(detail::path_param(req, "p"));
              json out = store.read([](const ProjectState& st) {
                json arr = json::array();
                for (const auto& [name, l] : st.lemmas()) {
                  json senses = json::array();
                  for (const auto& s : l.senses) senses.push_back(to_json(s));
                  arr.push_back({{"lemma", name},
                                 {"spec", to_json(l.spec)},
                                 {"senses", senses},
                                 {"sentences", l.sentence_ids.size()},
                                 {"has_projection", l.projection.has_value()}});
                }
                return json{{"project", st.id()}, {"revision", st.revision()}, {"lemmas", arr}};
              });
              detail::send_json(res, 200, out);
            }));

    srv.Post("/api/projects/:p/lemmas/:l/senses", guard([this](const Request& req, Response& res) {
               auto& store = ws_.get(detail::path_param(req, "p"));
               const auto body = detail::parse_body(req);
               SenseDef s;
               s.sense_id = detail::body_field<std::string>(body, "sense_id");
               s.gloss = body.contains("gloss") ? detail::body_field<std::string>(body, "gloss")
                                                : std::string{};
               if (body.contains("gloss_en") && !body["gloss_en"].is_null()) {
                 s.gloss_en = detail::body_field<std::string>(body, "gloss_en");
               }
               const auto rev = store.add_sense(detail::path_param(req, "l"), s);
               detail::send_json(res, 201, json{{"revision", rev}, {"sense", to_json(s)}});
             }));

    srv.Get("/api/projects/:p/lemmas/:l/view", guard([this](const Request& req, Response& res) {
              auto& store = ws_.get(detail::path_param(req, "p"));
              std::optional<std::string> annotator;
              if (req.has_param("annotator")) annotator = req.get_param_value("annotator");
              const auto lemma = detail::path_param(req, "l");
              json out = store.read([&](const ProjectState& st) {
                json v = to_json(make_view(st, lemma, annotator));
                v["revision"] = st.revision();
                return v;
              });
              detail::send_json(res, 200, out);
            }));

    srv.Post("/api/projects/:p/lemmas/:l/recompute",
             guard([this](const Request& req, Response& res) {
               auto& store = ws_.get(detail::path_param(req, "p"));
               const auto body = req.body.empty() ? json::object() : detail::parse_body(req);
               RecomputeOptions opt;
               if (body.contains("k") && !body["k"].is_null()) {
                 const auto k = detail::body_field<long long>(body, "k");
                 if (k < 1) fail(ErrorKind::parameter, "k must be >= 1");
                 opt.k = static_cast<std::size_t>(k);
               }
               if (body.contains("method")) {
                 opt.method = parse_projection_method(detail::body_field<std::string>(body, "method"));
               }
               if (body.contains("clustering")) {
                 opt.clustering = detail::body_field<std::string>(body, "clustering");
               }
               if (body.contains("seed")) opt.seed = detail::body_field<std::uint64_t>(body, "seed");
               const auto rev = store.recompute(detail::path_param(req, "l"), opt);
               detail::send_json(res, 200, json{{"revision", rev}});
             }));

    srv.Post("/api/projects/:p/annotations", guard([this](const Request& req, Response& res) {
               auto& store = ws_.get(detail::path_param(req, "p"));
               const auto body = detail::parse_body(req);
               const auto provenance =
                   body.contains("provenance")
                       ? parse_provenance(detail::body_field<std::string>(body, "provenance"))
                       : Provenance::manual;
               const auto r = store.assign(detail::body_field<std::string>(body, "sentence_id"),
                                           detail::body_field<std::string>(body, "lemma"),
                                           detail::body_field<std::string>(body, "sense_id"),
                                           detail::body_field<std::string>(body, "annotator"),
                                           provenance);
               detail::send_json(res, r.stored ? 201 : 200,
                                 json{{"revision", r.revision},
                                      {"status", r.stored ? "stored" : "unchanged"}});
             }));

    srv.Delete("/api/projects/:p/annotations/:sentence_id/:lemma/:annotator",
               guard([this](const Request& req, Response& res) {
                 auto& store = ws_.get(detail::path_param(req, "p"));
                 const auto rev = store.unassign(detail::path_param(req, "sentence_id"),
                                                 detail::path_param(req, "lemma"),
                                                 detail::path_param(req, "annotator"));
                 if (rev) {
                   detail::send_json(res, 200, json{{"revision", *rev}, {"status", "removed"}});
                 } else {
                   detail::send_json(res, 200, json{{"revision", nullptr}, {"status", "noop"}});
                 }
               }));

    srv.Get("/api/projects/:p/export", guard([this](const Request& req, Response& res) {
              auto& store = ws_.get(detail::path_param(req, "p"));
              std::size_t min_per_sense = 30;
              if (req.has_param("min_per_sense")) {
                const auto v = req.get_param_value("min_per_sense");
                try {
                  std::size_t used = 0;
                  const long long n = std::stoll(v, &used);
                  if (used != v.size() || n < 0) throw std::invalid_argument(v);
                  min_per_sense = static_cast<std::size_t>(n);
                } catch (const std::logic_error&) {
                  fail(ErrorKind::parameter, "min_per_sense must be a non-negative integer");
                }
              }
              std::optional<std::string> adjudicator;
              if (req.has_param("adjudicator")) adjudicator = req.get_param_value("adjudicator");
              const auto rows = store.read([&](const ProjectState& st) {
                return export_gold(st, min_per_sense, adjudicator);
              });
              res.status = 200;
              res.set_content(gold_to_jsonl(rows), "application/x-ndjson");
            }));

    srv.set_error_handler([](const Request&, Response& res) {
      if (res.body.empty()) {
        detail::send_json(res, res.status,
                          detail::error_body(res.status == 404 ? "not_found" : "error",
                                             httplib::status_message(res.status), ""));
      }
    });
  }

 private:
  template <typename Fn>
  static httplib::Server::Handler guard(Fn fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        detail::send_json(res, http_status(e.kind()),
                          detail::error_body(to_string(e.kind()), e.what(), e.detail()));
      } catch (const json::exception& e) {
        detail::send_json(res, 400, detail::error_body("validation", e.what(), ""));
      } catch (const std::exception& e) {
        detail::send_json(res, 500, detail::error_body("internal", e.what(), ""));
      }
    };
  }

  void create_project(const json& body, httplib::Response& res) {
    const auto id = detail::body_field<std::string>(body, "id");
    const auto lang = body.value("lang", std::string{});
    std::vector<LemmaSpec> lemmas;
    if (body.contains("lemmas")) {
      for (const auto& l : detail::body_field<json>(body, "lemmas")) {
        lemmas.push_back(lemma_spec_from_json(l));
      }
    }
    std::vector<SentenceRecord> sentences;
    if (body.contains("sentences")) {
      for (const auto& s : detail::body_field<json>(body, "sentences")) {
        sentences.push_back(sentence_from_json(s));
      }
    }
    Workspace::validate_project_id(id);
    // Check references up front so a rejected request leaves no project behind.
    ProjectState probe;
    probe.apply(json{{"rev", 1}, {"type", "project"}, {"id", id}, {"lang", lang}});
    for (const auto& l : lemmas) {
      probe.apply(json{{"rev", probe.revision() + 1}, {"type", "lemma"}, {"spec", to_json(l)}});
    }
    for (const auto& s : sentences) {
      probe.apply(json{{"rev", probe.revision() + 1}, {"type", "sentence"}, {"record", to_json(s)}});
    }
    auto& store = ws_.create(id, lang);
    for (const auto& l : lemmas) store.add_lemma(l);
    for (const auto& s : sentences) store.add_sentence(s);
    detail::send_json(res, 201,
                      json{{"id", id}, {"revision", store.snapshot().revision()}});
  }

  Workspace& ws_;
};

}  // namespace senseloom
