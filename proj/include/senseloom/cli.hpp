#pragma once

// The `senseloom` command line. run() parses, dispatches and maps errors to
// exit codes: 0 ok, 1 validation/parameter, 2 I/O, 64 usage.

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <openssl/evp.h>

#include "senseloom/annotate.hpp"
#include "senseloom/annotate_service.hpp"
#include "senseloom/corpus.hpp"
#include "senseloom/embedstore.hpp"
#include "senseloom/error.hpp"
#include "senseloom/gold.hpp"
#include "senseloom/io.hpp"
#include "senseloom/lift.hpp"
#include "senseloom/numerics.hpp"
#include "senseloom/wicbuilder.hpp"
#include "senseloom/wiceval.hpp"

#ifndef SENSELOOM_VERSION
#define SENSELOOM_VERSION "0.0.0"
#endif

namespace senseloom::cli {

inline constexpr int kExitUsage = 64;

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::io, "sha256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return os.str();
}

// Provenance block attached to every artifact.
class Meta {
 public:
  explicit Meta(std::string command, std::optional<std::uint64_t> seed = std::nullopt)
      : command_(std::move(command)), seed_(seed) {}

  void input(const fs::path& path) {
    inputs_.push_back({{"path", path.generic_string()}, {"sha256", sha256_hex(read_file(path))}});
  }
  void param(const std::string& key, json value) { params_[key] = std::move(value); }

  json to_json() const {
    return json{{"tool", "senseloom"},
                {"version", SENSELOOM_VERSION},
                {"command", command_},
                {"seed", seed_ ? json(*seed_) : json(nullptr)},
                {"params", params_},
                {"inputs", inputs_}};
  }

 private:
  std::string command_;
  std::optional<std::uint64_t> seed_;
  json params_ = json::object();
  json inputs_ = json::array();
};

inline std::string pretty(const json& j) { return j.dump(2) + "\n"; }

inline void write_json_artifact(const fs::path& path, json body, const Meta& meta) {
  body["meta"] = meta.to_json();
  write_file_atomic(path, pretty(body));
}

// JSONL artifacts keep one record per line; their metadata goes next to them.
inline void write_jsonl_artifact(const fs::path& path, const std::string& jsonl, const Meta& meta) {
  write_file_atomic(path, jsonl);
  write_file_atomic(fs::path(path.string() + ".meta.json"), pretty(meta.to_json()));
}

inline fs::path sibling(const fs::path& dir, const std::string& name) { return dir / name; }

// ---------------------------------------------------------------------------
// Input readers for the CLI-only formats

inline std::vector<PriorObservation> read_prior_sample(const fs::path& path) {
  std::vector<PriorObservation> out;
  const auto what = path.string();
  for (auto& [line_no, j] : read_jsonl(path)) {
    out.push_back(PriorObservation{require_field<std::string>(j, "lemma", line_no, what),
                                   require_field<std::string>(j, "sentence_id", line_no, what),
                                   require_field<std::string>(j, "sense", line_no, what)});
  }
  return out;
}

// Selection rows: {lemma, sentence_id, target_sense[, sense]}; `sense` is the
// gold label when no separate gold file is given.
inline std::vector<SelectionEntry> read_selection(
    const fs::path& path, std::unordered_map<std::string, std::string>& gold) {
  std::vector<SelectionEntry> out;
  const auto what = path.string();
  for (auto& [line_no, j] : read_jsonl(path)) {
    SelectionEntry e{require_field<std::string>(j, "lemma", line_no, what),
                     require_field<std::string>(j, "sentence_id", line_no, what),
                     require_field<std::string>(j, "target_sense", line_no, what)};
    if (j.contains("sense")) gold.emplace(e.sentence_id, require_field<std::string>(j, "sense", line_no, what));
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<WicPair> read_wic_pairs(const fs::path& path, Split split) {
  std::vector<WicPair> out;
  for (auto& [line_no, j] : read_jsonl(path)) {
    out.push_back(wic_pair_from_json(j, line_no, path.string(), split));
  }
  return out;
}

// Scored pairs {pair_id, distance} joined to the labels of the pair file;
// pair_id is the 0-based record index in that file.
inline std::vector<ScoredPair> join_scores(const fs::path& pairs_path, const fs::path& scores_path) {
  const auto pairs = read_wic_pairs(pairs_path, Split::test);
  std::vector<std::optional<double>> dist(pairs.size());
  const auto what = scores_path.string();
  for (auto& [line_no, j] : read_jsonl(scores_path)) {
    const auto id = require_field<long long>(j, "pair_id", line_no, what);
    if (id < 0 || static_cast<std::size_t>(id) >= pairs.size()) {
      fail(ErrorKind::validation, what + " line " + std::to_string(line_no) + ": pair_id " +
                                      std::to_string(id) + " not in " + pairs_path.string());
    }
    if (dist[static_cast<std::size_t>(id)]) {
      fail(ErrorKind::validation, what + " line " + std::to_string(line_no) +
                                      ": duplicate pair_id " + std::to_string(id));
    }
    dist[static_cast<std::size_t>(id)] = require_field<double>(j, "distance", line_no, what);
  }
  std::vector<ScoredPair> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!dist[i]) {
      fail(ErrorKind::validation, what + ": no distance for pair_id " + std::to_string(i));
    }
    ScoredPair sp{*dist[i], pairs[i].label};
    validate(sp);
    out.push_back(sp);
  }
  return out;
}

inline Projection2D projection_from_json(const json& j) {
  Projection2D p;
  try {
    p.points = j.at("points").get<std::vector<std::array<double, 2>>>();
    p.ids = j.value("ids", std::vector<std::string>{});
    p.method = parse_projection_method(j.value("method", std::string("mds")));
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("projection file: ") + e.what());
  }
  return p;
}

inline json projection_json(const std::string& lemma, const Projection2D& p,
                            const std::vector<std::size_t>& clusters) {
  return json{{"lemma", lemma},
              {"method", to_string(p.method)},
              {"ids", p.ids},
              {"points", p.points},
              {"clusters", clusters}};
}

inline std::vector<std::size_t> cluster_labels(const EmbeddingMatrix& m, const std::string& how,
                                               std::size_t k, std::uint64_t seed,
                                               std::size_t restarts, json* extra) {
  if (how == "kmeans") {
    KMeansOptions o;
    o.k = k;
    o.seed = seed;
    o.restarts = restarts;
    auto r = kmeans(m, o);
    if (extra) {
      (*extra)["inertia"] = r.inertia;
      (*extra)["iterations"] = r.iterations;
    }
    return r.labels.labels;
  }
  if (how == "agglomerative") {
    if (k < 1 || k > m.rows()) fail(ErrorKind::parameter, "k out of range [1, n]");
    return agglomerative(pairwise_cosine_distance(m), k).labels;
  }
  fail(ErrorKind::parameter, "unknown clustering \"" + how + "\" (kmeans or agglomerative)");
}

// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sense annotation and WiC dataset toolkit", "senseloom"};
  app.set_version_flag("--version", SENSELOOM_VERSION);
  app.set_config("--config", "", "key=value file overriding option defaults");
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  std::string data_root = "senseloom-data";
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
  };
  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", data_root, "project root directory")
        ->envname("SENSELOOM_DATA")
        ->capture_default_str();
  };

  std::function<void()> action;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "normalize a raw corpus into sentence JSONL");
  std::string ingest_in, ingest_out, ingest_format = "lines", ingest_source;
  ingest->add_option("input", ingest_in, "corpus file")->required();
  ingest->add_option("--format", ingest_format, "lines or jsonl")
      ->check(CLI::IsMember({"lines", "jsonl"}))
      ->capture_default_str();
  ingest->add_option("--source", ingest_source, "source label (default: file stem)");
  ingest->add_option("--out", ingest_out, "output JSONL")->required();
  ingest->callback([&] {
    action = [&] {
      const auto corpus = load_sentences(
          ingest_in, ingest_format == "jsonl" ? CorpusFormat::jsonl : CorpusFormat::plain_lines,
          ingest_source.empty() ? std::nullopt : std::optional<std::string>(ingest_source));
      std::vector<json> rows;
      for (const auto& s : corpus) rows.push_back(to_json(s));
      Meta meta("ingest");
      meta.input(ingest_in);
      write_jsonl_artifact(ingest_out, to_jsonl(rows), meta);
      err << "ingest: " << corpus.size() << " sentences\n";
    };
  });

  // occurrences
  auto* occ = app.add_subcommand("occurrences", "find target-word occurrences");
  std::string occ_corpus, occ_lemmas, occ_out, occ_project;
  CorpusConfig occ_cfg;
  occ->add_option("--corpus", occ_corpus, "ingested corpus JSONL")->required();
  occ->add_option("--lemmas", occ_lemmas, "lemma spec JSONL")->required();
  occ->add_option("--out", occ_out, "sentence record JSONL");
  occ->add_option("--min-tokens", occ_cfg.min_tokens)->capture_default_str();
  occ->add_option("--max-tokens", occ_cfg.max_tokens)->capture_default_str();
  occ->add_flag("--case-fold", occ_cfg.case_fold);
  occ->add_option("--project", occ_project, "also import the records into this project");
  add_data(occ);
  occ->callback([&] {
    action = [&] {
      const auto corpus = load_sentences(occ_corpus, CorpusFormat::jsonl, std::nullopt);
      const auto specs = read_lemma_specs(occ_lemmas);
      std::vector<SentenceRecord> records;
      for (const auto& spec : specs) {
        auto hits = find_occurrences(corpus, spec, occ_cfg);
        err << "occurrences: " << spec.lemma << " " << hits.size() << "\n";
        for (auto& h : hits) records.push_back(std::move(h));
      }
      if (!occ_out.empty()) {
        Meta meta("occurrences");
        meta.input(occ_corpus);
        meta.input(occ_lemmas);
        meta.param("min_tokens", occ_cfg.min_tokens);
        meta.param("max_tokens", occ_cfg.max_tokens);
        meta.param("case_fold", occ_cfg.case_fold);
        write_jsonl_artifact(occ_out, sentences_to_jsonl(records), meta);
      }
      if (!occ_project.empty()) {
        Workspace ws(data_root);
        const auto existing = ws.list();
        ProjectStore& store =
            std::find(existing.begin(), existing.end(), occ_project) != existing.end()
                ? ws.get(occ_project)
                : ws.create(occ_project, specs.empty() ? std::string{} : specs.front().lang);
        const auto st = store.snapshot();
        std::size_t added = 0;
        for (const auto& spec : specs) {
          if (!st.lemmas().contains(spec.lemma)) store.add_lemma(spec);
        }
        for (const auto& r : records) {
          if (st.sentences().contains(r.id)) continue;
          store.add_sentence(r);
          ++added;
        }
        err << "occurrences: imported " << added << " records into " << occ_project << "\n";
      }
      if (occ_out.empty() && occ_project.empty()) out << sentences_to_jsonl(records);
    };
  });

  // sample
  auto* sample = app.add_subcommand("sample", "draw a seeded uniform sample per lemma");
  std::string sample_in, sample_out;
  std::size_t sample_n = 100;
  sample->add_option("--input", sample_in, "sentence record JSONL")->required();
  sample->add_option("-n,--size", sample_n, "sentences per lemma")->capture_default_str();
  sample->add_option("--out", sample_out, "output JSONL")->required();
  add_seed(sample);
  sample->callback([&] {
    action = [&] {
      std::map<std::string, std::vector<SentenceRecord>> by_lemma;
      for (auto& r : read_sentences(sample_in)) by_lemma[r.lemma].push_back(std::move(r));
      std::vector<SentenceRecord> picked;
      for (const auto& [lemma, recs] : by_lemma) {
        for (auto& r : sample_candidates(recs, sample_n, derive_seed(seed, detail::fnv1a(lemma)))) {
          picked.push_back(std::move(r));
        }
      }
      Meta meta("sample", seed);
      meta.input(sample_in);
      meta.param("size", sample_n);
      write_jsonl_artifact(sample_out, sentences_to_jsonl(picked), meta);
    };
  });

  // validate-embeddings
  auto* vemb = app.add_subcommand("validate-embeddings", "check an embedding file");
  std::string vemb_file, vemb_sentences, vemb_project, vemb_lemma;
  vemb->add_option("embeddings", vemb_file, "SEMB file")->required();
  vemb->add_option("--sentences", vemb_sentences, "sentence JSONL to align against");
  vemb->add_option("--project", vemb_project, "install into this project after validation");
  add_data(vemb);
  vemb->callback([&] {
    action = [&] {
      const auto m = read_embeddings(vemb_file);
      json report{{"lemma", m.lemma}, {"model_id", m.model_id}, {"n", m.rows()}, {"d", m.cols()}};
      if (!vemb_sentences.empty()) {
        auto recs = read_sentences(vemb_sentences);
        std::erase_if(recs, [&](const SentenceRecord& r) { return r.lemma != m.lemma; });
        validate_alignment(m, recs);
        report["aligned_with"] = vemb_sentences;
      }
      if (!vemb_project.empty()) {
        Workspace ws(data_root);
        auto& store = ws.get(vemb_project);
        std::vector<SentenceRecord> recs;
        store.read([&](const ProjectState& st) {
          for (const auto& id : st.lemma(m.lemma).sentence_ids) recs.push_back(st.sentences().at(id));
          return 0;
        });
        validate_alignment(m, recs);
        const auto dest = store.embeddings_path(m.lemma);
        fs::create_directories(dest.parent_path());
        write_embeddings(m, dest);
        report["installed"] = dest.generic_string();
      }
      out << report.dump() << "\n";
    };
  });

  // cluster
  auto* clus = app.add_subcommand("cluster", "cluster one lemma's embeddings");
  std::string clus_in, clus_out, clus_how = "kmeans";
  std::size_t clus_k = 2, clus_restarts = 1;
  clus->add_option("embeddings", clus_in, "SEMB file")->required();
  clus->add_option("--k", clus_k)->capture_default_str();
  clus->add_option("--clustering", clus_how, "kmeans or agglomerative")->capture_default_str();
  clus->add_option("--restarts", clus_restarts, "k-means restarts")->capture_default_str();
  clus->add_option("--out", clus_out, "output JSON (default: stdout)");
  add_seed(clus);
  clus->callback([&] {
    action = [&] {
      const auto m = read_embeddings(clus_in);
      json body{{"lemma", m.lemma}, {"clustering", clus_how}, {"k", clus_k}, {"ids", m.ids}};
      body["clusters"] = cluster_labels(m, clus_how, clus_k, seed, clus_restarts, &body);
      Meta meta("cluster", seed);
      meta.input(clus_in);
      if (clus_out.empty()) {
        body["meta"] = meta.to_json();
        out << pretty(body);
      } else {
        write_json_artifact(clus_out, body, meta);
      }
    };
  });

  // project
  auto* proj = app.add_subcommand("project", "2D projection of one lemma's embeddings");
  std::string proj_in, proj_out, proj_method = "mds", proj_how = "kmeans";
  std::size_t proj_k = 2;
  proj->add_option("embeddings", proj_in, "SEMB file")->required();
  proj->add_option("--method", proj_method, "mds or pca")
      ->check(CLI::IsMember({"mds", "pca"}))
      ->capture_default_str();
  proj->add_option("--k", proj_k, "clusters reported alongside")->capture_default_str();
  proj->add_option("--clustering", proj_how)->capture_default_str();
  proj->add_option("--out", proj_out, "output JSON (default: stdout)");
  add_seed(proj);
  proj->callback([&] {
    action = [&] {
      const auto m = read_embeddings(proj_in);
      const auto p = project(m, parse_projection_method(proj_method));
      json body = projection_json(m.lemma, p,
                                  cluster_labels(m, proj_how, std::min(proj_k, m.rows()), seed, 1,
                                                 nullptr));
      Meta meta("project", seed);
      meta.input(proj_in);
      if (proj_out.empty()) {
        body["meta"] = meta.to_json();
        out << pretty(body);
      } else {
        write_json_artifact(proj_out, body, meta);
      }
    };
  });

  // suggest
  auto* sugg = app.add_subcommand("suggest", "pick dispersed sentences from a projection");
  std::string sugg_in;
  std::size_t sugg_m = 10;
  sugg->add_option("projection", sugg_in, "projection JSON")->required();
  sugg->add_option("-m,--count", sugg_m)->capture_default_str();
  add_seed(sugg);
  sugg->callback([&] {
    action = [&] {
      const auto p = projection_from_json(json::parse(read_file(sugg_in)));
      const auto idx = suggest_dispersed(p, sugg_m, seed);
      json ids = json::array();
      for (auto i : idx) ids.push_back(i < p.ids.size() ? json(p.ids[i]) : json(nullptr));
      Meta meta("suggest", seed);
      meta.input(sugg_in);
      out << pretty(json{{"indices", idx}, {"ids", ids}, {"meta", meta.to_json()}});
    };
  });

  // serve
  auto* serve = app.add_subcommand("serve", "run the annotation HTTP service");
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  serve->add_option("--host", serve_host)->capture_default_str();
  serve->add_option("--port", serve_port, "0 picks a free port")->capture_default_str();
  add_data(serve);
  serve->callback([&] {
    action = [&] {
      fs::create_directories(data_root);
      Workspace ws(data_root);
      AnnotateService service(ws);
      httplib::Server srv;
      service.mount(srv);
      int port = serve_port;
      if (port == 0) {
        port = srv.bind_to_any_port(serve_host);
      } else if (!srv.bind_to_port(serve_host, port)) {
        port = -1;
      }
      if (port < 0) fail(ErrorKind::io, "cannot bind " + serve_host + ":" + std::to_string(serve_port));
      err << "serving " << fs::absolute(data_root).generic_string() << " on http://" << serve_host
          << ":" << port << "/api\n";
      err.flush();
      if (!srv.listen_after_bind()) fail(ErrorKind::io, "server stopped unexpectedly");
    };
  });

  // lift
  auto* liftc = app.add_subcommand("lift", "Lift report for assisted sentence selection");
  std::string lift_prior, lift_sel, lift_gold, lift_glosses, lift_out;
  double lift_secs = 30.0;
  bool lift_json = false;
  liftc->add_option("--prior-sample", lift_prior, "random sample {lemma, sentence_id, sense}")
      ->required();
  liftc->add_option("--selected", lift_sel, "selection {lemma, sentence_id, target_sense[, sense]}")
      ->required();
  liftc->add_option("--gold", lift_gold, "gold JSONL supplying labels for the selection");
  liftc->add_option("--glosses", lift_glosses, "JSONL {lemma, sense, gloss}");
  liftc->add_option("--seconds-per-sentence", lift_secs)->capture_default_str();
  liftc->add_flag("--json", lift_json, "print JSON instead of the text table");
  liftc->add_option("--out", lift_out, "also write the JSON report here");
  liftc->callback([&] {
    action = [&] {
      std::unordered_map<std::string, std::string> gold;
      if (!lift_gold.empty()) {
        for (const auto& g : read_gold(lift_gold)) gold.emplace(g.sentence.id, g.sense_id);
      }
      const auto prior = read_prior_sample(lift_prior);
      const auto sel = read_selection(lift_sel, gold);
      GlossTable glosses;
      if (!lift_glosses.empty()) {
        for (auto& [line_no, j] : read_jsonl(lift_glosses)) {
          glosses[{require_field<std::string>(j, "lemma", line_no, lift_glosses),
                   require_field<std::string>(j, "sense", line_no, lift_glosses)}] =
              require_field<std::string>(j, "gloss", line_no, lift_glosses);
        }
      }
      const auto rows = build_lift_report(prior, sel, gold, glosses);
      Meta meta("lift");
      meta.input(lift_prior);
      meta.input(lift_sel);
      if (!lift_gold.empty()) meta.input(lift_gold);
      if (!lift_glosses.empty()) meta.input(lift_glosses);
      meta.param("seconds_per_sentence", lift_secs);
      json report = lift_report_json(rows, lift_secs);
      if (!lift_out.empty()) write_json_artifact(lift_out, report, meta);
      if (lift_json) {
        report["meta"] = meta.to_json();
        out << pretty(report);
      } else {
        out << lift_report_text(rows);
      }
    };
  });

  // export-gold
  auto* exg = app.add_subcommand("export-gold", "export sense-annotated gold JSONL");
  std::string exg_project, exg_out, exg_adjudicator;
  std::size_t exg_min = 30;
  exg->add_option("--project", exg_project)->required();
  exg->add_option("--min-per-sense", exg_min)->capture_default_str();
  exg->add_option("--adjudicator", exg_adjudicator, "annotator whose labels are exported");
  exg->add_option("--out", exg_out, "gold JSONL")->required();
  add_data(exg);
  exg->callback([&] {
    action = [&] {
      Workspace ws(data_root);
      auto& store = ws.get(exg_project);
      const auto st = store.snapshot();
      const auto rows = export_gold(
          st, exg_min,
          exg_adjudicator.empty() ? std::nullopt : std::optional<std::string>(exg_adjudicator));
      Meta meta("export-gold");
      meta.input(store.log_path());
      meta.param("project", exg_project);
      meta.param("revision", st.revision());
      meta.param("min_per_sense", exg_min);
      if (!exg_adjudicator.empty()) meta.param("adjudicator", exg_adjudicator);
      write_jsonl_artifact(exg_out, gold_to_jsonl(rows), meta);
      err << "export-gold: " << rows.size() << " rows\n";
    };
  });

  // wic build / wic stats
  auto* wic = app.add_subcommand("wic", "WiC dataset construction");
  wic->require_subcommand(1);
  auto* wbuild = wic->add_subcommand("build", "build train/dev/test pairs from gold");
  std::string wb_gold, wb_dir;
  std::size_t wb_max = 16;
  wbuild->add_option("--gold", wb_gold, "gold JSONL")->required();
  wbuild->add_option("--out-dir", wb_dir, "output directory")->required();
  wbuild->add_option("--max-per-sentence", wb_max)->capture_default_str();
  add_seed(wbuild);
  wbuild->callback([&] {
    action = [&] {
      const auto gold = read_gold(wb_gold);
      const auto b = build_wic(gold, seed, wb_max);
      fs::create_directories(wb_dir);
      Meta meta("wic build", seed);
      meta.input(wb_gold);
      meta.param("max_per_sentence", wb_max);
      for (Split s : kSplits) {
        std::vector<WicPair> part;
        std::vector<json> rows;
        for (const auto& p : b.pairs) {
          if (p.split != s) continue;
          part.push_back(p);
          rows.push_back(to_json(p));
        }
        const std::string name = to_string(s);
        write_jsonl_artifact(sibling(wb_dir, name + ".jsonl"), to_jsonl(rows), meta);
        write_file_atomic(sibling(wb_dir, name + ".tsv"), pairs_to_tsv(part));
      }
      json assignment = json::object();
      for (const auto& [id, s] : b.sentences.split_of) assignment[id] = to_string(s);
      write_json_artifact(sibling(wb_dir, "words.json"), to_json(b.words), meta);
      write_json_artifact(sibling(wb_dir, "sentences.json"), json{{"split_of", assignment}}, meta);
      const auto st = wic_stats(b.pairs, b.words);
      write_json_artifact(sibling(wb_dir, "stats.json"), to_json(st), meta);
      for (const auto& w : b.warnings) err << "warning: " << w << "\n";
      out << wic_stats_text(st);
    };
  });

  auto* wstats = wic->add_subcommand("stats", "pair and word counts of a built dataset");
  std::string ws_dir;
  bool ws_json = false;
  wstats->add_option("dir", ws_dir, "directory written by wic build")->required();
  wstats->add_flag("--json", ws_json);
  wstats->callback([&] {
    action = [&] {
      std::vector<WicPair> pairs;
      for (Split s : kSplits) {
        for (auto& p : read_wic_pairs(sibling(ws_dir, std::string(to_string(s)) + ".jsonl"), s)) {
          pairs.push_back(std::move(p));
        }
      }
      const auto words = word_split_from_json(json::parse(read_file(sibling(ws_dir, "words.json"))));
      const auto st = wic_stats(pairs, words);
      out << (ws_json ? pretty(to_json(st)) : wic_stats_text(st));
    };
  });

  // stats
  auto* stats = app.add_subcommand("stats", "per-language statistics of a gold file");
  std::string stats_in;
  bool stats_json = false;
  stats->add_option("gold", stats_in, "gold JSONL")->required();
  stats->add_flag("--json", stats_json);
  stats->callback([&] {
    action = [&] {
      const auto rows = dataset_stats(read_gold(stats_in));
      if (stats_json) {
        json arr = json::array();
        for (const auto& r : rows) arr.push_back(to_json(r));
        Meta meta("stats");
        meta.input(stats_in);
        out << pretty(json{{"rows", arr}, {"meta", meta.to_json()}});
      } else {
        out << dataset_stats_text(rows);
      }
    };
  });

  // eval mark / tune / test
  auto* ev = app.add_subcommand("eval", "threshold evaluation of externally scored pairs");
  ev->require_subcommand(1);

  auto* emark = ev->add_subcommand("mark", "wrap target words in <t>...</t>");
  std::string em_in, em_out;
  emark->add_option("--pairs", em_in, "WiC JSONL")->required();
  emark->add_option("--out", em_out, "marked JSONL")->required();
  emark->callback([&] {
    action = [&] {
      std::vector<json> rows;
      std::size_t id = 0;
      for (const auto& p : read_wic_pairs(em_in, Split::test)) {
        rows.push_back(json{{"pair_id", id++},
                            {"lemma", p.lemma},
                            {"sentence1", mark_target(p.text_a, p.span_a)},
                            {"sentence2", mark_target(p.text_b, p.span_b)},
                            {"label", p.label}});
      }
      Meta meta("eval mark");
      meta.input(em_in);
      write_jsonl_artifact(em_out, to_jsonl(rows), meta);
    };
  });

  auto* etune = ev->add_subcommand("tune", "choose the threshold maximizing dev accuracy");
  std::string et_pairs, et_scores, et_out;
  etune->add_option("--pairs", et_pairs, "dev WiC JSONL")->required();
  etune->add_option("--scores", et_scores, "dev scored pairs JSONL")->required();
  etune->add_option("--out", et_out, "threshold JSON")->required();
  etune->callback([&] {
    action = [&] {
      const auto dev = join_scores(et_pairs, et_scores);
      const auto t = tune_threshold(dev, et_pairs);
      Meta meta("eval tune");
      meta.input(et_pairs);
      meta.input(et_scores);
      json body{{"threshold", threshold_value_json(t.value)},
                {"tuned_on", t.tuned_on},
                {"dev_accuracy", t.dev_accuracy},
                {"n_dev", dev.size()}};
      write_json_artifact(et_out, body, meta);
      out << "threshold " << body["threshold"].dump() << " dev accuracy "
          << render_percent(t.dev_accuracy) << "\n";
    };
  });

  auto* etest = ev->add_subcommand("test", "accuracy on test at a tuned threshold");
  std::string ete_pairs, ete_scores, ete_threshold, ete_out;
  etest->add_option("--pairs", ete_pairs, "test WiC JSONL")->required();
  etest->add_option("--scores", ete_scores, "test scored pairs JSONL")->required();
  etest->add_option("--threshold", ete_threshold, "JSON written by eval tune")->required();
  etest->add_option("--out", ete_out, "report JSON (default: stdout)");
  etest->callback([&] {
    action = [&] {
      const auto tj = json::parse(read_file(ete_threshold));
      Threshold t;
      t.value = threshold_value_from_json(tj.at("threshold"));
      t.tuned_on = tj.value("tuned_on", std::string{});
      t.dev_accuracy = tj.value("dev_accuracy", 0.0);
      const auto test = join_scores(ete_pairs, ete_scores);
      const double acc = evaluate(test, t);
      Meta meta("eval test");
      meta.input(ete_pairs);
      meta.input(ete_scores);
      meta.input(ete_threshold);
      json report{{"threshold", threshold_value_json(t.value)},
                  {"dev_accuracy", t.dev_accuracy},
                  {"test_accuracy", acc},
                  {"test_accuracy_display", render_percent(acc)},
                  {"n_dev", tj.value("n_dev", 0)},
                  {"n_test", test.size()}};
      if (ete_out.empty()) {
        report["meta"] = meta.to_json();
        out << pretty(report);
      } else {
        write_json_artifact(ete_out, report, meta);
        out << "test accuracy " << render_percent(acc) << "\n";
      }
    };
  });

  // CLI11 consumes arguments from the back.
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << SENSELOOM_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) {
      failing = sub;
      for (auto* inner : sub->get_subcommands()) failing = inner;
    }
    err << failing->help();
    return kExitUsage;
  }

  if (!action) {
    err << app.help();
    return kExitUsage;
  }
  try {
    action();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (!e.detail().empty()) err << e.detail() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace senseloom::cli
