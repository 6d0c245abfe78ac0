// Acceptance runner: one PASS/FAIL line per primary criterion. Exit status
// is nonzero when any criterion fails.

#include <bit>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "senseloom/annotate.hpp"
#include "senseloom/embedstore.hpp"
#include "senseloom/lift.hpp"
#include "senseloom/numerics.hpp"
#include "senseloom/wicbuilder.hpp"
#include "senseloom/wiceval.hpp"

using namespace senseloom;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

Verdict lift_example() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto l = lift(0.36, 0.04);
  const auto e = effort_reduction(0.04, 0.36);
  const std::string rendered = l.render();
  const double elapsed = seconds_since(t0);
  v.require(l.ratio == 9.0, "lift ratio " + fmt(l.ratio, 17));
  v.require(rendered == "900%", "rendered " + rendered);
  v.require(e.manual_display() == 25, "manual " + std::to_string(e.manual_display()));
  v.require(std::to_string(e.assisted_display()) == "3",
            "assisted " + std::to_string(e.assisted_display()));
  v.require(std::to_string(e.headline_factor()) + "×" == "8×",
            "headline " + std::to_string(e.headline_factor()));
  v.require(elapsed < 1e-3, "took " + fmt(elapsed) + " s");
  if (v.pass) v.detail = "9.0, 900%, 25 -> 3, 8×";
  return v;
}

Verdict zero_prior_sentinel() {
  Verdict v;
  const auto r = lift(0.25, 0.0).render();
  v.require(r == "∞ (prior = 0)", "rendered " + r);
  if (v.pass) v.detail = r;
  return v;
}

Verdict dataset_statistics() {
  Verdict v;
  std::vector<std::vector<std::size_t>> az(59, std::vector<std::size_t>{35, 35});
  az.push_back({40});
  std::vector<std::vector<std::size_t>> te(47, std::vector<std::size_t>{45, 45});
  te.push_back({40, 40, 40});
  for (int i = 0; i < 3; ++i) te.push_back({50});
  const auto a = dataset_stats(oracle::gold_with_shape(az, "az"));
  const auto t = dataset_stats(oracle::gold_with_shape(te, "te"));
  v.require(a.size() == 1 && a[0].words == 60 && a[0].senses == 119, "az fixture shape");
  v.require(t.size() == 1 && t[0].words == 51 && t[0].senses == 100, "te fixture shape");
  if (!v.pass) return v;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", a[0].senses_per_word.mean);
  const std::string az_mean = buf;
  std::snprintf(buf, sizeof buf, "%.2f", t[0].senses_per_word.mean);
  const std::string te_mean = buf;
  v.require(az_mean == "1.98", "60/119 gives " + az_mean);
  v.require(te_mean == "1.96", "51/100 gives " + te_mean);
  v.require(a[0].senses_per_word.render().rfind("1.98", 0) == 0, "rendered az row");
  v.require(t[0].senses_per_word.render().rfind("1.96", 0) == 0, "rendered te row");
  if (v.pass) v.detail = "60/119 -> 1.98, 51/100 -> 1.96";
  return v;
}

Verdict wic_builder_suite() {
  Verdict v;
  const auto gold = oracle::synthetic_gold(50, 80, 2024);
  v.require(gold.size() == 4000, "fixture has " + std::to_string(gold.size()) + " sentences");
  const auto t0 = Clock::now();
  const auto b = build_wic(gold, 42);
  const double elapsed = seconds_since(t0);

  // Largest remainder by hand: 35 / 7.5 / 7.5, the spare seat goes to dev.
  v.require(b.words.train.size() == 35 && b.words.dev.size() == 8 && b.words.test.size() == 7,
            "word split " + std::to_string(b.words.train.size()) + "/" +
                std::to_string(b.words.dev.size()) + "/" + std::to_string(b.words.test.size()));
  v.require(b.words.shared.size() == 11, "shared " + std::to_string(b.words.shared.size()));
  v.require(shared_word_count(42) == 13, "42 train words share " +
                                             std::to_string(shared_word_count(42)));

  std::map<std::string, const GoldRecord*> by_id;
  for (const auto& g : gold) by_id[g.sentence.id] = &g;
  std::map<std::string, Split> word_split;
  for (Split s : kSplits) {
    for (const auto& w : b.words.words(s)) word_split[w] = s;
  }
  const std::set<std::string> shared(b.words.shared.begin(), b.words.shared.end());

  // Exhaustive audit: every sentence sits in exactly one split, and that
  // split is its word's split unless the word is shared.
  std::map<std::string, std::set<Split>> seen_in;
  for (const auto& p : b.pairs) {
    seen_in[p.sentence_a_id].insert(p.split);
    seen_in[p.sentence_b_id].insert(p.split);
  }
  std::size_t multi = 0;
  for (const auto& [id, splits] : seen_in) multi += splits.size() > 1;
  for (const auto& [id, s] : b.sentences.split_of) {
    const auto& lemma = by_id.at(id)->sentence.lemma;
    if (!shared.contains(lemma)) {
      v.require(s == word_split.at(lemma), "sentence " + id + " left its word's split");
    }
    const auto it = seen_in.find(id);
    if (it != seen_in.end() && !(it->second.size() == 1 && *it->second.begin() == s)) ++multi;
  }
  v.require(multi == 0, std::to_string(multi) + " sentences in two splits");

  std::map<std::string, std::size_t> degree;
  std::size_t max_degree = 0;
  for (const auto& p : b.pairs) {
    max_degree = std::max({max_degree, ++degree[p.sentence_a_id], ++degree[p.sentence_b_id]});
  }
  v.require(max_degree <= 16, "max degree " + std::to_string(max_degree));

  std::array<std::size_t, 3> n{}, pos{};
  for (const auto& p : b.pairs) {
    const auto i = static_cast<std::size_t>(p.split);
    ++n[i];
    pos[i] += p.label == 1;
  }
  std::string balances;
  for (std::size_t i = 0; i < 3; ++i) {
    const double bal = n[i] == 0 ? 0.0 : static_cast<double>(pos[i]) / static_cast<double>(n[i]);
    balances += (i ? " " : "") + fmt(bal, 3);
    v.require(bal >= 0.48 && bal <= 0.52, "balance " + fmt(bal) + " in split " +
                                              to_string(kSplits[i]));
  }

  // Shared words: each sense keeps its share of the train sentences.
  std::map<std::string, std::map<std::string, std::pair<std::size_t, std::size_t>>> sense_counts;
  for (const auto& g : gold) {
    if (!shared.contains(g.sentence.lemma)) continue;
    auto& c = sense_counts[g.sentence.lemma][g.sense_id];
    ++c.second;
    c.first += b.sentences.split_of.at(g.sentence.id) == Split::train;
  }
  double worst = 0.0;
  for (const auto& [lemma, senses] : sense_counts) {
    std::size_t train = 0, total = 0;
    for (const auto& [s, c] : senses) {
      train += c.first;
      total += c.second;
    }
    for (const auto& [s, c] : senses) {
      const double expected =
          static_cast<double>(c.second) * static_cast<double>(train) / static_cast<double>(total);
      worst = std::max(worst, std::abs(static_cast<double>(c.first) - expected));
    }
  }
  v.require(worst <= 1.0, "per-sense train share off by " + fmt(worst) + " sentences");
  v.require(elapsed < 10.0, "build took " + fmt(elapsed) + " s");
  if (v.pass) {
    v.detail = "35/8/7, shared 11, " + std::to_string(b.pairs.size()) + " pairs, degree " +
               std::to_string(max_degree) + ", balance " + balances + ", " + fmt(elapsed, 3) +
               " s";
  }
  return v;
}

Verdict chance_baseline() {
  Verdict v;
  const auto gold = oracle::synthetic_gold(50, 80, 77);
  std::string accs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto b = build_wic(gold, 1000 + seed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<ScoredPair> dev, test;
    for (const auto& p : b.pairs) {
      if (p.split == Split::dev) dev.push_back({u(rng), p.label});
      if (p.split == Split::test) test.push_back({u(rng), p.label});
    }
    const double acc = evaluate(test, tune_threshold(dev)) * 100.0;
    accs += (seed ? " " : "") + render_percent(acc / 100.0);
    v.require(std::abs(acc - 50.0) <= 2.0, "seed " + std::to_string(seed) + " scored " +
                                                 render_percent(acc / 100.0));
  }
  if (v.pass) v.detail = accs;
  return v;
}

Verdict tuner_dominance() {
  Verdict v;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::size_t violations = 0;
  for (int set = 0; set < 1000; ++set) {
    const std::size_t n = 2 + rng() % 49;
    std::vector<ScoredPair> dev;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = set % 2 ? std::round(u(rng) * 8.0) / 8.0 : u(rng);
      dev.push_back({d, static_cast<int>(rng() % 2)});
    }
    dev[0].label = 0;
    dev[1].label = 1;
    const auto t = tune_threshold(dev);
    for (int k = 0; k < 100; ++k) violations += accuracy(dev, u(rng)) > t.dev_accuracy;
  }
  v.require(violations == 0, std::to_string(violations) + " violations");
  if (v.pass) v.detail = "0 violations over 100000 comparisons";
  return v;
}

Verdict kmeans_vs_exhaustive() {
  Verdict v;
  std::mt19937_64 rng(55);
  std::normal_distribution<double> g;
  std::size_t single_hits = 0, restart_above = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 3 + rng() % 6, d = 2 + rng() % 3;
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    for (auto& r : rows) {
      for (auto& x : r) x = g(rng);
    }
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) m(i, j) = rows[i][j];
    }
    const double best = oracle::best_two_partition_cost(oracle::normalized(rows));
    KMeansOptions o;
    o.k = 2;
    o.seed = static_cast<std::uint64_t>(t);
    const double single = kmeans(m, o).inertia;
    single_hits += single <= best + 1e-9;
    o.restarts = 10;
    restart_above += kmeans(m, o).inertia > best + 1e-9;
  }
  const double rate = static_cast<double>(single_hits) / trials;
  v.require(rate >= 0.95, "");
  v.require(restart_above == 0, "");
  v.detail = std::to_string(single_hits) + "/200 single runs optimal (need 190), " +
             std::to_string(restart_above) + "/200 above the optimum after 10 restarts (need 0)";
  return v;
}

Verdict agglomerative_vs_naive() {
  Verdict v;
  std::mt19937_64 rng(66);
  std::normal_distribution<double> g;
  std::size_t mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 9, d = 2 + rng() % 4;
    Matrix x(n, d);
    for (auto& val : x.values) val = g(rng);
    const auto dist = pairwise_cosine_distance(x);
    const std::size_t k = 1 + rng() % n;
    mismatches += agglomerative(dist, k).labels != oracle::naive_average_linkage(dist, k);
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " of 100 differ");
  if (v.pass) v.detail = "100/100 identical";
  return v;
}

Verdict mds_reconstruction() {
  Verdict v;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + rng() % 30;
    std::vector<std::array<double, 2>> pts(n);
    for (auto& p : pts) p = {g(rng) * 3.0, g(rng)};
    DistanceMatrix d(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        d.set(i, j, std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]));
      }
    }
    const auto p = classical_mds(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double r = std::hypot(p.points[i][0] - p.points[j][0],
                                    p.points[i][1] - p.points[j][1]);
        worst = std::max(worst, std::abs(r - d(i, j)));
      }
    }
  }
  v.require(worst <= 1e-6, "max error " + fmt(worst));
  v.detail = v.pass ? "max error " + fmt(worst, 3) : v.detail;
  return v;
}

Verdict fps_collinear() {
  Verdict v;
  std::mt19937_64 rng(88);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng() % 30;
    const double angle = static_cast<double>(rng() % 360) * 3.14159265358979 / 180.0;
    std::vector<double> pos(n);
    for (auto& s : pos) s = static_cast<double>(rng() % 100000) / 100.0;
    const auto lo = std::min_element(pos.begin(), pos.end()) - pos.begin();
    const auto hi = std::max_element(pos.begin(), pos.end()) - pos.begin();
    if (pos[static_cast<std::size_t>(lo)] == pos[static_cast<std::size_t>(hi)]) continue;
    Projection2D p;
    for (double s : pos) p.points.push_back({s * std::cos(angle), s * std::sin(angle)});
    auto idx = suggest_dispersed(p, 2, static_cast<std::uint64_t>(t));
    const std::set<double> got{pos[idx[0]], pos[idx[1]]};
    const std::set<double> want{pos[static_cast<std::size_t>(lo)],
                                pos[static_cast<std::size_t>(hi)]};
    v.require(got == want, "fixture " + std::to_string(t) + " missed an endpoint");
  }
  if (v.pass) v.detail = "endpoints on 50 fixtures";
  return v;
}

Verdict semb_round_trip() {
  Verdict v;
  std::mt19937_64 rng(99);
  std::size_t failures = 0;
  for (int t = 0; t < 1000; ++t) {
    EmbeddingMatrix m;
    m.lemma = "lemma" + std::to_string(t);
    m.model_id = t % 3 ? "model-" + std::to_string(t % 7) : "";
    const std::size_t n = rng() % 20, d = 1 + rng() % 16;
    for (std::size_t i = 0; i < n; ++i) m.ids.push_back("s" + std::to_string(i) + "-" + std::to_string(rng() % 1000));
    m.dim = d;
    while (m.data.size() < n * d) {
      const float f = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
      if (std::isfinite(f)) m.data.push_back(f);
    }
    const auto bytes = encode_embeddings(m);
    const auto back = decode_embeddings(bytes);
    failures += !(back.bitwise_equal(m) && encode_embeddings(back) == bytes);
  }
  v.require(failures == 0, std::to_string(failures) + " round trips differ");

  EmbeddingMatrix base;
  base.lemma = "bat";
  base.model_id = "m";
  base.ids = {"a", "b", "c"};
  base.dim = 2;
  base.data = {1, 2, 3, 4, 5, 6};
  const auto good = encode_embeddings(base);
  auto expect = [&](std::string bytes, EmbeddingFormatError want, const std::string& name) {
    try {
      decode_embeddings(bytes);
      v.require(false, name + ": accepted");
    } catch (const EmbeddingFormatException& e) {
      v.require(e.code() == want, name + ": raised " + to_string(e.code()));
    }
  };
  auto magic = good;
  magic[1] = 'X';
  expect(magic, EmbeddingFormatError::bad_magic, "bad magic");
  auto version = good;
  version[4] = 9;
  expect(version, EmbeddingFormatError::version_mismatch, "version");
  expect(good.substr(0, good.size() - 4), EmbeddingFormatError::truncated, "truncated");
  auto nan = good;
  const auto bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  for (int i = 0; i < 4; ++i) nan[nan.size() - 4 + i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  expect(nan, EmbeddingFormatError::non_finite, "NaN payload");
  expect(good + "zz", EmbeddingFormatError::trailing_bytes, "trailing bytes");
  if (v.pass) v.detail = "1000 bitwise round trips, 5 corrupted fixtures rejected";
  return v;
}

Verdict log_replay() {
  Verdict v;
  oracle::TempDir dir("accept");
  auto store = ProjectStore::create(dir.path(), "accept", "az",
                                    [] { return std::int64_t{1700000000}; });
  for (const char* lemma : {"qeyd", "bat"}) {
    store->add_lemma(LemmaSpec{lemma, {lemma}, "az", {}});
    for (const char* s : {"A", "B", "C"}) store->add_sense(lemma, SenseDef{s, s, std::nullopt});
    for (int i = 0; i < 15; ++i) {
      const std::string l = lemma;
      store->add_sentence(SentenceRecord{l + std::to_string(i), "az", l, l,
                                         l + " bir iki üç " + std::to_string(i),
                                         Span{0, l.size()}, "fixture"});
    }
  }
  std::map<std::uint64_t, json> live;
  live[store->snapshot().revision()] = store->snapshot().snapshot();
  std::mt19937_64 rng(500);
  for (int action = 0; action < 500; ++action) {
    const std::string lemma = rng() % 2 ? "qeyd" : "bat";
    const std::string id = lemma + std::to_string(rng() % 15);
    const std::string ann = "ann" + std::to_string(rng() % 3);
    const auto roll = rng() % 10;
    try {
      if (roll < 2) {
        store->unassign(id, lemma, ann);
      } else if (roll == 2) {
        store->assign(id, lemma, "Z", ann, Provenance::manual);  // rejected
      } else {
        store->assign(id, lemma, std::string(1, static_cast<char>('A' + rng() % 3)), ann,
                      rng() % 4 ? Provenance::manual : Provenance::model_suggested);
      }
    } catch (const Error&) {
    }
    live[store->snapshot().revision()] = store->snapshot().snapshot();
  }

  // Independent fold of assign/unassign lines, checked at every prefix.
  const auto log = read_file(store->log_path());
  std::map<std::tuple<std::string, std::string, std::string>, std::string> labels;
  std::size_t pos = 0;
  std::uint64_t rev = 0, bad = 0;
  while (pos < log.size()) {
    const auto end = log.find('\n', pos) + 1;
    const auto e = json::parse(log.substr(pos, end - pos - 1));
    pos = end;
    ++rev;
    const auto type = e["type"].get<std::string>();
    if (type == "assign") {
      labels[{e["sentence_id"], e["lemma"], e["annotator"]}] = e["sense_id"];
    } else if (type == "unassign") {
      labels.erase({e["sentence_id"], e["lemma"], e["annotator"]});
    }
    const auto st = replay(std::string_view(log).substr(0, pos));
    bool ok = st.revision() == rev && st.current().size() == labels.size();
    for (const auto& [key, cur] : st.current()) {
      const auto it = labels.find({std::get<0>(key), std::get<1>(key), std::get<2>(key)});
      ok = ok && it != labels.end() && it->second == cur.annotation.sense_id;
    }
    if (live.contains(rev)) ok = ok && st.snapshot() == live.at(rev);
    bad += !ok;
  }
  v.require(bad == 0, std::to_string(bad) + " inconsistent prefixes");
  v.require(replay(log).snapshot() == store->snapshot().snapshot(), "full replay differs");
  const auto reopened = ProjectStore::open(dir.path());
  v.require(reopened->snapshot().snapshot() == store->snapshot().snapshot(),
            "reopened store differs");
  if (v.pass) v.detail = std::to_string(rev) + " prefixes consistent";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"lift worked example", lift_example},
      {"zero-prior sentinel", zero_prior_sentinel},
      {"dataset statistics", dataset_statistics},
      {"wic builder suite", wic_builder_suite},
      {"chance baseline", chance_baseline},
      {"threshold tuner dominance", tuner_dominance},
      {"k-means vs exhaustive optimum", kmeans_vs_exhaustive},
      {"agglomerative vs naive reference", agglomerative_vs_naive},
      {"classical MDS reconstruction", mds_reconstruction},
      {"farthest-point sampling endpoints", fps_collinear},
      {"embedding format", semb_round_trip},
      {"annotation log replay", log_replay},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
