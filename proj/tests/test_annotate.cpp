#include <catch_amalgamated.hpp>

#include <random>
#include <thread>

#include "oracles.hpp"
#include "senseloom/annotate.hpp"

using namespace senseloom;

namespace {

Clock fixed_clock() {
  return [] { return std::int64_t{1700000000}; };
}

SentenceRecord rec(const std::string& id, const std::string& lemma = "qeyd") {
  return SentenceRecord{id, "az", lemma, lemma, lemma + " etmək lazımdır burada", Span{0, lemma.size()}, "t"};
}

// Project "p" with lemma qeyd, senses A and B and `n` sentences s1..sn.
std::unique_ptr<ProjectStore> seeded(const fs::path& dir, std::size_t n = 4) {
  auto s = ProjectStore::create(dir, "p", "az", fixed_clock());
  s->add_lemma(LemmaSpec{"qeyd", {"qeyd"}, "az", {}});
  s->add_sense("qeyd", SenseDef{"A", "note", std::nullopt});
  s->add_sense("qeyd", SenseDef{"B", "register", std::string("register")});
  for (std::size_t i = 1; i <= n; ++i) s->add_sentence(rec("s" + std::to_string(i)));
  return s;
}

std::size_t log_lines(const ProjectStore& s) {
  std::size_t n = 0;
  for_each_line(read_file(s.log_path()), [&](std::size_t, std::string_view) { ++n; });
  return n;
}

LemmaProjection square_projection(const std::vector<std::string>& ids) {
  LemmaProjection p;
  p.ids = ids;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    p.points.push_back({static_cast<double>(i), 0.0});
    p.clusters.push_back(i % 2);
  }
  return p;
}

}  // namespace

TEST_CASE("assign then read back") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path());
  const auto r = s->assign("s1", "qeyd", "A", "ann1", Provenance::manual);
  CHECK(r.stored);
  const auto st = s->snapshot();
  const auto* c = label_for(st, "s1", "qeyd", std::string("ann1"));
  REQUIRE(c);
  CHECK(c->annotation.sense_id == "A");
  CHECK(c->annotation.timestamp == 1700000000);
  CHECK(c->revision == r.revision);
}

TEST_CASE("later assignment supersedes, log keeps both") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path());
  const auto before = log_lines(*s);
  s->assign("s1", "qeyd", "A", "ann1", Provenance::manual);
  s->assign("s1", "qeyd", "B", "ann1", Provenance::manual);
  CHECK(log_lines(*s) == before + 2);
  CHECK(label_for(s->snapshot(), "s1", "qeyd", std::string("ann1"))->annotation.sense_id == "B");
}

TEST_CASE("identical payload is idempotent") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path());
  const auto a = s->assign("s1", "qeyd", "A", "ann1", Provenance::manual);
  const auto lines = log_lines(*s);
  const auto b = s->assign("s1", "qeyd", "A", "ann1", Provenance::manual);
  CHECK_FALSE(b.stored);
  CHECK(b.revision == a.revision);
  CHECK(log_lines(*s) == lines);
  const auto c = s->assign("s1", "qeyd", "A", "ann1", Provenance::verified);
  CHECK(c.stored);
  CHECK(c.revision > a.revision);
}

TEST_CASE("unknown references are rejected and leave the log alone") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path());
  const auto lines = log_lines(*s);
  auto kind_of = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;  // sentinel: nothing thrown
  };
  CHECK(kind_of([&] { s->assign("s1", "qeyd", "nope", "ann1", Provenance::manual); }) ==
        ErrorKind::not_found);
  CHECK(kind_of([&] { s->assign("zz", "qeyd", "A", "ann1", Provenance::manual); }) ==
        ErrorKind::not_found);
  CHECK(kind_of([&] { s->assign("s1", "other", "A", "ann1", Provenance::manual); }) ==
        ErrorKind::not_found);
  CHECK(kind_of([&] { s->assign("s1", "qeyd", "A", "", Provenance::manual); }) ==
        ErrorKind::validation);
  CHECK(kind_of([&] { s->add_sense("qeyd", SenseDef{"A", "dup", std::nullopt}); }) ==
        ErrorKind::conflict);
  CHECK(kind_of([&] { s->add_sentence(rec("s1")); }) == ErrorKind::conflict);
  CHECK(log_lines(*s) == lines);
}

TEST_CASE("unassign: undo, no-op, relabel") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path());
  CHECK_FALSE(s->unassign("s2", "qeyd", "ann1").has_value());

  const auto base = log_lines(*s);
  s->assign("s1", "qeyd", "A", "ann1", Provenance::manual);
  CHECK(s->unassign("s1", "qeyd", "ann1").has_value());
  CHECK(label_for(s->snapshot(), "s1", "qeyd", std::string("ann1")) == nullptr);
  s->assign("s1", "qeyd", "A", "ann1", Provenance::manual);
  CHECK(label_for(s->snapshot(), "s1", "qeyd", std::string("ann1"))->annotation.sense_id == "A");
  CHECK(log_lines(*s) == base + 3);
}

TEST_CASE("revisions strictly increase and equal log line numbers") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path());
  std::uint64_t last = s->snapshot().revision();
  for (int i = 0; i < 10; ++i) {
    const auto r = s->assign("s" + std::to_string(1 + i % 4), "qeyd", i % 3 ? "A" : "B",
                             "ann" + std::to_string(i % 2), Provenance::manual);
    if (r.stored) {
      CHECK(r.revision == last + 1);
      last = r.revision;
    }
  }
  CHECK(log_lines(*s) == last);
}

TEST_CASE("view: projection required, aligned arrays, recount") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path());
  try {
    make_view(s->snapshot(), "qeyd");
    FAIL("expected conflict");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::conflict);
  }
  s->set_projection("qeyd", square_projection({"s1", "s2", "s3", "s4"}));
  s->assign("s1", "qeyd", "A", "ann1", Provenance::manual);
  s->assign("s3", "qeyd", "B", "ann1", Provenance::manual);
  const auto v = make_view(s->snapshot(), "qeyd");
  REQUIRE(v.ids.size() == 4);
  CHECK(v.points.size() == 4);
  CHECK(v.clusters.size() == 4);
  CHECK(v.senses.size() == 4);
  CHECK(v.senses[0] == std::optional<std::string>("A"));
  CHECK_FALSE(v.senses[1].has_value());
  CHECK(v.senses[2] == std::optional<std::string>("B"));
  CHECK(v.counts.at("A") == 1);
  CHECK(v.counts.at("B") == 1);
  CHECK(v.inventory.size() == 2);
}

TEST_CASE("view of an empty lemma is empty") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path(), 0);
  const auto v = make_view(s->snapshot(), "qeyd");
  CHECK(v.ids.empty());
  CHECK(v.points.empty());
  CHECK(v.senses.empty());
  CHECK(v.counts.at("A") == 0);
}

TEST_CASE("view counts equal a recount of current annotations") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path(), 30);
  std::vector<std::string> ids;
  for (int i = 1; i <= 30; ++i) ids.push_back("s" + std::to_string(i));
  s->set_projection("qeyd", square_projection(ids));
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto id = ids[rng() % ids.size()];
    if (rng() % 4 == 0) {
      s->unassign(id, "qeyd", "ann1");
    } else {
      s->assign(id, "qeyd", rng() % 2 ? "A" : "B", "ann1", Provenance::manual);
    }
  }
  // Recount straight from the log.
  std::map<std::string, std::string> latest;
  for (auto& [line_no, e] : parse_jsonl(read_file(s->log_path()), "log")) {
    if (e["type"] == "assign") latest[e["sentence_id"]] = e["sense_id"];
    if (e["type"] == "unassign") latest.erase(e["sentence_id"].get<std::string>());
  }
  std::map<std::string, std::size_t> expected{{"A", 0}, {"B", 0}};
  for (const auto& [id, sense] : latest) ++expected[sense];
  CHECK(make_view(s->snapshot(), "qeyd", std::string("ann1")).counts == expected);
}

TEST_CASE("view without an annotator shows the latest label of anyone") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path());
  s->set_projection("qeyd", square_projection({"s1", "s2", "s3", "s4"}));
  s->assign("s1", "qeyd", "A", "ann1", Provenance::manual);
  s->assign("s1", "qeyd", "B", "ann2", Provenance::manual);
  CHECK(make_view(s->snapshot(), "qeyd").senses[0] == std::optional<std::string>("B"));
  CHECK(make_view(s->snapshot(), "qeyd", std::string("ann1")).senses[0] ==
        std::optional<std::string>("A"));
}

TEST_CASE("export: threshold per sense, provenance filter, ordering") {
  oracle::TempDir dir("ann");
  auto s = ProjectStore::create(dir.path(), "p", "az", fixed_clock());
  for (std::string lemma : {"l1", "l2", "l3"}) {
    s->add_lemma(LemmaSpec{lemma, {lemma}, "az", {}});
    s->add_sense(lemma, SenseDef{"A", "a", std::nullopt});
    s->add_sense(lemma, SenseDef{"B", "b", std::nullopt});
  }
  auto fill = [&](const std::string& lemma, std::size_t a, std::size_t b, Provenance prov) {
    for (std::size_t i = 0; i < a + b; ++i) {
      const auto id = lemma + "-" + std::to_string(1000 + i);
      s->add_sentence(rec(id, lemma));
      s->assign(id, lemma, i < a ? "A" : "B", "ann1", prov);
    }
  };
  fill("l1", 40, 35, Provenance::manual);
  fill("l2", 40, 3, Provenance::verified);
  fill("l3", 40, 40, Provenance::model_suggested);

  const auto rows = export_gold(s->snapshot(), 30);
  CHECK(rows.size() == 75);
  for (const auto& r : rows) CHECK(r.sentence.lemma == "l1");
  CHECK(std::is_sorted(rows.begin(), rows.end(), [](const GoldRecord& a, const GoldRecord& b) {
    return std::tie(a.sentence.lemma, a.sentence.id) < std::tie(b.sentence.lemma, b.sentence.id);
  }));
  CHECK(export_gold(s->snapshot(), 3).size() == 75 + 43);
}

TEST_CASE("export uses the adjudicator when given") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path());
  for (int i = 1; i <= 4; ++i) {
    const auto id = "s" + std::to_string(i);
    s->assign(id, "qeyd", i <= 2 ? "A" : "B", "ann1", Provenance::manual);
    s->assign(id, "qeyd", "A", "ann2", Provenance::manual);
  }
  CHECK(export_gold(s->snapshot(), 1, std::string("ann2")).empty());  // one sense only
  const auto rows = export_gold(s->snapshot(), 1, std::string("ann1"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[2].sense_id == "B");
}

TEST_CASE("export depends only on the current state") {
  oracle::TempDir d1("ann"), d2("ann");
  auto a = seeded(d1.path());
  auto b = seeded(d2.path());
  a->assign("s1", "qeyd", "A", "x", Provenance::manual);
  a->assign("s2", "qeyd", "B", "x", Provenance::manual);
  b->assign("s1", "qeyd", "B", "x", Provenance::manual);
  b->unassign("s1", "qeyd", "x");
  b->assign("s1", "qeyd", "A", "x", Provenance::manual);
  b->assign("s2", "qeyd", "B", "x", Provenance::manual);
  CHECK(gold_to_jsonl(export_gold(a->snapshot(), 1)) == gold_to_jsonl(export_gold(b->snapshot(), 1)));
}

TEST_CASE("reopening replays the log to the same state") {
  oracle::TempDir dir("ann");
  json live;
  {
    auto s = seeded(dir.path());
    s->assign("s1", "qeyd", "A", "ann1", Provenance::manual);
    s->assign("s2", "qeyd", "B", "ann1", Provenance::verified);
    s->unassign("s1", "qeyd", "ann1");
    live = s->snapshot().snapshot();
  }
  CHECK(ProjectStore::open(dir.path())->snapshot().snapshot() == live);
}

TEST_CASE("torn final line is ignored, a corrupt middle line is not") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path());
  s->assign("s1", "qeyd", "A", "ann1", Provenance::manual);
  const auto full = read_file(s->log_path());
  const auto state = replay(full).snapshot();

  const auto torn = full + R"({"rev":99,"type":"assi)";
  CHECK(replay(torn).snapshot() == state);

  auto broken = full;
  broken.insert(broken.find('\n') + 1, "garbage\n");
  CHECK_THROWS_AS(replay(broken), Error);
}

TEST_CASE("every prefix of the log replays to a valid prefix state") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path(), 12);
  std::vector<json> states{};
  std::mt19937_64 rng(8);
  std::map<std::uint64_t, json> by_revision;
  by_revision[s->snapshot().revision()] = s->snapshot().snapshot();
  for (int i = 0; i < 120; ++i) {
    const auto id = "s" + std::to_string(1 + rng() % 12);
    const auto ann = "ann" + std::to_string(rng() % 3);
    if (rng() % 5 == 0) {
      s->unassign(id, "qeyd", ann);
    } else {
      s->assign(id, "qeyd", rng() % 2 ? "A" : "B", ann,
                rng() % 3 ? Provenance::manual : Provenance::model_suggested);
    }
    by_revision[s->snapshot().revision()] = s->snapshot().snapshot();
  }
  const auto log = read_file(s->log_path());
  std::size_t pos = 0;
  std::uint64_t rev = 0;
  while (pos < log.size()) {
    pos = log.find('\n', pos) + 1;
    ++rev;
    const auto st = replay(std::string_view(log).substr(0, pos));
    CHECK(st.revision() == rev);
    if (by_revision.contains(rev)) CHECK(st.snapshot() == by_revision[rev]);
  }
  CHECK(replay(log).snapshot() == s->snapshot().snapshot());
}

TEST_CASE("concurrent writers are serialized") {
  oracle::TempDir dir("ann");
  auto s = seeded(dir.path(), 8);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i) {
        s->assign("s" + std::to_string(1 + (i % 8)), "qeyd", (i + t) % 2 ? "A" : "B",
                  "ann" + std::to_string(t), Provenance::manual);
        (void)s->snapshot();
      }
    });
  }
  for (auto& th : threads) th.join();
  const auto reopened = replay(read_file(s->log_path()));
  CHECK(reopened.snapshot() == s->snapshot().snapshot());
  CHECK(reopened.revision() == log_lines(*s));
}

TEST_CASE("workspace lists, creates and reopens projects") {
  oracle::TempDir dir("ws");
  {
    Workspace ws(dir.path(), fixed_clock());
    CHECK(ws.list().empty());
    ws.create("alpha", "az").add_lemma(LemmaSpec{"qeyd", {"qeyd"}, "az", {}});
    ws.create("beta", "te");
    CHECK(ws.list() == std::vector<std::string>{"alpha", "beta"});
    CHECK_THROWS_AS(ws.create("alpha", "az"), Error);
    CHECK_THROWS_AS(ws.create("../evil", "az"), Error);
  }
  Workspace again(dir.path());
  CHECK(again.get("alpha").snapshot().lemmas().contains("qeyd"));
  try {
    again.get("gamma");
    FAIL("expected not found");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_found);
  }
}
