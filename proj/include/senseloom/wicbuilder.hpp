#pragma once

// Word-in-Context dataset construction from sense-annotated sentences:
// word-level train/dev/test split, stratified reallocation of shared words'
// sentences, and capped, label-balanced pairing within each split.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "senseloom/apportion.hpp"
#include "senseloom/error.hpp"
#include "senseloom/gold.hpp"
#include "senseloom/io.hpp"
#include "senseloom/random.hpp"

namespace senseloom {

enum class Split : std::uint8_t { train = 0, dev = 1, test = 2 };
inline constexpr std::array<Split, 3> kSplits{Split::train, Split::dev, Split::test};

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

struct WordSplit {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
  std::vector<std::string> shared;  // subset of train present in all splits

  const std::vector<std::string>& words(Split s) const {
    return s == Split::train ? train : s == Split::dev ? dev : test;
  }
};

struct SentenceSplit {
  std::map<std::string, Split> split_of;  // sentence id -> split
  std::vector<std::string> warnings;
};

struct WicPair {
  std::string lemma;
  std::string sentence_a_id;
  std::string sentence_b_id;
  std::string text_a;
  std::string text_b;
  Span span_a;
  Span span_b;
  int label = 0;
  Split split = Split::train;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Word split

// Counts for a 70/15/15 word split of n lemmas: largest remainder, then one
// word moved from train to any empty dev/test split.
inline std::array<std::size_t, 3> word_split_counts(std::size_t n) {
  const auto c = apportion(n, {70, 15, 15});
  std::array<std::size_t, 3> out{c[0], c[1], c[2]};
  for (std::size_t s = 1; s < 3; ++s) {
    if (out[s] == 0 && out[0] > 1) {
      --out[0];
      ++out[s];
    }
  }
  return out;
}

inline std::size_t shared_word_count(std::size_t train_words) {
  return static_cast<std::size_t>(round_share(train_words, 3, 10));
}

inline WordSplit split_words(std::vector<std::string> lemmas, std::uint64_t seed) {
  std::sort(lemmas.begin(), lemmas.end());
  if (std::adjacent_find(lemmas.begin(), lemmas.end()) != lemmas.end()) {
    fail(ErrorKind::parameter, "split_words: duplicate lemma");
  }
  if (lemmas.size() < 3) {
    fail(ErrorKind::parameter,
         "split_words needs at least 3 lemmas, got " + std::to_string(lemmas.size()));
  }
  Rng rng(derive_seed(seed, 1));
  shuffle(lemmas, rng);
  const auto counts = word_split_counts(lemmas.size());
  WordSplit ws;
  auto it = lemmas.begin();
  ws.train.assign(it, it + static_cast<std::ptrdiff_t>(counts[0]));
  it += static_cast<std::ptrdiff_t>(counts[0]);
  ws.dev.assign(it, it + static_cast<std::ptrdiff_t>(counts[1]));
  it += static_cast<std::ptrdiff_t>(counts[1]);
  ws.test.assign(it, lemmas.end());

  std::vector<std::string> pool = ws.train;
  Rng rng_shared(derive_seed(seed, 2));
  shuffle(pool, rng_shared);
  pool.resize(shared_word_count(ws.train.size()));
  ws.shared = std::move(pool);
  return ws;
}

// ---------------------------------------------------------------------------
// Sentence redistribution

// How many of a shared word's sentences of each sense move to dev and test.
struct Reallocation {
  std::vector<std::uint64_t> to_dev;
  std::vector<std::uint64_t> to_test;
};

// 25% of the sentences (rounded half up) move out, apportioned over senses
// by largest remainder; the moved set splits evenly between dev and test,
// the odd one going to dev, again apportioned per sense.
inline Reallocation plan_reallocation(std::span<const std::uint64_t> sense_counts) {
  std::uint64_t n = 0;
  for (auto c : sense_counts) n += c;
  const std::uint64_t moved_total = round_share(n, 1, 4);
  const auto moved = apportion(moved_total, sense_counts);
  const auto to_dev = apportion((moved_total + 1) / 2, std::span<const std::uint64_t>(moved));
  Reallocation r;
  r.to_dev = to_dev;
  r.to_test.resize(moved.size());
  for (std::size_t s = 0; s < moved.size(); ++s) r.to_test[s] = moved[s] - to_dev[s];
  return r;
}

// Groups gold rows by lemma, then by sense id; both levels sorted, sentence
// ids sorted within a sense.
inline std::map<std::string, std::map<std::string, std::vector<const GoldRecord*>>>
group_by_lemma_sense(const std::vector<GoldRecord>& gold) {
  std::map<std::string, std::map<std::string, std::vector<const GoldRecord*>>> out;
  for (const auto& g : gold) out[g.sentence.lemma][g.sense_id].push_back(&g);
  for (auto& [lemma, senses] : out) {
    for (auto& [sense, rows] : senses) {
      std::sort(rows.begin(), rows.end(), [](const GoldRecord* a, const GoldRecord* b) {
        return a->sentence.id < b->sentence.id;
      });
    }
  }
  return out;
}

inline SentenceSplit redistribute_sentences(const std::vector<GoldRecord>& gold,
                                            const WordSplit& ws, std::uint64_t seed) {
  std::unordered_map<std::string, Split> word_split;
  for (Split s : kSplits) {
    for (const auto& w : ws.words(s)) word_split[w] = s;
  }
  const std::unordered_set<std::string> shared(ws.shared.begin(), ws.shared.end());

  SentenceSplit out;
  for (const auto& [lemma, senses] : group_by_lemma_sense(gold)) {
    auto ws_it = word_split.find(lemma);
    if (ws_it == word_split.end()) {
      out.warnings.push_back("lemma " + lemma + " is not in the word split; excluded");
      continue;
    }
    if (senses.size() < 2) {
      out.warnings.push_back("lemma " + lemma + " has a single sense; excluded");
      continue;
    }
    if (!shared.contains(lemma)) {
      for (const auto& [sense, rows] : senses) {
        for (const auto* g : rows) out.split_of[g->sentence.id] = ws_it->second;
      }
      continue;
    }
    std::vector<std::uint64_t> counts;
    for (const auto& [sense, rows] : senses) counts.push_back(rows.size());
    const auto plan = plan_reallocation(counts);
    Rng rng(derive_seed(seed, detail::fnv1a(lemma) ^ 0xA110CA7Eull));
    std::size_t s = 0;
    for (const auto& [sense, rows] : senses) {
      auto order = rows;
      shuffle(order, rng);
      for (std::size_t i = 0; i < order.size(); ++i) {
        Split dst = Split::train;
        if (i < plan.to_dev[s]) {
          dst = Split::dev;
        } else if (i < plan.to_dev[s] + plan.to_test[s]) {
          dst = Split::test;
        }
        out.split_of[order[i]->sentence.id] = dst;
      }
      ++s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pair generation

namespace detail {

// Seeded round-robin picker for one (lemma, split) group. Each sentence
// alternates between asking for a same-sense and a different-sense partner
// until it reaches `cap` pairs or runs out of candidates.
inline std::vector<WicPair> pair_group(std::vector<const GoldRecord*> members, Split split,
                                       std::size_t cap, Rng& rng) {
  std::vector<WicPair> out;
  const std::size_t n = members.size();
  if (n < 2 || cap == 0) return out;
  std::sort(members.begin(), members.end(), [](const GoldRecord* a, const GoldRecord* b) {
    return a->sentence.id < b->sentence.id;
  });
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle(order, rng);

  std::vector<std::vector<std::size_t>> same(n), diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      (members[i]->sense_id == members[j]->sense_id ? same[i] : diff[i]).push_back(j);
    }
    shuffle(same[i], rng);
    shuffle(diff[i], rng);
  }
  std::vector<std::size_t> degree(n, 0), same_at(n, 0), diff_at(n, 0);
  std::vector<bool> want_same(n);
  for (std::size_t p = 0; p < n; ++p) want_same[order[p]] = (p % 2 == 0);
  std::unordered_set<std::uint64_t> used;
  auto key = [n](std::size_t a, std::size_t b) {
    return static_cast<std::uint64_t>(std::min(a, b)) * n + std::max(a, b);
  };
  auto next_partner = [&](std::size_t i, const std::vector<std::size_t>& cands,
                          std::size_t& at) -> std::size_t {
    while (at < cands.size()) {
      const std::size_t j = cands[at];
      if (degree[j] < cap && !used.contains(key(i, j))) return j;
      ++at;  // permanently unavailable: j is full or already paired with i
    }
    return n;
  };

  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t i : order) {
      if (degree[i] >= cap) continue;
      bool label_same = want_same[i];
      std::size_t j = label_same ? next_partner(i, same[i], same_at[i])
                                 : next_partner(i, diff[i], diff_at[i]);
      if (j == n) {
        label_same = !label_same;
        j = label_same ? next_partner(i, same[i], same_at[i])
                       : next_partner(i, diff[i], diff_at[i]);
      }
      if (j == n) continue;
      used.insert(key(i, j));
      ++degree[i];
      ++degree[j];
      want_same[i] = !label_same;
      progress = true;
      const auto& a = members[i]->sentence;
      const auto& b = members[j]->sentence;
      out.push_back(WicPair{a.lemma, a.id, b.id, a.text, b.text, a.target_span, b.target_span,
                            label_same ? 1 : 0, split});
    }
  }
  return out;
}

}  // namespace detail

// Pairs are generated per (split, lemma) and then balanced per split by
// dropping surplus majority-label pairs. Dropping starts with the pairs
// whose endpoints are best covered (highest smaller endpoint degree, later
// pairs first), so that sparsely paired sentences keep their pairs.
inline std::vector<WicPair> generate_pairs(const SentenceSplit& split,
                                           const std::vector<GoldRecord>& gold,
                                           std::uint64_t seed, std::size_t max_per_sentence = 16) {
  std::vector<WicPair> all;
  for (Split s : kSplits) {
    std::map<std::string, std::vector<const GoldRecord*>> groups;
    for (const auto& g : gold) {
      auto it = split.split_of.find(g.sentence.id);
      if (it != split.split_of.end() && it->second == s) groups[g.sentence.lemma].push_back(&g);
    }
    std::vector<WicPair> pairs;
    for (auto& [lemma, members] : groups) {
      Rng rng(derive_seed(seed, detail::fnv1a(lemma) ^ (0x9A1Full + static_cast<unsigned>(s))));
      auto got = detail::pair_group(members, s, max_per_sentence, rng);
      pairs.insert(pairs.end(), std::make_move_iterator(got.begin()),
                   std::make_move_iterator(got.end()));
    }

    std::size_t pos = 0;
    for (const auto& p : pairs) pos += static_cast<std::size_t>(p.label);
    const std::size_t neg = pairs.size() - pos;
    if (pos != neg && pos > 0 && neg > 0) {
      const int majority = pos > neg ? 1 : 0;
      const std::size_t excess = pos > neg ? pos - neg : neg - pos;
      std::unordered_map<std::string, std::size_t> degree;
      for (const auto& p : pairs) {
        ++degree[p.sentence_a_id];
        ++degree[p.sentence_b_id];
      }
      std::vector<std::size_t> candidates;
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (pairs[k].label == majority) candidates.push_back(k);
      }
      auto cover = [&](std::size_t k) {
        return std::min(degree[pairs[k].sentence_a_id], degree[pairs[k].sentence_b_id]);
      };
      std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        const auto ca = cover(a), cb = cover(b);
        return ca != cb ? ca > cb : a > b;
      });
      std::vector<bool> drop(pairs.size(), false);
      for (std::size_t k = 0; k < excess; ++k) drop[candidates[k]] = true;
      std::vector<WicPair> kept;
      kept.reserve(pairs.size() - excess);
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (!drop[k]) kept.push_back(std::move(pairs[k]));
      }
      pairs = std::move(kept);
    }
    all.insert(all.end(), std::make_move_iterator(pairs.begin()),
               std::make_move_iterator(pairs.end()));
  }
  return all;
}

// ---------------------------------------------------------------------------
// Full build

struct WicBuild {
  WordSplit words;
  SentenceSplit sentences;
  std::vector<WicPair> pairs;
  std::vector<std::string> warnings;
};

// Lemmas with fewer than two senses never enter the word split.
inline WicBuild build_wic(const std::vector<GoldRecord>& gold, std::uint64_t seed,
                          std::size_t max_per_sentence = 16) {
  WicBuild b;
  std::vector<std::string> lemmas;
  for (const auto& [lemma, senses] : group_by_lemma_sense(gold)) {
    if (senses.size() < 2) {
      b.warnings.push_back("lemma " + lemma + " has a single sense; excluded");
      continue;
    }
    lemmas.push_back(lemma);
  }
  b.words = split_words(lemmas, seed);
  b.sentences = redistribute_sentences(gold, b.words, seed);
  b.warnings.insert(b.warnings.end(), b.sentences.warnings.begin(), b.sentences.warnings.end());
  b.pairs = generate_pairs(b.sentences, gold, seed, max_per_sentence);
  return b;
}

// ---------------------------------------------------------------------------
// Output

inline json to_json(const WicPair& p) {
  return json{{"lemma", p.lemma},
              {"sentence1", p.text_a},
              {"sentence2", p.text_b},
              {"span1", json::array({p.span_a.start, p.span_a.end})},
              {"span2", json::array({p.span_b.start, p.span_b.end})},
              {"label", p.label}};
}

inline WicPair wic_pair_from_json(const json& j, std::size_t line_no, std::string_view what,
                                  Split split) {
  WicPair p;
  p.lemma = require_field<std::string>(j, "lemma", line_no, what);
  p.text_a = require_field<std::string>(j, "sentence1", line_no, what);
  p.text_b = require_field<std::string>(j, "sentence2", line_no, what);
  p.span_a = span_from_json(j.value("span1", json()), line_no, what);
  p.span_b = span_from_json(j.value("span2", json()), line_no, what);
  p.label = require_field<int>(j, "label", line_no, what);
  if (p.label != 0 && p.label != 1) {
    fail(ErrorKind::validation,
         std::string(what) + " line " + std::to_string(line_no) + ": label must be 0 or 1");
  }
  p.split = split;
  return p;
}

namespace detail {

inline std::string tsv_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline std::string pairs_to_tsv(const std::vector<WicPair>& pairs) {
  std::string out = "lemma\tsentence1\tsentence2\tspan1\tspan2\tlabel\n";
  for (const auto& p : pairs) {
    out += detail::tsv_escape(p.lemma) + '\t' + detail::tsv_escape(p.text_a) + '\t' +
           detail::tsv_escape(p.text_b) + '\t' + std::to_string(p.span_a.start) + ',' +
           std::to_string(p.span_a.end) + '\t' + std::to_string(p.span_b.start) + ',' +
           std::to_string(p.span_b.end) + '\t' + std::to_string(p.label) + '\n';
  }
  return out;
}

inline json to_json(const WordSplit& ws) {
  auto sorted = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  return json{{"train", sorted(ws.train)},
              {"dev", sorted(ws.dev)},
              {"test", sorted(ws.test)},
              {"shared", sorted(ws.shared)}};
}

inline WordSplit word_split_from_json(const json& j) {
  WordSplit ws;
  try {
    ws.train = j.at("train").get<std::vector<std::string>>();
    ws.dev = j.at("dev").get<std::vector<std::string>>();
    ws.test = j.at("test").get<std::vector<std::string>>();
    ws.shared = j.at("shared").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("word split: ") + e.what());
  }
  return ws;
}

// ---------------------------------------------------------------------------
// Statistics

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // population

  std::string render() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean, sd);
    return buf;
  }
};

inline MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.sd = std::sqrt(ss / static_cast<double>(xs.size()));
  return r;
}

struct DatasetStatsRow {
  std::string lang;
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t senses = 0;
  MeanSd senses_per_word;
  MeanSd sentences_per_sense;
};

// One row per language, languages in sorted order.
inline std::vector<DatasetStatsRow> dataset_stats(const std::vector<GoldRecord>& gold) {
  std::map<std::string, std::map<std::string, std::map<std::string, std::size_t>>> by_lang;
  for (const auto& g : gold) ++by_lang[g.sentence.lang][g.sentence.lemma][g.sense_id];
  std::vector<DatasetStatsRow> out;
  for (const auto& [lang, lemmas] : by_lang) {
    DatasetStatsRow row;
    row.lang = lang;
    row.words = lemmas.size();
    std::vector<double> per_word, per_sense;
    for (const auto& [lemma, senses] : lemmas) {
      per_word.push_back(static_cast<double>(senses.size()));
      for (const auto& [sense, count] : senses) {
        per_sense.push_back(static_cast<double>(count));
        row.sentences += count;
        ++row.senses;
      }
    }
    row.senses_per_word = mean_sd(per_word);
    row.sentences_per_sense = mean_sd(per_sense);
    out.push_back(std::move(row));
  }
  return out;
}

inline std::string dataset_stats_text(const std::vector<DatasetStatsRow>& rows) {
  std::string out = "Language\tWords\tSentences\tSenses\tAvg. Senses/Word\tAvg. Sentences/Sense\n";
  for (const auto& r : rows) {
    out += r.lang + '\t' + std::to_string(r.words) + '\t' + std::to_string(r.sentences) + '\t' +
           std::to_string(r.senses) + '\t' + r.senses_per_word.render() + '\t' +
           r.sentences_per_sense.render() + '\n';
  }
  return out;
}

inline json to_json(const DatasetStatsRow& r) {
  return json{{"lang", r.lang},
              {"words", r.words},
              {"sentences", r.sentences},
              {"senses", r.senses},
              {"senses_per_word", {{"mean", r.senses_per_word.mean}, {"sd", r.senses_per_word.sd}}},
              {"sentences_per_sense",
               {{"mean", r.sentences_per_sense.mean}, {"sd", r.sentences_per_sense.sd}}},
              {"senses_per_word_display", r.senses_per_word.render()},
              {"sentences_per_sense_display", r.sentences_per_sense.render()}};
}

struct WicStats {
  std::array<std::size_t, 3> pairs{};
  std::array<std::size_t, 3> positives{};
  std::array<std::size_t, 3> words{};  // lemmas with at least one pair in the split
  std::size_t words_in_all_splits = 0;
  std::size_t shared_words_planned = 0;

  double balance(Split s) const {
    const auto i = static_cast<std::size_t>(s);
    return pairs[i] == 0 ? 0.0
                         : static_cast<double>(positives[i]) / static_cast<double>(pairs[i]);
  }
};

inline WicStats wic_stats(const std::vector<WicPair>& pairs, const WordSplit& ws) {
  WicStats st;
  std::array<std::set<std::string>, 3> lemmas;
  for (const auto& p : pairs) {
    const auto i = static_cast<std::size_t>(p.split);
    ++st.pairs[i];
    st.positives[i] += static_cast<std::size_t>(p.label);
    lemmas[i].insert(p.lemma);
  }
  for (std::size_t i = 0; i < 3; ++i) st.words[i] = lemmas[i].size();
  for (const auto& l : lemmas[0]) {
    if (lemmas[1].contains(l) && lemmas[2].contains(l)) ++st.words_in_all_splits;
  }
  st.shared_words_planned = ws.shared.size();
  return st;
}

inline std::string wic_stats_text(const WicStats& st) {
  std::string out;
  auto line = [&](const char* name, const std::array<std::size_t, 3>& v) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-20s%10zu%10zu%10zu\n", name, v[0], v[1], v[2]);
    out += buf;
  };
  char head[160];
  std::snprintf(head, sizeof head, "%-20s%10s%10s%10s\n", "", "Train", "Dev", "Test");
  out += head;
  line("Sent Pairs", st.pairs);
  line("Words", st.words);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s%10zu\n", "Words in All Splits", st.words_in_all_splits);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-20s%10.3f%10.3f%10.3f\n", "Label Balance",
                st.balance(Split::train), st.balance(Split::dev), st.balance(Split::test));
  out += buf;
  return out;
}

inline json to_json(const WicStats& st) {
  json j;
  for (Split s : kSplits) {
    const auto i = static_cast<std::size_t>(s);
    j["sent_pairs"][to_string(s)] = st.pairs[i];
    j["words"][to_string(s)] = st.words[i];
    j["label_balance"][to_string(s)] = st.balance(s);
  }
  j["words_in_all_splits"] = st.words_in_all_splits;
  j["shared_words_planned"] = st.shared_words_planned;
  const double total = static_cast<double>(st.pairs[0] + st.pairs[1] + st.pairs[2]);
  for (Split s : kSplits) {
    j["pair_ratio"][to_string(s)] =
        total == 0 ? 0.0 : static_cast<double>(st.pairs[static_cast<std::size_t>(s)]) / total;
  }
  return j;
}

}  // namespace senseloom
