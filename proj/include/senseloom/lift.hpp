#pragma once

// Annotation-efficiency metrics: sense priors from a random sample,
// precision of assisted selection, Lift and the implied effort reduction.

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "senseloom/error.hpp"
#include "senseloom/io.hpp"
#include "senseloom/utf8.hpp"

namespace senseloom {

// Exact non-negative rational count/total.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  Fraction reduced() const {
    const auto g = std::gcd(num, den);
    return g == 0 ? *this : Fraction{num / g, den / g};
  }
  friend bool operator==(const Fraction& a, const Fraction& b) {
    // a/b == c/d  <=>  a*d == c*b
    return static_cast<unsigned __int128>(a.num) * b.den ==
           static_cast<unsigned __int128>(b.num) * a.den;
  }
};

struct Prior {
  Fraction share;  // count / sample size
  double value() const { return share.value(); }
};

// prior(s) = count(s) / |sample|.
inline std::map<std::string, Prior> estimate_priors(
    const std::vector<std::pair<std::string, std::string>>& gold_sample) {
  if (gold_sample.empty()) fail(ErrorKind::parameter, "prior sample is empty");
  std::map<std::string, std::uint64_t> counts;
  for (const auto& [sentence, sense] : gold_sample) ++counts[sense];
  std::map<std::string, Prior> out;
  for (const auto& [sense, c] : counts) out[sense] = Prior{Fraction{c, gold_sample.size()}};
  return out;
}

// Share of `selected` whose gold label is `sense`.
inline Fraction selection_precision(const std::vector<std::string>& selected,
                                    const std::string& sense,
                                    const std::unordered_map<std::string, std::string>& gold) {
  if (selected.empty()) fail(ErrorKind::parameter, "selection is empty");
  std::uint64_t hits = 0;
  for (const auto& id : selected) {
    auto it = gold.find(id);
    if (it == gold.end()) {
      fail(ErrorKind::validation, "no gold label for selected sentence " + id, id);
    }
    if (it->second == sense) ++hits;
  }
  return Fraction{hits, selected.size()};
}

// Lift = precision / prior. Infinite when the prior is zero and the
// selection still found the sense.
struct LiftValue {
  double ratio = 0.0;
  bool infinite = false;

  double percent() const { return ratio * 100.0; }

  std::string render() const {
    if (infinite) return "∞ (prior = 0)";
    return std::to_string(static_cast<long long>(std::llround(percent()))) + "%";
  }
};

inline void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    fail(ErrorKind::parameter, std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

inline LiftValue lift(double precision, double prior) {
  require_probability(precision, "precision");
  require_probability(prior, "prior");
  if (prior == 0.0) {
    if (precision == 0.0) fail(ErrorKind::parameter, "lift undefined: precision and prior are 0");
    return LiftValue{0.0, true};
  }
  return LiftValue{precision / prior, false};
}

inline LiftValue lift(const Fraction& precision, const Fraction& prior) {
  if (prior.num == 0) {
    if (precision.num == 0) fail(ErrorKind::parameter, "lift undefined: precision and prior are 0");
    return LiftValue{0.0, true};
  }
  // (a/b) / (c/d) = (a*d) / (b*c), divided once for correct rounding.
  const long double num = static_cast<long double>(precision.num) * prior.den;
  const long double den = static_cast<long double>(precision.den) * prior.num;
  return LiftValue{static_cast<double>(num / den), false};
}

struct EffortReduction {
  double manual_reviews = 0.0;    // 1 / prior
  double assisted_reviews = 0.0;  // 1 / precision
  double reduction_factor = 0.0;  // manual / assisted, equal to lift

  // Headline figures: review counts rounded up, the factor between the
  // rounded counts rounded down.
  std::uint64_t manual_display() const { return ceil_count(manual_reviews); }
  std::uint64_t assisted_display() const { return ceil_count(assisted_reviews); }
  std::uint64_t headline_factor() const { return manual_display() / assisted_display(); }

  static std::uint64_t ceil_count(double x) {
    // Absorb representation error so that 1/0.04 stays 25.
    return static_cast<std::uint64_t>(std::ceil(x * (1.0 - 1e-12)));
  }
};

inline EffortReduction effort_reduction(double prior, double precision) {
  if (!(prior > 0.0 && prior <= 1.0) || !(precision > 0.0 && precision <= 1.0)) {
    fail(ErrorKind::parameter, "effort reduction needs prior and precision in (0, 1]");
  }
  EffortReduction e;
  e.manual_reviews = 1.0 / prior;
  e.assisted_reviews = 1.0 / precision;
  e.reduction_factor = lift(precision, prior).ratio;
  return e;
}

// One report line per (lemma, sense).
struct LiftRow {
  std::string lemma;
  std::string sense;
  std::string gloss;
  std::optional<Fraction> prior;      // absent when the sense is not in the prior sample
  std::optional<Fraction> precision;  // absent when nothing was selected for the sense
  std::optional<LiftValue> lift;
  std::optional<EffortReduction> effort;
};

struct PriorObservation {
  std::string lemma;
  std::string sentence_id;
  std::string sense;
};

struct SelectionEntry {
  std::string lemma;
  std::string sentence_id;
  std::string target_sense;
};

// Key for glosses: (lemma, sense).
using GlossTable = std::map<std::pair<std::string, std::string>, std::string>;

// Per (lemma, sense): prior from the random sample of that lemma, precision
// of the selection aimed at that sense, Lift and effort reduction where
// defined. Rows are ordered by (lemma, sense).
inline std::vector<LiftRow> build_lift_report(
    const std::vector<PriorObservation>& prior_sample,
    const std::vector<SelectionEntry>& selections,
    const std::unordered_map<std::string, std::string>& gold, const GlossTable& glosses = {}) {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sample_by_lemma;
  for (const auto& o : prior_sample) sample_by_lemma[o.lemma].emplace_back(o.sentence_id, o.sense);
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> selected;
  for (const auto& s : selections) {
    selected[{s.lemma, s.target_sense}].push_back(s.sentence_id);
  }

  std::map<std::pair<std::string, std::string>, LiftRow> rows;
  for (const auto& [lemma, sample] : sample_by_lemma) {
    for (const auto& [sense, prior] : estimate_priors(sample)) {
      auto& row = rows[{lemma, sense}];
      row.lemma = lemma;
      row.sense = sense;
      row.prior = prior.share;
    }
  }
  for (const auto& [key, ids] : selected) {
    auto& row = rows[key];
    row.lemma = key.first;
    row.sense = key.second;
    row.precision = selection_precision(ids, key.second, gold);
    if (!row.prior) {
      auto it = sample_by_lemma.find(key.first);
      if (it != sample_by_lemma.end()) row.prior = Fraction{0, it->second.size()};
    }
  }

  std::vector<LiftRow> out;
  for (auto& [key, row] : rows) {
    if (auto g = glosses.find(key); g != glosses.end()) row.gloss = g->second;
    if (row.prior && row.precision && (row.prior->num > 0 || row.precision->num > 0)) {
      row.lift = lift(*row.precision, *row.prior);
      if (row.prior->num > 0 && row.precision->num > 0) {
        row.effort = effort_reduction(row.prior->value(), row.precision->value());
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline json lift_report_json(const std::vector<LiftRow>& rows, double seconds_per_sentence) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j{{"lemma", r.lemma}, {"sense", r.sense}, {"gloss", r.gloss}};
    j["prior"] = r.prior ? json(r.prior->value()) : json(nullptr);
    j["prior_support"] = r.prior ? json(r.prior->den) : json(nullptr);
    j["precision"] = r.precision ? json(r.precision->value()) : json(nullptr);
    j["precision_support"] = r.precision ? json(r.precision->den) : json(nullptr);
    if (r.lift) {
      j["lift"] = r.lift->infinite ? json("inf") : json(r.lift->ratio);
      j["lift_percent"] = r.lift->infinite ? json("inf") : json(r.lift->percent());
      j["lift_display"] = r.lift->render();
    } else {
      j["lift"] = nullptr;
      j["lift_percent"] = nullptr;
      j["lift_display"] = nullptr;
    }
    if (r.effort) {
      const auto& e = *r.effort;
      j["effort"] = {
          {"manual_reviews", e.manual_reviews},
          {"assisted_reviews", e.assisted_reviews},
          {"reduction_factor", e.reduction_factor},
          {"manual_display", e.manual_display()},
          {"assisted_display", e.assisted_display()},
          {"headline_factor", e.headline_factor()},
          {"headline", std::to_string(e.headline_factor()) + "×"},
          {"seconds_per_sentence", seconds_per_sentence},
          {"manual_seconds_per_hit", e.manual_reviews * seconds_per_sentence},
          {"assisted_seconds_per_hit", e.assisted_reviews * seconds_per_sentence},
      };
    }
    arr.push_back(std::move(j));
  }
  return json{{"rows", std::move(arr)}};
}

// Aligned text table: word, sense, definition, Lift (%), then one effort
// line per sense where the reduction is defined.
inline std::string lift_report_text(const std::vector<LiftRow>& rows) {
  std::vector<std::array<std::string, 6>> cells;
  cells.push_back({"Word", "Sense", "Definition", "Prior", "Precision", "Lift (%)"});
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    cells.push_back({r.lemma, r.sense, r.gloss.empty() ? "-" : r.gloss,
                     r.prior ? fmt(r.prior->value()) : "-",
                     r.precision ? fmt(r.precision->value()) : "-",
                     r.lift ? r.lift->render() : "-"});
  }
  std::array<std::size_t, 6> width{};
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 6; ++c) width[c] = std::max(width[c], utf8::length(row[c]));
  }
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < 6; ++c) {
      out += cells[r][c];
      if (c + 1 < 6) out += std::string(width[c] - utf8::length(cells[r][c]) + 2, ' ');
    }
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out += std::string(total - 2, '-') + '\n';
    }
  }
  for (const auto& r : rows) {
    if (!r.effort) continue;
    out += r.lemma + "/" + r.sense + ": manual " + std::to_string(r.effort->manual_display()) +
           " reviews per hit, assisted " + std::to_string(r.effort->assisted_display()) +
           " selections, " + std::to_string(r.effort->headline_factor()) + "× reduction\n";
  }
  return out;
}

}  // namespace senseloom
