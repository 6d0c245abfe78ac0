#pragma once

// Evaluation of externally scored WiC pairs: target markup, threshold
// tuning on dev distances and test accuracy. A pair is predicted
// same-sense (label 1) iff distance <= threshold.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "senseloom/corpus.hpp"
#include "senseloom/error.hpp"
#include "senseloom/io.hpp"
#include "senseloom/utf8.hpp"

namespace senseloom {

inline constexpr std::string_view kTargetOpen = "<t>";
inline constexpr std::string_view kTargetClose = "</t>";

inline std::string mark_target(std::string_view text, Span span) {
  utf8::require_valid(text, "text");
  const auto offs = utf8::scalar_offsets(text);
  const std::size_t len = offs.size() - 1;
  if (!(span.start < span.end && span.end <= len)) {
    fail(ErrorKind::validation, "span [" + std::to_string(span.start) + ", " +
                                    std::to_string(span.end) + ") invalid for text of length " +
                                    std::to_string(len));
  }
  std::string out;
  out.reserve(text.size() + kTargetOpen.size() + kTargetClose.size());
  out.append(text.substr(0, offs[span.start]));
  out.append(kTargetOpen);
  out.append(text.substr(offs[span.start], offs[span.end] - offs[span.start]));
  out.append(kTargetClose);
  out.append(text.substr(offs[span.end]));
  return out;
}

// Removes the first "<t>" and the last "</t>".
inline std::string strip_target_markup(std::string_view marked) {
  const auto open = marked.find(kTargetOpen);
  const auto close = marked.rfind(kTargetClose);
  if (open == std::string_view::npos || close == std::string_view::npos ||
      close < open + kTargetOpen.size()) {
    fail(ErrorKind::validation, "text carries no target markup");
  }
  std::string out(marked.substr(0, open));
  out.append(marked.substr(open + kTargetOpen.size(), close - open - kTargetOpen.size()));
  out.append(marked.substr(close + kTargetClose.size()));
  return out;
}

struct ScoredPair {
  double distance = 0.0;
  int label = 0;
};

inline void validate(const ScoredPair& p) {
  if (!std::isfinite(p.distance) || p.distance < -1e-9 || p.distance > 2.0 + 1e-9) {
    fail(ErrorKind::validation,
         "pair distance " + std::to_string(p.distance) + " outside [0, 2]");
  }
  if (p.label != 0 && p.label != 1) fail(ErrorKind::validation, "pair label must be 0 or 1");
}

struct Threshold {
  double value = 0.0;  // may be -inf or +inf
  std::string tuned_on;
  double dev_accuracy = 0.0;
};

inline double accuracy(const std::vector<ScoredPair>& pairs, double t) {
  if (pairs.empty()) fail(ErrorKind::parameter, "accuracy of an empty pair set");
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    const int predicted = p.distance <= t ? 1 : 0;
    correct += predicted == p.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

// Exhaustive search over cut points: -inf, the midpoints between adjacent
// distinct distances, +inf. Highest accuracy wins, ties to the smallest cut.
inline Threshold tune_threshold(std::vector<ScoredPair> dev, std::string tuned_on = {}) {
  if (dev.empty()) fail(ErrorKind::parameter, "dev set is empty");
  std::size_t positives = 0;
  for (const auto& p : dev) {
    validate(p);
    positives += static_cast<std::size_t>(p.label);
  }
  if (positives == 0 || positives == dev.size()) {
    fail(ErrorKind::validation, "dev set has a single class; threshold is unidentifiable");
  }
  std::sort(dev.begin(), dev.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.distance < b.distance; });

  // Below every distance everything is predicted 0: correct = #negatives.
  std::size_t correct = dev.size() - positives;
  std::size_t best_correct = correct;
  double best_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dev.size();) {
    std::size_t j = i;
    while (j < dev.size() && dev[j].distance == dev[i].distance) {
      correct += dev[j].label == 1 ? 1 : 0;
      correct -= dev[j].label == 0 ? 1 : 0;
      ++j;
    }
    // The cut now sits just above dev[i].distance.
    double cut;
    if (j == dev.size()) {
      cut = std::numeric_limits<double>::infinity();
    } else {
      const double a = dev[i].distance, b = dev[j].distance;
      cut = a + (b - a) / 2.0;
      if (!(a <= cut && cut < b)) cut = a;  // adjacent doubles
    }
    if (correct > best_correct) {
      best_correct = correct;
      best_t = cut;
    }
    i = j;
  }
  return Threshold{best_t, std::move(tuned_on),
                   static_cast<double>(best_correct) / static_cast<double>(dev.size())};
}

inline double evaluate(const std::vector<ScoredPair>& test, const Threshold& t) {
  if (test.empty()) fail(ErrorKind::parameter, "test set is empty");
  return accuracy(test, t.value);
}

// Percent with one decimal, e.g. "65.9".
inline std::string render_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

inline json threshold_value_json(double t) {
  if (std::isinf(t)) return t > 0 ? json("+inf") : json("-inf");
  return json(t);
}

inline double threshold_value_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "+inf" || s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  fail(ErrorKind::validation, "threshold must be a number, \"+inf\" or \"-inf\"");
}

}  // namespace senseloom
