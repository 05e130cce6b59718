#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arapipe/corpus.h"
#include "arapipe/error.h"

namespace arapipe::metrics {

// ---------------------------------------------------------------------------
// NER

struct EntitySpan {
  std::string label;
  std::size_t start = 0;  // word index
  std::size_t end = 0;    // inclusive

  auto operator<=>(const EntitySpan&) const = default;
};

/// Decodes IOB2 tags into entity spans. An I-X that does not continue an
/// X entity opens a new one. Tags other than O, B-X, I-X throw.
std::vector<EntitySpan> ExtractEntities(const std::vector<std::string>& tags);

/// IOB2 tags for `spans` over `length` words (spans must not overlap).
std::vector<std::string> RenderTags(const std::vector<EntitySpan>& spans, std::size_t length);

struct ClassScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class NerLevel { kEntity, kToken };
enum class MacroAverage {
  kGoldClasses,   // mean over classes present in gold
  kAllClasses,    // mean over classes in gold or predictions
};

struct NerReport {
  std::map<std::string, ClassScore> per_class;  // every class seen in gold or predictions
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
};

NerReport NerMacroF1(const std::vector<std::vector<std::string>>& pred_tags,
                     const std::vector<std::vector<std::string>>& gold_tags, NerLevel level = NerLevel::kEntity,
                     MacroAverage average = MacroAverage::kGoldClasses);

/// Reads `token<TAB>tag` lines with blank-line sentence breaks; returns the
/// tag column per sentence (tokens in `tokens` if non-null).
std::vector<std::vector<std::string>> ReadConllTags(std::istream& in,
                                                    std::vector<std::vector<std::string>>* tokens = nullptr);

// ---------------------------------------------------------------------------
// QA

/// Strips punctuation, Arabic diacritics and tatweel, lowercases ASCII and
/// collapses whitespace.
std::string NormalizeAnswer(std::string_view text);

bool QaExactMatch(std::string_view pred, const std::vector<std::string>& golds);
double QaF1(std::string_view pred, const std::vector<std::string>& golds);

struct Answer {
  std::string text;
  std::size_t char_start = 0;  // code point offset into the context
};

struct QaInstance {
  std::string context;
  std::vector<Answer> gold_answers;
  Answer prediction;
  std::vector<corpus::CharSpan> sentence_bounds;  // partition of the context

  /// Fills sentence_bounds from the context with the corpus splitter rules.
  static QaInstance WithSentences(std::string context, std::vector<Answer> golds, Answer prediction);
};

/// 1 iff the sentences overlapped by the prediction intersect those
/// overlapped by some gold answer. Throws if a span leaves the context.
bool SentenceMatch(const QaInstance& instance);

struct QaReport {
  std::size_t count = 0;
  double exact_match = 0.0;
  double f1 = 0.0;
  std::size_t sentence_count = 0;  // instances with a context
  double sentence_match = 0.0;
};

struct QaRecord {
  std::string id;
  Answer answer;
};

/// `id<TAB>char_start<TAB>text` lines.
std::vector<QaRecord> ReadQaRecords(std::istream& in);
/// `id<TAB>context` lines.
std::map<std::string, std::string> ReadQaContexts(std::istream& in);

/// Aggregates over every gold id; a missing prediction scores 0.
QaReport EvaluateQa(const std::vector<QaRecord>& preds, const std::vector<QaRecord>& golds,
                    const std::map<std::string, std::string>& contexts);

/// Fraction of positions where preds equals golds. Throws on length
/// mismatch or empty input.
template <typename T>
double Accuracy(const std::vector<T>& preds, const std::vector<T>& golds) {
  if (preds.size() != golds.size()) {
    throw FormatError("accuracy: " + std::to_string(preds.size()) + " predictions for " +
                      std::to_string(golds.size()) + " gold labels");
  }
  if (golds.empty()) throw FormatError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) hits += preds[i] == golds[i];
  return static_cast<double>(hits) / static_cast<double>(golds.size());
}

}  // namespace arapipe::metrics
