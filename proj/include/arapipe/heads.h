#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arapipe/subword.h"

namespace arapipe::heads {

using FeatureVector = std::vector<double>;

/// Linear softmax head: logits = W^T x + b, W stored row-major D x C.
struct HeadWeights {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<double> w;
  std::vector<double> b;

  HeadWeights() = default;
  HeadWeights(std::size_t d, std::size_t c) : dim(d), classes(c), w(d * c, 0.0), b(c, 0.0) {}

  double& at(std::size_t d, std::size_t c) { return w[d * classes + c]; }
  double at(std::size_t d, std::size_t c) const { return w[d * classes + c]; }

  friend bool operator==(const HeadWeights&, const HeadWeights&) = default;
};

/// Numerically stable softmax (max-subtracted).
std::vector<double> Softmax(std::span<const double> logits);

std::vector<double> ClsLogits(std::span<const double> x, const HeadWeights& w);

/// Class distribution for one feature vector. Non-finite input or weights
/// throw a numeric error; shape mismatches throw a usage error.
std::vector<double> ClsForward(std::span<const double> x, const HeadWeights& w);

struct LabeledExample {
  FeatureVector x;
  std::size_t label = 0;
};

struct HeadGradient {
  double loss = 0.0;  // mean negative log-likelihood
  std::vector<double> dw;
  std::vector<double> db;
};

/// Analytic gradient of the mean NLL over `batch`.
HeadGradient ClsGrad(std::span<const LabeledExample> batch, const HeadWeights& w);
double ClsLoss(std::span<const LabeledExample> batch, const HeadWeights& w);

struct TrainHyper {
  double lr = 0.5;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
};

/// Per-example SGD with a seeded initialisation and visiting order.
HeadWeights TrainHead(std::span<const LabeledExample> data, std::size_t classes, const TrainHyper& hyper);
HeadWeights InitialWeights(std::size_t dim, std::size_t classes, std::uint64_t seed);

std::size_t Predict(std::span<const double> x, const HeadWeights& w);
double TrainAccuracy(std::span<const LabeledExample> data, const HeadWeights& w);

/// Stand-in for the encoder's first-token state: signed feature hashing of
/// the piece ids, L2-normalised.
class StubEncoder {
 public:
  explicit StubEncoder(std::size_t dim) : dim_(dim) {}
  std::size_t dim() const { return dim_; }
  FeatureVector Features(std::span<const subword::PieceId> ids) const;

 private:
  std::size_t dim_;
};

/// Weight file: "ABHW" | u32 version | u32 D | u32 C | W (D*C f64) | b (C f64)
/// | u32 crc32 of everything before it. Little-endian.
void SaveWeights(const std::string& path, const HeadWeights& w);
HeadWeights LoadWeights(const std::string& path);

// ---------------------------------------------------------------------------
// NER label handling

enum class AlignMode {
  kFirstSubtoken,      // only the first piece of each word carries loss
  kSegmentProjection,  // labels projected onto marker segments first
};

struct NerAlignment {
  std::vector<std::string> labels;     // one per piece
  std::vector<std::uint8_t> loss_mask; // 1 where the label is trained on
};

/// B-X on the first segment of a word and I-X on the rest; I-X and O copy.
/// `word_map[k]` is the source word of segment k.
std::vector<std::string> ProjectLabelsToSegments(const std::vector<std::string>& word_labels,
                                                 const std::vector<std::size_t>& word_map);

/// Throws a format error if a word has no pieces or ids are inconsistent.
NerAlignment AlignNerLabels(std::size_t word_count, const std::vector<std::string>& word_labels,
                            const subword::Encoding& enc, AlignMode mode = AlignMode::kFirstSubtoken);

// ---------------------------------------------------------------------------
// Extractive QA

inline constexpr std::size_t kDefaultMaxAnswerLen = 30;

struct SpanPrediction {
  std::size_t start = 0;
  std::size_t end = 0;
  double score = 0.0;
  friend bool operator==(const SpanPrediction&, const SpanPrediction&) = default;
};

/// Joint argmax of start[i] + end[j] over valid i <= j with
/// j - i + 1 <= max_answer_len; ties go to smaller i, then smaller j.
SpanPrediction QaDecodeSpan(std::span<const double> start_scores, std::span<const double> end_scores,
                            std::span<const std::uint8_t> valid,
                            std::size_t max_answer_len = kDefaultMaxAnswerLen);

}  // namespace arapipe::heads
