#include "arapipe/heads.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "arapipe/error.h"
#include "arapipe/record_io.h"
#include "arapipe/rng.h"

namespace arapipe::heads {
namespace {

constexpr char kWeightsMagic[4] = {'A', 'B', 'H', 'W'};
constexpr std::uint32_t kWeightsVersion = 1;

void CheckFinite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + what);
  }
}

void CheckShape(std::span<const double> x, const HeadWeights& w) {
  if (x.size() != w.dim) {
    throw UsageError("feature dimension " + std::to_string(x.size()) + " does not match head dimension " +
                     std::to_string(w.dim));
  }
  if (w.w.size() != w.dim * w.classes || w.b.size() != w.classes || w.classes == 0) {
    throw UsageError("inconsistent head weight shape");
  }
}

std::string Continuation(const std::string& label) {
  if (label.size() > 2 && label.compare(0, 2, "B-") == 0) return "I-" + label.substr(2);
  return label;
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t GetU32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

void PutF64(std::string& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof(v));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

double GetF64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  double d;
  std::memcpy(&d, &v, sizeof(d));
  return d;
}

}  // namespace

std::vector<double> Softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double hi = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - hi);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> ClsLogits(std::span<const double> x, const HeadWeights& w) {
  CheckShape(x, w);
  std::vector<double> logits(w.b);
  for (std::size_t d = 0; d < w.dim; ++d) {
    if (x[d] == 0.0) continue;
    for (std::size_t c = 0; c < w.classes; ++c) logits[c] += x[d] * w.at(d, c);
  }
  return logits;
}

std::vector<double> ClsForward(std::span<const double> x, const HeadWeights& w) {
  CheckShape(x, w);
  CheckFinite(x, "features");
  CheckFinite(w.w, "weights");
  CheckFinite(w.b, "bias");
  const auto logits = ClsLogits(x, w);
  CheckFinite(logits, "logits");
  return Softmax(logits);
}

HeadGradient ClsGrad(std::span<const LabeledExample> batch, const HeadWeights& w) {
  if (batch.empty()) throw UsageError("gradient of an empty batch");
  HeadGradient g;
  g.dw.assign(w.w.size(), 0.0);
  g.db.assign(w.classes, 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    if (ex.label >= w.classes) throw UsageError("label " + std::to_string(ex.label) + " out of range");
    std::vector<double> p = ClsForward(ex.x, w);
    g.loss -= std::log(p[ex.label]) * scale;
    p[ex.label] -= 1.0;
    for (std::size_t c = 0; c < w.classes; ++c) g.db[c] += p[c] * scale;
    for (std::size_t d = 0; d < w.dim; ++d) {
      if (ex.x[d] == 0.0) continue;
      for (std::size_t c = 0; c < w.classes; ++c) g.dw[d * w.classes + c] += ex.x[d] * p[c] * scale;
    }
  }
  return g;
}

double ClsLoss(std::span<const LabeledExample> batch, const HeadWeights& w) {
  if (batch.empty()) throw UsageError("loss of an empty batch");
  double loss = 0.0;
  for (const auto& ex : batch) {
    // log-softmax directly, so saturated probabilities stay finite.
    const auto logits = ClsLogits(ex.x, w);
    const double hi = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - hi);
    loss -= logits.at(ex.label) - hi - std::log(sum);
  }
  return loss / static_cast<double>(batch.size());
}

HeadWeights InitialWeights(std::size_t dim, std::size_t classes, std::uint64_t seed) {
  HeadWeights w(dim, classes);
  RngStream rng(seed, 0x68656164, 0);
  for (double& v : w.w) v = (rng.Uniform01() - 0.5) * 0.02;
  return w;
}

HeadWeights TrainHead(std::span<const LabeledExample> data, std::size_t classes, const TrainHyper& hyper) {
  if (!(hyper.lr > 0.0)) throw UsageError("learning rate must be positive");
  if (data.empty()) throw UsageError("cannot train on an empty dataset");
  HeadWeights w = InitialWeights(data.front().x.size(), classes, hyper.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(hyper.seed, 0x6f72646572, 0);
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.Shuffle(std::span<std::size_t>(order));
    for (std::size_t i : order) {
      const HeadGradient g = ClsGrad(data.subspan(i, 1), w);
      for (std::size_t k = 0; k < w.w.size(); ++k) w.w[k] -= hyper.lr * g.dw[k];
      for (std::size_t c = 0; c < w.classes; ++c) w.b[c] -= hyper.lr * g.db[c];
    }
  }
  return w;
}

std::size_t Predict(std::span<const double> x, const HeadWeights& w) {
  const auto logits = ClsLogits(x, w);
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

double TrainAccuracy(std::span<const LabeledExample> data, const HeadWeights& w) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) correct += Predict(ex.x, w) == ex.label;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

FeatureVector StubEncoder::Features(std::span<const subword::PieceId> ids) const {
  FeatureVector x(dim_, 0.0);
  if (dim_ == 0) return x;
  for (auto id : ids) {
    const std::uint64_t h = RngStream::Mix(0xC1A55EEDull ^ id);
    x[h % dim_] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double v : x) norm += v * v;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : x) v /= norm;
  }
  return x;
}

void SaveWeights(const std::string& path, const HeadWeights& w) {
  std::string bytes(kWeightsMagic, 4);
  PutU32(bytes, kWeightsVersion);
  PutU32(bytes, static_cast<std::uint32_t>(w.dim));
  PutU32(bytes, static_cast<std::uint32_t>(w.classes));
  for (double v : w.w) PutF64(bytes, v);
  for (double v : w.b) PutF64(bytes, v);
  PutU32(bytes, pretrain::Crc32(bytes));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path);
}

HeadWeights LoadWeights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < 16) throw OffsetError("truncated weights header", bytes.size());
  if (std::memcmp(bytes.data(), kWeightsMagic, 4) != 0) throw OffsetError("bad magic (expected ABHW)", 0);
  if (GetU32(bytes.data() + 4) != kWeightsVersion) throw OffsetError("unsupported weights version", 4);
  HeadWeights w(GetU32(bytes.data() + 8), GetU32(bytes.data() + 12));
  const std::size_t expected = 16 + 8 * (w.dim * w.classes + w.classes) + 4;
  if (bytes.size() != expected) {
    throw OffsetError("weights size mismatch: expected " + std::to_string(expected) + " bytes",
                      std::min(bytes.size(), expected));
  }
  if (pretrain::Crc32(std::string_view(bytes).substr(0, expected - 4)) != GetU32(bytes.data() + expected - 4)) {
    throw OffsetError("weights checksum mismatch", expected - 4);
  }
  const char* p = bytes.data() + 16;
  for (double& v : w.w) v = GetF64(p), p += 8;
  for (double& v : w.b) v = GetF64(p), p += 8;
  return w;
}

std::vector<std::string> ProjectLabelsToSegments(const std::vector<std::string>& word_labels,
                                                 const std::vector<std::size_t>& word_map) {
  std::vector<std::string> out;
  out.reserve(word_map.size());
  for (std::size_t k = 0; k < word_map.size(); ++k) {
    const std::size_t w = word_map[k];
    if (w >= word_labels.size()) throw FormatError("segment " + std::to_string(k) + " maps past the last word");
    const bool first = k == 0 || word_map[k - 1] != w;
    out.push_back(first ? word_labels[w] : Continuation(word_labels[w]));
  }
  return out;
}

NerAlignment AlignNerLabels(std::size_t word_count, const std::vector<std::string>& word_labels,
                            const subword::Encoding& enc, AlignMode mode) {
  if (word_labels.size() != word_count) {
    throw FormatError("got " + std::to_string(word_labels.size()) + " labels for " + std::to_string(word_count) +
                      " words");
  }
  std::vector<std::size_t> pieces_per_word(word_count, 0);
  for (std::size_t p = 0; p < enc.size(); ++p) {
    const std::size_t w = enc.word_ids[p];
    if (w >= word_count) throw FormatError("piece " + std::to_string(p) + " maps past the last word");
    if (p > 0 && w < enc.word_ids[p - 1]) throw FormatError("word ids decrease at piece " + std::to_string(p));
    ++pieces_per_word[w];
  }
  for (std::size_t w = 0; w < word_count; ++w) {
    if (pieces_per_word[w] == 0) throw FormatError("word " + std::to_string(w) + " has no pieces");
  }

  // Unit = word, or marker segment in projection mode.
  std::vector<std::string> unit_labels;
  std::vector<std::size_t> unit_of_piece(enc.size());
  if (mode == AlignMode::kFirstSubtoken) {
    unit_labels = word_labels;
    for (std::size_t p = 0; p < enc.size(); ++p) unit_of_piece[p] = enc.word_ids[p];
  } else {
    std::vector<std::size_t> segment_word_map;
    for (std::size_t p = 0; p < enc.size(); ++p) {
      if (p == 0 || enc.pretoken_ids[p] != enc.pretoken_ids[p - 1]) segment_word_map.push_back(enc.word_ids[p]);
      unit_of_piece[p] = segment_word_map.size() - 1;
    }
    unit_labels = ProjectLabelsToSegments(word_labels, segment_word_map);
  }

  NerAlignment out;
  for (std::size_t p = 0; p < enc.size(); ++p) {
    const std::size_t u = unit_of_piece[p];
    const bool first = p == 0 || unit_of_piece[p - 1] != u;
    out.labels.push_back(first ? unit_labels[u] : Continuation(unit_labels[u]));
    out.loss_mask.push_back(first ? 1 : 0);
  }
  return out;
}

SpanPrediction QaDecodeSpan(std::span<const double> start_scores, std::span<const double> end_scores,
                            std::span<const std::uint8_t> valid, std::size_t max_answer_len) {
  const std::size_t n = start_scores.size();
  if (end_scores.size() != n || valid.size() != n) {
    throw UsageError("start/end/valid vectors differ in length");
  }
  CheckFinite(start_scores, "start scores");
  CheckFinite(end_scores, "end scores");
  SpanPrediction best;
  bool found = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    const std::size_t last = max_answer_len == 0 ? i : std::min(n, i + max_answer_len);
    for (std::size_t j = i; j < last; ++j) {
      if (!valid[j]) continue;
      const double score = start_scores[i] + end_scores[j];
      if (!found || score > best.score) {
        best = {i, j, score};
        found = true;
      }
    }
  }
  if (!found) throw FormatError("no valid answer span");
  return best;
}

}  // namespace arapipe::heads
