#include "arapipe/heads.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <unistd.h>

#include "arapipe/error.h"
#include "gtest/gtest.h"
#include "oracles.h"

namespace arapipe::heads {
namespace {

std::vector<LabeledExample> RandomBatch(std::mt19937_64& rng, std::size_t n, std::size_t d, std::size_t c) {
  std::normal_distribution<double> normal;
  std::vector<LabeledExample> batch(n);
  for (auto& ex : batch) {
    for (std::size_t k = 0; k < d; ++k) ex.x.push_back(normal(rng));
    ex.label = std::uniform_int_distribution<std::size_t>(0, c - 1)(rng);
  }
  return batch;
}

HeadWeights RandomWeights(std::mt19937_64& rng, std::size_t d, std::size_t c) {
  std::normal_distribution<double> normal(0.0, 0.5);
  HeadWeights w(d, c);
  for (auto& v : w.w) v = normal(rng);
  for (auto& v : w.b) v = normal(rng);
  return w;
}

TEST(SoftmaxTest, IsADistribution) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> wide(-700.0, 700.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> logits(1 + t % 9);
    for (auto& v : logits) v = wide(rng);
    const auto p = Softmax(logits);
    double sum = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  const auto p = Softmax(std::vector<double>{1000.0, 1000.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
}

TEST(ClsTest, ForwardRejectsBadInput) {
  HeadWeights w(2, 3);
  EXPECT_THROW(ClsForward(std::vector<double>{1.0}, w), Error);
  EXPECT_THROW(ClsForward(std::vector<double>{1.0, std::nan("")}, w), Error);
  const auto p = ClsForward(std::vector<double>{1.0, 2.0}, w);
  EXPECT_NEAR(p[0], 1.0 / 3.0, 1e-15);
}

TEST(ClsTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + t % 7, c = 2 + t % 4;
    const auto batch = RandomBatch(rng, 1 + t % 5, d, c);
    const auto w = RandomWeights(rng, d, c);
    const auto analytic = ClsGrad(batch, w);
    const auto numeric = oracle::NumericGradient(batch, w);
    EXPECT_NEAR(analytic.loss, numeric.loss, 1e-12);
    EXPECT_LT(oracle::RelativeError(analytic.dw, numeric.dw), 1e-4);
    EXPECT_LT(oracle::RelativeError(analytic.db, numeric.db), 1e-4);
  }
  HeadWeights w(2, 2);
  EXPECT_THROW(ClsGrad({}, w), Error);
}

TEST(ClsTest, SeparableSetIsLearned) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 0.3);
  std::vector<LabeledExample> data;
  const std::vector<std::vector<double>> centers = {{2, 0, 0}, {0, 2, 0}, {0, 0, 2}};
  for (int i = 0; i < 90; ++i) {
    LabeledExample ex;
    ex.label = i % 3;
    for (double c : centers[ex.label]) ex.x.push_back(c + normal(rng));
    data.push_back(ex);
  }
  TrainHyper hyper;
  hyper.epochs = 200;
  const auto w = TrainHead(data, 3, hyper);
  EXPECT_EQ(TrainAccuracy(data, w), 1.0);
  EXPECT_EQ(TrainHead(data, 3, hyper), w);
  hyper.lr = 0.0;
  EXPECT_THROW(TrainHead(data, 3, hyper), Error);
}

TEST(StubEncoderTest, DeterministicUnitNorm) {
  const StubEncoder enc(16);
  const std::vector<subword::PieceId> ids = {5, 9, 9, 123};
  const auto f = enc.Features(ids);
  ASSERT_EQ(f.size(), 16u);
  EXPECT_NEAR(std::sqrt(std::inner_product(f.begin(), f.end(), f.begin(), 0.0)), 1.0, 1e-12);
  EXPECT_EQ(f, enc.Features(ids));
  const auto empty = enc.Features({});
  EXPECT_EQ(empty, std::vector<double>(16, 0.0));
}

TEST(WeightsTest, SaveLoadRoundTrip) {
  const std::string path =
      (std::filesystem::temp_directory_path() / ("arapipe_w_" + std::to_string(::getpid()))).string();
  std::mt19937_64 rng(5);
  const auto w = RandomWeights(rng, 4, 3);
  SaveWeights(path, w);
  EXPECT_EQ(LoadWeights(path), w);
  EXPECT_EQ(std::filesystem::file_size(path), 16u + 8u * (12 + 3) + 4u);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);
    f.put('\x01');
  }
  EXPECT_THROW(LoadWeights(path), Error);
  std::filesystem::remove(path);
}

TEST(NerAlignTest, FirstSubtoken) {
  subword::Encoding enc;
  enc.ids = {10, 11, 12, 13, 14};
  enc.word_ids = {0, 0, 1, 2, 2};
  enc.pretoken_ids = {0, 1, 2, 3, 3};
  const auto a = AlignNerLabels(3, {"B-PER", "O", "B-LOC"}, enc);
  EXPECT_EQ(a.labels, (std::vector<std::string>{"B-PER", "I-PER", "O", "B-LOC", "I-LOC"}));
  EXPECT_EQ(a.loss_mask, (std::vector<std::uint8_t>{1, 0, 1, 1, 0}));
  EXPECT_EQ(std::accumulate(a.loss_mask.begin(), a.loss_mask.end(), 0), 3);
  EXPECT_THROW(AlignNerLabels(4, {"O", "O", "O", "O"}, enc), Error);
  EXPECT_THROW(AlignNerLabels(3, {"O", "O"}, enc), Error);
}

TEST(NerAlignTest, SegmentProjection) {
  // "و+ ال+ كتاب مفيد": word 0 has three segments.
  EXPECT_EQ(ProjectLabelsToSegments({"B-ORG", "O"}, {0, 0, 0, 1}),
            (std::vector<std::string>{"B-ORG", "I-ORG", "I-ORG", "O"}));
  subword::Encoding enc;
  enc.ids = {1, 2, 3, 4, 5};
  enc.word_ids = {0, 0, 0, 0, 1};
  enc.pretoken_ids = {0, 1, 2, 2, 3};
  const auto a = AlignNerLabels(2, {"B-ORG", "O"}, enc, AlignMode::kSegmentProjection);
  EXPECT_EQ(a.labels, (std::vector<std::string>{"B-ORG", "I-ORG", "I-ORG", "I-ORG", "O"}));
  EXPECT_EQ(a.loss_mask, (std::vector<std::uint8_t>{1, 1, 1, 0, 1}));
}

TEST(QaDecodeTest, JointArgmaxBeatsGreedy) {
  // Greedy start is 7 and greedy end is 4, which is illegal.
  std::vector<double> start(10, 0.0), end(10, 0.0);
  start[7] = 5.0;
  start[2] = 3.0;
  end[4] = 5.0;
  end[8] = 1.0;
  const std::vector<std::uint8_t> valid(10, 1);
  const auto span = QaDecodeSpan(start, end, valid);
  const auto brute = oracle::BruteForceQa(start, end, valid, kDefaultMaxAnswerLen);
  EXPECT_EQ(span.start, brute.start);
  EXPECT_EQ(span.end, brute.end);
  EXPECT_EQ(span.start, 2u);
  EXPECT_EQ(span.end, 4u);
  EXPECT_DOUBLE_EQ(span.score, 8.0);
}

TEST(QaDecodeTest, MaxLenOneIsDiagonal) {
  const std::vector<double> start = {1, 5, 0, 2}, end = {4, 0, 3, 2.5};
  const auto span = QaDecodeSpan(start, end, std::vector<std::uint8_t>(4, 1), 1);
  EXPECT_EQ(span.start, 0u);
  EXPECT_EQ(span.end, 0u);
}

TEST(QaDecodeTest, MatchesBruteForceUpToFifty) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> small(-3, 3);
  for (std::size_t n = 1; n <= 50; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> start(n), end(n);
      std::vector<std::uint8_t> valid(n);
      for (std::size_t i = 0; i < n; ++i) {
        start[i] = small(rng);  // small integers force ties
        end[i] = small(rng);
        valid[i] = rng() % 5 != 0;
      }
      const std::size_t max_len = 1 + rng() % 12;
      const auto brute = oracle::BruteForceQa(start, end, valid, max_len);
      if (!brute.found) {
        EXPECT_THROW(QaDecodeSpan(start, end, valid, max_len), Error);
        continue;
      }
      const auto span = QaDecodeSpan(start, end, valid, max_len);
      ASSERT_EQ(span.start, brute.start) << n;
      ASSERT_EQ(span.end, brute.end) << n;
      ASSERT_EQ(span.score, brute.score);
    }
  }
}

}  // namespace
}  // namespace arapipe::heads
