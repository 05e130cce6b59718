#include "arapipe/metrics.h"

#include <random>
#include <sstream>

#include "arapipe/error.h"
#include "fixtures.h"
#include "gtest/gtest.h"

namespace arapipe::metrics {
namespace {

TEST(AccuracyTest, Basic) {
  EXPECT_DOUBLE_EQ(Accuracy<std::string>({"pos", "neg", "pos", "neg"}, {"pos", "pos", "pos", "neg"}), 0.75);
  EXPECT_THROW(Accuracy<int>({1, 2}, {1}), Error);
  EXPECT_THROW(Accuracy<int>({}, {}), Error);
}

TEST(EntityTest, ExtractsSpans) {
  const auto spans = ExtractEntities({"B-PER", "I-PER", "O", "B-LOC", "B-LOC", "I-LOC"});
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_EQ(spans[0], (EntitySpan{"PER", 0, 1}));
  EXPECT_EQ(spans[1], (EntitySpan{"LOC", 3, 3}));
  EXPECT_EQ(spans[2], (EntitySpan{"LOC", 4, 5}));
}

TEST(EntityTest, RepairsDanglingInside) {
  const auto spans = ExtractEntities({"O", "I-ORG", "I-ORG", "I-PER", "B-PER", "I-LOC"});
  ASSERT_EQ(spans.size(), 4u);
  EXPECT_EQ(spans[0], (EntitySpan{"ORG", 1, 2}));
  EXPECT_EQ(spans[1], (EntitySpan{"PER", 3, 3}));
  EXPECT_EQ(spans[2], (EntitySpan{"PER", 4, 4}));
  EXPECT_EQ(spans[3], (EntitySpan{"LOC", 5, 5}));
}

TEST(EntityTest, MalformedTagThrows) {
  EXPECT_THROW(ExtractEntities({"O", "PER"}), Error);
  EXPECT_THROW(ExtractEntities({"B-"}), Error);
  EXPECT_THROW(ExtractEntities({"E-PER"}), Error);
}

TEST(EntityTest, RenderRoundTripsWellFormedSets) {
  std::mt19937_64 rng(4);
  const std::vector<std::string> labels = {"PER", "LOC", "ORG"};
  for (int t = 0; t < 500; ++t) {
    const std::size_t len = 1 + rng() % 15;
    std::vector<EntitySpan> spans;
    std::size_t pos = rng() % 3;
    while (pos < len) {
      const std::size_t end = std::min(len - 1, pos + rng() % 3);
      spans.push_back({labels[rng() % 3], pos, end});
      pos = end + 1 + rng() % 3;
    }
    EXPECT_EQ(ExtractEntities(RenderTags(spans, len)), spans);
  }
}

TEST(NerTest, HandComputedFixture) {
  const fixture::NerFixture f;
  const auto r = NerMacroF1(f.pred, f.gold);
  ASSERT_EQ(r.per_class.size(), 3u);
  const auto& loc = r.per_class.at("LOC");
  EXPECT_EQ(loc.tp, 1u);
  EXPECT_EQ(loc.fp, 1u);
  EXPECT_EQ(loc.fn, 1u);
  EXPECT_DOUBLE_EQ(loc.precision, 0.5);
  EXPECT_DOUBLE_EQ(loc.recall, 0.5);
  EXPECT_DOUBLE_EQ(loc.f1, 0.5);
  const auto& per = r.per_class.at("PER");
  EXPECT_DOUBLE_EQ(per.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(per.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(per.f1, 2.0 / 3.0);
  const auto& org = r.per_class.at("ORG");
  EXPECT_EQ(org.f1, 0.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 7.0 / 18.0);
  EXPECT_DOUBLE_EQ(r.micro_f1, 0.5);
}

TEST(NerTest, PerfectAndEmpty) {
  const fixture::NerFixture f;
  EXPECT_EQ(NerMacroF1(f.gold, f.gold).macro_f1, 1.0);
  const std::vector<std::vector<std::string>> none = {{"O", "O"}};
  EXPECT_EQ(NerMacroF1(none, none).macro_f1, 1.0);
  const std::vector<std::vector<std::string>> spurious = {{"B-PER", "O"}};
  EXPECT_EQ(NerMacroF1(spurious, none).macro_f1, 0.0);
  EXPECT_THROW(NerMacroF1({{"O"}}, {{"O", "O"}}), Error);
}

TEST(NerTest, AverageOverAllClasses) {
  // Prediction-only class MISC lowers the all-class average.
  const std::vector<std::vector<std::string>> gold = {{"B-PER", "O"}};
  const std::vector<std::vector<std::string>> pred = {{"B-PER", "B-MISC"}};
  EXPECT_DOUBLE_EQ(NerMacroF1(pred, gold).macro_f1, 1.0);
  EXPECT_DOUBLE_EQ(NerMacroF1(pred, gold, NerLevel::kEntity, MacroAverage::kAllClasses).macro_f1, 0.5);
}

TEST(NerTest, TokenLevel) {
  const fixture::NerFixture f;
  const auto r = NerMacroF1(f.pred, f.gold, NerLevel::kToken);
  // PER tokens: gold 6, predicted 5, shared 5. LOC: gold 2, pred 3, shared 2.
  // ORG: gold 3, pred 2, shared 2.
  EXPECT_DOUBLE_EQ(r.per_class.at("PER").f1, 2.0 * 5 / (6 + 5));
  EXPECT_DOUBLE_EQ(r.per_class.at("LOC").f1, 2.0 * 2 / (2 + 3));
  EXPECT_DOUBLE_EQ(r.per_class.at("ORG").f1, 2.0 * 2 / (3 + 2));
}

TEST(NerTest, ReadsConll) {
  std::istringstream in("كتب\tO\nأحمد\tB-PER\n\n\nفي\tO\nبيروت\tB-LOC\n");
  std::vector<std::vector<std::string>> tokens;
  const auto tags = ReadConllTags(in, &tokens);
  ASSERT_EQ(tags.size(), 2u);
  EXPECT_EQ(tags[1], (std::vector<std::string>{"O", "B-LOC"}));
  EXPECT_EQ(tokens[0][1], "أحمد");
  std::istringstream bad("no-tab-here\n");
  EXPECT_THROW(ReadConllTags(bad, nullptr), Error);
}

TEST(QaTest, Normalization) {
  EXPECT_EQ(NormalizeAnswer("  «جُمهوريّة»   فيدرالية، "), "جمهورية فيدرالية");
  EXPECT_EQ(NormalizeAnswer("The U.S.A!"), "the usa");
  EXPECT_EQ(NormalizeAnswer("كـتـاب"), "كتاب");
}

TEST(QaTest, PartialOverlapFixtures) {
  // Partial answer missing a leading preposition.
  EXPECT_FALSE(QaExactMatch("سان فرانسيسكو", {"في سان فرانسيسكو"}));
  EXPECT_NEAR(QaF1("سان فرانسيسكو", {"في سان فرانسيسكو"}), 0.8, 1e-12);
  EXPECT_NEAR(QaF1("sAn fransIskO", {"fI sAn fransIskO"}), 0.8, 1e-12);
  // Prediction covers half of a four word answer.
  EXPECT_FALSE(QaExactMatch("جمهورية فيدرالية", {"النمسا هي جمهورية فيدرالية"}));
  EXPECT_NEAR(QaF1("جمهورية فيدرالية", {"النمسا هي جمهورية فيدرالية"}), 2.0 / 3.0, 1e-12);
}

TEST(QaTest, MultisetOverlapAndBestGold) {
  EXPECT_NEAR(QaF1("a a b", {"a b b"}), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(QaF1("x", {"y", "x"}), 1.0);
  EXPECT_TRUE(QaExactMatch("X.", {"y", "x"}));
  EXPECT_EQ(QaF1("", {""}), 1.0);
  EXPECT_EQ(QaF1("a", {""}), 0.0);
  EXPECT_THROW(QaF1("a", {}), Error);
}

TEST(QaTest, SentenceMatch) {
  const std::string ctx = "ولد في بيروت. ثم انتقل إلى سان فرانسيسكو. وعاش هناك.";
  // "سان فرانسيسكو" starts at code point 27.
  auto inst = QaInstance::WithSentences(ctx, {{"إلى سان فرانسيسكو", 23}}, {"سان فرانسيسكو", 27});
  ASSERT_EQ(inst.sentence_bounds.size(), 3u);
  EXPECT_TRUE(SentenceMatch(inst));
  inst = QaInstance::WithSentences(ctx, {{"إلى سان فرانسيسكو", 23}}, {"بيروت", 7});
  EXPECT_FALSE(SentenceMatch(inst));
  inst = QaInstance::WithSentences(ctx, {{"إلى", 23}}, {"x", 500});
  EXPECT_THROW(SentenceMatch(inst), Error);
}

TEST(QaTest, EvaluateRecords) {
  std::istringstream golds("q1\t14\tفي سان فرانسيسكو\nq2\t0\tالنمسا هي جمهورية فيدرالية\n");
  std::istringstream preds("q1\t17\tسان فرانسيسكو\n");
  const auto r = EvaluateQa(ReadQaRecords(preds), ReadQaRecords(golds), {});
  EXPECT_EQ(r.count, 2u);
  EXPECT_NEAR(r.f1, 0.4, 1e-12);
  EXPECT_EQ(r.exact_match, 0.0);
  EXPECT_EQ(r.sentence_count, 0u);
  std::istringstream bad("q1\tx\ttext\n");
  EXPECT_THROW(ReadQaRecords(bad), Error);
}

}  // namespace
}  // namespace arapipe::metrics
