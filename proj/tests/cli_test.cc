#include "arapipe/cli.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "arapipe/corpus.h"
#include "arapipe/heads.h"
#include "arapipe/pretrain.h"
#include "arapipe/record_io.h"
#include "arapipe/segmenter.h"
#include "arapipe/subword.h"
#include "fixtures.h"
#include "gtest/gtest.h"

namespace arapipe::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result RunCli(const std::vector<std::string>& args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  Result r;
  r.code = Run(args, in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string Slurp(const fs::path& p) { return corpus::ReadFile(p); }

void WriteText(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("arapipe_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    fixture::ZipfCorpus gen(300, 21);
    docs_ = gen.Documents(60'000, 3, 12);
    std::string text;
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      if (d) text += "\n";
      for (const auto& s : docs_[d]) text += s + "\n";
    }
    WriteText(dir_ / "corpus.txt", text);
    const Result r = RunCli({"vocab", "train", "--in", (dir_ / "corpus.txt").string(), "--size", "300", "--unused",
                             "10", "--seed", "1", "--out", (dir_ / "v.tsv").string(), "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string P(const std::string& name) { return (dir_ / name).string(); }
  static subword::Vocabulary Vocab() {
    std::ifstream in(P("v.tsv"));
    return subword::Vocabulary::Load(in);
  }

  static fs::path dir_;
  static std::vector<std::vector<std::string>> docs_;
};

fs::path CliTest::dir_;
std::vector<std::vector<std::string>> CliTest::docs_;

TEST_F(CliTest, VocabTrainWritesExactSize) {
  const std::string v = Slurp(P("v.tsv"));
  EXPECT_EQ(std::count(v.begin(), v.end(), '\n'), 300);
  EXPECT_EQ(Vocab().size(), 300u);
}

TEST_F(CliTest, VersionAndHelp) {
  EXPECT_EQ(RunCli({"version"}).out, "arapipe 1.0.0\n");
  const Result help = RunCli({"pretrain", "build", "--help"});
  EXPECT_EQ(help.code, 0);
  for (const char* s : {"--max-seq-len UINT [128]", "--dup-factor UINT [10]", "--seed UINT [34]",
                        "--masked-lm-prob FLOAT [0.15]", "--random-next-prob FLOAT [0.5]", "[word]",
                        "ceil(0.15*max-seq-len)"}) {
    EXPECT_NE(help.out.find(s), std::string::npos) << s;
  }
  const Result vocab_help = RunCli({"vocab", "train", "--help"});
  for (const char* s : {"--size UINT [64000]", "--unused UINT [4000]", "--max-piece-len UINT [8]",
                        "--keep-ratio FLOAT [0.75]"}) {
    EXPECT_NE(vocab_help.out.find(s), std::string::npos) << s;
  }
  EXPECT_NE(RunCli({"head", "qa-decode", "--help"}).out.find("[30]"), std::string::npos);
  EXPECT_NE(RunCli({"head", "train-cls", "--help"}).out.find("--dim UINT [64]"), std::string::npos);
}

TEST_F(CliTest, ErrorsAreSingleLineWithExitCodes) {
  Result r = RunCli({"segment", "--bogus"});
  EXPECT_EQ(r.code, 64);
  EXPECT_EQ(r.err.rfind("arapipe: error=usage ", 0), 0u);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
  EXPECT_EQ(RunCli({}).code, 64);
  r = RunCli({"segment", "--in", P("missing.txt")});
  EXPECT_EQ(r.code, 66);
  EXPECT_EQ(r.err.rfind("arapipe: error=io ", 0), 0u);
  WriteText(P("bad.tsv"), "[PAD]\t0\n[UNK]\tzz\n");
  r = RunCli({"tokenize", "encode", "--vocab", P("bad.tsv")}, "x\n");
  EXPECT_EQ(r.code, 65);
  EXPECT_EQ(r.err.rfind("arapipe: error=format ", 0), 0u);
  r = RunCli({"tokenize", "decode", "--vocab", P("v.tsv")}, "5 99999\n");
  EXPECT_EQ(r.code, 65);
  r = RunCli({"pretrain", "build", "--vocab", P("v.tsv"), "--in", P("corpus.txt"), "--out", P("x.bin"),
              "--masked-lm-prob", "2"});
  EXPECT_EQ(r.code, 64);
  r = RunCli({"segment", "--passthrough"}, "كتاب و+\n");
  EXPECT_EQ(r.code, 65);
}

TEST_F(CliTest, CorpusPrepMatchesLibrary) {
  fs::create_directories(dir_ / "docs" / "nested");
  WriteText(dir_ / "docs" / "a.txt", "ذهبَ الولدُ. وكتـب الدرس!\nقرأت BERT اليوم؟");
  WriteText(dir_ / "docs" / "nested" / "b.txt", "ذهبَ الولدُ. جملة أخرى.");
  const Result r = RunCli({"corpus", "prep", "--in", P("docs"), "--out", P("prep.txt"), "--drop-latin",
                           "--threads", "3", "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  corpus::NormalizationConfig config;
  config.preserve_latin = false;
  std::vector<std::string> docs;
  for (const auto& p : corpus::ListDocuments(dir_ / "docs")) docs.push_back(corpus::ReadFile(p));
  std::ostringstream expected;
  corpus::WriteCorpus(expected, corpus::PrepareCorpus(docs, config, 1));
  EXPECT_EQ(Slurp(P("prep.txt")), expected.str());
  EXPECT_EQ(Slurp(P("prep.txt")), "ذهب الولد.\nوكتب الدرس!\nقرأت اليوم؟\n\nجملة أخرى.\n");
}

TEST_F(CliTest, SegmentAndDesegmentMatchLibrary) {
  fixture::TextGenerator gen(5);
  std::string input, expected;
  for (int i = 0; i < 300; ++i) {
    const std::string s = gen.Sentence(1, 12);
    input += s + "\n";
    expected += seg::SegmentText(s).text + "\n";
  }
  const Result seg = RunCli({"segment"}, input);
  ASSERT_EQ(seg.code, 0) << seg.err;
  EXPECT_EQ(seg.out, expected);
  EXPECT_EQ(RunCli({"desegment"}, seg.out).out, input);
  EXPECT_EQ(RunCli({"segment", "--passthrough"}, seg.out).out, seg.out);

  WriteText(P("rules.txt"), "P ال article\nS ة\n");
  EXPECT_EQ(RunCli({"segment", "--rules", P("rules.txt")}, "والمدرسة\n").out, "والمدرس +ة\n");
}

TEST_F(CliTest, TokenizeMatchesLibrary) {
  const auto vocab = Vocab();
  std::string input, ids, decoded;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::string& s = docs_[i % docs_.size()][0];
    input += s + "\n";
    const auto enc = subword::Encode(vocab, s);
    for (std::size_t k = 0; k < enc.ids.size(); ++k) ids += (k ? " " : "") + std::to_string(enc.ids[k]);
    ids += "\n";
    decoded += subword::Decode(vocab, enc.ids) + "\n";
  }
  const Result enc = RunCli({"tokenize", "encode", "--vocab", P("v.tsv")}, input);
  ASSERT_EQ(enc.code, 0) << enc.err;
  EXPECT_EQ(enc.out, ids);
  const Result dec = RunCli({"tokenize", "decode", "--vocab", P("v.tsv")}, enc.out);
  EXPECT_EQ(dec.out, decoded);
  EXPECT_EQ(dec.out, input);
}

TEST_F(CliTest, PretrainBuildIsDeterministicAndMatchesLibrary) {
  const std::vector<std::string> base = {"pretrain", "build", "--vocab", P("v.tsv"), "--in", P("corpus.txt"),
                                         "--max-seq-len", "64", "--dup-factor", "3", "--seed", "34", "--quiet"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  };
  ASSERT_EQ(RunCli(with({"--out", P("a.bin")})).code, 0);
  ASSERT_EQ(RunCli(with({"--out", P("b.bin")})).code, 0);
  ASSERT_EQ(RunCli(with({"--out", P("c.bin"), "--threads", "8"})).code, 0);
  const std::string a = Slurp(P("a.bin"));
  EXPECT_EQ(a, Slurp(P("b.bin")));
  EXPECT_EQ(a, Slurp(P("c.bin")));

  pretrain::PretrainParams params;
  params.max_seq_len = 64;
  params.max_predictions = pretrain::PretrainParams::DefaultMaxPredictions(64);
  params.dup_factor = 3;
  const auto vocab = Vocab();
  std::ifstream in(P("corpus.txt"));
  const auto docs = pretrain::EncodeDocuments(vocab, corpus::ReadDocuments(in), subword::EncodeMode::kSegmented,
                                              pretrain::MaskUnit::kWord);
  const auto examples = pretrain::CreateExamples(docs, params, pretrain::SpecialIds::From(vocab));
  pretrain::WriteRecordFile(P("lib.bin"), examples, 64, params.max_predictions);
  EXPECT_EQ(a, Slurp(P("lib.bin")));

  const Result stats = RunCli({"pretrain", "stats", P("a.bin"), "--vocab", P("v.tsv")});
  ASSERT_EQ(stats.code, 0) << stats.err;
  EXPECT_NE(stats.out.find("examples\t" + std::to_string(examples.size()) + "\n"), std::string::npos);
  EXPECT_NE(stats.out.find("max_predictions\t10\n"), std::string::npos);
}

TEST_F(CliTest, EvalQaPartialOverlap) {
  WriteText(P("gold.tsv"), "q1\t23\tفي سان فرانسيسكو\n");
  WriteText(P("pred.tsv"), "q1\t26\tسان فرانسيسكو\n");
  WriteText(P("ctx.tsv"), "q1\tولد في بيروت. ثم انتقل في سان فرانسيسكو. وعاش هناك.\n");
  const Result r = RunCli({"eval", "qa", "--pred", P("pred.tsv"), "--gold", P("gold.tsv"), "--context", P("ctx.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "count\t1\nexact_match\t0.000000\nf1\t0.800000\nsentence_count\t1\nsentence_match\t1.000000\n");
}

TEST_F(CliTest, EvalNerAndCls) {
  const fixture::NerFixture f;
  auto conll = [](const std::vector<std::vector<std::string>>& tags) {
    std::string s;
    for (const auto& sent : tags) {
      for (const auto& t : sent) s += "w\t" + t + "\n";
      s += "\n";
    }
    return s;
  };
  WriteText(P("ner_gold.txt"), conll(f.gold));
  WriteText(P("ner_pred.txt"), conll(f.pred));
  const Result r = RunCli({"eval", "ner", "--pred", P("ner_pred.txt"), "--gold", P("ner_gold.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("LOC.f1\t0.500000\n"), std::string::npos);
  EXPECT_NE(r.out.find("macro_f1\t0.388889\n"), std::string::npos);

  WriteText(P("cls_gold.txt"), "pos\nneg\npos\nneg\n");
  WriteText(P("cls_pred.txt"), "pos\npos\npos\nneg\n");
  EXPECT_EQ(RunCli({"eval", "cls", "--pred", P("cls_pred.txt"), "--gold", P("cls_gold.txt")}).out,
            "count\t4\naccuracy\t0.750000\n");
}

TEST_F(CliTest, HeadCommands) {
  const Result qa = RunCli({"head", "qa-decode"}, "0 0 3 0 0 0 0 5 0 0\n0 0 0 0 5 0 0 0 1 0\n\n1 5 0 2\n4 0 3 2.5\n1 1 1 1\n");
  ASSERT_EQ(qa.code, 0) << qa.err;
  EXPECT_EQ(qa.out, "2\t4\t8\n1\t2\t8\n");
  EXPECT_EQ(RunCli({"head", "qa-decode", "--max-answer-len", "1"}, "1 5\n4 0\n0 1\n").out, "1\t1\t5\n");

  std::string train;
  for (std::size_t i = 0; i < 40; ++i) {
    train += (i % 2 ? "pos\t" : "neg\t") + docs_[i % docs_.size()][i % docs_[i % docs_.size()].size()] + "\n";
  }
  WriteText(P("cls.tsv"), train);
  const Result r = RunCli({"head", "train-cls", "--in", P("cls.tsv"), "--vocab", P("v.tsv"), "--out", P("w.bin"),
                           "--dim", "32", "--epochs", "50"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("class\t0\tneg\nclass\t1\tpos\n"), std::string::npos);
  const auto w = heads::LoadWeights(P("w.bin"));
  EXPECT_EQ(w.dim, 32u);
  EXPECT_EQ(w.classes, 2u);
}

}  // namespace
}  // namespace arapipe::cli
