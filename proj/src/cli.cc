#include "arapipe/cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "arapipe/corpus.h"
#include "arapipe/error.h"
#include "arapipe/heads.h"
#include "arapipe/metrics.h"
#include "arapipe/pretrain.h"
#include "arapipe/record_io.h"
#include "arapipe/segmenter.h"
#include "arapipe/subword.h"
#include "arapipe/utf8.h"

namespace arapipe::cli {
namespace {

constexpr const char* kVersion = "1.0.0";

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;

  void Log(const std::string& msg) const {
    if (!quiet) err << msg << '\n';
  }
};

// "-" selects the process streams passed to Run.
class Input {
 public:
  Input(const std::string& path, std::istream& fallback) : stream_(&fallback) {
    if (path == "-") return;
    file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file_) throw IoError("cannot open " + path + " for reading");
    stream_ = file_.get();
  }
  std::istream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* stream_;
};

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : path_(path), stream_(&fallback) {
    if (path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw IoError("cannot open " + path + " for writing");
    stream_ = file_.get();
  }
  std::ostream& get() { return *stream_; }
  void Close() {
    stream_->flush();
    if (file_) file_->close();
    if (!*stream_) throw IoError("write failed on " + path_);
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

bool ReadLine(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

subword::Vocabulary LoadVocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary " + path);
  return subword::Vocabulary::Load(in);
}

std::string Metric(const std::string& name, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return name + "\t" + buf + "\n";
}

std::string Count(const std::string& name, std::size_t value) {
  return name + "\t" + std::to_string(value) + "\n";
}

double ParseDouble(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError("line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------

struct CorpusPrepArgs {
  std::string in;
  std::string out;
  bool keep_tatweel = false;
  bool keep_diacritics = false;
  bool normalize_alef_ya = false;
  bool drop_latin = false;
  bool keep_whitespace = false;
};

void CorpusPrep(const CorpusPrepArgs& a, unsigned threads, Streams& io) {
  std::vector<std::string> flags;
  if (a.keep_tatweel) flags.push_back("--keep-tatweel");
  if (a.keep_diacritics) flags.push_back("--keep-diacritics");
  if (a.normalize_alef_ya) flags.push_back("--normalize-alef-ya");
  if (a.drop_latin) flags.push_back("--drop-latin");
  if (a.keep_whitespace) flags.push_back("--keep-whitespace");
  const auto config = corpus::NormalizationConfig::FromFlags(flags);

  std::vector<std::string> docs;
  for (const auto& path : corpus::ListDocuments(a.in)) docs.push_back(corpus::ReadFile(path));
  const auto prepared = corpus::PrepareCorpus(docs, config, threads);
  Output out(a.out, io.out);
  corpus::WriteCorpus(out.get(), prepared);
  out.Close();
  io.Log("documents=" + std::to_string(docs.size()) + " sentences=" + std::to_string(prepared.size()));
}

struct SegmentArgs {
  std::string in = "-";
  std::string out = "-";
  std::string rules;
  bool passthrough = false;
};

void Segment(const SegmentArgs& a, Streams& io) {
  std::optional<seg::RuleTable> custom;
  if (!a.rules.empty()) custom = seg::RuleTable::Parse(corpus::ReadFile(a.rules));
  const seg::RuleTable& rules = custom ? *custom : seg::RuleTable::Builtin();
  Input in(a.in, io.in);
  Output out(a.out, io.out);
  std::size_t line_no = 0;
  for (std::string line; ReadLine(in.get(), line);) {
    ++line_no;
    try {
      out.get() << (a.passthrough ? seg::Passthrough(line) : seg::SegmentText(line, rules)).text << '\n';
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  out.Close();
}

void Desegment(const SegmentArgs& a, Streams& io) {
  Input in(a.in, io.in);
  Output out(a.out, io.out);
  for (std::string line; ReadLine(in.get(), line);) out.get() << seg::Desegment(line) << '\n';
  out.Close();
}

struct VocabTrainArgs {
  std::string in;
  std::string out;
  subword::VocabConfig config;
  std::uint64_t seed = 0;
};

void VocabTrain(const VocabTrainArgs& a, unsigned threads, Streams& io) {
  std::vector<std::string> sentences;
  {
    Input in(a.in, io.in);
    for (std::string line; ReadLine(in.get(), line);) {
      if (!line.empty()) sentences.push_back(line);
    }
  }
  subword::TrainOptions options;
  options.threads = threads;
  options.log = [&io](const std::string& msg) { io.Log(msg); };
  const auto vocab = subword::TrainVocab(sentences, a.config, a.seed, options);
  Output out(a.out, io.out);
  vocab.Save(out.get());
  out.Close();
}

struct TokenizeArgs {
  std::string vocab;
  std::string mode = "segmented";
};

void TokenizeEncode(const TokenizeArgs& a, Streams& io) {
  const auto vocab = LoadVocab(a.vocab);
  const auto mode = subword::ParseEncodeMode(a.mode);
  for (std::string line; ReadLine(io.in, line);) {
    const auto enc = subword::Encode(vocab, line, mode);
    for (std::size_t i = 0; i < enc.ids.size(); ++i) {
      if (i) io.out << ' ';
      io.out << enc.ids[i];
    }
    io.out << '\n';
  }
}

void TokenizeDecode(const TokenizeArgs& a, Streams& io) {
  const auto vocab = LoadVocab(a.vocab);
  subword::ParseEncodeMode(a.mode);
  std::size_t line_no = 0;
  for (std::string line; ReadLine(io.in, line);) {
    ++line_no;
    std::vector<subword::PieceId> ids;
    for (auto field : utf8::SplitWhitespace(line)) {
      subword::PieceId id = 0;
      auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), id);
      if (ec != std::errc() || p != field.data() + field.size()) {
        throw FormatError("line " + std::to_string(line_no) + ": bad piece id '" + std::string(field) + "'");
      }
      ids.push_back(id);
    }
    io.out << subword::Decode(vocab, ids) << '\n';
  }
}

struct PretrainBuildArgs {
  std::string vocab;
  std::string in;
  std::string out;
  std::string mode = "segmented";
  std::string mask_unit = "word";
  pretrain::PretrainParams params;
  std::optional<std::uint32_t> max_predictions;
};

void PretrainBuild(PretrainBuildArgs a, unsigned threads, Streams& io) {
  if (a.mask_unit == "word") a.params.mask_unit = pretrain::MaskUnit::kWord;
  else if (a.mask_unit == "segment") a.params.mask_unit = pretrain::MaskUnit::kSegment;
  else throw UsageError("--mask-unit must be word or segment, got '" + a.mask_unit + "'");
  a.params.max_predictions =
      a.max_predictions ? *a.max_predictions : pretrain::PretrainParams::DefaultMaxPredictions(a.params.max_seq_len);
  a.params.Validate();

  const auto vocab = LoadVocab(a.vocab);
  std::vector<std::vector<std::string>> raw_docs;
  {
    Input in(a.in, io.in);
    raw_docs = corpus::ReadDocuments(in.get());
  }
  const auto docs = pretrain::EncodeDocuments(vocab, raw_docs, subword::ParseEncodeMode(a.mode), a.params.mask_unit);
  const auto ids = pretrain::SpecialIds::From(vocab);

  pretrain::RecordWriter writer(a.out, a.params.max_seq_len, a.params.max_predictions);
  const auto stats = pretrain::CreateExamples(docs, a.params, ids, threads,
                                              [&writer](const pretrain::GeneratedExample& g) { writer.Write(g.example); });
  writer.Finish();
  io.Log("examples=" + std::to_string(stats.examples) + " skipped_empty_documents=" +
         std::to_string(stats.skipped_empty_documents) + " skipped_chunks=" + std::to_string(stats.skipped_chunks));
}

struct PretrainStatsArgs {
  std::string file;
  std::string vocab;
};

void PretrainStats(const PretrainStatsArgs& a, Streams& io) {
  // Default control layout when no vocabulary is given.
  pretrain::PieceId mask = 4, cls = 2, sep = 3;
  if (!a.vocab.empty()) {
    const auto ids = pretrain::SpecialIds::From(LoadVocab(a.vocab));
    mask = ids.mask, cls = ids.cls, sep = ids.sep;
  }
  pretrain::RecordReader reader(a.file);
  pretrain::ExampleStats s;
  while (auto ex = reader.Next()) s.Add(*ex, mask, cls, sep);

  auto frac = [](std::size_t n, std::size_t d) { return d ? static_cast<double>(n) / static_cast<double>(d) : 0.0; };
  io.out << Count("max_seq_len", reader.max_seq_len()) << Count("max_predictions", reader.max_predictions())
         << Count("examples", s.examples) << Metric("not_next_fraction", frac(s.not_next, s.examples))
         << Count("real_tokens", s.real_tokens) << Count("masked", s.masked)
         << Metric("masked_fraction", frac(s.masked, s.real_tokens))
         << Metric("mask_token_fraction", frac(s.replaced_mask, s.masked))
         << Metric("random_token_fraction", frac(s.replaced_random, s.masked))
         << Metric("kept_token_fraction", frac(s.kept, s.masked));
}

struct TrainClsArgs {
  std::string in;
  std::string vocab;
  std::string out;
  std::string mode = "segmented";
  std::size_t dim = 64;
  heads::TrainHyper hyper;
};

void HeadTrainCls(const TrainClsArgs& a, Streams& io) {
  if (a.dim == 0) throw UsageError("--dim must be positive");
  const auto vocab = LoadVocab(a.vocab);
  const auto mode = subword::ParseEncodeMode(a.mode);
  std::vector<std::pair<std::string, std::string>> rows;
  {
    Input in(a.in, io.in);
    std::size_t line_no = 0;
    for (std::string line; ReadLine(in.get(), line);) {
      ++line_no;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0) {
        throw FormatError("line " + std::to_string(line_no) + ": expected label<TAB>text");
      }
      rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
  }
  if (rows.empty()) throw FormatError("no training examples in " + a.in);
  std::map<std::string, std::size_t> labels;
  for (const auto& r : rows) labels.emplace(r.first, 0);
  std::size_t next = 0;
  for (auto& [name, index] : labels) index = next++;

  const heads::StubEncoder encoder(a.dim);
  std::vector<heads::LabeledExample> data;
  for (const auto& [label, text] : rows) {
    data.push_back({encoder.Features(subword::Encode(vocab, text, mode).ids), labels.at(label)});
  }
  const auto weights = heads::TrainHead(data, labels.size(), a.hyper);
  if (!a.out.empty()) heads::SaveWeights(a.out, weights);
  for (const auto& [name, index] : labels) io.out << "class\t" << index << '\t' << name << '\n';
  io.out << Count("examples", data.size()) << Metric("train_accuracy", heads::TrainAccuracy(data, weights));
}

struct QaDecodeArgs {
  std::string in = "-";
  std::size_t max_answer_len = heads::kDefaultMaxAnswerLen;
};

// Blocks separated by blank lines: start scores, end scores, optional 0/1
// validity mask, each as whitespace-separated decimals.
void HeadQaDecode(const QaDecodeArgs& a, Streams& io) {
  Input in(a.in, io.in);
  std::vector<std::vector<double>> block;
  std::size_t line_no = 0;
  auto flush = [&]() {
    if (block.empty()) return;
    if (block.size() < 2 || block.size() > 3) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 2 or 3 score lines per block, got " +
                        std::to_string(block.size()));
    }
    std::vector<std::uint8_t> valid(block[0].size(), 1);
    if (block.size() == 3) {
      if (block[2].size() != valid.size()) throw FormatError("validity mask length differs from scores");
      for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = block[2][i] != 0.0;
    }
    if (block[1].size() != block[0].size()) throw FormatError("start and end score lengths differ");
    const auto span = heads::QaDecodeSpan(block[0], block[1], valid, a.max_answer_len);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", span.score);
    io.out << span.start << '\t' << span.end << '\t' << buf << '\n';
    block.clear();
  };
  for (std::string line; ReadLine(in.get(), line);) {
    ++line_no;
    const auto fields = utf8::SplitWhitespace(line);
    if (fields.empty()) {
      flush();
      continue;
    }
    std::vector<double> row;
    for (auto f : fields) row.push_back(ParseDouble(f, line_no));
    block.push_back(std::move(row));
  }
  flush();
}

struct EvalArgs {
  std::string pred;
  std::string gold;
  std::string context;
  bool token_level = false;
  std::string average = "gold";
};

void EvalNer(const EvalArgs& a, Streams& io) {
  metrics::MacroAverage average;
  if (a.average == "gold") average = metrics::MacroAverage::kGoldClasses;
  else if (a.average == "all") average = metrics::MacroAverage::kAllClasses;
  else throw UsageError("--average must be gold or all, got '" + a.average + "'");
  Input pred_in(a.pred, io.in);
  const auto pred = metrics::ReadConllTags(pred_in.get(), nullptr);
  Input gold_in(a.gold, io.in);
  const auto gold = metrics::ReadConllTags(gold_in.get(), nullptr);
  const auto report = metrics::NerMacroF1(pred, gold, a.token_level ? metrics::NerLevel::kToken : metrics::NerLevel::kEntity,
                                          average);
  for (const auto& [label, s] : report.per_class) {
    io.out << Metric(label + ".precision", s.precision) << Metric(label + ".recall", s.recall)
           << Metric(label + ".f1", s.f1);
  }
  io.out << Metric("macro_f1", report.macro_f1) << Metric("micro_f1", report.micro_f1);
}

void EvalQa(const EvalArgs& a, Streams& io) {
  Input pred_in(a.pred, io.in);
  const auto preds = metrics::ReadQaRecords(pred_in.get());
  Input gold_in(a.gold, io.in);
  const auto golds = metrics::ReadQaRecords(gold_in.get());
  std::map<std::string, std::string> contexts;
  if (!a.context.empty()) {
    Input ctx_in(a.context, io.in);
    contexts = metrics::ReadQaContexts(ctx_in.get());
  }
  const auto r = metrics::EvaluateQa(preds, golds, contexts);
  io.out << Count("count", r.count) << Metric("exact_match", r.exact_match) << Metric("f1", r.f1);
  if (r.sentence_count > 0) io.out << Count("sentence_count", r.sentence_count) << Metric("sentence_match", r.sentence_match);
}

void EvalCls(const EvalArgs& a, Streams& io) {
  auto read = [&io](const std::string& path) {
    Input in(path, io.in);
    std::vector<std::string> labels;
    for (std::string line; ReadLine(in.get(), line);) {
      if (!line.empty()) labels.push_back(line);
    }
    return labels;
  };
  const auto pred = read(a.pred);
  const auto gold = read(a.gold);
  io.out << Count("count", gold.size()) << Metric("accuracy", metrics::Accuracy(pred, gold));
}

}  // namespace

int Run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Arabic BERT pre-model and post-model pipeline", "arapipe"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  unsigned threads = 1;
  bool quiet = false;
  app.add_option("--threads", threads, "Worker threads; output does not depend on it")->check(CLI::Range(1u, 1024u));
  app.add_flag("--quiet", quiet, "Suppress progress messages on stderr");

  std::function<void(Streams&)> action;

  // corpus prep
  CorpusPrepArgs corpus_args;
  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus preparation")->require_subcommand(1)->fallthrough();
  auto* prep = corpus_cmd->add_subcommand("prep", "Normalize, sentence-split and dedup documents")->fallthrough();
  prep->add_option("--in", corpus_args.in, "Document file or directory tree")->required();
  prep->add_option("--out", corpus_args.out, "Sentence-per-line output file")->required();
  prep->add_flag("--keep-tatweel", corpus_args.keep_tatweel, "Keep tatweel (U+0640)");
  prep->add_flag("--keep-diacritics", corpus_args.keep_diacritics, "Keep diacritics (U+064B..U+0652)");
  prep->add_flag("--normalize-alef-ya", corpus_args.normalize_alef_ya, "Map alef variants to bare alef and alef maksura to ya");
  prep->add_flag("--drop-latin", corpus_args.drop_latin, "Drop tokens containing Latin letters");
  prep->add_flag("--keep-whitespace", corpus_args.keep_whitespace, "Do not collapse whitespace runs");
  prep->callback([&] { action = [&](Streams& io) { CorpusPrep(corpus_args, threads, io); }; });

  // segment / desegment
  SegmentArgs seg_args;
  auto* segment = app.add_subcommand("segment", "Split clitics into marker segments (x+ stem +y)")->fallthrough();
  segment->add_option("--in", seg_args.in, "Input text, - for stdin");
  segment->add_option("--out", seg_args.out, "Output text, - for stdout");
  segment->add_option("--rules", seg_args.rules, "Rule file replacing the built-in affix table");
  segment->add_flag("--passthrough", seg_args.passthrough, "Validate already segmented input instead of segmenting");
  segment->callback([&] { action = [&](Streams& io) { Segment(seg_args, io); }; });

  SegmentArgs deseg_args;
  auto* desegment = app.add_subcommand("desegment", "Reattach marker segments to their stems")->fallthrough();
  desegment->add_option("--in", deseg_args.in, "Input text, - for stdin");
  desegment->add_option("--out", deseg_args.out, "Output text, - for stdout");
  desegment->callback([&] { action = [&](Streams& io) { Desegment(deseg_args, io); }; });

  // vocab train
  VocabTrainArgs vocab_args;
  auto* vocab_cmd = app.add_subcommand("vocab", "Subword vocabulary")->require_subcommand(1)->fallthrough();
  auto* train = vocab_cmd->add_subcommand("train", "Train a unigram LM vocabulary")->fallthrough();
  auto& vc = vocab_args.config;
  train->add_option("--in", vocab_args.in, "Training text, one sentence per line")->required();
  train->add_option("--out", vocab_args.out, "Vocabulary file (piece<TAB>log_prob)")->required();
  train->add_option("--size", vc.target_size, "Total vocabulary size");
  train->add_option("--unused", vc.unused_count, "Number of [unusedN] placeholders");
  train->add_option("--seed", vocab_args.seed, "Seed for sentence sampling");
  train->add_option("--max-piece-len", vc.seed_max_piece_len, "Longest seed piece in code points");
  train->add_option("--keep-ratio", vc.prune_keep_ratio, "Fraction of pieces kept per pruning round");
  train->add_option("--em-iters", vc.em_iters_per_round, "EM iterations per pruning round");
  train->add_option("--seed-min-count", vc.seed_min_count, "Minimum count of a seed substring");
  train->add_option("--max-sentences", vc.max_training_sentences, "Sample at most this many sentences (0 = all)");
  train->callback([&] { action = [&](Streams& io) { VocabTrain(vocab_args, threads, io); }; });

  // tokenize encode|decode
  TokenizeArgs tok_args;
  auto* tokenize = app.add_subcommand("tokenize", "Encode or decode stdin line by line")->require_subcommand(1)->fallthrough();
  for (const char* name : {"encode", "decode"}) {
    const bool encode = std::string(name) == "encode";
    auto* sub = tokenize->add_subcommand(name, encode ? "Text lines to space-joined ids" : "Id lines to text")->fallthrough();
    sub->add_option("--vocab", tok_args.vocab, "Vocabulary file")->required();
    sub->add_option("--mode", tok_args.mode, "segmented or raw")->check(CLI::IsMember({"segmented", "raw"}));
    sub->callback([&, encode] {
      action = [&, encode](Streams& io) { encode ? TokenizeEncode(tok_args, io) : TokenizeDecode(tok_args, io); };
    });
  }

  // pretrain build|stats
  PretrainBuildArgs build_args;
  auto* pre = app.add_subcommand("pretrain", "Pretraining data")->require_subcommand(1)->fallthrough();
  auto* build = pre->add_subcommand("build", "Generate masked LM / next sentence examples")->fallthrough();
  auto& pp = build_args.params;
  build->add_option("--vocab", build_args.vocab, "Vocabulary file")->required();
  build->add_option("--in", build_args.in, "Corpus: sentence per line, blank line between documents")->required();
  build->add_option("--out", build_args.out, "Record file")->required();
  build->add_option("--max-seq-len", pp.max_seq_len, "Sequence length including [CLS] and [SEP]s");
  build->add_option("--dup-factor", pp.dup_factor, "Passes over the corpus with fresh masks");
  build->add_option("--seed", pp.seed, "Random seed");
  build->add_option("--masked-lm-prob", pp.masked_lm_prob, "Fraction of real tokens to mask");
  build->add_option("--max-predictions", build_args.max_predictions, "Masking cap per example")
      ->default_str("ceil(0.15*max-seq-len)");
  build->add_option("--random-next-prob", pp.random_next_prob, "Probability that segment B is random");
  build->add_option("--mode", build_args.mode, "segmented or raw")->check(CLI::IsMember({"segmented", "raw"}));
  build->add_option("--mask-unit", build_args.mask_unit, "word or segment")->check(CLI::IsMember({"word", "segment"}));
  build->callback([&] { action = [&](Streams& io) { PretrainBuild(build_args, threads, io); }; });

  PretrainStatsArgs stats_args;
  auto* stats = pre->add_subcommand("stats", "Masking and next sentence statistics of a record file")->fallthrough();
  stats->add_option("file", stats_args.file, "Record file")->required();
  stats->add_option("--vocab", stats_args.vocab, "Vocabulary for control ids (default layout otherwise)");
  stats->callback([&] { action = [&](Streams& io) { PretrainStats(stats_args, io); }; });

  // head train-cls|qa-decode
  TrainClsArgs cls_args;
  auto* head = app.add_subcommand("head", "Fine-tuning head utilities")->require_subcommand(1)->fallthrough();
  auto* train_cls = head->add_subcommand("train-cls", "Train a softmax head on stub encoder features")->fallthrough();
  train_cls->add_option("--in", cls_args.in, "label<TAB>text lines")->required();
  train_cls->add_option("--vocab", cls_args.vocab, "Vocabulary file")->required();
  train_cls->add_option("--out", cls_args.out, "Weight file (ABHW)");
  train_cls->add_option("--mode", cls_args.mode, "segmented or raw")->check(CLI::IsMember({"segmented", "raw"}));
  train_cls->add_option("--dim", cls_args.dim, "Feature dimension");
  train_cls->add_option("--lr", cls_args.hyper.lr, "Learning rate");
  train_cls->add_option("--epochs", cls_args.hyper.epochs, "Epochs");
  train_cls->add_option("--seed", cls_args.hyper.seed, "Initialisation and order seed");
  train_cls->callback([&] { action = [&](Streams& io) { HeadTrainCls(cls_args, io); }; });

  QaDecodeArgs qa_args;
  auto* qa_decode = head->add_subcommand("qa-decode", "Best legal answer span from start/end scores")->fallthrough();
  qa_decode->add_option("--in", qa_args.in, "Score blocks, - for stdin");
  qa_decode->add_option("--max-answer-len", qa_args.max_answer_len, "Longest answer in tokens")->check(CLI::PositiveNumber);
  qa_decode->callback([&] { action = [&](Streams& io) { HeadQaDecode(qa_args, io); }; });

  // eval ner|qa|cls
  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluation metrics")->require_subcommand(1)->fallthrough();
  auto* ner = eval->add_subcommand("ner", "Entity-level macro F1 over IOB2 columns")->fallthrough();
  ner->add_option("--pred", eval_args.pred, "Predicted token<TAB>tag file")->required();
  ner->add_option("--gold", eval_args.gold, "Gold token<TAB>tag file")->required();
  ner->add_flag("--token-level", eval_args.token_level, "Score tokens instead of entities");
  ner->add_option("--average", eval_args.average, "Macro average over gold classes or all classes")
      ->check(CLI::IsMember({"gold", "all"}));
  ner->callback([&] { action = [&](Streams& io) { EvalNer(eval_args, io); }; });

  auto* qa = eval->add_subcommand("qa", "Exact match, F1 and sentence match")->fallthrough();
  qa->add_option("--pred", eval_args.pred, "id<TAB>char_start<TAB>text predictions")->required();
  qa->add_option("--gold", eval_args.gold, "id<TAB>char_start<TAB>text gold answers")->required();
  qa->add_option("--context", eval_args.context, "id<TAB>context file enabling sentence match");
  qa->callback([&] { action = [&](Streams& io) { EvalQa(eval_args, io); }; });

  auto* cls = eval->add_subcommand("cls", "Accuracy over label-per-line files")->fallthrough();
  cls->add_option("--pred", eval_args.pred, "Predicted labels")->required();
  cls->add_option("--gold", eval_args.gold, "Gold labels")->required();
  cls->callback([&] { action = [&](Streams& io) { EvalCls(eval_args, io); }; });

  app.add_subcommand("version", "Print the version")->callback([&] {
    action = [](Streams& io) { io.out << "arapipe " << kVersion << '\n'; };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "arapipe: error=usage " << msg << '\n';
    return ExitCode(ErrorKind::kUsage);
  }

  Streams io{in, out, err, quiet};
  try {
    action(io);
    out.flush();
    return 0;
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "arapipe: error=" << ErrorClassName(e.kind()) << ' ' << msg << '\n';
    return ExitCode(e.kind());
  } catch (const std::bad_alloc&) {
    err << "arapipe: error=internal out of memory\n";
    return ExitCode(ErrorKind::kInvariant);
  } catch (const std::exception& e) {
    err << "arapipe: error=internal " << e.what() << '\n';
    return ExitCode(ErrorKind::kInvariant);
  }
}

}  // namespace arapipe::cli
