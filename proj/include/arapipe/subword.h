#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace arapipe::subword {

/// U+2581, prepended to every whitespace-delimited pretoken.
inline constexpr std::string_view kWordBoundary = "\xE2\x96\x81";

using PieceId = std::uint32_t;

struct VocabConfig {
  std::size_t target_size = 64000;
  std::size_t unused_count = 4000;
  std::vector<std::string> specials = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  std::size_t seed_max_piece_len = 8;  // code points, boundary marker included
  double prune_keep_ratio = 0.75;
  std::size_t em_iters_per_round = 2;
  double min_char_coverage = 1.0;
  // Substrings below this weighted count are left out of the seed inventory
  // (lowered to 1 automatically if the seed would undershoot the target).
  std::size_t seed_min_count = 2;
  std::size_t seed_size_cap = 1'000'000;
  // 0 keeps every sentence; otherwise a seeded sample of this size is used.
  std::size_t max_training_sentences = 0;

  std::size_t LearnedSize() const { return target_size - unused_count - specials.size(); }
  /// Throws a usage error when the config is unusable on its face.
  void Validate() const;
};

struct Piece {
  std::string text;
  double log_prob = 0.0;
  friend bool operator==(const Piece&, const Piece&) = default;
};

/// Immutable piece inventory. Layout: specials, then [unused0..], then
/// learned pieces. Control pieces (specials and unused) never take part in
/// segmentation.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// The leading run of bracketed pieces with log_prob 0 is the control
  /// block. Requires an [UNK] piece there.
  explicit Vocabulary(std::vector<Piece> pieces);

  std::size_t size() const { return pieces_.size(); }
  const Piece& piece(PieceId id) const { return pieces_.at(id); }
  const std::vector<Piece>& pieces() const { return pieces_; }
  std::optional<PieceId> Find(std::string_view text) const;

  std::size_t num_control() const { return num_control_; }
  bool IsControl(PieceId id) const { return id < num_control_; }
  PieceId unk_id() const { return unk_id_; }
  /// Id of a control piece such as "[CLS]"; throws if absent.
  PieceId ControlId(std::string_view name) const;

  /// Max-probability segmentation of one pretoken: ties go to fewer pieces,
  /// then to the longer leftmost piece. Unknown characters map the whole
  /// pretoken to [UNK].
  std::vector<PieceId> SegmentIds(std::string_view pretoken) const;
  std::vector<std::string> Segment(std::string_view pretoken) const;

  /// `piece<TAB>log_prob` per line, shortest round-trip decimal.
  void Save(std::ostream& out) const;
  static Vocabulary Load(std::istream& in);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.pieces_ == b.pieces_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<Piece> pieces_;
  std::unordered_map<std::string, PieceId, Hash, std::equal_to<>> index_;  // learned pieces only
  std::unordered_map<std::string, PieceId, Hash, std::equal_to<>> controls_;
  std::size_t num_control_ = 0;
  std::size_t max_piece_chars_ = 0;
  PieceId unk_id_ = 0;
};

enum class EncodeMode { kSegmented, kRaw };

/// Parses "segmented" / "raw"; throws a usage error otherwise.
EncodeMode ParseEncodeMode(std::string_view name);

struct Encoding {
  std::vector<std::string> pieces;
  std::vector<PieceId> ids;
  // Whitespace word of the original (pre-segmentation) sentence.
  std::vector<std::size_t> word_ids;
  // Whitespace token of the encoded text (a marker segment in segmented mode).
  std::vector<std::size_t> pretoken_ids;

  std::size_t size() const { return ids.size(); }
  friend bool operator==(const Encoding&, const Encoding&) = default;
};

/// In segmented mode the marker tokens ("x+", "+x") are grouped with their
/// stem under one word id; in raw mode every whitespace token is a word.
Encoding Encode(const Vocabulary& vocab, std::string_view sentence,
                EncodeMode mode = EncodeMode::kSegmented);

/// Concatenates pieces, turns boundary markers into spaces and drops control
/// pieces other than [UNK]. Throws a format error naming an out-of-range id.
std::string Decode(const Vocabulary& vocab, std::span<const PieceId> ids);

/// Per-round record of training progress.
struct TrainingRound {
  std::size_t inventory_size = 0;       // learned pieces during this round
  std::vector<double> log_likelihoods;  // one per E-step, in order
};

struct TrainingTrace {
  std::vector<TrainingRound> rounds;
};

struct TrainOptions {
  unsigned threads = 1;
  TrainingTrace* trace = nullptr;
  std::function<void(const std::string&)> log;
};

/// Unigram LM training: seed inventory, EM with likelihood-loss pruning,
/// final layout. Throws a usage error when the corpus charset does not fit
/// the learned budget or the corpus cannot fill the requested size.
Vocabulary TrainVocab(const std::vector<std::string>& sentences, const VocabConfig& config,
                      std::uint64_t seed, const TrainOptions& options = {});

/// Weighted pretoken table built from whitespace tokens, sorted by text.
struct PretokenCounts {
  std::vector<std::string> pretokens;
  std::vector<double> counts;
};
PretokenCounts CountPretokens(const std::vector<std::string>& sentences);

/// Corpus log-likelihood under a learned-piece model (sum over pretokens of
/// count * log Z). Pieces are (text, log_prob); returns -inf if some
/// pretoken has no segmentation.
double CorpusLogLikelihood(const PretokenCounts& counts, const std::vector<Piece>& pieces);

}  // namespace arapipe::subword
