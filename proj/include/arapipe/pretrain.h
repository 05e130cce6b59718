#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "arapipe/rng.h"
#include "arapipe/subword.h"

namespace arapipe::pretrain {

using subword::PieceId;

/// Which unit whole-word masking treats as atomic.
enum class MaskUnit {
  kWord,     // original whitespace word, marker segments included
  kSegment,  // each marker segment on its own
};

struct PretrainParams {
  std::uint32_t max_seq_len = 128;
  double masked_lm_prob = 0.15;
  std::uint32_t max_predictions = 20;
  std::uint32_t dup_factor = 10;
  std::uint64_t seed = 34;
  double random_next_prob = 0.5;
  MaskUnit mask_unit = MaskUnit::kWord;

  /// 20 for 128-token sequences, 77 for 512: ceil(0.15 * len).
  static std::uint32_t DefaultMaxPredictions(std::uint32_t max_seq_len);
  void Validate() const;
};

struct PretrainingExample {
  std::vector<PieceId> input_ids;
  std::vector<std::uint8_t> input_mask;
  std::vector<std::uint8_t> segment_ids;
  std::vector<std::uint32_t> masked_lm_positions;
  std::vector<PieceId> masked_lm_ids;
  std::vector<std::uint8_t> masked_lm_weights;
  std::uint8_t next_sentence_label = 0;  // 1 = B is a random segment

  friend bool operator==(const PretrainingExample&, const PretrainingExample&) = default;
};

/// Control ids the generator needs. Regular (maskable, sampleable) ids are
/// [first_regular, vocab_size).
struct SpecialIds {
  PieceId pad = 0;
  PieceId cls = 0;
  PieceId sep = 0;
  PieceId mask = 0;
  PieceId first_regular = 0;
  std::size_t vocab_size = 0;

  static SpecialIds From(const subword::Vocabulary& vocab);
};

enum class MaskAction : std::uint8_t { kMask, kRandom, kKeep };

struct MaskResult {
  std::vector<PieceId> tokens;         // sequence after replacement
  std::vector<std::uint32_t> positions;  // ascending
  std::vector<PieceId> original_ids;
  std::vector<MaskAction> actions;
};

/// Number of real (non-special) tokens N -> masking budget
/// min(max_predictions, max(1, round(masked_lm_prob * N))); 0 when N == 0.
std::size_t MaskBudget(std::size_t real_tokens, const PretrainParams& params);

/// Whole-word masking over `tokens`. `groups[i]` is the word unit of token i,
/// or -1 for tokens that may not be masked ([CLS], [SEP], padding). Words
/// are shuffled, then taken in that order whenever they fit and the budget
/// stays exactly reachable with the words after them; if no subset of words
/// sums to the budget the largest reachable total below it is used.
MaskResult WholeWordMask(std::span<const PieceId> tokens, std::span<const std::int64_t> groups,
                         const PretrainParams& params, const SpecialIds& ids, RngStream& rng);

using Document = std::vector<subword::Encoding>;

struct GeneratedExample {
  PretrainingExample example;
  std::vector<MaskAction> actions;  // parallel to the weighted masked positions
  std::vector<std::int64_t> groups;  // mask unit per unpadded position, -1 for [CLS]/[SEP]
  std::size_t real_tokens = 0;
  std::size_t dup_index = 0;
  std::size_t doc_index = 0;
  std::size_t segment_a_tokens = 0;
  std::size_t segment_b_tokens = 0;
  bool truncated = false;
};

struct GenerationStats {
  std::size_t examples = 0;
  std::size_t skipped_empty_documents = 0;
  std::size_t skipped_chunks = 0;  // single-word chunk drawn as a true continuation
};

/// Examples of one (dup_index, doc_index) work unit, in chunk order.
std::vector<GeneratedExample> CreateDocumentExamples(const std::vector<Document>& docs,
                                                     std::size_t dup_index, std::size_t doc_index,
                                                     const PretrainParams& params, const SpecialIds& ids);

/// All examples in (dup_index, doc_index, chunk_index) order. Units are built
/// on `threads` workers; `sink` is called from the calling thread in order,
/// so output never depends on the worker count. Throws if fewer than two
/// non-empty documents exist.
GenerationStats CreateExamples(const std::vector<Document>& docs, const PretrainParams& params,
                               const SpecialIds& ids, unsigned threads,
                               const std::function<void(const GeneratedExample&)>& sink);

std::vector<PretrainingExample> CreateExamples(const std::vector<Document>& docs,
                                               const PretrainParams& params, const SpecialIds& ids);

/// Encodes sentence-per-line documents for the chosen mask unit.
std::vector<Document> EncodeDocuments(const subword::Vocabulary& vocab,
                                      const std::vector<std::vector<std::string>>& docs,
                                      subword::EncodeMode mode, MaskUnit unit);

/// Summary of a record file or an example stream.
struct ExampleStats {
  std::size_t examples = 0;
  std::size_t not_next = 0;
  std::size_t real_tokens = 0;
  std::size_t masked = 0;
  std::size_t replaced_mask = 0;
  std::size_t replaced_random = 0;
  std::size_t kept = 0;

  void Add(const PretrainingExample& ex, PieceId mask_id, PieceId cls_id, PieceId sep_id);
};

}  // namespace arapipe::pretrain
