#include "arapipe/pretrain.h"

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_map>

#include "arapipe/error.h"

namespace arapipe::pretrain {
namespace {

constexpr double kMaskProb = 0.8;
constexpr double kRandomProb = 0.1;
// Work units built per parallel window before they are handed to the sink.
constexpr std::size_t kWindow = 64;

struct Segment {
  std::vector<PieceId> ids;
  std::vector<std::int64_t> groups;
};

// Appends pieces [begin, end) of `enc`, opening a new group whenever the
// word id changes. `next_group` keeps groups unique across the example.
void AppendPieces(Segment& seg, const subword::Encoding& enc, std::size_t begin, std::size_t end,
                  std::int64_t& next_group) {
  for (std::size_t p = begin; p < end; ++p) {
    if (p == begin || enc.word_ids[p] != enc.word_ids[p - 1]) ++next_group;
    seg.ids.push_back(enc.ids[p]);
    seg.groups.push_back(next_group);
  }
}

std::vector<std::size_t> NonEmptySentences(const Document& doc) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < doc.size(); ++s) {
    if (doc[s].size() > 0) out.push_back(s);
  }
  return out;
}

std::vector<std::size_t> NonEmptyDocuments(const std::vector<Document>& docs) {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (!NonEmptySentences(docs[d]).empty()) out.push_back(d);
  }
  return out;
}

// Index (into the word-start list) of each distinct word of `enc`.
std::vector<std::size_t> WordStarts(const subword::Encoding& enc) {
  std::vector<std::size_t> starts;
  for (std::size_t p = 0; p < enc.size(); ++p) {
    if (p == 0 || enc.word_ids[p] != enc.word_ids[p - 1]) starts.push_back(p);
  }
  return starts;
}

GeneratedExample BuildExample(Segment a, Segment b, bool random_next, const PretrainParams& params,
                              const SpecialIds& ids, RngStream& rng) {
  const std::size_t target = params.max_seq_len - 3;
  GeneratedExample out;
  while (a.ids.size() + b.ids.size() > target) {
    Segment& longer = a.ids.size() > b.ids.size() ? a : b;
    longer.ids.pop_back();
    longer.groups.pop_back();
    out.truncated = true;
  }
  out.segment_a_tokens = a.ids.size();
  out.segment_b_tokens = b.ids.size();

  std::vector<PieceId> tokens;
  std::vector<std::int64_t> groups;
  std::vector<std::uint8_t> segment_ids;
  const auto push = [&](PieceId id, std::int64_t group, std::uint8_t segment) {
    tokens.push_back(id);
    groups.push_back(group);
    segment_ids.push_back(segment);
  };
  push(ids.cls, -1, 0);
  for (std::size_t i = 0; i < a.ids.size(); ++i) push(a.ids[i], a.groups[i], 0);
  push(ids.sep, -1, 0);
  for (std::size_t i = 0; i < b.ids.size(); ++i) push(b.ids[i], b.groups[i], 1);
  push(ids.sep, -1, 1);

  MaskResult masked = WholeWordMask(tokens, groups, params, ids, rng);
  out.real_tokens = a.ids.size() + b.ids.size();

  PretrainingExample& ex = out.example;
  const std::size_t len = params.max_seq_len;
  const std::size_t used = masked.tokens.size();
  ex.input_ids = std::move(masked.tokens);
  ex.input_ids.resize(len, ids.pad);
  ex.input_mask.assign(len, 0);
  std::fill_n(ex.input_mask.begin(), used, 1);
  ex.segment_ids = std::move(segment_ids);
  ex.segment_ids.resize(len, 0);
  ex.masked_lm_positions = std::move(masked.positions);
  ex.masked_lm_ids = std::move(masked.original_ids);
  ex.masked_lm_weights.assign(ex.masked_lm_positions.size(), 1);
  ex.masked_lm_positions.resize(params.max_predictions, 0);
  ex.masked_lm_ids.resize(params.max_predictions, 0);
  ex.masked_lm_weights.resize(params.max_predictions, 0);
  ex.next_sentence_label = random_next ? 1 : 0;
  out.actions = std::move(masked.actions);
  out.groups = std::move(groups);
  return out;
}

std::vector<GeneratedExample> DocumentExamples(const std::vector<Document>& docs,
                                               const std::vector<std::size_t>& nonempty_docs,
                                               std::size_t dup_index, std::size_t doc_index,
                                               const PretrainParams& params, const SpecialIds& ids,
                                               GenerationStats& stats) {
  std::vector<GeneratedExample> out;
  const Document& doc = docs[doc_index];
  const std::vector<std::size_t> sentences = NonEmptySentences(doc);
  if (sentences.empty()) return out;

  RngStream rng(params.seed, dup_index, doc_index);
  const std::size_t target = params.max_seq_len - 3;
  const auto self_pos = std::find(nonempty_docs.begin(), nonempty_docs.end(), doc_index) - nonempty_docs.begin();

  std::vector<std::size_t> chunk;
  std::size_t chunk_len = 0;
  std::size_t i = 0;
  while (i < sentences.size()) {
    chunk.push_back(sentences[i]);
    chunk_len += doc[sentences[i]].size();
    ++i;
    if (i < sentences.size() && chunk_len < target) continue;

    const bool random_next = rng.Uniform01() < params.random_next_prob;
    std::int64_t next_group = -1;
    Segment a, b;
    bool emit = true;
    if (chunk.size() >= 2) {
      const std::size_t a_end = 1 + rng.Uniform(chunk.size() - 1);
      for (std::size_t c = 0; c < a_end; ++c) AppendPieces(a, doc[chunk[c]], 0, doc[chunk[c]].size(), next_group);
      if (random_next) {
        i -= chunk.size() - a_end;  // unused sentences start the next chunk
      } else {
        for (std::size_t c = a_end; c < chunk.size(); ++c) {
          AppendPieces(b, doc[chunk[c]], 0, doc[chunk[c]].size(), next_group);
        }
      }
    } else {
      const subword::Encoding& enc = doc[chunk[0]];
      if (random_next) {
        AppendPieces(a, enc, 0, enc.size(), next_group);
      } else {
        // True continuation inside a lone sentence: split at a word boundary.
        const auto starts = WordStarts(enc);
        if (starts.size() < 2) {
          emit = false;
          ++stats.skipped_chunks;
        } else {
          const std::size_t split = starts[1 + rng.Uniform(starts.size() - 1)];
          AppendPieces(a, enc, 0, split, next_group);
          AppendPieces(b, enc, split, enc.size(), next_group);
        }
      }
    }
    if (emit && random_next) {
      std::size_t r = rng.Uniform(nonempty_docs.size() - 1);
      if (static_cast<std::ptrdiff_t>(r) >= self_pos) ++r;
      const Document& other = docs[nonempty_docs[r]];
      const std::vector<std::size_t> other_sentences = NonEmptySentences(other);
      const std::size_t target_b = a.ids.size() < target ? target - a.ids.size() : 1;
      for (std::size_t j = rng.Uniform(other_sentences.size()); j < other_sentences.size(); ++j) {
        const auto& enc = other[other_sentences[j]];
        AppendPieces(b, enc, 0, enc.size(), next_group);
        if (b.ids.size() >= target_b) break;
      }
    }
    if (emit) {
      GeneratedExample ex = BuildExample(std::move(a), std::move(b), random_next, params, ids, rng);
      ex.dup_index = dup_index;
      ex.doc_index = doc_index;
      out.push_back(std::move(ex));
    }
    chunk.clear();
    chunk_len = 0;
  }
  return out;
}

void CheckDocuments(const std::vector<std::size_t>& nonempty, const PretrainParams& params) {
  if (params.random_next_prob > 0.0 && nonempty.size() < 2) {
    throw FormatError("random next-sentence sampling needs at least two non-empty documents, got " +
                      std::to_string(nonempty.size()));
  }
}

}  // namespace

std::uint32_t PretrainParams::DefaultMaxPredictions(std::uint32_t max_seq_len) {
  return static_cast<std::uint32_t>(std::ceil(0.15 * max_seq_len - 1e-9));
}

void PretrainParams::Validate() const {
  if (max_seq_len < 5) throw UsageError("max_seq_len must be at least 5");
  if (!(masked_lm_prob > 0.0 && masked_lm_prob < 1.0)) throw UsageError("masked_lm_prob must be in (0, 1)");
  if (!(random_next_prob >= 0.0 && random_next_prob <= 1.0)) {
    throw UsageError("random_next_prob must be in [0, 1]");
  }
  if (max_predictions < 1) throw UsageError("max_predictions must be at least 1");
  if (dup_factor < 1) throw UsageError("dup_factor must be at least 1");
}

SpecialIds SpecialIds::From(const subword::Vocabulary& vocab) {
  SpecialIds ids;
  ids.pad = vocab.ControlId("[PAD]");
  ids.cls = vocab.ControlId("[CLS]");
  ids.sep = vocab.ControlId("[SEP]");
  ids.mask = vocab.ControlId("[MASK]");
  ids.first_regular = static_cast<PieceId>(vocab.num_control());
  ids.vocab_size = vocab.size();
  if (ids.first_regular >= ids.vocab_size) throw FormatError("vocabulary has no regular pieces");
  return ids;
}

std::size_t MaskBudget(std::size_t real_tokens, const PretrainParams& params) {
  if (real_tokens == 0) return 0;
  const auto rounded = static_cast<std::size_t>(std::llround(params.masked_lm_prob * static_cast<double>(real_tokens)));
  return std::min<std::size_t>(params.max_predictions, std::max<std::size_t>(1, rounded));
}

MaskResult WholeWordMask(std::span<const PieceId> tokens, std::span<const std::int64_t> groups,
                         const PretrainParams& params, const SpecialIds& ids, RngStream& rng) {
  if (tokens.size() != groups.size()) throw InvariantError("token/group length mismatch");
  MaskResult result;
  result.tokens.assign(tokens.begin(), tokens.end());

  std::vector<std::vector<std::uint32_t>> words;
  std::unordered_map<std::int64_t, std::size_t> word_of;
  std::size_t real = 0;
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    if (groups[p] < 0) continue;
    ++real;
    auto [it, inserted] = word_of.emplace(groups[p], words.size());
    if (inserted) words.emplace_back();
    words[it->second].push_back(static_cast<std::uint32_t>(p));
  }
  const std::size_t budget = MaskBudget(real, params);
  if (budget == 0) return result;

  rng.Shuffle(std::span<std::vector<std::uint32_t>>(words));

  // reach[i][s]: some subset of words[i..] has exactly s pieces.
  const std::size_t n = words.size();
  std::vector<std::vector<char>> reach(n + 1, std::vector<char>(budget + 1, 0));
  reach[n][0] = 1;
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t size = words[i].size();
    for (std::size_t s = 0; s <= budget; ++s) {
      reach[i][s] = reach[i + 1][s] || (s >= size && reach[i + 1][s - size]);
    }
  }
  std::size_t remaining = budget;
  while (remaining > 0 && !reach[0][remaining]) --remaining;
  for (std::size_t i = 0; i < n && remaining > 0; ++i) {
    const std::size_t size = words[i].size();
    if (size <= remaining && reach[i + 1][remaining - size]) {
      result.positions.insert(result.positions.end(), words[i].begin(), words[i].end());
      remaining -= size;
    }
  }
  std::sort(result.positions.begin(), result.positions.end());

  for (std::uint32_t pos : result.positions) {
    result.original_ids.push_back(tokens[pos]);
    const double u = rng.Uniform01();
    if (u < kMaskProb) {
      result.tokens[pos] = ids.mask;
      result.actions.push_back(MaskAction::kMask);
    } else if (u < kMaskProb + kRandomProb) {
      result.tokens[pos] = ids.first_regular + static_cast<PieceId>(rng.Uniform(ids.vocab_size - ids.first_regular));
      result.actions.push_back(MaskAction::kRandom);
    } else {
      result.actions.push_back(MaskAction::kKeep);
    }
  }
  return result;
}

std::vector<GeneratedExample> CreateDocumentExamples(const std::vector<Document>& docs,
                                                     std::size_t dup_index, std::size_t doc_index,
                                                     const PretrainParams& params, const SpecialIds& ids) {
  params.Validate();
  const auto nonempty = NonEmptyDocuments(docs);
  CheckDocuments(nonempty, params);
  GenerationStats stats;
  return DocumentExamples(docs, nonempty, dup_index, doc_index, params, ids, stats);
}

GenerationStats CreateExamples(const std::vector<Document>& docs, const PretrainParams& params,
                               const SpecialIds& ids, unsigned threads,
                               const std::function<void(const GeneratedExample&)>& sink) {
  params.Validate();
  const auto nonempty = NonEmptyDocuments(docs);
  CheckDocuments(nonempty, params);

  GenerationStats stats;
  stats.skipped_empty_documents = (docs.size() - nonempty.size()) * params.dup_factor;
  const std::size_t units = static_cast<std::size_t>(params.dup_factor) * docs.size();
  threads = std::max(1u, threads);
  for (std::size_t start = 0; start < units; start += kWindow) {
    const std::size_t count = std::min(kWindow, units - start);
    std::vector<std::vector<GeneratedExample>> results(count);
    std::vector<GenerationStats> unit_stats(count);
    const auto run = [&](std::size_t u) {
      const std::size_t unit = start + u;
      results[u] = DocumentExamples(docs, nonempty, unit / docs.size(), unit % docs.size(), params, ids,
                                    unit_stats[u]);
    };
    if (threads == 1 || count == 1) {
      for (std::size_t u = 0; u < count; ++u) run(u);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(threads);
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (std::size_t u = t; u < count; u += threads) run(u);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (std::size_t u = 0; u < count; ++u) {
      stats.skipped_chunks += unit_stats[u].skipped_chunks;
      for (const auto& ex : results[u]) {
        sink(ex);
        ++stats.examples;
      }
    }
  }
  return stats;
}

std::vector<PretrainingExample> CreateExamples(const std::vector<Document>& docs,
                                               const PretrainParams& params, const SpecialIds& ids) {
  std::vector<PretrainingExample> out;
  CreateExamples(docs, params, ids, 1, [&](const GeneratedExample& ex) { out.push_back(ex.example); });
  return out;
}

std::vector<Document> EncodeDocuments(const subword::Vocabulary& vocab,
                                      const std::vector<std::vector<std::string>>& docs,
                                      subword::EncodeMode mode, MaskUnit unit) {
  std::vector<Document> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    Document encoded;
    for (const auto& sentence : doc) {
      subword::Encoding enc = subword::Encode(vocab, sentence, mode);
      if (enc.size() == 0) continue;
      if (unit == MaskUnit::kSegment) {
        enc.word_ids.assign(enc.pretoken_ids.begin(), enc.pretoken_ids.end());
      }
      encoded.push_back(std::move(enc));
    }
    out.push_back(std::move(encoded));
  }
  return out;
}

void ExampleStats::Add(const PretrainingExample& ex, PieceId mask_id, PieceId cls_id, PieceId sep_id) {
  ++examples;
  not_next += ex.next_sentence_label;
  for (std::size_t p = 0; p < ex.input_ids.size(); ++p) {
    if (ex.input_mask[p] && ex.input_ids[p] != cls_id && ex.input_ids[p] != sep_id) ++real_tokens;
  }
  for (std::size_t k = 0; k < ex.masked_lm_weights.size(); ++k) {
    if (!ex.masked_lm_weights[k]) continue;
    ++masked;
    const PieceId now = ex.input_ids.at(ex.masked_lm_positions[k]);
    if (now == mask_id) ++replaced_mask;
    else if (now == ex.masked_lm_ids[k]) ++kept;
    else ++replaced_random;
  }
}

}  // namespace arapipe::pretrain
