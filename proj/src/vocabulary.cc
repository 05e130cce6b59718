#include "arapipe/subword.h"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "arapipe/error.h"
#include "arapipe/segmenter.h"
#include "arapipe/utf8.h"

namespace arapipe::subword {
namespace {

bool LooksLikeControl(const Piece& p) {
  return p.log_prob == 0.0 && p.text.size() >= 3 && p.text.front() == '[' && p.text.back() == ']';
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw InvariantError("cannot format log probability");
  return std::string(buf, end);
}

}  // namespace

void VocabConfig::Validate() const {
  if (!(prune_keep_ratio > 0.0 && prune_keep_ratio < 1.0)) {
    throw UsageError("prune_keep_ratio must be in (0, 1)");
  }
  if (!(min_char_coverage > 0.0 && min_char_coverage <= 1.0)) {
    throw UsageError("min_char_coverage must be in (0, 1]");
  }
  if (seed_max_piece_len < 1) throw UsageError("seed_max_piece_len must be >= 1");
  if (em_iters_per_round < 1) throw UsageError("em_iters_per_round must be >= 1");
  if (target_size <= unused_count + specials.size()) {
    throw UsageError("target size " + std::to_string(target_size) +
                     " leaves no room for learned pieces");
  }
  bool has_unk = false;
  for (const auto& s : specials) {
    if (s.size() < 3 || s.front() != '[' || s.back() != ']') {
      throw UsageError("special token must be bracketed: " + s);
    }
    has_unk |= s == "[UNK]";
  }
  if (!has_unk) throw UsageError("specials must include [UNK]");
}

Vocabulary::Vocabulary(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
  while (num_control_ < pieces_.size() && LooksLikeControl(pieces_[num_control_])) {
    if (!controls_.emplace(pieces_[num_control_].text, num_control_).second) {
      throw FormatError("duplicate control piece " + pieces_[num_control_].text);
    }
    ++num_control_;
  }
  auto unk = controls_.find(std::string_view("[UNK]"));
  if (unk == controls_.end()) throw FormatError("vocabulary has no [UNK] control piece");
  unk_id_ = unk->second;
  index_.reserve(pieces_.size() - num_control_);
  for (std::size_t id = num_control_; id < pieces_.size(); ++id) {
    const Piece& p = pieces_[id];
    if (p.text.empty()) throw FormatError("empty piece at id " + std::to_string(id));
    if (!std::isfinite(p.log_prob)) {
      throw FormatError("non-finite log probability at id " + std::to_string(id));
    }
    if (!index_.emplace(p.text, static_cast<PieceId>(id)).second) {
      throw FormatError("duplicate piece '" + p.text + "' at id " + std::to_string(id));
    }
    max_piece_chars_ = std::max(max_piece_chars_, utf8::CodePointCount(p.text));
  }
}

std::optional<PieceId> Vocabulary::Find(std::string_view text) const {
  if (auto it = index_.find(text); it != index_.end()) return it->second;
  if (auto it = controls_.find(text); it != controls_.end()) return it->second;
  return std::nullopt;
}

PieceId Vocabulary::ControlId(std::string_view name) const {
  auto it = controls_.find(name);
  if (it == controls_.end()) throw FormatError("vocabulary lacks control piece " + std::string(name));
  return it->second;
}

std::vector<PieceId> Vocabulary::SegmentIds(std::string_view pretoken) const {
  if (pretoken.empty()) return {};
  const std::vector<std::size_t> bounds = utf8::Boundaries(pretoken);
  const std::size_t n = bounds.size() - 1;

  // Suffix DP: best[i] describes the best segmentation of characters [i, n).
  // Building from the right makes the leftmost-longest tie-break local.
  struct Cell {
    double score = 0.0;
    std::size_t count = 0;
    std::size_t next = 0;
    PieceId id = 0;
    bool reachable = false;
  };
  std::vector<Cell> best(n + 1);
  best[n].reachable = true;
  for (std::size_t i = n; i-- > 0;) {
    Cell& cell = best[i];
    const std::size_t max_len = std::min(max_piece_chars_, n - i);
    for (std::size_t len = 1; len <= max_len; ++len) {
      const Cell& rest = best[i + len];
      if (!rest.reachable) continue;
      auto it = index_.find(pretoken.substr(bounds[i], bounds[i + len] - bounds[i]));
      if (it == index_.end()) continue;
      const double score = pieces_[it->second].log_prob + rest.score;
      const std::size_t count = rest.count + 1;
      // Longer candidates come later, so ">=" on a full tie prefers them.
      const bool better = !cell.reachable || score > cell.score ||
                          (score == cell.score && count <= cell.count);
      if (better) {
        cell = {score, count, i + len, it->second, true};
      }
    }
  }
  if (!best[0].reachable) return {unk_id_};
  std::vector<PieceId> ids;
  ids.reserve(best[0].count);
  for (std::size_t i = 0; i < n; i = best[i].next) ids.push_back(best[i].id);
  return ids;
}

std::vector<std::string> Vocabulary::Segment(std::string_view pretoken) const {
  std::vector<std::string> out;
  for (PieceId id : SegmentIds(pretoken)) out.push_back(pieces_[id].text);
  return out;
}

void Vocabulary::Save(std::ostream& out) const {
  for (const auto& p : pieces_) out << p.text << '\t' << FormatDouble(p.log_prob) << '\n';
}

Vocabulary Vocabulary::Load(std::istream& in) {
  std::vector<Piece> pieces;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError("vocab line " + std::to_string(line_no) + ": expected piece<TAB>log_prob");
    }
    Piece p;
    p.text = line.substr(0, tab);
    utf8::Validate(p.text);
    const char* first = line.data() + tab + 1;
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, p.log_prob);
    if (ec != std::errc() || ptr != last) {
      throw FormatError("vocab line " + std::to_string(line_no) + ": bad log probability");
    }
    pieces.push_back(std::move(p));
  }
  return Vocabulary(std::move(pieces));
}

EncodeMode ParseEncodeMode(std::string_view name) {
  if (name == "segmented") return EncodeMode::kSegmented;
  if (name == "raw") return EncodeMode::kRaw;
  throw UsageError("unknown encode mode '" + std::string(name) + "' (expected segmented|raw)");
}

Encoding Encode(const Vocabulary& vocab, std::string_view sentence, EncodeMode mode) {
  const auto tokens = utf8::SplitWhitespace(sentence);
  std::vector<std::size_t> word_map;
  if (mode == EncodeMode::kSegmented) {
    word_map = seg::MarkerWordMap(tokens);
  } else {
    word_map.resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) word_map[i] = i;
  }
  Encoding enc;
  std::string pretoken;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    pretoken.assign(kWordBoundary);
    pretoken += tokens[t];
    for (PieceId id : vocab.SegmentIds(pretoken)) {
      enc.pieces.push_back(vocab.piece(id).text);
      enc.ids.push_back(id);
      enc.word_ids.push_back(word_map[t]);
      enc.pretoken_ids.push_back(t);
    }
  }
  return enc;
}

std::string Decode(const Vocabulary& vocab, std::span<const PieceId> ids) {
  std::string joined;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const PieceId id = ids[i];
    if (id >= vocab.size()) {
      throw FormatError("piece id " + std::to_string(id) + " out of range at index " + std::to_string(i));
    }
    if (id == vocab.unk_id()) {
      // [UNK] always stands for a whole pretoken.
      joined += kWordBoundary;
      joined += vocab.piece(id).text;
    } else if (!vocab.IsControl(id)) {
      joined += vocab.piece(id).text;
    }
  }
  std::string out;
  out.reserve(joined.size());
  for (std::size_t i = 0; i < joined.size();) {
    if (joined.compare(i, kWordBoundary.size(), kWordBoundary) == 0) {
      if (!out.empty()) out.push_back(' ');
      i += kWordBoundary.size();
    } else {
      out.push_back(joined[i++]);
    }
  }
  return out;
}

}  // namespace arapipe::subword
