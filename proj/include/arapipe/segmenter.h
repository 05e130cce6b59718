#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace arapipe::seg {

/// Position class of a proclitic. A word's prefixes must appear in strictly
/// increasing slot order; a future-marker prefix ends the prefix chain.
enum class PrefixSlot { kConjunction = 0, kPreposition = 1, kFuture = 2, kArticle = 3 };

struct PrefixRule {
  std::string affix;
  PrefixSlot slot = PrefixSlot::kPreposition;
  // Minimum number of Arabic letters that must remain after stripping.
  int min_rest = 2;
};

struct SuffixRule {
  std::string affix;
  int min_stem = 2;
};

/// Ordered affix inventory. Rules are tried in table order and the first
/// one that fires wins, so tables are kept longest-first.
struct RuleTable {
  std::vector<PrefixRule> prefix_rules;
  std::vector<SuffixRule> suffix_rules;

  static const RuleTable& Builtin();

  /// Line-oriented rule file:
  ///   P <affix> [conj|prep|future|article] [min_rest]
  ///   S <affix> [min_stem]
  /// '#' starts a comment. Throws a format error naming the line.
  static RuleTable Parse(std::string_view text);
  std::string ToText() const;
};

inline constexpr int kMinStemLetters = 2;
inline constexpr std::size_t kMaxPrefixes = 3;

struct SegmentedWord {
  std::vector<std::string> prefixes;
  std::string stem;
  std::vector<std::string> suffixes;

  /// Marker format: "p1+ p2+ stem +s".
  std::string Render() const;
  /// Original word (concatenation of all parts).
  std::string Surface() const;
  bool IsPassthrough() const { return prefixes.empty() && suffixes.empty(); }

  friend bool operator==(const SegmentedWord&, const SegmentedWord&) = default;
};

/// Greedy longest-match clitic stripping. Tokens that are not Arabic script
/// (or contain '+') come back unsegmented. Leading/trailing punctuation
/// stays attached to the outermost segment.
SegmentedWord SegmentWord(std::string_view word, const RuleTable& rules = RuleTable::Builtin());

struct SegmentedText {
  std::string text;                  // space-joined marked segments
  std::vector<std::size_t> word_map; // source word index per output segment

  friend bool operator==(const SegmentedText&, const SegmentedText&) = default;
};

/// Input is normalized text; no whitespace token may begin or end with '+'.
SegmentedText SegmentText(std::string_view text, const RuleTable& rules = RuleTable::Builtin());

/// Source word index for each marker-format token. Throws a format error
/// naming the token index on a dangling prefix or suffix marker.
std::vector<std::size_t> MarkerWordMap(const std::vector<std::string_view>& tokens);

/// Validates already segmented text and computes its word map.
SegmentedText Passthrough(std::string_view marked_text);

/// Inverse of SegmentText: attaches "x+" and "+x" markers to their stems.
std::string Desegment(std::string_view marked_text);

}  // namespace arapipe::seg
