#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace arapipe::corpus {

struct NormalizationConfig {
  bool strip_tatweel = true;
  bool strip_diacritics = true;
  bool normalize_alef_ya = false;
  // When false, whitespace tokens containing Latin letters are dropped.
  bool preserve_latin = true;
  bool collapse_whitespace = true;

  /// CLI flags that reproduce this config from the defaults.
  std::vector<std::string> ToFlags() const;
  /// Inverse of ToFlags; unknown flags throw a usage error.
  static NormalizationConfig FromFlags(const std::vector<std::string>& flags);

  friend bool operator==(const NormalizationConfig&, const NormalizationConfig&) = default;
};

struct SentenceCorpus {
  std::vector<std::string> sentences;
  std::vector<std::size_t> source_ids;  // document index per sentence

  std::size_t size() const { return sentences.size(); }
  friend bool operator==(const SentenceCorpus&, const SentenceCorpus&) = default;
};

/// Half-open code point range [begin, end).
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

std::string NormalizeText(std::string_view raw, const NormalizationConfig& config);

bool IsSentenceTerminator(char32_t cp);

/// Partitions `text` into sentence spans (code point offsets). Each span ends
/// right after a run of terminators; the spans cover the whole text.
std::vector<CharSpan> SentencePartition(std::string_view text);

/// Sentences of `document`, terminators kept, surrounding whitespace trimmed,
/// empty pieces dropped.
std::vector<std::string> SplitSentences(std::string_view document);

/// Order-preserving first-occurrence dedup on exact bytes.
SentenceCorpus DedupSentences(const SentenceCorpus& corpus);

/// Full prep: per-line normalization and splitting of every document (in
/// parallel when threads > 1), merge in document order, dedup.
SentenceCorpus PrepareCorpus(const std::vector<std::string>& documents,
                             const NormalizationConfig& config, unsigned threads = 1);

/// Regular files under `path` (or `path` itself), sorted by path.
std::vector<std::filesystem::path> ListDocuments(const std::filesystem::path& path);
std::string ReadFile(const std::filesystem::path& path);

/// One sentence per line, a blank line between documents.
void WriteCorpus(std::ostream& out, const SentenceCorpus& corpus);

/// Reads the WriteCorpus format back: documents of sentences.
std::vector<std::vector<std::string>> ReadDocuments(std::istream& in);

}  // namespace arapipe::corpus
