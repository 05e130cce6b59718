#include "arapipe/corpus.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "arapipe/error.h"
#include "arapipe/utf8.h"

namespace arapipe::corpus {
namespace {

bool HasLatinLetter(std::u32string_view token) {
  return std::any_of(token.begin(), token.end(), [](char32_t c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  });
}

char32_t MapAlefYa(char32_t cp) {
  switch (cp) {
    case 0x0622:  // alef with madda
    case 0x0623:  // alef with hamza above
    case 0x0625:  // alef with hamza below
      return 0x0627;
    case 0x0649:  // alef maksura
      return 0x064A;
    default:
      return cp;
  }
}

std::u32string DropLatinTokens(const std::u32string& text) {
  std::u32string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (utf8::IsSpace(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !utf8::IsSpace(text[j])) ++j;
    std::u32string_view token(text.data() + i, j - i);
    if (!HasLatinLetter(token)) out.append(token);
    i = j;
  }
  return out;
}

std::u32string CollapseWhitespace(const std::u32string& text) {
  std::u32string out;
  bool pending_space = false;
  for (char32_t cp : text) {
    if (utf8::IsSpace(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(cp);
  }
  return out;
}

std::string_view Trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> PrepareDocument(const std::string& document,
                                         const NormalizationConfig& config) {
  std::vector<std::string> out;
  std::istringstream lines(document);
  for (std::string line; std::getline(lines, line);) {
    for (auto& sentence : SplitSentences(NormalizeText(line, config))) {
      out.push_back(std::move(sentence));
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> NormalizationConfig::ToFlags() const {
  std::vector<std::string> flags;
  if (!strip_tatweel) flags.push_back("--keep-tatweel");
  if (!strip_diacritics) flags.push_back("--keep-diacritics");
  if (normalize_alef_ya) flags.push_back("--normalize-alef-ya");
  if (!preserve_latin) flags.push_back("--drop-latin");
  if (!collapse_whitespace) flags.push_back("--keep-whitespace");
  return flags;
}

NormalizationConfig NormalizationConfig::FromFlags(const std::vector<std::string>& flags) {
  NormalizationConfig config;
  for (const auto& flag : flags) {
    if (flag == "--keep-tatweel") {
      config.strip_tatweel = false;
    } else if (flag == "--keep-diacritics") {
      config.strip_diacritics = false;
    } else if (flag == "--normalize-alef-ya") {
      config.normalize_alef_ya = true;
    } else if (flag == "--drop-latin") {
      config.preserve_latin = false;
    } else if (flag == "--keep-whitespace") {
      config.collapse_whitespace = false;
    } else {
      throw UsageError("unknown normalization flag: " + flag);
    }
  }
  return config;
}

std::string NormalizeText(std::string_view raw, const NormalizationConfig& config) {
  const std::u32string decoded = utf8::Decode(raw);
  std::u32string text;
  text.reserve(decoded.size());
  for (char32_t cp : decoded) {
    if (config.strip_tatweel && cp == utf8::kTatweel) continue;
    if (config.strip_diacritics && utf8::IsArabicDiacritic(cp)) continue;
    text.push_back(config.normalize_alef_ya ? MapAlefYa(cp) : cp);
  }
  if (!config.preserve_latin) text = DropLatinTokens(text);
  if (config.collapse_whitespace) text = CollapseWhitespace(text);
  return utf8::Encode(text);
}

bool IsSentenceTerminator(char32_t cp) {
  return cp == '.' || cp == '!' || cp == '?' || cp == 0x061F || cp == '\n';
}

std::vector<CharSpan> SentencePartition(std::string_view text) {
  const std::u32string cps = utf8::Decode(text);
  std::vector<CharSpan> spans;
  std::size_t begin = 0;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (!IsSentenceTerminator(cps[i])) {
      ++i;
      continue;
    }
    while (i < cps.size() && IsSentenceTerminator(cps[i])) ++i;
    spans.push_back({begin, i});
    begin = i;
  }
  if (begin < cps.size()) spans.push_back({begin, cps.size()});
  return spans;
}

std::vector<std::string> SplitSentences(std::string_view document) {
  const std::vector<std::size_t> bounds = utf8::Boundaries(document);
  std::vector<std::string> out;
  for (const CharSpan& span : SentencePartition(document)) {
    std::string_view piece =
        document.substr(bounds[span.begin], bounds[span.end] - bounds[span.begin]);
    // A trailing newline is a terminator but not sentence content.
    while (!piece.empty() && piece.back() == '\n') piece.remove_suffix(1);
    piece = Trim(piece);
    if (!piece.empty()) out.emplace_back(piece);
  }
  return out;
}

SentenceCorpus DedupSentences(const SentenceCorpus& corpus) {
  SentenceCorpus out;
  std::unordered_set<std::string_view> seen;
  seen.reserve(corpus.sentences.size());
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    if (!seen.insert(corpus.sentences[i]).second) continue;
    out.sentences.push_back(corpus.sentences[i]);
    out.source_ids.push_back(i < corpus.source_ids.size() ? corpus.source_ids[i] : 0);
  }
  return out;
}

SentenceCorpus PrepareCorpus(const std::vector<std::string>& documents,
                             const NormalizationConfig& config, unsigned threads) {
  std::vector<std::vector<std::string>> per_doc(documents.size());
  threads = std::max(1u, std::min<unsigned>(threads, documents.size()));
  if (threads == 1) {
    for (std::size_t d = 0; d < documents.size(); ++d) {
      per_doc[d] = PrepareDocument(documents[d], config);
    }
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t d = t; d < documents.size(); d += threads) {
            per_doc[d] = PrepareDocument(documents[d], config);
          }
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
  SentenceCorpus merged;
  for (std::size_t d = 0; d < per_doc.size(); ++d) {
    for (auto& s : per_doc[d]) {
      merged.sentences.push_back(std::move(s));
      merged.source_ids.push_back(d);
    }
  }
  return DedupSentences(merged);
}

std::vector<std::filesystem::path> ListDocuments(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) return {path};
  if (!fs::is_directory(path, ec)) throw IoError("no such file or directory: " + path.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(path, ec)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list " + path.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  return files;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteCorpus(std::ostream& out, const SentenceCorpus& corpus) {
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    if (i > 0 && corpus.source_ids[i] != corpus.source_ids[i - 1]) out << '\n';
    out << corpus.sentences[i] << '\n';
  }
}

std::vector<std::vector<std::string>> ReadDocuments(std::istream& in) {
  std::vector<std::vector<std::string>> docs(1);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) {
      if (!docs.back().empty()) docs.emplace_back();
      continue;
    }
    docs.back().push_back(line);
  }
  if (docs.back().empty()) docs.pop_back();
  return docs;
}

}  // namespace arapipe::corpus
