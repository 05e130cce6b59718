#include "arapipe/segmenter.h"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "arapipe/error.h"
#include "arapipe/utf8.h"

namespace arapipe::seg {
namespace {

constexpr int kNoMorePrefixes = 4;

// Letters that can open an imperfect verb after the future marker.
bool OpensImperfect(char32_t cp) {
  return cp == 0x064A || cp == 0x062A || cp == 0x0646 || cp == 0x0623 || cp == 0x0627;
}

int NextSlotAfter(PrefixSlot slot) {
  switch (slot) {
    case PrefixSlot::kConjunction: return 1;
    case PrefixSlot::kPreposition: return static_cast<int>(PrefixSlot::kArticle);
    case PrefixSlot::kFuture:
    case PrefixSlot::kArticle: return kNoMorePrefixes;
  }
  return kNoMorePrefixes;
}

const char* SlotName(PrefixSlot slot) {
  switch (slot) {
    case PrefixSlot::kConjunction: return "conj";
    case PrefixSlot::kPreposition: return "prep";
    case PrefixSlot::kFuture: return "future";
    case PrefixSlot::kArticle: return "article";
  }
  return "prep";
}

bool StartsWith(const std::u32string& s, std::size_t pos, const std::u32string& affix) {
  return s.size() - pos >= affix.size() && std::equal(affix.begin(), affix.end(), s.begin() + pos);
}

bool EndsWith(const std::u32string& s, const std::u32string& affix) {
  return s.size() >= affix.size() && std::equal(affix.rbegin(), affix.rend(), s.rbegin());
}

bool IsPrefixToken(std::string_view t) { return t.size() > 1 && t.back() == '+'; }
bool IsSuffixToken(std::string_view t) { return t.size() > 1 && t.front() == '+'; }

}  // namespace

const RuleTable& RuleTable::Builtin() {
  // Transliterated: Al, w, f, b, k, l, s / hmA, kmA, At, An, wn, yn, hA, hm,
  // hn, km, kn, nA, tm, tn, T, h, k, y.
  static const RuleTable table = [] {
    RuleTable t;
    t.prefix_rules = {
        {"ال", PrefixSlot::kArticle, 2},
        {"و", PrefixSlot::kConjunction, 3},
        {"ف", PrefixSlot::kConjunction, 3},
        {"ب", PrefixSlot::kPreposition, 4},
        {"ك", PrefixSlot::kPreposition, 4},
        {"ل", PrefixSlot::kPreposition, 4},
        {"س", PrefixSlot::kFuture, 3},
    };
    t.suffix_rules = {
        {"هما", 2}, {"كما", 2},
        {"ات", 3}, {"ان", 3}, {"ون", 3}, {"ين", 3},
        {"ها", 2}, {"هم", 2}, {"هن", 2}, {"كم", 2}, {"كن", 2}, {"نا", 2}, {"تم", 2}, {"تن", 2},
        {"ة", 2}, {"ه", 2}, {"ك", 2}, {"ي", 2},
    };
    return t;
  }();
  return table;
}

RuleTable RuleTable::Parse(std::string_view text) {
  RuleTable table;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& why) {
    return FormatError("rule file line " + std::to_string(line_no) + ": " + why);
  };
  const auto parse_int = [&](std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v < 0) throw fail("bad number '" + std::string(s) + "'");
    return v;
  };
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto fields = utf8::SplitWhitespace(line);
    if (fields.empty()) continue;
    if (fields.size() < 2) throw fail("expected '<P|S> <affix>'");
    const std::string affix(fields[1]);
    utf8::Validate(affix);
    if (affix.find('+') != std::string::npos) throw fail("affix must not contain '+'");
    if (fields[0] == "P") {
      if (fields.size() > 4) throw fail("too many fields");
      PrefixRule rule{affix, PrefixSlot::kPreposition, 2};
      if (fields.size() >= 3) {
        const std::string_view slot = fields[2];
        if (slot == "conj") rule.slot = PrefixSlot::kConjunction;
        else if (slot == "prep") rule.slot = PrefixSlot::kPreposition;
        else if (slot == "future") rule.slot = PrefixSlot::kFuture;
        else if (slot == "article") rule.slot = PrefixSlot::kArticle;
        else throw fail("unknown prefix slot '" + std::string(slot) + "'");
      }
      if (fields.size() == 4) rule.min_rest = parse_int(fields[3]);
      table.prefix_rules.push_back(std::move(rule));
    } else if (fields[0] == "S") {
      if (fields.size() > 3) throw fail("too many fields");
      SuffixRule rule{affix, kMinStemLetters};
      if (fields.size() == 3) rule.min_stem = parse_int(fields[2]);
      table.suffix_rules.push_back(std::move(rule));
    } else {
      throw fail("unknown rule kind '" + std::string(fields[0]) + "'");
    }
  }
  return table;
}

std::string RuleTable::ToText() const {
  std::string out;
  for (const auto& r : prefix_rules) {
    out += "P " + r.affix + " " + SlotName(r.slot) + " " + std::to_string(r.min_rest) + "\n";
  }
  for (const auto& r : suffix_rules) {
    out += "S " + r.affix + " " + std::to_string(r.min_stem) + "\n";
  }
  return out;
}

std::string SegmentedWord::Render() const {
  std::string out;
  for (const auto& p : prefixes) {
    out += p;
    out += "+ ";
  }
  out += stem;
  for (const auto& s : suffixes) {
    out += " +";
    out += s;
  }
  return out;
}

std::string SegmentedWord::Surface() const {
  std::string out;
  for (const auto& p : prefixes) out += p;
  out += stem;
  for (const auto& s : suffixes) out += s;
  return out;
}

SegmentedWord SegmentWord(std::string_view word, const RuleTable& rules) {
  SegmentedWord result;
  result.stem = std::string(word);
  if (word.find('+') != std::string_view::npos) return result;

  const std::u32string cps = utf8::Decode(word);
  if (std::any_of(cps.begin(), cps.end(),
                  [](char32_t c) { return utf8::IsAsciiAlnum(c) || utf8::IsSpace(c); })) {
    return result;
  }
  std::size_t core_begin = 0;
  while (core_begin < cps.size() && !utf8::IsArabicLetter(cps[core_begin])) ++core_begin;
  std::size_t core_end = cps.size();
  while (core_end > core_begin && !utf8::IsArabicLetter(cps[core_end - 1])) --core_end;
  const std::u32string core = cps.substr(core_begin, core_end - core_begin);
  if (core.empty() || !std::all_of(core.begin(), core.end(), utf8::IsArabicLetter)) return result;

  std::vector<std::u32string> prefixes;
  std::size_t pos = 0;
  int min_slot = 0;
  while (prefixes.size() < kMaxPrefixes && min_slot < kNoMorePrefixes) {
    bool fired = false;
    for (const auto& rule : rules.prefix_rules) {
      if (static_cast<int>(rule.slot) < min_slot) continue;
      const std::u32string affix = utf8::Decode(rule.affix);
      if (affix.empty() || !StartsWith(core, pos, affix)) continue;
      const std::size_t rest = core.size() - pos - affix.size();
      if (rest < static_cast<std::size_t>(std::max(rule.min_rest, kMinStemLetters))) continue;
      if (rule.slot == PrefixSlot::kFuture && !OpensImperfect(core[pos + affix.size()])) continue;
      prefixes.push_back(affix);
      pos += affix.size();
      min_slot = NextSlotAfter(rule.slot);
      fired = true;
      break;
    }
    if (!fired) break;
  }

  std::u32string stem = core.substr(pos);
  std::u32string suffix;
  for (const auto& rule : rules.suffix_rules) {
    const std::u32string affix = utf8::Decode(rule.affix);
    if (affix.empty() || !EndsWith(stem, affix)) continue;
    const std::size_t left = stem.size() - affix.size();
    if (left < static_cast<std::size_t>(std::max(rule.min_stem, kMinStemLetters))) continue;
    suffix = affix;
    stem.resize(left);
    break;
  }

  if (prefixes.empty() && suffix.empty()) return result;

  const std::u32string lead = cps.substr(0, core_begin);
  const std::u32string trail = cps.substr(core_end);
  if (prefixes.empty()) stem = lead + stem;
  else prefixes.front() = lead + prefixes.front();
  if (suffix.empty()) stem += trail;
  else suffix += trail;

  result.prefixes.clear();
  for (const auto& p : prefixes) result.prefixes.push_back(utf8::Encode(p));
  result.stem = utf8::Encode(stem);
  if (!suffix.empty()) result.suffixes.push_back(utf8::Encode(suffix));
  return result;
}

SegmentedText SegmentText(std::string_view text, const RuleTable& rules) {
  SegmentedText out;
  const auto words = utf8::SplitWhitespace(text);
  for (std::size_t w = 0; w < words.size(); ++w) {
    const SegmentedWord sw = SegmentWord(words[w], rules);
    const auto append = [&](const std::string& segment) {
      if (!out.text.empty()) out.text.push_back(' ');
      out.text += segment;
      out.word_map.push_back(w);
    };
    for (const auto& p : sw.prefixes) append(p + "+");
    append(sw.stem);
    for (const auto& s : sw.suffixes) append("+" + s);
  }
  return out;
}

std::vector<std::size_t> MarkerWordMap(const std::vector<std::string_view>& tokens) {
  std::vector<std::size_t> map(tokens.size());
  std::size_t words = 0;
  std::size_t pending = 0;  // prefixes waiting for their stem
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const std::string_view t = tokens[k];
    const bool prefix = IsPrefixToken(t);
    const bool suffix = IsSuffixToken(t);
    if (prefix && suffix) {
      throw FormatError("ambiguous marker token '" + std::string(t) + "' at token " + std::to_string(k));
    }
    if (prefix) {
      if (k + 1 == tokens.size()) {
        throw FormatError("dangling prefix marker at token " + std::to_string(k));
      }
      map[k] = words;
      ++pending;
    } else if (suffix) {
      if (words == 0 || pending > 0) {
        throw FormatError("dangling suffix marker at token " + std::to_string(k));
      }
      map[k] = words - 1;
    } else {
      map[k] = words++;
      pending = 0;
    }
  }
  return map;
}

SegmentedText Passthrough(std::string_view marked_text) {
  const auto tokens = utf8::SplitWhitespace(marked_text);
  SegmentedText out;
  out.word_map = MarkerWordMap(tokens);
  for (const auto t : tokens) {
    if (!out.text.empty()) out.text.push_back(' ');
    out.text += t;
  }
  return out;
}

std::string Desegment(std::string_view marked_text) {
  const auto tokens = utf8::SplitWhitespace(marked_text);
  const auto map = MarkerWordMap(tokens);
  std::string out;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    std::string_view t = tokens[k];
    if (k > 0 && map[k] != map[k - 1]) out.push_back(' ');
    if (IsPrefixToken(t)) t.remove_suffix(1);
    else if (IsSuffixToken(t)) t.remove_prefix(1);
    out += t;
  }
  return out;
}

}  // namespace arapipe::seg
