#include "arapipe/metrics.h"

#include <algorithm>
#include <charconv>
#include <istream>
#include <set>

#include "arapipe/utf8.h"

namespace arapipe::metrics {
namespace {

struct Tag {
  char kind = 'O';  // 'O', 'B' or 'I'
  std::string label;
};

Tag ParseTag(const std::string& tag, std::size_t position) {
  if (tag == "O") return {};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') return {tag[0], tag.substr(2)};
  throw FormatError("malformed IOB2 tag '" + tag + "' at position " + std::to_string(position));
}

ClassScore Finish(ClassScore s) {
  s.precision = s.tp + s.fp > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp) : 0.0;
  s.recall = s.tp + s.fn > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

bool IsAnswerPunctuation(char32_t cp) {
  if (cp < 0x80) return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
                        (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  switch (cp) {
    case 0x00A1: case 0x00AB: case 0x00B7: case 0x00BB: case 0x00BF:
    case 0x060C: case 0x061B: case 0x061E: case 0x061F: case 0x066A:
    case 0x066B: case 0x066C: case 0x066D: case 0x06D4:
      return true;
    default:
      return (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
             (cp >= 0x3000 && cp <= 0x303F && cp != 0x3000);
  }
}

std::vector<std::string> AnswerTokens(std::string_view text) {
  const std::string normalized = NormalizeAnswer(text);
  std::vector<std::string> out;
  for (auto t : utf8::SplitWhitespace(normalized)) out.emplace_back(t);
  return out;
}

double TokenF1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() || gold.empty()) return pred.empty() && gold.empty() ? 1.0 : 0.0;
  std::map<std::string, std::size_t> gold_counts;
  for (const auto& t : gold) ++gold_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : pred) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(pred.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(gold.size());
  return 2.0 * p * r / (p + r);
}

std::set<std::size_t> SentencesOf(const Answer& a, const QaInstance& inst, std::size_t context_len) {
  const std::size_t len = utf8::CodePointCount(a.text);
  if (a.char_start > context_len || len > context_len - a.char_start) {
    throw FormatError("answer span [" + std::to_string(a.char_start) + ", " + std::to_string(a.char_start + len) +
                      ") lies outside the context of length " + std::to_string(context_len));
  }
  const std::size_t begin = a.char_start;
  const std::size_t end = std::max(a.char_start + len, a.char_start + 1);
  std::set<std::size_t> out;
  for (std::size_t s = 0; s < inst.sentence_bounds.size(); ++s) {
    const auto& b = inst.sentence_bounds[s];
    if (b.begin < end && b.end > begin) out.insert(s);
  }
  return out;
}

std::size_t ParseOffset(std::string_view field, std::size_t line_no) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw FormatError("line " + std::to_string(line_no) + ": bad character offset '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::vector<EntitySpan> ExtractEntities(const std::vector<std::string>& tags) {
  std::vector<EntitySpan> out;
  bool open = false;
  EntitySpan current;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const Tag tag = ParseTag(tags[i], i);
    if (tag.kind == 'I' && open && current.label == tag.label) {
      current.end = i;
      continue;
    }
    if (open) out.push_back(current);
    open = tag.kind != 'O';
    if (open) current = {tag.label, i, i};
  }
  if (open) out.push_back(current);
  return out;
}

std::vector<std::string> RenderTags(const std::vector<EntitySpan>& spans, std::size_t length) {
  std::vector<std::string> tags(length, "O");
  for (const auto& s : spans) {
    if (s.start > s.end || s.end >= length) throw FormatError("entity span outside the sentence");
    tags[s.start] = "B-" + s.label;
    for (std::size_t i = s.start + 1; i <= s.end; ++i) tags[i] = "I-" + s.label;
  }
  return tags;
}

NerReport NerMacroF1(const std::vector<std::vector<std::string>>& pred_tags,
                     const std::vector<std::vector<std::string>>& gold_tags, NerLevel level,
                     MacroAverage average) {
  if (pred_tags.size() != gold_tags.size()) {
    throw FormatError("NER: " + std::to_string(pred_tags.size()) + " predicted sentences for " +
                      std::to_string(gold_tags.size()) + " gold sentences");
  }
  std::map<std::string, ClassScore> counts;
  for (std::size_t s = 0; s < gold_tags.size(); ++s) {
    const auto& pred = pred_tags[s];
    const auto& gold = gold_tags[s];
    if (pred.size() != gold.size()) {
      throw FormatError("NER: sentence " + std::to_string(s) + " has " + std::to_string(pred.size()) +
                        " predicted tags for " + std::to_string(gold.size()) + " gold tags");
    }
    if (level == NerLevel::kEntity) {
      const auto p = ExtractEntities(pred);
      const auto g = ExtractEntities(gold);
      const std::set<EntitySpan> gold_set(g.begin(), g.end());
      for (const auto& e : p) {
        if (gold_set.count(e)) ++counts[e.label].tp;
        else ++counts[e.label].fp;
      }
      const std::set<EntitySpan> pred_set(p.begin(), p.end());
      for (const auto& e : g) {
        if (!pred_set.count(e)) ++counts[e.label].fn;
      }
    } else {
      for (std::size_t i = 0; i < gold.size(); ++i) {
        const Tag p = ParseTag(pred[i], i);
        const Tag g = ParseTag(gold[i], i);
        if (p.kind != 'O' && g.kind != 'O' && p.label == g.label) {
          ++counts[g.label].tp;
          continue;
        }
        if (p.kind != 'O') ++counts[p.label].fp;
        if (g.kind != 'O') ++counts[g.label].fn;
      }
    }
  }

  NerReport report;
  ClassScore total;
  double f1_sum = 0.0;
  std::size_t averaged = 0;
  for (const auto& [label, c] : counts) {
    const ClassScore s = Finish(c);
    report.per_class[label] = s;
    total.tp += s.tp, total.fp += s.fp, total.fn += s.fn;
    const bool in_gold = s.tp + s.fn > 0;
    if (in_gold || average == MacroAverage::kAllClasses) {
      f1_sum += s.f1;
      ++averaged;
    }
  }
  const bool nothing = total.tp + total.fp + total.fn == 0;
  report.macro_f1 = averaged > 0 ? f1_sum / static_cast<double>(averaged) : (nothing ? 1.0 : 0.0);
  report.micro_f1 = nothing ? 1.0 : Finish(total).f1;
  return report;
}

std::vector<std::vector<std::string>> ReadConllTags(std::istream& in,
                                                    std::vector<std::vector<std::string>>* tokens) {
  std::vector<std::vector<std::string>> tags(1);
  std::vector<std::vector<std::string>> words(1);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      if (!tags.back().empty()) {
        tags.emplace_back();
        words.emplace_back();
      }
      continue;
    }
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw FormatError("line " + std::to_string(line_no) + ": expected token<TAB>tag");
    }
    words.back().push_back(line.substr(0, tab));
    tags.back().push_back(line.substr(tab + 1));
  }
  if (tags.back().empty()) {
    tags.pop_back();
    words.pop_back();
  }
  if (tokens) *tokens = std::move(words);
  return tags;
}

std::string NormalizeAnswer(std::string_view text) {
  std::u32string out;
  bool pending_space = false;
  for (char32_t cp : utf8::Decode(text)) {
    if (utf8::IsSpace(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (IsAnswerPunctuation(cp) || utf8::IsArabicDiacritic(cp) || cp == 0x0670 || cp == utf8::kTatweel) continue;
    if (cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(cp);
  }
  return utf8::Encode(out);
}

bool QaExactMatch(std::string_view pred, const std::vector<std::string>& golds) {
  if (golds.empty()) throw FormatError("exact match needs at least one gold answer");
  const std::string p = NormalizeAnswer(pred);
  return std::any_of(golds.begin(), golds.end(), [&](const std::string& g) { return NormalizeAnswer(g) == p; });
}

double QaF1(std::string_view pred, const std::vector<std::string>& golds) {
  if (golds.empty()) throw FormatError("F1 needs at least one gold answer");
  const auto p = AnswerTokens(pred);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, TokenF1(p, AnswerTokens(g)));
  return best;
}

QaInstance QaInstance::WithSentences(std::string context, std::vector<Answer> golds, Answer prediction) {
  QaInstance inst;
  inst.sentence_bounds = corpus::SentencePartition(context);
  inst.context = std::move(context);
  inst.gold_answers = std::move(golds);
  inst.prediction = std::move(prediction);
  return inst;
}

bool SentenceMatch(const QaInstance& instance) {
  const std::size_t len = utf8::CodePointCount(instance.context);
  const auto pred = SentencesOf(instance.prediction, instance, len);
  for (const auto& g : instance.gold_answers) {
    const auto gold = SentencesOf(g, instance, len);
    for (std::size_t s : pred) {
      if (gold.count(s)) return true;
    }
  }
  return false;
}

std::vector<QaRecord> ReadQaRecords(std::istream& in) {
  std::vector<QaRecord> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw FormatError("line " + std::to_string(line_no) + ": expected id<TAB>char_start<TAB>text");
    }
    QaRecord rec;
    rec.id = line.substr(0, t1);
    rec.answer.char_start = ParseOffset(std::string_view(line).substr(t1 + 1, t2 - t1 - 1), line_no);
    rec.answer.text = line.substr(t2 + 1);
    utf8::Validate(rec.answer.text);
    out.push_back(std::move(rec));
  }
  return out;
}

std::map<std::string, std::string> ReadQaContexts(std::istream& in) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("line " + std::to_string(line_no) + ": expected id<TAB>context");
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

QaReport EvaluateQa(const std::vector<QaRecord>& preds, const std::vector<QaRecord>& golds,
                    const std::map<std::string, std::string>& contexts) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Answer>> gold_by_id;
  for (const auto& g : golds) {
    auto [it, inserted] = gold_by_id.try_emplace(g.id);
    if (inserted) order.push_back(g.id);
    it->second.push_back(g.answer);
  }
  std::map<std::string, Answer> pred_by_id;
  for (const auto& p : preds) {
    if (!pred_by_id.emplace(p.id, p.answer).second) throw FormatError("duplicate prediction for id " + p.id);
  }
  QaReport report;
  double em = 0.0, f1 = 0.0, sm = 0.0;
  for (const auto& id : order) {
    ++report.count;
    const auto& gold_answers = gold_by_id[id];
    const auto ctx = contexts.find(id);
    if (ctx != contexts.end()) ++report.sentence_count;
    const auto pred = pred_by_id.find(id);
    if (pred == pred_by_id.end()) continue;
    std::vector<std::string> texts;
    for (const auto& a : gold_answers) texts.push_back(a.text);
    em += QaExactMatch(pred->second.text, texts);
    f1 += QaF1(pred->second.text, texts);
    if (ctx != contexts.end()) {
      sm += SentenceMatch(QaInstance::WithSentences(ctx->second, gold_answers, pred->second));
    }
  }
  if (report.count > 0) {
    report.exact_match = em / static_cast<double>(report.count);
    report.f1 = f1 / static_cast<double>(report.count);
  }
  if (report.sentence_count > 0) report.sentence_match = sm / static_cast<double>(report.sentence_count);
  return report;
}

}  // namespace arapipe::metrics
