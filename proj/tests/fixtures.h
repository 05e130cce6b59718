#pragma once

// Hand-built fixtures and synthetic corpora shared by the tests.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace fixture {

struct SegCase {
  const char* word;
  const char* segmented;
};

// Expected outputs derived by hand from the built-in affix table.
inline const std::vector<SegCase>& SegmentationCases() {
  static const std::vector<SegCase> cases = {
      {"اللغة", "ال+ لغ +ة"},
      {"والكتاب", "و+ ال+ كتاب"},
      {"كتاب", "كتاب"},
      {"المدرسة", "ال+ مدرس +ة"},
      {"بالقلم", "ب+ ال+ قلم"},
      {"وبالقلم", "و+ ب+ ال+ قلم"},
      {"سيكتبون", "س+ يكتب +ون"},
      {"سلام", "سلام"},
      {"درسهما", "درس +هما"},
      {"معلمون", "معلم +ون"},
      {"مدرسات", "مدرس +ات"},
      {"قلمان", "قلم +ان"},
      {"بيت", "بيت"},
      {"فهم", "فهم"},
      {"درسنا", "درس +نا"},
      {"ولد", "ولد"},
      {"وقال", "و+ قال"},
      {"الكتاب.", "ال+ كتاب."},
      {"«المكتبة»", "«ال+ مكتب +ة»"},
      {"فسيكتب", "ف+ س+ يكتب"},
  };
  return cases;
}

// Random Arabic-script text: letters, clitic-looking affixes, punctuation,
// digits and Latin tokens.
class TextGenerator {
 public:
  explicit TextGenerator(std::uint64_t seed) : rng_(seed) {}

  std::string Word() {
    static const std::vector<std::string> letters = {
        "ا", "ب", "ت", "ث", "ج", "ح", "خ", "د", "ذ", "ر", "ز", "س", "ش", "ص", "ض", "ط", "ظ", "ع",
        "غ", "ف", "ق", "ك", "ل", "م", "ن", "ه", "و", "ي", "ة", "ى", "أ", "إ", "ء"};
    static const std::vector<std::string> prefixes = {"", "", "ال", "و", "وال", "ب", "بال", "ف", "س", "ك", "ل"};
    static const std::vector<std::string> suffixes = {"", "", "ة", "ات", "ون", "ين", "ها", "هم", "هما", "ي", "ك"};
    static const std::vector<std::string> others = {"2020", "BERT", "x1", "،", "؟", "!", "(", ")", "«", "»",
                                                    "-", "ـ", "a+b", ".", "3.5"};
    const int kind = Pick(20);
    if (kind == 0) return others[Pick(others.size())];
    std::string w;
    if (kind == 1) w += others[3 + Pick(7)];
    w += prefixes[Pick(prefixes.size())];
    const std::size_t len = 1 + Pick(6);
    for (std::size_t i = 0; i < len; ++i) w += letters[Pick(letters.size())];
    w += suffixes[Pick(suffixes.size())];
    if (kind == 2) w += others[3 + Pick(7)];
    return w;
  }

  std::string Sentence(std::size_t min_words, std::size_t max_words) {
    const std::size_t n = min_words + Pick(max_words - min_words + 1);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += ' ';
      s += Word();
    }
    return s;
  }

  std::size_t Pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

 private:
  std::mt19937_64 rng_;
};

// Zipf-distributed pseudo-Arabic language over a fixed random lexicon;
// produces text resembling normalized, segmented news prose.
class ZipfCorpus {
 public:
  ZipfCorpus(std::size_t lexicon_size, std::uint64_t seed) : rng_(seed) {
    static const std::vector<std::string> letters = {
        "ا", "ب", "ت", "ث", "ج", "ح", "خ", "د", "ذ", "ر", "ز", "س", "ش", "ص", "ض", "ط", "ظ", "ع",
        "غ", "ف", "ق", "ك", "ل", "م", "ن", "ه", "و", "ي", "ة", "ى", "أ", "إ", "ء", "آ", "ؤ", "ئ"};
    std::geometric_distribution<int> extra(0.35);
    for (std::size_t i = 0; i < lexicon_size; ++i) {
      std::string w;
      const int len = 2 + std::min(extra(rng_), 9);
      for (int k = 0; k < len; ++k) {
        w += letters[std::uniform_int_distribution<std::size_t>(0, letters.size() - 1)(rng_)];
      }
      lexicon_.push_back(w);
    }
    std::vector<double> weights;
    for (std::size_t r = 1; r <= lexicon_size; ++r) weights.push_back(1.0 / static_cast<double>(r));
    zipf_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  }

  std::string Sentence(std::size_t min_words = 6, std::size_t max_words = 18) {
    static const std::vector<std::string> prefixes = {"ال+", "و+", "ب+", "و+ ال+", "ب+ ال+", "ف+", "س+", "ل+"};
    static const std::vector<std::string> suffixes = {"+ة", "+ات", "+ون", "+ها", "+هم", "+ي"};
    const std::size_t n = std::uniform_int_distribution<std::size_t>(min_words, max_words)(rng_);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += ' ';
      const int r = std::uniform_int_distribution<int>(0, 9)(rng_);
      if (r < 3) s += prefixes[std::uniform_int_distribution<std::size_t>(0, prefixes.size() - 1)(rng_)] + " ";
      s += lexicon_[zipf_(rng_)];
      if (r == 9 || r == 2) s += " " + suffixes[std::uniform_int_distribution<std::size_t>(0, suffixes.size() - 1)(rng_)];
    }
    s += ".";
    return s;
  }

  // Documents of sentences totalling at least `bytes` bytes.
  std::vector<std::vector<std::string>> Documents(std::size_t bytes, std::size_t min_sentences = 3,
                                                  std::size_t max_sentences = 30) {
    std::vector<std::vector<std::string>> docs;
    std::size_t total = 0;
    while (total < bytes) {
      std::vector<std::string> doc;
      const std::size_t n = std::uniform_int_distribution<std::size_t>(min_sentences, max_sentences)(rng_);
      for (std::size_t i = 0; i < n; ++i) {
        doc.push_back(Sentence());
        total += doc.back().size() + 1;
      }
      docs.push_back(std::move(doc));
    }
    return docs;
  }

 private:
  std::mt19937_64 rng_;
  std::vector<std::string> lexicon_;
  std::discrete_distribution<std::size_t> zipf_;
};

inline std::vector<std::string> Flatten(const std::vector<std::vector<std::string>>& docs) {
  std::vector<std::string> out;
  for (const auto& d : docs) out.insert(out.end(), d.begin(), d.end());
  return out;
}

// Three sentences of IOB2 tags. Hand-computed entity-level scores:
//   LOC tp=1 fp=1 fn=1 -> P=R=F1=1/2
//   PER tp=2 fp=1 fn=1 -> P=R=F1=2/3
//   ORG tp=0 fp=1 fn=1 -> 0
//   macro over gold classes = (1/2 + 2/3 + 0) / 3 = 7/18
//   micro: tp=3 fp=3 fn=3 -> 1/2
struct NerFixture {
  std::vector<std::vector<std::string>> gold = {
      {"B-PER", "I-PER", "O", "B-LOC", "O"},
      {"O", "B-ORG", "I-ORG", "I-ORG", "O", "B-PER"},
      {"B-LOC", "O", "B-PER", "I-PER", "I-PER"},
  };
  std::vector<std::vector<std::string>> pred = {
      {"B-PER", "I-PER", "O", "B-LOC", "O"},
      {"O", "B-ORG", "I-ORG", "O", "O", "B-PER"},
      {"B-LOC", "I-LOC", "B-PER", "I-PER", "O"},
  };
};

}  // namespace fixture
