#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "arapipe/error.h"
#include "arapipe/rng.h"
#include "arapipe/subword.h"
#include "arapipe/utf8.h"

namespace arapipe::subword {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Floor for expected counts in the M-step; keeps log-probs finite.
constexpr double kMinExpectedCount = 1e-300;
// Pretokens per E-step work block. Fixed so that results never depend on the
// number of worker threads.
constexpr std::size_t kBlockSize = 512;

double LogAddExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

struct Model {
  std::vector<std::string> texts;
  std::vector<double> log_probs;
  std::vector<bool> is_char;

  std::size_t size() const { return texts.size(); }
};

using StringIndex = std::unordered_map<std::string_view, std::uint32_t>;

StringIndex IndexOf(const Model& model) {
  StringIndex index;
  index.reserve(model.size() * 2);
  for (std::uint32_t i = 0; i < model.size(); ++i) index.emplace(model.texts[i], i);
  return index;
}

/// Every (start, end, piece) edge of every pretoken, pretokens contiguous.
struct Lattices {
  struct Edge {
    std::uint32_t start;
    std::uint32_t end;
    std::uint32_t piece;
  };
  std::vector<Edge> edges;
  std::vector<std::size_t> offsets;  // pretoken k owns edges [offsets[k], offsets[k+1])
  std::vector<std::uint32_t> lengths;
};

Lattices BuildLattices(const PretokenCounts& counts, const Model& model, std::size_t max_len) {
  const StringIndex index = IndexOf(model);
  Lattices lat;
  lat.offsets.push_back(0);
  for (const std::string& pretoken : counts.pretokens) {
    const auto bounds = utf8::Boundaries(pretoken);
    const std::size_t n = bounds.size() - 1;
    const std::string_view view(pretoken);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t len = 1; len <= max_len && i + len <= n; ++len) {
        auto it = index.find(view.substr(bounds[i], bounds[i + len] - bounds[i]));
        if (it == index.end()) continue;
        lat.edges.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + len), it->second});
      }
    }
    lat.offsets.push_back(lat.edges.size());
    lat.lengths.push_back(static_cast<std::uint32_t>(n));
  }
  return lat;
}

struct EStepResult {
  double log_likelihood = 0.0;
  std::vector<double> expected;  // per model piece
};

template <typename Fn>
void ParallelBlocks(std::size_t items, unsigned threads, Fn&& fn) {
  const std::size_t blocks = (items + kBlockSize - 1) / kBlockSize;
  const auto run_block = [&](std::size_t b) {
    fn(b * kBlockSize, std::min(items, (b + 1) * kBlockSize));
  };
  if (threads <= 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, blocks); ++t) {
    pool.emplace_back([&] {
      for (std::size_t b; (b = next.fetch_add(1)) < blocks;) run_block(b);
    });
  }
  for (auto& th : pool) th.join();
}

/// Forward-backward over each pretoken lattice. Per-edge posteriors are
/// written to disjoint slots in parallel, then reduced in edge order.
EStepResult EStep(const Lattices& lat, const PretokenCounts& counts, const Model& model,
                  unsigned threads) {
  std::vector<double> posterior(lat.edges.size());
  std::vector<double> log_z(counts.pretokens.size());
  ParallelBlocks(counts.pretokens.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> alpha, beta;
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t n = lat.lengths[k];
      alpha.assign(n + 1, kNegInf);
      beta.assign(n + 1, kNegInf);
      alpha[0] = 0.0;
      beta[n] = 0.0;
      const std::size_t e0 = lat.offsets[k], e1 = lat.offsets[k + 1];
      for (std::size_t e = e0; e < e1; ++e) {
        const auto& edge = lat.edges[e];
        alpha[edge.end] = LogAddExp(alpha[edge.end], alpha[edge.start] + model.log_probs[edge.piece]);
      }
      for (std::size_t e = e1; e-- > e0;) {
        const auto& edge = lat.edges[e];
        beta[edge.start] = LogAddExp(beta[edge.start], model.log_probs[edge.piece] + beta[edge.end]);
      }
      const double z = alpha[n];
      log_z[k] = z;
      for (std::size_t e = e0; e < e1; ++e) {
        const auto& edge = lat.edges[e];
        posterior[e] = z == kNegInf
                           ? 0.0
                           : std::exp(alpha[edge.start] + model.log_probs[edge.piece] + beta[edge.end] - z);
      }
    }
  });
  EStepResult result;
  result.expected.assign(model.size(), 0.0);
  for (std::size_t k = 0; k < counts.pretokens.size(); ++k) {
    const double c = counts.counts[k];
    result.log_likelihood += c * log_z[k];
    for (std::size_t e = lat.offsets[k]; e < lat.offsets[k + 1]; ++e) {
      result.expected[lat.edges[e].piece] += c * posterior[e];
    }
  }
  return result;
}

void MStep(Model& model, const std::vector<double>& expected) {
  double total = 0.0;
  for (double c : expected) total += std::max(c, kMinExpectedCount);
  const double log_total = std::log(total);
  for (std::size_t i = 0; i < model.size(); ++i) {
    model.log_probs[i] = std::log(std::max(expected[i], kMinExpectedCount)) - log_total;
  }
}

void Renormalize(Model& model) {
  double log_sum = kNegInf;
  for (double lp : model.log_probs) log_sum = LogAddExp(log_sum, lp);
  for (double& lp : model.log_probs) lp -= log_sum;
}

/// Best segmentation of model piece `self` with that piece disallowed.
std::vector<std::uint32_t> Alternatives(const Model& model, const StringIndex& index,
                                        std::uint32_t self, std::size_t max_len) {
  const std::string_view text = model.texts[self];
  const auto bounds = utf8::Boundaries(text);
  const std::size_t n = bounds.size() - 1;
  std::vector<double> score(n + 1, kNegInf);
  std::vector<std::uint32_t> piece(n + 1), next(n + 1);
  score[n] = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t len = 1; len <= max_len && i + len <= n; ++len) {
      if (score[i + len] == kNegInf) continue;
      auto it = index.find(text.substr(bounds[i], bounds[i + len] - bounds[i]));
      if (it == index.end() || it->second == self) continue;
      const double s = model.log_probs[it->second] + score[i + len];
      if (s > score[i]) {
        score[i] = s;
        piece[i] = it->second;
        next[i] = static_cast<std::uint32_t>(i + len);
      }
    }
  }
  std::vector<std::uint32_t> out;
  if (score[0] == kNegInf) return out;
  for (std::size_t i = 0; i < n; i = next[i]) out.push_back(piece[i]);
  return out;
}

/// Drops the pieces whose removal costs the least likelihood, keeping every
/// single character. `expected` are EM expected counts under `model`.
Model Prune(const Model& model, const std::vector<double>& expected, std::size_t new_size,
            std::size_t max_len) {
  const StringIndex index = IndexOf(model);
  double sum = 0.0;
  for (double c : expected) sum += c;
  const double log_sum = std::log(sum);

  std::vector<std::pair<double, std::uint32_t>> candidates;
  std::vector<std::uint32_t> keep;
  for (std::uint32_t i = 0; i < model.size(); ++i) {
    if (model.is_char[i]) {
      keep.push_back(i);
      continue;
    }
    const double freq = expected[i];
    double loss = 0.0;
    if (freq > 0.0) {
      const auto alts = Alternatives(model, index, i, max_len);
      if (alts.empty()) {
        loss = std::numeric_limits<double>::infinity();
      } else {
        const double log_prob_piece = std::log(freq) - log_sum;
        const double log_sum_alt = std::log(sum + freq * static_cast<double>(alts.size() - 1));
        double log_prob_alt = 0.0;
        for (std::uint32_t a : alts) log_prob_alt += std::log(expected[a] + freq) - log_sum_alt;
        loss = freq * (log_prob_piece - log_prob_alt);
      }
    }
    candidates.emplace_back(loss, i);
  }
  std::sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return model.texts[a.second] < model.texts[b.second];
  });
  const std::size_t room = new_size > keep.size() ? new_size - keep.size() : 0;
  for (std::size_t j = 0; j < std::min(room, candidates.size()); ++j) keep.push_back(candidates[j].second);
  std::sort(keep.begin(), keep.end());

  Model out;
  for (std::uint32_t i : keep) {
    out.texts.push_back(model.texts[i]);
    out.log_probs.push_back(model.log_probs[i]);
    out.is_char.push_back(model.is_char[i]);
  }
  Renormalize(out);
  return out;
}

std::vector<std::string> SampleSentences(const std::vector<std::string>& sentences,
                                         std::size_t limit, std::uint64_t seed) {
  if (limit == 0 || sentences.size() <= limit) return sentences;
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(seed, 0, 0);
  rng.Shuffle(std::span<std::size_t>(order));
  order.resize(limit);
  std::sort(order.begin(), order.end());
  std::vector<std::string> out;
  out.reserve(limit);
  for (std::size_t i : order) out.push_back(sentences[i]);
  return out;
}

/// Characters covering `coverage` of all character occurrences, most
/// frequent first (ties by code point).
std::map<char32_t, double> CoveredChars(const PretokenCounts& counts, double coverage) {
  std::map<char32_t, double> freq;
  double total = 0.0;
  for (std::size_t k = 0; k < counts.pretokens.size(); ++k) {
    for (char32_t cp : utf8::Decode(counts.pretokens[k])) {
      freq[cp] += counts.counts[k];
      total += counts.counts[k];
    }
  }
  if (coverage >= 1.0) return freq;
  std::vector<std::pair<double, char32_t>> sorted;
  for (auto [cp, f] : freq) sorted.emplace_back(f, cp);
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::map<char32_t, double> kept;
  double acc = 0.0;
  for (auto [f, cp] : sorted) {
    if (acc >= coverage * total) break;
    kept[cp] = f;
    acc += f;
  }
  return kept;
}

Model SeedModel(const PretokenCounts& counts, const std::map<char32_t, double>& chars,
                const VocabConfig& config) {
  std::unordered_map<std::string, double> substrings;
  for (std::size_t k = 0; k < counts.pretokens.size(); ++k) {
    const std::string_view view(counts.pretokens[k]);
    const auto bounds = utf8::Boundaries(view);
    const std::size_t n = bounds.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t len = 2; len <= config.seed_max_piece_len && i + len <= n; ++len) {
        substrings[std::string(view.substr(bounds[i], bounds[i + len] - bounds[i]))] += counts.counts[k];
      }
    }
  }
  const std::size_t learned = config.LearnedSize();
  std::vector<std::pair<std::string, double>> multi;
  for (double floor : {static_cast<double>(config.seed_min_count), 1.0}) {
    multi.clear();
    for (const auto& [text, c] : substrings) {
      if (c >= floor) multi.emplace_back(text, c);
    }
    if (chars.size() + multi.size() >= learned) break;
  }
  if (chars.size() + multi.size() < learned) {
    throw UsageError("corpus too small: only " + std::to_string(chars.size() + multi.size()) +
                     " candidate pieces for " + std::to_string(learned) + " learned slots");
  }
  if (chars.size() + multi.size() > config.seed_size_cap) {
    std::sort(multi.begin(), multi.end(), [](const auto& a, const auto& b) {
      const double sa = a.second * static_cast<double>(utf8::CodePointCount(a.first));
      const double sb = b.second * static_cast<double>(utf8::CodePointCount(b.first));
      return sa != sb ? sa > sb : a.first < b.first;
    });
    multi.resize(std::max(learned, config.seed_size_cap) - chars.size());
  }

  std::vector<std::pair<std::string, double>> all(multi.begin(), multi.end());
  for (auto [cp, f] : chars) all.emplace_back(utf8::Encode(std::u32string(1, cp)), f);
  std::sort(all.begin(), all.end());
  double total = 0.0;
  for (const auto& [text, c] : all) total += c;
  Model model;
  for (const auto& [text, c] : all) {
    model.texts.push_back(text);
    model.log_probs.push_back(std::log(c) - std::log(total));
    model.is_char.push_back(utf8::CodePointCount(text) == 1);
  }
  return model;
}

}  // namespace

PretokenCounts CountPretokens(const std::vector<std::string>& sentences) {
  std::unordered_map<std::string, double> table;
  std::string pretoken;
  for (const auto& sentence : sentences) {
    for (const auto token : utf8::SplitWhitespace(sentence)) {
      pretoken.assign(kWordBoundary);
      pretoken += token;
      table[pretoken] += 1.0;
    }
  }
  std::vector<std::pair<std::string, double>> sorted(table.begin(), table.end());
  std::sort(sorted.begin(), sorted.end());
  PretokenCounts out;
  for (auto& [text, c] : sorted) {
    out.pretokens.push_back(std::move(text));
    out.counts.push_back(c);
  }
  return out;
}

double CorpusLogLikelihood(const PretokenCounts& counts, const std::vector<Piece>& pieces) {
  Model model;
  std::size_t max_len = 1;
  for (const auto& p : pieces) {
    model.texts.push_back(p.text);
    model.log_probs.push_back(p.log_prob);
    model.is_char.push_back(utf8::CodePointCount(p.text) == 1);
    max_len = std::max(max_len, utf8::CodePointCount(p.text));
  }
  const Lattices lat = BuildLattices(counts, model, max_len);
  return EStep(lat, counts, model, 1).log_likelihood;
}

Vocabulary TrainVocab(const std::vector<std::string>& sentences, const VocabConfig& config,
                      std::uint64_t seed, const TrainOptions& options) {
  config.Validate();
  const auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };
  PretokenCounts counts = CountPretokens(SampleSentences(sentences, config.max_training_sentences, seed));
  if (counts.pretokens.empty()) throw UsageError("training corpus is empty");

  const auto chars = CoveredChars(counts, config.min_char_coverage);
  const std::size_t learned = config.LearnedSize();
  if (chars.size() > learned) {
    throw UsageError("corpus charset (" + std::to_string(chars.size()) +
                     " characters) exceeds the learned budget of " + std::to_string(learned));
  }
  if (config.min_char_coverage < 1.0) {
    // Pretokens with uncovered characters would have no segmentation.
    PretokenCounts filtered;
    for (std::size_t k = 0; k < counts.pretokens.size(); ++k) {
      const auto cps = utf8::Decode(counts.pretokens[k]);
      if (std::all_of(cps.begin(), cps.end(), [&](char32_t c) { return chars.count(c) > 0; })) {
        filtered.pretokens.push_back(counts.pretokens[k]);
        filtered.counts.push_back(counts.counts[k]);
      }
    }
    counts = std::move(filtered);
  }

  Model model = SeedModel(counts, chars, config);
  log("seed inventory: " + std::to_string(model.size()) + " pieces");
  const std::size_t max_len = config.seed_max_piece_len;

  for (;;) {
    const Lattices lat = BuildLattices(counts, model, max_len);
    TrainingRound round;
    round.inventory_size = model.size();
    for (std::size_t it = 0; it < config.em_iters_per_round; ++it) {
      const EStepResult e = EStep(lat, counts, model, options.threads);
      round.log_likelihoods.push_back(e.log_likelihood);
      MStep(model, e.expected);
    }
    if (model.size() <= learned) {
      if (options.trace) options.trace->rounds.push_back(std::move(round));
      break;
    }
    const EStepResult e = EStep(lat, counts, model, options.threads);
    round.log_likelihoods.push_back(e.log_likelihood);
    if (options.trace) options.trace->rounds.push_back(std::move(round));
    const auto shrunk = static_cast<std::size_t>(static_cast<double>(model.size()) * config.prune_keep_ratio);
    const std::size_t new_size = std::max(learned, std::min(shrunk, model.size() - 1));
    model = Prune(model, e.expected, new_size, max_len);
    log("pruned to " + std::to_string(model.size()) + " pieces, log-likelihood " +
        std::to_string(e.log_likelihood));
  }

  std::vector<std::uint32_t> order(model.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (model.log_probs[a] != model.log_probs[b]) return model.log_probs[a] > model.log_probs[b];
    return model.texts[a] < model.texts[b];
  });

  std::vector<Piece> pieces;
  pieces.reserve(config.target_size);
  for (const auto& s : config.specials) pieces.push_back({s, 0.0});
  for (std::size_t u = 0; u < config.unused_count; ++u) {
    pieces.push_back({"[unused" + std::to_string(u) + "]", 0.0});
  }
  for (std::uint32_t i : order) {
    // A learned piece must never read back as part of the control block.
    const double lp = std::min(model.log_probs[i], -std::numeric_limits<double>::min());
    pieces.push_back({model.texts[i], lp});
  }
  if (pieces.size() != config.target_size) {
    throw InvariantError("vocabulary has " + std::to_string(pieces.size()) + " pieces, expected " +
                         std::to_string(config.target_size));
  }
  return Vocabulary(std::move(pieces));
}

}  // namespace arapipe::subword
