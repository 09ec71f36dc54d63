// src/caption_metrics.cpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "aac/caption_metrics.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "aac/error.h"

namespace aac {

namespace {

using Counts = std::map<Tokens, std::size_t>;

Counts ngram_counts(const Tokens& t, std::size_t n) {
  Counts c;
  for (std::size_t i = 0; i + n <= t.size(); ++i)
    ++c[Tokens(t.begin() + static_cast<std::ptrdiff_t>(i),
               t.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return c;
}

void require_references(const EvalPair& p) {
  if (p.references.empty()) throw InputError("evaluation pair without references");
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double meteor_single(const Tokens& cand, const Tokens& ref) {
  std::vector<bool> used(ref.size(), false);
  std::size_t matches = 0, chunks = 0;
  std::ptrdiff_t last = -2;  // ref position matched by the previous candidate token
  for (const auto& w : cand) {
    std::ptrdiff_t pick = -1;
    const auto next = static_cast<std::size_t>(last + 1);
    if (last >= 0 && next < ref.size() && !used[next] && ref[next] == w) {
      pick = last + 1;
    } else {
      for (std::size_t j = 0; j < ref.size(); ++j)
        if (!used[j] && ref[j] == w) {
          pick = static_cast<std::ptrdiff_t>(j);
          break;
        }
    }
    if (pick < 0) {
      last = -2;
      continue;
    }
    if (pick != last + 1 || last < 0) ++chunks;
    used[static_cast<std::size_t>(pick)] = true;
    ++matches;
    last = pick;
  }
  if (matches == 0) return 0.0;
  const double m = static_cast<double>(matches);
  const double p = m / static_cast<double>(cand.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
  return fmean * (1.0 - penalty);
}

struct CiderVec {
  std::vector<std::map<Tokens, double>> vec;
  std::vector<double> norm;
  double length;
};

CiderVec cider_vector(const Tokens& t, const CiderStats& stats, int n_max) {
  CiderVec v{std::vector<std::map<Tokens, double>>(static_cast<std::size_t>(n_max)),
             std::vector<double>(static_cast<std::size_t>(n_max), 0.0),
             static_cast<double>(t.size())};
  for (int n = 1; n <= n_max; ++n) {
    auto& slot = v.vec[static_cast<std::size_t>(n - 1)];
    double sq = 0.0;
    for (const auto& [g, tf] : ngram_counts(t, static_cast<std::size_t>(n))) {
      const double w = static_cast<double>(tf) * stats.idf(g);
      slot[g] = w;
      sq += w * w;
    }
    v.norm[static_cast<std::size_t>(n - 1)] = std::sqrt(sq);
  }
  return v;
}

double cider_similarity(const CiderVec& c, const CiderVec& r, std::size_t n_index,
                        const CiderOptions& opt) {
  const auto& cv = c.vec[n_index];
  const auto& rv = r.vec[n_index];
  double val = 0.0;
  for (const auto& [g, w] : cv) {
    auto it = rv.find(g);
    if (it == rv.end()) continue;
    val += opt.plain ? w * it->second : std::min(w, it->second) * it->second;
  }
  if (c.norm[n_index] != 0.0 && r.norm[n_index] != 0.0)
    val /= c.norm[n_index] * r.norm[n_index];
  if (!opt.plain) {
    const double delta = c.length - r.length;
    val *= std::exp(-(delta * delta) / (2.0 * opt.sigma * opt.sigma));
  }
  return val;
}

}  // namespace

double bleu_n(std::span<const EvalPair> corpus, int n) {
  if (n < 1 || n > 4) throw InputError("BLEU order must be in 1..4, got " + std::to_string(n));
  std::array<double, 4> clipped{}, total{};
  double cand_len = 0, ref_len = 0;
  for (const auto& pair : corpus) {
    require_references(pair);
    const std::size_t c = pair.candidate.size();
    cand_len += static_cast<double>(c);
    std::size_t best = pair.references.front().size();
    for (const auto& r : pair.references) {
      const auto d = [&](std::size_t len) { return len > c ? len - c : c - len; };
      if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
    }
    ref_len += static_cast<double>(best);
    for (int k = 1; k <= n; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      Counts max_ref;
      for (const auto& r : pair.references)
        for (const auto& [g, cnt] : ngram_counts(r, uk)) max_ref[g] = std::max(max_ref[g], cnt);
      for (const auto& [g, cnt] : ngram_counts(pair.candidate, uk)) {
        auto it = max_ref.find(g);
        clipped[uk - 1] += static_cast<double>(std::min(cnt, it == max_ref.end() ? 0 : it->second));
        total[uk - 1] += static_cast<double>(cnt);
      }
    }
  }
  if (cand_len == 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
    if (clipped[k] == 0.0) return 0.0;
    log_sum += std::log(clipped[k] / total[k]);
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return bp * std::exp(log_sum / n);
}

double rouge_l(const EvalPair& pair, double beta) {
  require_references(pair);
  double best = 0.0;
  if (pair.candidate.empty()) return 0.0;
  for (const auto& r : pair.references) {
    if (r.empty()) continue;
    const double lcs = static_cast<double>(lcs_length(pair.candidate, r));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(pair.candidate.size());
    const double rec = lcs / static_cast<double>(r.size());
    best = std::max(best, (1.0 + beta * beta) * p * rec / (rec + beta * beta * p));
  }
  return best;
}

double meteor_lite(const EvalPair& pair) {
  require_references(pair);
  double best = 0.0;
  for (const auto& r : pair.references) best = std::max(best, meteor_single(pair.candidate, r));
  return best;
}

CiderStats::CiderStats(std::span<const EvalPair> corpus, int n_max) : size_(corpus.size()) {
  if (corpus.empty()) throw InputError("CIDEr needs a nonempty corpus");
  if (n_max < 1) throw InputError("CIDEr n_max must be >= 1");
  for (const auto& pair : corpus) {
    require_references(pair);
    std::set<Tokens> seen;
    for (const auto& r : pair.references)
      for (int n = 1; n <= n_max; ++n)
        for (const auto& kv : ngram_counts(r, static_cast<std::size_t>(n))) seen.insert(kv.first);
    for (const auto& g : seen) ++df_[g];
  }
}

double CiderStats::idf(const Tokens& ngram) const {
  if (size_ == 1) return 1.0;
  auto it = df_.find(ngram);
  const double df = it == df_.end() ? 1.0 : static_cast<double>(it->second);
  return std::log(static_cast<double>(size_)) - std::log(df);
}

CiderResult cider(std::span<const EvalPair> corpus, const CiderOptions& opt) {
  CiderStats stats(corpus, opt.n_max);
  CiderResult out;
  out.per_pair.reserve(corpus.size());
  double sum = 0.0;
  for (const auto& pair : corpus) {
    const auto cv = cider_vector(pair.candidate, stats, opt.n_max);
    std::vector<double> per_n(static_cast<std::size_t>(opt.n_max), 0.0);
    for (const auto& r : pair.references) {
      const auto rv = cider_vector(r, stats, opt.n_max);
      for (std::size_t k = 0; k < per_n.size(); ++k) per_n[k] += cider_similarity(cv, rv, k, opt);
    }
    double mean = 0.0;
    for (double v : per_n) mean += v;
    mean /= static_cast<double>(per_n.size());
    const double score = mean / static_cast<double>(pair.references.size()) * 10.0;
    out.per_pair.push_back(score);
    sum += score;
  }
  out.corpus = sum / static_cast<double>(corpus.size());
  return out;
}

double spider_lite(std::span<const EvalPair> corpus, const CiderOptions& opt) {
  return cider(corpus, opt).corpus / 2.0;
}

ScoreReport evaluate_corpus(std::span<const EvalPair> pairs, bool per_pair,
                            const CiderOptions& opt) {
  if (pairs.empty()) throw InputError("cannot evaluate an empty corpus");
  ScoreReport rep;
  for (int n = 1; n <= 4; ++n) rep.bleu[static_cast<std::size_t>(n - 1)] = bleu_n(pairs, n);
  const auto c = cider(pairs, opt);
  rep.cider = c.corpus;
  rep.spider_lite = c.corpus / 2.0;
  double rl = 0.0, me = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    PairScores ps;
    ps.rouge_l = rouge_l(pairs[i]);
    ps.meteor_lite = meteor_lite(pairs[i]);
    rl += ps.rouge_l;
    me += ps.meteor_lite;
    if (per_pair) {
      for (int n = 1; n <= 4; ++n)
        ps.bleu[static_cast<std::size_t>(n - 1)] = bleu_n(pairs.subspan(i, 1), n);
      ps.cider = c.per_pair[i];
      ps.spider_lite = c.per_pair[i] / 2.0;
      rep.per_pair.push_back(ps);
    }
  }
  rep.rouge_l = rl / static_cast<double>(pairs.size());
  rep.meteor_lite = me / static_cast<double>(pairs.size());
  return rep;
}

}  // namespace aac
