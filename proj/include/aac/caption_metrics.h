// include/aac/caption_metrics.h
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

#pragma once

#include <array>
#include <map>
#include <span>
#include <vector>

#include "aac/text.h"

namespace aac {

struct EvalPair {
  Tokens candidate;
  std::vector<Tokens> references;  // at least one
};

// Corpus-level BLEU with per-reference clipping and the closest reference
// length (ties to the shorter one) for the brevity penalty. n in 1..4.
double bleu_n(std::span<const EvalPair> corpus, int n);

// LCS F-measure, best over references.
double rouge_l(const EvalPair& pair, double beta = 1.2);

// Exact-match unigram alignment with fragmentation penalty, best over
// references. No stemming or synonyms.
double meteor_lite(const EvalPair& pair);

struct CiderOptions {
  int n_max = 4;
  double sigma = 6.0;
  bool plain = false;  // no clipping, no length penalty
};

// Document frequencies over the reference sets of a corpus.
class CiderStats {
 public:
  CiderStats(std::span<const EvalPair> corpus, int n_max);
  // log(N) - log(max(1, df)); 1 for every n-gram when N == 1.
  double idf(const Tokens& ngram) const;
  std::size_t corpus_size() const { return size_; }

 private:
  std::map<Tokens, std::size_t> df_;
  std::size_t size_;
};

struct CiderResult {
  double corpus = 0.0;
  std::vector<double> per_pair;
};

CiderResult cider(std::span<const EvalPair> corpus, const CiderOptions& opt = {});
// CIDEr / 2: the SPIDEr mean with its SPICE term set to zero.
double spider_lite(std::span<const EvalPair> corpus, const CiderOptions& opt = {});

struct PairScores {
  std::array<double, 4> bleu{};
  double rouge_l = 0, meteor_lite = 0, cider = 0, spider_lite = 0;
};

struct ScoreReport {
  std::array<double, 4> bleu{};
  double rouge_l = 0;      // mean over pairs
  double meteor_lite = 0;  // mean over pairs
  double cider = 0;
  double spider_lite = 0;
  std::vector<PairScores> per_pair;  // filled when requested
};

ScoreReport evaluate_corpus(std::span<const EvalPair> pairs, bool per_pair = false,
                            const CiderOptions& opt = {});

}  // namespace aac
