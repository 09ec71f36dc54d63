// tests/support/metric_fixtures.h
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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "aac/caption_metrics.h"

namespace aac::testing {

inline EvalPair pair_of(const std::string& cand, std::vector<std::string> refs) {
  EvalPair p{tokenize_caption(cand), {}};
  for (const auto& r : refs) p.references.push_back(tokenize_caption(r));
  return p;
}

struct MetricFixture {
  std::string name;
  double value;
  double expected;
};

// Hand-derived values, each with its arithmetic spelled out.
inline std::vector<MetricFixture> metric_fixtures() {
  std::vector<MetricFixture> f;
  {
    // "the" appears at most once in the reference: 1 clipped match of 4, c=4 > r=2.
    std::vector<EvalPair> c{pair_of("the the the the", {"the cat"})};
    f.push_back({"bleu1 clipped repeat", bleu_n(c, 1), 0.25});
  }
  {
    // precision 2/2, BP = exp(1 - 4/2)
    std::vector<EvalPair> c{pair_of("a b", {"a b c d"})};
    f.push_back({"bleu1 brevity", bleu_n(c, 1), std::exp(-1.0)});
  }
  {
    // LCS("a b c d", "a c b d") = 3, P = R = 3/4
    f.push_back({"rouge_l transposition", rouge_l(pair_of("a b c d", {"a c b d"})), 0.75});
  }
  // m=1, one chunk: Fmean 1, penalty 0.5
  f.push_back({"meteor single word", meteor_lite(pair_of("dog", {"dog"})), 0.5});
  f.push_back({"meteor three words", meteor_lite(pair_of("the cat sat", {"the cat sat"})),
               1.0 - 0.5 / 27.0});
  {
    std::vector<EvalPair> c{pair_of("a dog barks at the mailman", {"a dog barks at the mailman"})};
    f.push_back({"cider self match", cider(c).corpus, 10.0});
    f.push_back({"spider_lite self match", spider_lite(c), 5.0});
  }
  {
    std::vector<EvalPair> c{pair_of("birds sing", {"a car passes by"}),
                            pair_of("rain falls", {"water drips on metal"})};
    f.push_back({"cider no overlap", cider(c).corpus, 0.0});
  }
  {
    std::vector<EvalPair> c{pair_of("a dog", {"a dog barks"}), pair_of("a cat", {"a cat meows"})};
    CiderStats stats(c, 4);
    f.push_back({"cider shared word idf", stats.idf({"a"}), 0.0});
    f.push_back({"cider unique word idf", stats.idf({"dog"}), std::log(2.0)});
  }
  return f;
}

// Corpora over a small vocabulary so n-gram collisions are common.
// Candidates have min_len..max_len tokens (0 allowed), references at least 1.
inline std::vector<EvalPair> random_corpus(std::mt19937_64& rng, int min_len = 0,
                                           int max_len = 12) {
  static const char* words[] = {"a", "dog", "barks", "the", "car", "passes", "rain", "falls",
                                "loud", "quiet"};
  std::uniform_int_distribution<int> n_pairs(1, 6), n_refs(1, 5), len(min_len, max_len), w(0, 9);
  auto sentence = [&](int at_least) {
    Tokens t;
    const int n = std::max(at_least, len(rng));
    for (int i = 0; i < n; ++i) t.push_back(words[w(rng)]);
    return t;
  };
  std::vector<EvalPair> c(static_cast<std::size_t>(n_pairs(rng)));
  for (auto& p : c) {
    p.candidate = sentence(0);
    const int r = n_refs(rng);
    for (int i = 0; i < r; ++i) p.references.push_back(sentence(1));
  }
  return c;
}

}  // namespace aac::testing
