// tests/test_metrics.cpp
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

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "aac/caption_metrics.h"
#include "aac/error.h"
#include "doctest.h"
#include "support/metric_fixtures.h"

using aac::EvalPair;
using aac::Tokens;
using aac::testing::pair_of;

namespace {

// Reference BLEU built on joined-string n-gram keys.
double bleu_oracle(const std::vector<EvalPair>& corpus, int n) {
  double c_len = 0, r_len = 0;
  std::vector<double> hit(n, 0), tot(n, 0);
  auto grams = [](const Tokens& t, int k) {
    std::map<std::string, int> m;
    for (int i = 0; i + k <= static_cast<int>(t.size()); ++i) {
      std::string key;
      for (int j = 0; j < k; ++j) key += t[i + j] + "\x1f";
      ++m[key];
    }
    return m;
  };
  for (const auto& p : corpus) {
    const int c = static_cast<int>(p.candidate.size());
    c_len += c;
    int best = -1;
    for (const auto& r : p.references) {
      const int len = static_cast<int>(r.size());
      if (best < 0 || std::abs(len - c) < std::abs(best - c) ||
          (std::abs(len - c) == std::abs(best - c) && len < best))
        best = len;
    }
    r_len += best;
    for (int k = 1; k <= n; ++k)
      for (const auto& [g, cnt] : grams(p.candidate, k)) {
        int mx = 0;
        for (const auto& r : p.references) {
          auto rg = grams(r, k);
          if (rg.count(g)) mx = std::max(mx, rg[g]);
        }
        hit[k - 1] += std::min(cnt, mx);
        tot[k - 1] += cnt;
      }
  }
  if (c_len == 0) return 0;
  double prod = 1;
  for (int k = 0; k < n; ++k) {
    if (hit[k] == 0) return 0;
    prod *= hit[k] / tot[k];
  }
  return (c_len > r_len ? 1.0 : std::exp(1 - r_len / c_len)) * std::pow(prod, 1.0 / n);
}

// Exponential-time LCS by plain recursion with memo.
std::size_t lcs_oracle(const Tokens& a, const Tokens& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) {
    if (i == a.size() || j == b.size()) return std::size_t{0};
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t v = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
    return memo[key] = v;
  };
  return go(0, 0);
}

}  // namespace

TEST_CASE("tokenizer") {
  CHECK(aac::tokenize_caption("A dog barks.") == Tokens{"a", "dog", "barks"});
  CHECK(aac::tokenize_caption("").empty());
  CHECK(aac::tokenize_caption("Car's engine, revving") == Tokens{"car's", "engine", "revving"});
  CHECK(aac::tokenize_caption("  'Quoted'  (words)!? ") == Tokens{"quoted", "words"});
  CHECK(aac::tokenize_caption("a\tb\nc") == Tokens{"a", "b", "c"});
  const std::string canonical = "a low tone repeats with noise";
  CHECK(aac::detokenize(aac::tokenize_caption(canonical)) == canonical);
}

TEST_CASE("hand-derived metric values") {
  for (const auto& f : aac::testing::metric_fixtures()) {
    CAPTURE(f.name);
    CHECK(std::abs(f.value - f.expected) < 1e-9);
  }
}

TEST_CASE("trivial metric cases") {
  std::vector<EvalPair> same{pair_of("a dog barks at night", {"a cat", "a dog barks at night"})};
  for (int n = 1; n <= 4; ++n) CHECK(aac::bleu_n(same, n) == 1.0);
  CHECK(aac::rouge_l(same[0]) == 1.0);
  auto disjoint = pair_of("x y z", {"a b c"});
  CHECK(aac::rouge_l(disjoint) == 0.0);
  CHECK(aac::meteor_lite(disjoint) == 0.0);
  std::vector<EvalPair> empty_cand{pair_of("", {"a b"})};
  CHECK(aac::bleu_n(empty_cand, 1) == 0.0);
  CHECK(aac::rouge_l(empty_cand[0]) == 0.0);
  CHECK(aac::meteor_lite(empty_cand[0]) == 0.0);
  CHECK(aac::cider(empty_cand).corpus == 0.0);

  auto report = aac::evaluate_corpus(same);
  CHECK(report.bleu == std::array<double, 4>{1, 1, 1, 1});
  CHECK(report.rouge_l == 1.0);
}

TEST_CASE("meteor chunking prefers extending the current chunk") {
  // "the" occurs twice in the reference; the second "the" continues "on the".
  auto p = pair_of("sat on the mat", {"the cat sat on the mat"});
  // m = 4, one chunk: P = 1, R = 4/6
  const double P = 1.0, R = 4.0 / 6.0;
  const double expected = 10 * P * R / (R + 9 * P) * (1 - 0.5 * std::pow(1.0 / 4.0, 3));
  CHECK(aac::meteor_lite(p) == doctest::Approx(expected).epsilon(1e-12));
  // two chunks: "cat" then "the"
  auto q = pair_of("cat the", {"the cat"});
  const double two = 10.0 / 10.0 * (1 - 0.5 * std::pow(2.0 / 2.0, 3));
  CHECK(aac::meteor_lite(q) == doctest::Approx(two).epsilon(1e-12));
}

TEST_CASE("cider variants") {
  std::vector<EvalPair> c{pair_of("a dog barks", {"a dog barks"}),
                          pair_of("a cat meows", {"a cat meows"})};
  auto d = aac::cider(c);
  CHECK(d.per_pair.size() == 2);
  CHECK(d.corpus == doctest::Approx((d.per_pair[0] + d.per_pair[1]) / 2).epsilon(1e-15));
  aac::CiderOptions plain;
  plain.plain = true;
  auto p = aac::cider(c, plain);
  CHECK(p.corpus >= 0.0);
  // a longer candidate is penalized only by the D variant
  std::vector<EvalPair> longer{pair_of("a dog barks dog barks dog barks dog barks", {"a dog barks"}),
                               pair_of("a cat meows", {"a cat meows"})};
  CHECK(aac::cider(longer).per_pair[0] < aac::cider(longer, plain).per_pair[0]);
  CHECK_THROWS_AS(aac::cider(std::vector<EvalPair>{}), aac::InputError);
  CHECK(aac::spider_lite(c) == d.corpus / 2.0);
}

TEST_CASE("metric properties over random corpora") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    auto corpus = aac::testing::random_corpus(rng);
    CAPTURE(trial);
    for (int n = 1; n <= 4; ++n) CHECK(std::abs(aac::bleu_n(corpus, n) - bleu_oracle(corpus, n)) < 1e-12);
    auto shuffled = corpus;
    for (auto& p : shuffled) std::shuffle(p.references.begin(), p.references.end(), rng);
    auto a = aac::evaluate_corpus(corpus, true);
    auto b = aac::evaluate_corpus(shuffled, true);
    CHECK(a.bleu == b.bleu);
    CHECK(a.rouge_l == b.rouge_l);
    CHECK(a.meteor_lite == b.meteor_lite);
    CHECK(a.cider == doctest::Approx(b.cider).epsilon(1e-12));

    for (double v : a.bleu) CHECK((v >= 0.0 && v <= 1.0));
    CHECK((a.rouge_l >= 0.0 && a.rouge_l <= 1.0));
    CHECK((a.meteor_lite >= 0.0 && a.meteor_lite <= 1.0));
    CHECK(a.cider >= 0.0);
    CHECK(a.spider_lite == a.cider / 2.0);

    // compositional equality with the individual metric functions
    for (int n = 1; n <= 4; ++n) CHECK(a.bleu[n - 1] == aac::bleu_n(corpus, n));
    CHECK(a.cider == aac::cider(corpus).corpus);
    double rl = 0, me = 0;
    for (const auto& p : corpus) {
      rl += aac::rouge_l(p);
      me += aac::meteor_lite(p);
    }
    CHECK(a.rouge_l == rl / corpus.size());
    CHECK(a.meteor_lite == me / corpus.size());

    if (trial % 10 == 0) {
      for (const auto& p : corpus) {
        for (const auto& r : p.references) {
          const auto lcs = static_cast<double>(lcs_oracle(p.candidate, r));
          if (lcs == 0 || p.candidate.empty()) continue;
          const double P = lcs / p.candidate.size(), R = lcs / r.size();
          CHECK(aac::rouge_l({p.candidate, {r}}) ==
                doctest::Approx(2.44 * P * R / (R + 1.44 * P)).epsilon(1e-12));
        }
      }
    }
    auto again = aac::evaluate_corpus(corpus, true);
    CHECK(again.cider == a.cider);
  }
}

TEST_CASE("BLEU is non-increasing in n on caption-length corpora") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    auto corpus = aac::testing::random_corpus(rng, 8, 20);
    CAPTURE(trial);
    double prev = 1.0;
    for (int n = 1; n <= 4; ++n) {
      const double b = aac::bleu_n(corpus, n);
      CHECK(b <= prev);
      prev = b;
    }
  }
}

TEST_CASE("BLEU can increase with n when a candidate is shorter than n") {
  // The one-word candidate adds to the unigram count only:
  // p1 = 2/3, p2 = 1/1, BP = exp(1 - 6/3) for both.
  std::vector<EvalPair> c{pair_of("quiet", {"falls a passes loud barks", "passes dog the"}),
                          pair_of("loud car", {"quiet barks the", "rain loud car dog"})};
  CHECK(aac::bleu_n(c, 1) == doctest::Approx(2.0 / 3.0 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(aac::bleu_n(c, 2) == doctest::Approx(std::sqrt(2.0 / 3.0) * std::exp(-1.0)).epsilon(1e-12));
  CHECK(aac::bleu_n(c, 2) > aac::bleu_n(c, 1));
}

TEST_CASE("metric errors") {
  EvalPair no_refs{{"a"}, {}};
  CHECK_THROWS_AS(aac::rouge_l(no_refs), aac::InputError);
  std::vector<EvalPair> c{pair_of("a", {"a"})};
  CHECK_THROWS_AS(aac::bleu_n(c, 5), aac::InputError);
  CHECK_THROWS_AS(aac::evaluate_corpus(std::vector<EvalPair>{}), aac::InputError);
}
