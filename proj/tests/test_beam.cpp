// tests/test_beam.cpp
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

#include <cmath>

#include "aac/beam_search.h"
#include "doctest.h"
#include "support/toy_models.h"

using aac::testing::FixedTableModel;
using aac::testing::RandomTableModel;
using aac::testing::Seq;

namespace {

// Greedy takes token 1 first (p=0.5) but then faces a flat distribution;
// token 2 (p=0.4) is followed by <eos> with p=0.9.
FixedTableModel greedy_trap() {
  return FixedTableModel({{{}, {0.05, 0.5, 0.4, 0.05}},
                          {{1}, {0.25, 0.25, 0.25, 0.25}},
                          {{2}, {0.9, 0.1 / 3, 0.1 / 3, 0.1 / 3}}});
}

std::vector<double> fixed_lp(const FixedTableModel& m, const Seq& prefix) {
  if (prefix.empty()) return m.step({}, FixedTableModel::kStart).first;
  return m.step(Seq(prefix.begin(), prefix.end() - 1), prefix.back()).first;
}

}  // namespace

TEST_CASE("fixed table where greedy is suboptimal") {
  auto model = greedy_trap();
  auto oracle =
      aac::testing::enumerate_sequences(4, 3, [&](const Seq& p) { return fixed_lp(model, p); });
  CHECK(oracle.best == Seq{2, 0});
  CHECK(oracle.greedy == Seq{1, 0});
  CHECK(oracle.greedy_log_prob < oracle.best_log_prob);

  aac::BeamConfig cfg;
  cfg.max_len = 4;  // <sos> + 3 generated
  auto beam = aac::beam_decode(model, cfg, model.tokens());
  CHECK(beam.best == Seq{2});
  CHECK(beam.best_log_prob == doctest::Approx(oracle.best_log_prob).epsilon(1e-15));

  auto greedy = aac::greedy_decode(model, 4, model.tokens());
  CHECK(greedy.best == Seq{1});
  CHECK(greedy.log_prob == doctest::Approx(oracle.greedy_log_prob).epsilon(1e-15));
}

TEST_CASE("wide beam recovers the exhaustive optimum on random tables") {
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t V = 2 + seed % 3;
    const std::size_t max_len = 3 + seed % 3;
    RandomTableModel model(V, seed);
    auto oracle = aac::testing::enumerate_sequences(V, max_len - 1, [&](const Seq& p) {
      Seq full{model.start_token()};
      full.insert(full.end(), p.begin(), p.end());
      return model.log_probs(full);
    });
    aac::BeamConfig cfg;
    cfg.width = V * max_len;
    cfg.max_len = max_len;
    auto beam = aac::beam_decode(model, cfg, model.tokens());
    if (beam.best == aac::testing::without_eos(oracle.best) &&
        beam.best_log_prob == oracle.best_log_prob)
      ++exact;
  }
  CHECK(exact == 200);
}

TEST_CASE("beam width one is greedy and wider beams never score below it") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RandomTableModel model(4, 1000 + seed);
    aac::BeamConfig cfg;
    cfg.max_len = 6;
    cfg.width = 1;
    auto one = aac::beam_decode(model, cfg, model.tokens());
    auto greedy = aac::greedy_decode(model, cfg.max_len, model.tokens());
    CHECK(one.best == greedy.best);
    CHECK(one.best_log_prob == greedy.log_prob);
    cfg.width = 3;
    auto three = aac::beam_decode(model, cfg, model.tokens());
    CHECK(three.best_score >= greedy.log_prob);
  }
}

TEST_CASE("first expansion scores nine paths and prunes six") {
  // <eos> is improbable at the root so three live paths survive seeding.
  FixedTableModel model({{{}, {0.01, 0.33, 0.33, 0.33}}});
  aac::BeamConfig cfg;
  cfg.max_len = 5;
  cfg.k_squared_candidates = true;
  auto r = aac::beam_decode(model, cfg, model.tokens());
  REQUIRE(r.iterations.size() >= 2);
  CHECK(r.iterations[0].candidates == 3);
  CHECK(r.iterations[1].candidates == 9);
  CHECK(r.iterations[1].kept_live + r.iterations[1].kept_finished == 3);

  cfg.k_squared_candidates = false;
  auto full = aac::beam_decode(model, cfg, model.tokens());
  CHECK(full.iterations[1].candidates == 12);
}

TEST_CASE("hypothesis invariants") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RandomTableModel model(5, 77 + seed);
    aac::BeamConfig cfg;
    cfg.width = 1 + seed % 4;
    cfg.max_len = 7;
    cfg.length_normalize = seed % 2 == 1;
    auto r = aac::beam_decode(model, cfg, model.tokens());
    for (const auto& it : r.iterations) CHECK(it.kept_live + it.kept_finished <= cfg.width);
    CHECK(r.iterations.size() <= cfg.max_len - 1);
    for (const auto& h : r.finished) {
      CHECK(h.finished);
      CHECK(h.tokens.front() == model.start_token());
      CHECK((h.tokens.back() == 0 || h.tokens.size() == cfg.max_len));
      // replay: running log-probability never increases
      double acc = 0;
      for (std::size_t t = 1; t < h.tokens.size(); ++t) {
        Seq prefix(h.tokens.begin(), h.tokens.begin() + static_cast<std::ptrdiff_t>(t));
        const double next = acc + model.log_probs(prefix)[static_cast<std::size_t>(h.tokens[t])];
        CHECK(next <= acc);
        acc = next;
      }
      CHECK(acc == doctest::Approx(h.log_prob).epsilon(1e-12));
    }
  }
}

TEST_CASE("beam configuration errors") {
  RandomTableModel model(4, 1);
  aac::BeamConfig cfg;
  cfg.width = 0;
  CHECK_THROWS_AS(aac::beam_decode(model, cfg, model.tokens()), aac::ConfigError);
  cfg.width = 3;
  cfg.max_len = 1;
  CHECK_THROWS_AS(aac::beam_decode(model, cfg, model.tokens()), aac::ConfigError);
  cfg.max_len = 5;
  aac::DecodeTokens no_eos{4, 9, {}};
  CHECK_THROWS_AS(aac::beam_decode(model, cfg, no_eos), aac::InputError);
  CHECK_THROWS_AS(aac::greedy_decode(model, 5, no_eos), aac::InputError);
}

TEST_CASE("beam search over the attention decoder") {
  aac::DecoderConfig dc;
  dc.hidden_size = 16;
  dc.embed_size = 8;
  dc.attention_size = 8;
  dc.vocab_size = 12;
  dc.annotation_size = 10;
  aac::init::Rng rng(3);
  aac::AttentionDecoder<float> dec(dc, rng);
  auto ann = aac::init::uniform<float>({5, 10}, -1.f, 1.f, rng);
  aac::DecoderStepModel<float> model(dec, ann);
  aac::BeamConfig cfg;
  cfg.width = 1;
  cfg.max_len = 8;
  auto one = aac::beam_decode(model, cfg);
  auto greedy = aac::greedy_decode(model, 8);
  CHECK(one.best == greedy.best);
  cfg.width = 3;
  auto three = aac::beam_decode(model, cfg);
  CHECK(three.best.size() <= 6);
  for (auto tok : three.best) {
    CHECK(tok != 0);
    CHECK(tok != 1);
    CHECK(tok != 2);
  }
}
