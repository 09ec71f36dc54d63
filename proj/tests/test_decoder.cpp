// tests/test_decoder.cpp
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

#include "aac/attention_decoder.h"
#include "aac/error.h"
#include "aac/ops.h"
#include "doctest.h"
#include "support/gradcheck.h"

using aac::Tensor;
using aac::testing::random_tensor;

namespace {

aac::DecoderConfig tiny_config() {
  aac::DecoderConfig c;
  c.hidden_size = 8;
  c.embed_size = 5;
  c.attention_size = 6;
  c.vocab_size = 6;
  c.annotation_size = 7;
  return c;
}

Tensor<double> param(aac::AttentionDecoder<double>& d, const std::string& name) {
  for (auto& p : d.parameters())
    if (p.name == name) return p.tensor;
  throw std::runtime_error("no parameter " + name);
}

// Additive attention evaluated with plain loops.
struct AttentionOracle {
  std::vector<double> alpha, context;
};

AttentionOracle attention_oracle(aac::AttentionDecoder<double>& dec, const Tensor<double>& ann,
                                 const Tensor<double>& h) {
  const auto cfg = dec.config();
  const std::size_t L = ann.dim(0), d = cfg.annotation_size, A = cfg.attention_size,
                    H = cfg.hidden_size;
  auto wa = param(dec, "decoder/attention/w_annotation");
  auto wh = param(dec, "decoder/attention/w_hidden");
  auto b = param(dec, "decoder/attention/bias");
  auto v = param(dec, "decoder/attention/v");
  std::vector<double> e(L);
  for (std::size_t i = 0; i < L; ++i) {
    double acc = 0;
    for (std::size_t a = 0; a < A; ++a) {
      double pre = b.at(a);
      for (std::size_t k = 0; k < d; ++k) pre += ann.at(i * d + k) * wa.at(k * A + a);
      for (std::size_t k = 0; k < H; ++k) pre += h.at(k) * wh.at(k * A + a);
      acc += std::tanh(pre) * v.at(a);
    }
    e[i] = acc;
  }
  const double m = *std::max_element(e.begin(), e.end());
  double z = 0;
  for (double x : e) z += std::exp(x - m);
  AttentionOracle o{std::vector<double>(L), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < L; ++i) {
    o.alpha[i] = std::exp(e[i] - m) / z;
    for (std::size_t k = 0; k < d; ++k) o.context[k] += o.alpha[i] * ann.at(i * d + k);
  }
  return o;
}

}  // namespace

TEST_CASE("identical annotations give uniform attention") {
  aac::init::Rng rng(1);
  aac::AttentionDecoder<double> dec(tiny_config(), rng);
  std::mt19937_64 r(2);
  auto row = random_tensor({1, 7}, r);
  auto ann = aac::ops::concat<double>({row, row, row, row, row}, 0);
  auto prepared = dec.prepare(ann);
  auto att = dec.attend(prepared, dec.initial_state(prepared));
  for (double a : att.alpha.data()) CHECK(a == doctest::Approx(0.2).epsilon(1e-14));
  for (std::size_t k = 0; k < 7; ++k)
    CHECK(att.context.at(k) == doctest::Approx(row.at(k)).epsilon(1e-13));
}

TEST_CASE("single annotation gets all the weight") {
  aac::init::Rng rng(3);
  aac::AttentionDecoder<double> dec(tiny_config(), rng);
  std::mt19937_64 r(4);
  auto ann = random_tensor({1, 7}, r);
  auto prepared = dec.prepare(ann);
  auto att = dec.attend(prepared, dec.initial_state(prepared));
  CHECK(att.alpha.values() == std::vector<double>{1.0});
  CHECK(att.context.values() == ann.values());
}

TEST_CASE("attention matches a direct weighted sum") {
  aac::init::Rng rng(5);
  aac::AttentionDecoder<double> dec(tiny_config(), rng);
  std::mt19937_64 r(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto ann = random_tensor({9, 7}, r, -3.0, 3.0);
    aac::DecoderState<double> state{random_tensor({1, 8}, r), random_tensor({1, 8}, r)};
    auto att = dec.attend(dec.prepare(ann), state);
    auto oracle = attention_oracle(dec, ann, state.h);
    for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(att.alpha.at(i) - oracle.alpha[i]) < 1e-12);
    for (std::size_t k = 0; k < 7; ++k)
      CHECK(std::abs(att.context.at(k) - oracle.context[k]) < 1e-6);
  }
}

TEST_CASE("attention weights are a distribution for extreme inputs") {
  aac::init::Rng rng(7);
  aac::AttentionDecoder<double> dec(tiny_config(), rng);
  std::mt19937_64 r(8);
  for (int trial = 0; trial < 50; ++trial) {
    const double mag = trial < 25 ? 1.0 : 1e3;
    auto ann = random_tensor({std::size_t(1 + trial % 11), 7}, r, -mag, mag);
    aac::DecoderState<double> state{random_tensor({1, 8}, r, -mag, mag), random_tensor({1, 8}, r)};
    auto att = dec.attend(dec.prepare(ann), state);
    double total = 0;
    for (double a : att.alpha.data()) {
      CHECK(a >= 0.0);
      total += a;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("permuting annotations permutes alpha and keeps the context") {
  aac::init::Rng rng(9);
  aac::AttentionDecoder<double> dec(tiny_config(), rng);
  std::mt19937_64 r(10);
  auto ann = random_tensor({6, 7}, r);
  aac::DecoderState<double> state{random_tensor({1, 8}, r), random_tensor({1, 8}, r)};
  const std::size_t perm[] = {3, 0, 5, 1, 4, 2};
  std::vector<double> shuffled;
  for (std::size_t i : perm)
    for (std::size_t k = 0; k < 7; ++k) shuffled.push_back(ann.at(i * 7 + k));
  auto a = dec.attend(dec.prepare(ann), state);
  auto b = dec.attend(dec.prepare(Tensor<double>::from({6, 7}, shuffled)), state);
  for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(b.alpha.at(j) - a.alpha.at(perm[j])) < 1e-14);
  for (std::size_t k = 0; k < 7; ++k) CHECK(std::abs(b.context.at(k) - a.context.at(k)) < 1e-12);
}

TEST_CASE("decode_step contracts") {
  for (std::size_t vocab : {4, 6, 31}) {
    auto cfg = tiny_config();
    cfg.vocab_size = vocab;
    aac::init::Rng rng(11);
    aac::AttentionDecoder<double> dec(cfg, rng);
    std::mt19937_64 r(12);
    auto prepared = dec.prepare(random_tensor({4, 7}, r));
    auto s0 = dec.initial_state(prepared);
    auto a = dec.decode_step(1, s0, prepared);
    auto b = dec.decode_step(1, s0, prepared);
    CHECK(a.logits.shape() == aac::Shape{1, vocab});
    CHECK(a.logits.values() == b.logits.values());
    CHECK(a.state.h.values() == b.state.h.values());
    auto probs = aac::ops::softmax(a.logits, 1);
    double total = 0;
    for (double p : probs.data()) total += p;
    CHECK(std::abs(total - 1.0) < 1e-9);
    CHECK_THROWS_AS(dec.decode_step(static_cast<std::int32_t>(vocab), s0, prepared),
                    aac::InputError);
    CHECK_THROWS_AS(dec.decode_step(-1, s0, prepared), aac::InputError);
  }
  auto bad = tiny_config();
  bad.vocab_size = 3;
  aac::init::Rng rng(0);
  CHECK_THROWS_AS(aac::AttentionDecoder<double>(bad, rng), aac::ConfigError);
}

TEST_CASE("teacher forcing") {
  aac::init::Rng rng(13);
  aac::AttentionDecoder<double> dec(tiny_config(), rng);
  std::mt19937_64 r(14);
  auto ann = random_tensor({4, 7}, r);

  const std::int32_t minimal[] = {1, 2};
  CHECK(dec.decode_teacher_forced(ann, minimal).shape() == aac::Shape{1, 6});

  const std::vector<std::int32_t> target = {1, 4, 5, 3, 2};
  auto rows = dec.decode_teacher_forced(ann, target);
  CHECK(rows.shape() == aac::Shape{4, 6});

  SUBCASE("equals a stepwise loop fed ground truth") {
    auto prepared = dec.prepare(ann);
    auto state = dec.initial_state(prepared);
    for (std::size_t t = 0; t + 1 < target.size(); ++t) {
      auto step = dec.decode_step(target[t], state, prepared);
      auto lp = aac::ops::log_softmax(step.logits, 1);
      for (std::size_t v = 0; v < 6; ++v) CHECK(rows.at(t * 6 + v) == lp.at(v));
      state = step.state;
    }
  }
  SUBCASE("row t ignores later tokens") {
    auto mutated = target;
    mutated[3] = 5;
    mutated[4] = 4;
    auto other = dec.decode_teacher_forced(ann, mutated);
    for (std::size_t i = 0; i < 3 * 6; ++i) CHECK(other.at(i) == rows.at(i));
  }
  const std::int32_t no_sos[] = {4, 2};
  const std::int32_t only_sos[] = {1};
  CHECK_THROWS_AS(dec.decode_teacher_forced(ann, no_sos), aac::InputError);
  CHECK_THROWS_AS(dec.decode_teacher_forced(ann, only_sos), aac::InputError);
  CHECK_THROWS_AS(dec.decode_teacher_forced(ann, std::span<const std::int32_t>{}), aac::InputError);
  CHECK_THROWS_AS(dec.decode_teacher_forced(random_tensor({4, 5}, r), target), aac::ShapeError);
}

TEST_CASE("full decoder gradient check on a tiny config") {
  aac::init::Rng rng(15);
  aac::AttentionDecoder<double> dec(tiny_config(), rng);
  std::mt19937_64 r(16);
  auto ann = random_tensor({4, 7}, r);
  const std::vector<std::int32_t> target = {1, 3, 2};
  std::vector<Tensor<double>> leaves{ann};
  for (auto& p : dec.parameters()) leaves.push_back(p.tensor);
  auto res = aac::testing::grad_check(leaves, [&]() {
    return aac::testing::weighted_sum(dec.decode_teacher_forced(ann, target));
  });
  CHECK(res.checked > 500);
  CHECK(res.max_rel_error < 1e-4);
}
