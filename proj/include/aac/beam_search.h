// include/aac/beam_search.h
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

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "aac/attention_decoder.h"
#include "aac/error.h"
#include "aac/ops.h"

namespace aac {

struct BeamConfig {
  std::size_t width = 3;
  std::size_t max_len = 22;  // counts <sos> and <eos>
  bool length_normalize = false;
  // Each live hypothesis proposes only its own top `width` continuations
  // (width^2 candidates) instead of the whole vocabulary.
  bool k_squared_candidates = false;

  void validate() const {
    if (width < 1) throw ConfigError("beam width must be >= 1");
    if (max_len < 2) throw ConfigError("max_len must be >= 2");
  }
};

struct DecodeTokens {
  std::int32_t sos = 1;
  std::int32_t eos = 2;
  std::vector<std::int32_t> banned = {0, 1};  // never generated
};

// A model that scores the next token given its state and the previous token.
template <class M>
concept StepModel = requires(const M& m, const typename M::State& s, std::int32_t tok) {
  { m.start() } -> std::convertible_to<typename M::State>;
  { m.step(s, tok) } -> std::same_as<std::pair<std::vector<double>, typename M::State>>;
};

template <class State>
struct Hypothesis {
  std::vector<std::int32_t> tokens;  // starts with <sos>
  double log_prob = 0.0;
  State state;
  bool finished = false;
};

struct BeamIteration {
  std::size_t candidates = 0;  // scored this iteration (frozen finished ones excluded)
  std::size_t kept_live = 0;
  std::size_t kept_finished = 0;
};

template <class State>
struct BeamResult {
  std::vector<std::int32_t> best;  // <sos>/<eos> stripped
  double best_score = 0.0;
  double best_log_prob = 0.0;
  std::vector<Hypothesis<State>> finished;  // final pool, best first
  std::vector<BeamIteration> iterations;
};

struct GreedyResult {
  std::vector<std::int32_t> best;  // <sos>/<eos> stripped
  double log_prob = 0.0;
};

namespace beam_detail {

inline bool is_banned(const DecodeTokens& t, std::int32_t tok) {
  return std::find(t.banned.begin(), t.banned.end(), tok) != t.banned.end();
}

inline void check_logits(std::size_t n, const DecodeTokens& tokens) {
  if (tokens.eos < 0 || static_cast<std::size_t>(tokens.eos) >= n)
    throw InputError("vocabulary of size " + std::to_string(n) + " has no <eos> index " +
                     std::to_string(tokens.eos));
}

inline std::vector<std::int32_t> strip(const std::vector<std::int32_t>& seq,
                                       const DecodeTokens& t) {
  std::vector<std::int32_t> out(seq.begin() + 1, seq.end());
  if (!out.empty() && out.back() == t.eos) out.pop_back();
  return out;
}

inline double score(double log_prob, std::size_t length, bool normalize) {
  return normalize ? log_prob / static_cast<double>(length - 1) : log_prob;
}

}  // namespace beam_detail

template <StepModel M>
BeamResult<typename M::State> beam_decode(const M& model, const BeamConfig& cfg,
                                          const DecodeTokens& tokens = {}) {
  using State = typename M::State;
  using Hyp = Hypothesis<State>;
  cfg.validate();
  struct Cand {
    std::size_t parent;  // index into pool; token < 0 means "frozen finished"
    std::int32_t token;
    double log_prob;
    double score;
    std::vector<std::int32_t> seq;
  };
  auto better = [](const Cand& a, const Cand& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.seq < b.seq;
  };

  std::vector<Hyp> pool{{{tokens.sos}, 0.0, model.start(), false}};
  std::vector<std::vector<double>> step_scores(1);
  std::vector<State> next_states(1);
  BeamResult<State> result;

  while (true) {
    std::vector<Cand> cands;
    std::size_t scored = 0;
    for (std::size_t p = 0; p < pool.size(); ++p) {
      const Hyp& h = pool[p];
      if (h.finished) {
        cands.push_back(
            {p, -1, h.log_prob, beam_detail::score(h.log_prob, h.tokens.size(), cfg.length_normalize),
             h.tokens});
        continue;
      }
      auto [lp, next] = model.step(h.state, h.tokens.back());
      beam_detail::check_logits(lp.size(), tokens);
      next_states[p] = std::move(next);
      std::vector<Cand> children;
      for (std::size_t v = 0; v < lp.size(); ++v) {
        const auto tok = static_cast<std::int32_t>(v);
        if (beam_detail::is_banned(tokens, tok)) continue;
        Cand c{p, tok, h.log_prob + lp[v], 0.0, h.tokens};
        c.seq.push_back(tok);
        c.score = beam_detail::score(c.log_prob, c.seq.size(), cfg.length_normalize);
        children.push_back(std::move(c));
      }
      if (cfg.k_squared_candidates && children.size() > cfg.width) {
        std::partial_sort(children.begin(), children.begin() + cfg.width, children.end(), better);
        children.resize(cfg.width);
      }
      scored += children.size();
      for (auto& c : children) cands.push_back(std::move(c));
    }
    const std::size_t keep = std::min(cfg.width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), better);
    cands.resize(keep);

    std::vector<Hyp> kept;
    BeamIteration it{scored, 0, 0};
    for (auto& c : cands) {
      if (c.token < 0) {
        kept.push_back(std::move(pool[c.parent]));
      } else {
        Hyp h{std::move(c.seq), c.log_prob, next_states[c.parent], false};
        h.finished = h.tokens.back() == tokens.eos || h.tokens.size() >= cfg.max_len;
        kept.push_back(std::move(h));
      }
      (kept.back().finished ? it.kept_finished : it.kept_live)++;
    }
    result.iterations.push_back(it);
    pool = std::move(kept);
    next_states.assign(pool.size(), State{});
    if (it.kept_live == 0) break;
  }

  result.finished = std::move(pool);
  const Hyp& best = result.finished.front();
  result.best = beam_detail::strip(best.tokens, tokens);
  result.best_log_prob = best.log_prob;
  result.best_score = beam_detail::score(best.log_prob, best.tokens.size(), cfg.length_normalize);
  return result;
}

// Stepwise argmax; ties go to the smaller token index.
template <StepModel M>
GreedyResult greedy_decode(const M& model, std::size_t max_len, const DecodeTokens& tokens = {}) {
  if (max_len < 2) throw ConfigError("max_len must be >= 2");
  std::vector<std::int32_t> seq{tokens.sos};
  auto state = model.start();
  double total = 0.0;
  while (seq.size() < max_len) {
    auto [lp, next] = model.step(state, seq.back());
    beam_detail::check_logits(lp.size(), tokens);
    std::int32_t arg = -1;
    for (std::size_t v = 0; v < lp.size(); ++v) {
      const auto tok = static_cast<std::int32_t>(v);
      if (beam_detail::is_banned(tokens, tok)) continue;
      if (arg < 0 || lp[v] > lp[static_cast<std::size_t>(arg)]) arg = tok;
    }
    if (arg < 0) throw InputError("every token is banned");
    total += lp[static_cast<std::size_t>(arg)];
    seq.push_back(arg);
    state = std::move(next);
    if (arg == tokens.eos) break;
  }
  return {beam_detail::strip(seq, tokens), total};
}

// Adapts a trained decoder plus one clip's annotations to StepModel.
template <typename T>
class DecoderStepModel {
 public:
  using State = DecoderState<T>;

  DecoderStepModel(const AttentionDecoder<T>& decoder, const Tensor<T>& annotations)
      : decoder_(decoder), prepared_(prepare(decoder, annotations)) {}

  State start() const {
    NoGradScope<T> no_grad;
    return decoder_.initial_state(prepared_);
  }

  std::pair<std::vector<double>, State> step(const State& s, std::int32_t prev) const {
    NoGradScope<T> no_grad;
    auto out = decoder_.decode_step(prev, s, prepared_);
    auto lp = ops::log_softmax(out.logits, 1);
    return {std::vector<double>(lp.data().begin(), lp.data().end()), out.state};
  }

 private:
  static PreparedAnnotations<T> prepare(const AttentionDecoder<T>& d, const Tensor<T>& a) {
    NoGradScope<T> no_grad;
    return d.prepare(a);
  }

  const AttentionDecoder<T>& decoder_;
  PreparedAnnotations<T> prepared_;
};

}  // namespace aac
