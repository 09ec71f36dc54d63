// src/toy_corpus.cpp
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
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "aac/corpus.h"
#include "aac/error.h"

namespace aac {

namespace {

struct Pitch {
  const char* word;
  double hz;
};
constexpr std::array<Pitch, 3> kPitches{{{"low", 250.0}, {"middle", 700.0}, {"high", 1800.0}}};
constexpr std::array<const char*, 4> kPatterns{"plays steadily", "repeats", "rises in pitch",
                                               "falls in pitch"};
constexpr std::array<const char*, 3> kExtras{"", " with background noise",
                                             " then a burst of noise"};

double envelope(double t, double begin, double end, double fade) {
  if (t < begin || t >= end) return 0.0;
  return std::min({1.0, (t - begin) / fade, (end - t) / fade});
}

}  // namespace

std::vector<ToyClip> generate_toy_corpus(std::size_t num_clips, std::uint64_t seed,
                                         const ToyCorpusConfig& cfg) {
  if (num_clips == 0) throw InputError("toy corpus needs at least one clip");
  if (cfg.sample_rate <= 0 || cfg.duration_s <= 0.0) throw ConfigError("bad toy corpus config");
  std::mt19937_64 rng(seed);
  std::vector<std::array<std::size_t, 3>> combos;
  for (std::size_t p = 0; p < kPitches.size(); ++p)
    for (std::size_t q = 0; q < kPatterns.size(); ++q)
      for (std::size_t e = 0; e < kExtras.size(); ++e) combos.push_back({p, q, e});
  std::shuffle(combos.begin(), combos.end(), rng);

  const double sr = cfg.sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(cfg.duration_s * sr));
  const double dur = static_cast<double>(n) / sr;
  std::uniform_real_distribution<double> jitter(-0.03, 0.03), amp(0.3, 0.5), phase0(0.0, 6.28);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<ToyClip> out;
  for (std::size_t i = 0; i < num_clips; ++i) {
    const auto [p, q, e] = combos[i % combos.size()];
    ToyClip clip;
    char id[32];
    std::snprintf(id, sizeof id, "toy_%03zu", i);
    clip.clip_id = id;
    clip.caption = std::string("a ") + kPitches[p].word + " tone " + kPatterns[q] + kExtras[e];

    const double f0 = kPitches[p].hz * (1.0 + jitter(rng));
    const double a = amp(rng);
    double phase = phase0(rng);
    const double tone_end = e == 2 ? 0.6 * dur : dur;
    std::vector<double> x(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / sr;
      double f = f0;
      if (q == 2) f = f0 * (1.0 + t / tone_end);
      if (q == 3) f = f0 * (1.0 - 0.5 * t / tone_end);
      phase += 2.0 * std::numbers::pi * f / sr;
      double env = envelope(t, 0.0, tone_end, 0.005);
      if (q == 1) {
        const double period = tone_end / 4.0;
        const double local = std::fmod(t, period);
        env *= envelope(local, 0.0, 0.6 * period, 0.005);
      }
      x[k] = a * env * std::sin(phase);
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / sr;
      if (e == 1) x[k] += 0.05 * noise(rng);
      if (e == 2) x[k] += 0.3 * envelope(t, 0.72 * dur, 0.92 * dur, 0.005) * noise(rng);
    }
    for (double& v : x) v = std::clamp(v, -1.0, 1.0);
    clip.audio = {std::move(x), cfg.sample_rate};
    out.push_back(std::move(clip));
  }
  return out;
}

void write_toy_dataset(const std::filesystem::path& dir, const std::vector<ToyClip>& clips) {
  std::filesystem::create_directories(dir / "audio");
  std::vector<ManifestEntry> entries;
  for (const auto& c : clips) {
    write_wav_pcm16(dir / "audio" / (c.clip_id + ".wav"), c.audio);
    entries.push_back({c.clip_id + ".wav", {c.caption}});
  }
  write_manifest(dir / "manifest.csv", entries);
}

}  // namespace aac
