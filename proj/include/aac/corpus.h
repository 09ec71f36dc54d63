// include/aac/corpus.h
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

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "aac/gammatone.h"
#include "aac/tensor.h"
#include "aac/text.h"
#include "aac/wav.h"

namespace aac {

class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0, kSos = 1, kEos = 2, kUnk = 3;
  static constexpr std::size_t kReserved = 4;

  // Reserved tokens first, then words by descending count, ties ascending.
  static Vocabulary build(const std::vector<Tokens>& captions, std::size_t min_count = 1);

  std::size_t size() const { return words_.size(); }
  std::int32_t index(const std::string& word) const;  // kUnk when absent
  const std::string& word(std::int32_t index) const;
  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  // <sos> w... <eos>
  std::vector<std::int32_t> encode(const Tokens& caption) const;
  // Drops reserved tokens; stops at the first <eos>.
  Tokens decode(std::span<const std::int32_t> indices) const;

  std::string to_json() const;  // {"word": index, ...}
  static Vocabulary from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& o) const { return words_ == o.words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, std::int32_t> index_;
};

struct ManifestEntry {
  std::string file_name;
  std::vector<std::string> captions;  // raw text, 1..5
};

// CSV with header file_name,caption_1,...; RFC 4180 quoting.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

struct CaptionedClip {
  std::string clip_id;  // file name without extension
  std::filesystem::path audio_path;
  std::vector<Tokens> captions;
};

// Tokenizes every caption; captions outside [min_tokens, max_tokens] are an
// input error (max_tokens 0 = unbounded).
std::vector<CaptionedClip> load_clips(const std::filesystem::path& manifest,
                                      const std::filesystem::path& audio_dir,
                                      std::size_t min_tokens = 1, std::size_t max_tokens = 0);

struct Example {
  std::size_t clip = 0;
  std::size_t caption = 0;
};

// One example per (clip, caption), shuffled by `seed` when shuffle is set.
std::vector<Example> epoch_examples(const std::vector<CaptionedClip>& clips, std::uint64_t seed,
                                    bool shuffle = true);

template <typename T>
struct Batch {
  Tensor<T> features;                 // [B, 1, bands, T_max], zeros on the left
  std::vector<std::int32_t> targets;  // [B, L_max] row-major, <pad> on the right
  std::size_t target_width = 0;
  std::vector<std::size_t> feature_lengths;
  std::vector<std::size_t> target_lengths;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  std::span<const std::int32_t> target_row(std::size_t b) const {
    return std::span<const std::int32_t>(targets).subspan(b * target_width, target_width);
  }
  // Unpadded <sos> ... <eos>
  std::span<const std::int32_t> target(std::size_t b) const {
    return target_row(b).first(target_lengths[b]);
  }
};

// `features[i]` belongs to `clips[i]`; a missing map (zero bands) is an error.
template <typename T>
Batch<T> make_batch(std::span<const Example> examples, const std::vector<CaptionedClip>& clips,
                    const std::vector<FeatureMap>& features, const Vocabulary& vocab);

template <typename T>
std::vector<Batch<T>> make_batches(const std::vector<CaptionedClip>& clips,
                                   const std::vector<FeatureMap>& features,
                                   const Vocabulary& vocab, std::size_t batch_size,
                                   std::uint64_t seed, bool shuffle = true);

struct ToyClip {
  std::string clip_id;
  AudioClip audio;
  std::string caption;
};

struct ToyCorpusConfig {
  int sample_rate = 16000;
  double duration_s = 0.5;
};

// Tones and noise bursts with template captions such as
// "a low tone repeats with background noise".
std::vector<ToyClip> generate_toy_corpus(std::size_t num_clips, std::uint64_t seed,
                                         const ToyCorpusConfig& cfg = {});

// Writes <dir>/audio/<id>.wav and <dir>/manifest.csv.
void write_toy_dataset(const std::filesystem::path& dir, const std::vector<ToyClip>& clips);

}  // namespace aac
