// src/corpus.cpp
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

#include "aac/corpus.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "aac/error.h"
#include "json.hpp"

namespace aac {

namespace {

const std::string kReservedWords[] = {"<pad>", "<sos>", "<eos>", "<unk>"};

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits CSV text into records of fields, honoring quotes and "" escapes.
std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                const std::string& origin) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1;
  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&]() {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(row);
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty())
          throw FormatError(origin + ":" + std::to_string(line) + ": stray quote");
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field.push_back(c);
    }
  }
  if (quoted) throw FormatError(origin + ": unterminated quoted field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

Vocabulary Vocabulary::build(const std::vector<Tokens>& captions, std::size_t min_count) {
  if (captions.empty()) throw InputError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& c : captions)
    for (const auto& w : c) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [w, n] : counts) {
    if (n < min_count) continue;
    if (std::find(std::begin(kReservedWords), std::end(kReservedWords), w) !=
        std::end(kReservedWords))
      continue;
    ranked.emplace_back(w, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& r : kReservedWords) v.words_.push_back(r);
  for (const auto& [w, n] : ranked) v.words_.push_back(w);
  for (std::size_t i = 0; i < v.words_.size(); ++i)
    v.index_[v.words_[i]] = static_cast<std::int32_t>(i);
  return v;
}

std::int32_t Vocabulary::index(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(std::int32_t index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= words_.size())
    throw InputError("token index " + std::to_string(index) + " outside vocabulary");
  return words_[static_cast<std::size_t>(index)];
}

std::vector<std::int32_t> Vocabulary::encode(const Tokens& caption) const {
  std::vector<std::int32_t> out{kSos};
  for (const auto& w : caption) out.push_back(index(w));
  out.push_back(kEos);
  return out;
}

Tokens Vocabulary::decode(std::span<const std::int32_t> indices) const {
  Tokens out;
  for (auto i : indices) {
    if (i == kEos) break;
    if (i == kPad || i == kSos) continue;
    out.push_back(word(i));
  }
  return out;
}

std::string Vocabulary::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < words_.size(); ++i) j[words_[i]] = i;
  return j.dump(1) + "\n";
}

Vocabulary Vocabulary::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw JsonError(std::string("vocabulary JSON: ") + e.what());
  }
  if (!j.is_object()) throw JsonError("vocabulary JSON must be an object");
  Vocabulary v;
  v.words_.assign(j.size(), std::string());
  std::vector<bool> seen(j.size(), false);
  for (const auto& [w, idx] : j.items()) {
    if (!idx.is_number_unsigned() || idx.get<std::size_t>() >= j.size() ||
        seen[idx.get<std::size_t>()])
      throw JsonError("vocabulary indices must be a contiguous bijection from 0");
    seen[idx.get<std::size_t>()] = true;
    v.words_[idx.get<std::size_t>()] = w;
  }
  for (std::size_t r = 0; r < kReserved; ++r)
    if (v.words_.size() <= r || v.words_[r] != kReservedWords[r])
      throw JsonError("vocabulary must start with <pad>, <sos>, <eos>, <unk>");
  for (std::size_t i = 0; i < v.words_.size(); ++i)
    v.index_[v.words_[i]] = static_cast<std::int32_t>(i);
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  return from_json(read_text(path));
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  const auto rows = parse_csv(read_text(path), path.string());
  if (rows.empty() || rows[0].empty() || rows[0][0] != "file_name")
    throw FormatError(path.string() + ": header must start with file_name");
  const auto& header = rows[0];
  if (header.size() < 2) throw FormatError(path.string() + ": no caption columns");
  for (std::size_t i = 1; i < header.size(); ++i)
    if (header[i] != "caption_" + std::to_string(i))
      throw FormatError(path.string() + ": unexpected column '" + header[i] + "'");
  std::vector<ManifestEntry> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size())
      throw FormatError(path.string() + ": row " + std::to_string(r + 1) + " has " +
                        std::to_string(rows[r].size()) + " fields, expected " +
                        std::to_string(header.size()));
    ManifestEntry e{rows[r][0], {}};
    if (e.file_name.empty()) throw FormatError(path.string() + ": empty file_name");
    for (std::size_t i = 1; i < rows[r].size(); ++i)
      if (!rows[r][i].empty()) e.captions.push_back(rows[r][i]);
    if (e.captions.empty()) throw FormatError(path.string() + ": " + e.file_name + " has no caption");
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::size_t columns = 1;
  for (const auto& e : entries) columns = std::max(columns, e.captions.size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "file_name";
  for (std::size_t i = 1; i <= columns; ++i) out << ",caption_" << i;
  out << "\n";
  for (const auto& e : entries) {
    out << csv_field(e.file_name);
    for (std::size_t i = 0; i < columns; ++i)
      out << "," << (i < e.captions.size() ? csv_field(e.captions[i]) : std::string());
    out << "\n";
  }
}

std::vector<CaptionedClip> load_clips(const std::filesystem::path& manifest,
                                      const std::filesystem::path& audio_dir,
                                      std::size_t min_tokens, std::size_t max_tokens) {
  std::vector<CaptionedClip> clips;
  for (const auto& e : read_manifest(manifest)) {
    CaptionedClip c{std::filesystem::path(e.file_name).stem().string(), audio_dir / e.file_name,
                    {}};
    for (const auto& text : e.captions) {
      auto t = tokenize_caption(text);
      if (t.size() < min_tokens || (max_tokens > 0 && t.size() > max_tokens))
        throw InputError(e.file_name + ": caption '" + text + "' has " + std::to_string(t.size()) +
                         " tokens, outside the configured bounds");
      c.captions.push_back(std::move(t));
    }
    clips.push_back(std::move(c));
  }
  return clips;
}

std::vector<Example> epoch_examples(const std::vector<CaptionedClip>& clips, std::uint64_t seed,
                                    bool shuffle) {
  std::vector<Example> ex;
  for (std::size_t c = 0; c < clips.size(); ++c)
    for (std::size_t k = 0; k < clips[c].captions.size(); ++k) ex.push_back({c, k});
  if (shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(ex.begin(), ex.end(), rng);
  }
  return ex;
}

template <typename T>
Batch<T> make_batch(std::span<const Example> examples, const std::vector<CaptionedClip>& clips,
                    const std::vector<FeatureMap>& features, const Vocabulary& vocab) {
  if (examples.empty()) throw InputError("empty batch");
  if (features.size() != clips.size())
    throw InputError("feature list does not match the clip list");
  Batch<T> b;
  std::size_t bands = 0, t_max = 0;
  std::vector<std::vector<std::int32_t>> encoded;
  for (const auto& e : examples) {
    if (e.clip >= clips.size() || e.caption >= clips[e.clip].captions.size())
      throw InputError("example refers to a missing clip or caption");
    const FeatureMap& fm = features[e.clip];
    if (fm.num_bands == 0 || fm.num_frames == 0)
      throw InputError("clip " + clips[e.clip].clip_id + " has no features");
    if (bands == 0) bands = fm.num_bands;
    if (fm.num_bands != bands)
      throw ShapeError("clip " + clips[e.clip].clip_id + " has " + std::to_string(fm.num_bands) +
                       " bands, batch has " + std::to_string(bands));
    t_max = std::max(t_max, fm.num_frames);
    encoded.push_back(vocab.encode(clips[e.clip].captions[e.caption]));
    b.target_width = std::max(b.target_width, encoded.back().size());
  }
  const std::size_t B = examples.size();
  std::vector<T> feats(B * bands * t_max, T(0));
  b.targets.assign(B * b.target_width, Vocabulary::kPad);
  for (std::size_t i = 0; i < B; ++i) {
    const FeatureMap& fm = features[examples[i].clip];
    const std::size_t offset = t_max - fm.num_frames;
    for (std::size_t r = 0; r < bands; ++r)
      for (std::size_t f = 0; f < fm.num_frames; ++f)
        feats[(i * bands + r) * t_max + offset + f] = static_cast<T>(fm.at(r, f));
    std::copy(encoded[i].begin(), encoded[i].end(), b.targets.begin() + i * b.target_width);
    b.feature_lengths.push_back(fm.num_frames);
    b.target_lengths.push_back(encoded[i].size());
    b.examples.push_back(examples[i]);
  }
  b.features = Tensor<T>::from({B, 1, bands, t_max}, std::move(feats));
  return b;
}

template <typename T>
std::vector<Batch<T>> make_batches(const std::vector<CaptionedClip>& clips,
                                   const std::vector<FeatureMap>& features,
                                   const Vocabulary& vocab, std::size_t batch_size,
                                   std::uint64_t seed, bool shuffle) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  const auto ex = epoch_examples(clips, seed, shuffle);
  std::vector<Batch<T>> out;
  for (std::size_t i = 0; i < ex.size(); i += batch_size) {
    const std::size_t n = std::min(batch_size, ex.size() - i);
    out.push_back(make_batch<T>(std::span<const Example>(ex).subspan(i, n), clips, features, vocab));
  }
  return out;
}

template Batch<float> make_batch(std::span<const Example>, const std::vector<CaptionedClip>&,
                                 const std::vector<FeatureMap>&, const Vocabulary&);
template Batch<double> make_batch(std::span<const Example>, const std::vector<CaptionedClip>&,
                                  const std::vector<FeatureMap>&, const Vocabulary&);
template std::vector<Batch<float>> make_batches(const std::vector<CaptionedClip>&,
                                                const std::vector<FeatureMap>&, const Vocabulary&,
                                                std::size_t, std::uint64_t, bool);
template std::vector<Batch<double>> make_batches(const std::vector<CaptionedClip>&,
                                                 const std::vector<FeatureMap>&,
                                                 const Vocabulary&, std::size_t, std::uint64_t,
                                                 bool);

}  // namespace aac
