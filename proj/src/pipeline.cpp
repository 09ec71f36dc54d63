// src/pipeline.cpp
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

#include "aac/pipeline.h"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "aac/error.h"
#include "aac/feature_io.h"
#include "aac/wav.h"
#include "json.hpp"

namespace aac {

namespace {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("missing file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename F>
void each_key(const json& obj, const char* section, F&& f) {
  if (!obj.is_object()) throw JsonError(std::string(section) + " must be a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!f(key, value)) throw JsonError("unknown " + std::string(section) + " key '" + key + "'");
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) h = (h ^ c) * 1099511628211ull;
  return h;
}

std::string fnv1a_hex(std::string_view bytes, std::uint64_t seed) {
  const std::uint64_t h = fnv1a(bytes, seed);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FeaturizeReport featurize(const FeaturizeOptions& opt) {
  const auto entries = read_manifest(opt.manifest);
  std::filesystem::create_directories(opt.out_dir);
  const std::string config_key = gammatone_config_json(opt.features);

  enum class Outcome { kWritten, kSkipped, kFailed };
  std::vector<Outcome> outcome(entries.size(), Outcome::kFailed);
  std::vector<std::string> message(entries.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const auto wav_path = opt.audio_dir / entries[i].file_name;
      const auto stem = opt.out_dir / std::filesystem::path(entries[i].file_name).stem();
      try {
        const std::string bytes = read_file(wav_path);
        const std::string hash = fnv1a_hex(bytes, fnv1a(config_key));
        auto bin = stem;
        bin += ".gtfm";
        if (std::filesystem::exists(bin) && stored_source_hash(stem) == hash) {
          outcome[i] = Outcome::kSkipped;
          continue;
        }
        std::istringstream in(bytes);
        const auto clip = read_wav(in);
        save_feature_map(stem, extract_features(clip, opt.features), hash);
        outcome[i] = Outcome::kWritten;
      } catch (const std::exception& e) {
        message[i] = e.what();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opt.jobs, entries.size()));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  FeaturizeReport report;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (outcome[i] == Outcome::kWritten) ++report.written;
    if (outcome[i] == Outcome::kSkipped) ++report.skipped;
    if (outcome[i] == Outcome::kFailed)
      report.failures.push_back({opt.audio_dir / entries[i].file_name, message[i]});
  }
  return report;
}

std::vector<FeatureMap> load_features(const std::vector<CaptionedClip>& clips,
                                      const std::filesystem::path& features_dir) {
  std::vector<FeatureMap> out;
  out.reserve(clips.size());
  for (const auto& c : clips) out.push_back(load_feature_map(features_dir / c.clip_id));
  return out;
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["features"] = nlohmann::ordered_json::parse(gammatone_config_json(features));
  j["model"] = {{"preset", model.preset},
                {"annotation_size", model.annotation_size},
                {"hidden_size", model.hidden_size},
                {"embed_size", model.embed_size},
                {"attention_size", model.attention_size},
                {"seed", model.seed}};
  j["train"] = {{"lr", train.lr},
                {"batch_size", train.batch_size},
                {"epochs", train.epochs},
                {"clip_norm", train.clip_norm},
                {"adam_beta1", train.adam_beta1},
                {"adam_beta2", train.adam_beta2},
                {"adam_eps", train.adam_eps},
                {"seed", train.seed}};
  j["val_max_len"] = val_max_len;
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text, const RunConfig& base) {
  RunConfig c = base;
  try {
    const auto j = json::parse(text);
    each_key(j, "config", [&](const std::string& key, const json& v) {
      if (key == "features") {
        c.features = gammatone_config_from_json(v.dump(), c.features);
      } else if (key == "model") {
        each_key(v, "model", [&](const std::string& k, const json& x) {
          if (k == "preset") c.model.preset = x.get<std::string>();
          else if (k == "annotation_size") c.model.annotation_size = x.get<std::size_t>();
          else if (k == "hidden_size") c.model.hidden_size = x.get<std::size_t>();
          else if (k == "embed_size") c.model.embed_size = x.get<std::size_t>();
          else if (k == "attention_size") c.model.attention_size = x.get<std::size_t>();
          else if (k == "seed") c.model.seed = x.get<std::uint64_t>();
          else return false;
          return true;
        });
      } else if (key == "train") {
        each_key(v, "train", [&](const std::string& k, const json& x) {
          if (k == "lr") c.train.lr = x.get<double>();
          else if (k == "batch_size") c.train.batch_size = x.get<std::size_t>();
          else if (k == "epochs") c.train.epochs = x.get<std::size_t>();
          else if (k == "clip_norm") c.train.clip_norm = x.get<double>();
          else if (k == "adam_beta1") c.train.adam_beta1 = x.get<double>();
          else if (k == "adam_beta2") c.train.adam_beta2 = x.get<double>();
          else if (k == "adam_eps") c.train.adam_eps = x.get<double>();
          else if (k == "seed") c.train.seed = x.get<std::uint64_t>();
          else return false;
          return true;
        });
      } else if (key == "val_max_len") {
        c.val_max_len = v.get<std::size_t>();
      } else {
        return false;
      }
      return true;
    });
  } catch (const json::exception& e) {
    throw JsonError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::from_json(const std::string& text) { return from_json(text, RunConfig{}); }

RunConfig RunConfig::load(const std::filesystem::path& path, const RunConfig& base) {
  return from_json(read_file(path), base);
}

RunConfig toy_recipe() {
  RunConfig c;
  c.train.lr = 1e-3;
  c.train.epochs = 200;
  return c;
}

TrainResult train_run(const TrainRunOptions& opt) {
  opt.config.train.validate();
  encoder_preset(opt.config.model.preset);
  const auto train_clips = load_clips(opt.manifest, {});
  TrainData train_set{train_clips, load_features(train_clips, opt.features_dir)};
  TrainData val_set = train_set;
  if (!opt.val_manifest.empty()) {
    const auto val_clips = load_clips(opt.val_manifest, {});
    val_set = {val_clips, load_features(val_clips, opt.val_features_dir.empty()
                                                       ? opt.features_dir
                                                       : opt.val_features_dir)};
  }

  std::vector<Tokens> captions;
  for (const auto& c : train_clips)
    for (const auto& t : c.captions) captions.push_back(t);
  const auto vocab = Vocabulary::build(captions);

  ModelConfig mc = opt.config.model;
  mc.vocab_size = vocab.size();
  mc.features = opt.config.features;
  std::filesystem::create_directories(opt.out_dir);
  vocab.save(opt.out_dir / "vocab.json");
  mc.save(opt.out_dir / "model.json");

  CaptionModel<float> model(mc);
  TrainOptions to;
  to.config = opt.config.train;
  to.val_max_len = opt.config.val_max_len;
  to.out_dir = opt.out_dir;
  to.on_epoch = opt.on_epoch;
  return train(model, vocab, train_set, val_set, to);
}

LoadedModel load_trained_model(const std::filesystem::path& model_dir,
                               const std::filesystem::path& checkpoint) {
  auto vocab = Vocabulary::load(model_dir / "vocab.json");
  const auto mc = ModelConfig::load(model_dir / "model.json");
  if (mc.vocab_size != vocab.size())
    throw InputError("model.json and vocab.json disagree on the vocabulary size");
  LoadedModel m{std::move(vocab), CaptionModel<float>(mc)};
  load_model_state(checkpoint.empty() ? model_dir / "best.tens" : checkpoint, m.model);
  return m;
}

std::vector<CaptionLine> caption_run(const CaptionRunOptions& opt) {
  auto loaded = load_trained_model(opt.model_dir, opt.checkpoint);
  std::vector<CaptionLine> out;
  for (const auto& e : read_manifest(opt.manifest)) {
    const std::string id = std::filesystem::path(e.file_name).stem().string();
    const auto fm = load_feature_map(opt.features_dir / id);
    out.push_back({id, detokenize(caption_features(loaded.model, fm, loaded.vocab, opt.decode))});
  }
  return out;
}

void write_captions_jsonl(std::ostream& out, const std::vector<CaptionLine>& lines) {
  for (const auto& l : lines) {
    nlohmann::ordered_json j;
    j["id"] = l.id;
    j["caption"] = l.caption;
    out << j.dump() << "\n";
  }
}

std::vector<CaptionLine> read_captions_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<CaptionLine> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("caption").get<std::string>()});
    } catch (const json::exception& e) {
      throw JsonError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

EvaluateResult evaluate_run(const std::filesystem::path& captions,
                            const std::filesystem::path& manifest) {
  std::map<std::string, std::string> by_id;
  for (auto& l : read_captions_jsonl(captions)) {
    if (!by_id.emplace(l.id, l.caption).second)
      throw InputError("duplicate caption for clip " + l.id);
  }
  EvaluateResult r;
  std::vector<EvalPair> pairs;
  for (const auto& clip : load_clips(manifest, {})) {
    const auto it = by_id.find(clip.clip_id);
    if (it == by_id.end()) throw InputError("no caption for clip " + clip.clip_id);
    r.ids.push_back(clip.clip_id);
    pairs.push_back({tokenize_caption(it->second), clip.captions});
  }
  r.report = evaluate_corpus(pairs, true);
  return r;
}

std::string report_json(const EvaluateResult& r) {
  auto scores = [](const auto& s) {
    nlohmann::ordered_json j;
    j["bleu_1"] = s.bleu[0];
    j["bleu_2"] = s.bleu[1];
    j["bleu_3"] = s.bleu[2];
    j["bleu_4"] = s.bleu[3];
    j["rouge_l"] = s.rouge_l;
    j["meteor_lite"] = s.meteor_lite;
    j["cider"] = s.cider;
    j["spider_lite"] = s.spider_lite;
    return j;
  };
  nlohmann::ordered_json j;
  j["num_clips"] = r.ids.size();
  j["corpus"] = scores(r.report);
  auto per = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.ids.size() && i < r.report.per_pair.size(); ++i) {
    auto p = scores(r.report.per_pair[i]);
    p["id"] = r.ids[i];
    per.push_back(std::move(p));
  }
  j["per_clip"] = std::move(per);
  return j.dump(2) + "\n";
}

std::string report_csv(const ScoreReport& r) {
  char row[512];
  std::snprintf(row, sizeof row, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.bleu[0],
                r.bleu[1], r.bleu[2], r.bleu[3], r.rouge_l, r.meteor_lite, r.cider, r.spider_lite);
  return std::string("BLEU1,BLEU2,BLEU3,BLEU4,ROUGE-L,METEOR-lite,CIDEr,SPIDEr-lite\n") + row;
}

}  // namespace aac
