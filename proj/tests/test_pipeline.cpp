// tests/test_pipeline.cpp
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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aac/error.h"
#include "aac/feature_io.h"
#include "aac/pipeline.h"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("aac_test_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("FNV-1a reference vectors") {
  CHECK(aac::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(aac::fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(aac::fnv1a_hex("foobar") == "85944171f73967e8");
  CHECK(aac::fnv1a("bar", aac::fnv1a("foo")) == aac::fnv1a("foobar"));
}

TEST_CASE("featurize writes one map per clip and skips unchanged inputs") {
  const auto dir = scratch_dir("featurize");
  aac::write_toy_dataset(dir / "toy", aac::generate_toy_corpus(6, 2));
  aac::FeaturizeOptions opt{dir / "toy/manifest.csv", dir / "toy/audio", dir / "f1", {}, 1};

  auto first = aac::featurize(opt);
  CHECK(first.written == 6);
  CHECK(first.failures.empty());
  auto again = aac::featurize(opt);
  CHECK(again.written == 0);
  CHECK(again.skipped == 6);

  auto threaded = opt;
  threaded.out_dir = dir / "f3";
  threaded.jobs = 3;
  CHECK(aac::featurize(threaded).written == 6);
  for (int i = 0; i < 6; ++i) {
    const std::string name = "toy_00" + std::to_string(i) + ".gtfm";
    CHECK(slurp(dir / "f1" / name) == slurp(dir / "f3" / name));
  }

  auto changed = opt;
  changed.features.num_bands = 32;
  CHECK(aac::featurize(changed).written == 6);
  CHECK(aac::load_feature_map(dir / "f1/toy_000").num_bands == 32);

  { std::ofstream(dir / "toy/audio/toy_004.wav", std::ios::trunc) << "not audio"; }
  fs::remove(dir / "toy/audio/toy_001.wav");
  auto broken = aac::featurize(opt);
  REQUIRE(broken.failures.size() == 2);
  CHECK(broken.failures[0].path == dir / "toy/audio/toy_001.wav");
  CHECK(broken.failures[1].path == dir / "toy/audio/toy_004.wav");
  CHECK(broken.written == 4);
}

TEST_CASE("run config JSON") {
  auto c = aac::toy_recipe();
  c.model.preset = "nano101";
  c.train.batch_size = 4;
  c.features.num_bands = 40;
  const auto back = aac::RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());

  const auto partial = aac::RunConfig::from_json(R"({"train": {"epochs": 5}})", aac::toy_recipe());
  CHECK(partial.train.epochs == 5);
  CHECK(partial.train.lr == 1e-3);
  CHECK(partial.features.num_bands == 64);

  CHECK_THROWS_AS(aac::RunConfig::from_json(R"({"trian": {}})"), aac::JsonError);
  CHECK_THROWS_AS(aac::RunConfig::from_json(R"({"train": {"lr": "fast"}})"), aac::JsonError);
  CHECK_THROWS_AS(aac::RunConfig::from_json(R"({"features": {"bands": 3}})"), aac::JsonError);
  CHECK_THROWS_AS(aac::RunConfig::from_json("{"), aac::JsonError);
}

TEST_CASE("caption JSON lines and evaluation") {
  const auto dir = scratch_dir("evaluate");
  aac::write_manifest(dir / "m.csv", {{"x.wav", {"A dog barks.", "a dog is barking"}},
                                      {"y.wav", {"Rain falls on a roof"}}});
  {
    std::ofstream out(dir / "c.jsonl");
    aac::write_captions_jsonl(out, {{"y", "rain falls on a roof"}, {"x", "a dog barks"}});
  }
  const auto lines = aac::read_captions_jsonl(dir / "c.jsonl");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].id == "y");
  CHECK(lines[1].caption == "a dog barks");

  const auto r = aac::evaluate_run(dir / "c.jsonl", dir / "m.csv");
  CHECK(r.ids == std::vector<std::string>{"x", "y"});
  CHECK(r.report.bleu[0] == 1.0);
  CHECK(r.report.per_pair.size() == 2);
  const auto js = aac::report_json(r);
  CHECK(js.find("\"bleu_1\": 1.0") != std::string::npos);
  CHECK(aac::report_csv(r.report).rfind("BLEU1,BLEU2,BLEU3,BLEU4,ROUGE-L,METEOR-lite,CIDEr,SPIDEr-lite\n1,", 0) == 0);

  {
    std::ofstream out(dir / "partial.jsonl");
    aac::write_captions_jsonl(out, {{"x", "a dog"}});
  }
  CHECK_THROWS_AS(aac::evaluate_run(dir / "partial.jsonl", dir / "m.csv"), aac::InputError);
  { std::ofstream(dir / "bad.jsonl") << "{\"id\": \"x\"}\n"; }
  CHECK_THROWS_AS(aac::evaluate_run(dir / "bad.jsonl", dir / "m.csv"), aac::JsonError);
  CHECK_THROWS_AS(aac::read_captions_jsonl(dir / "nope.jsonl"), aac::InputError);
}

TEST_CASE("train, caption and reload through the pipeline") {
  const auto dir = scratch_dir("run");
  aac::write_toy_dataset(dir / "toy", aac::generate_toy_corpus(3, 5));
  aac::featurize({dir / "toy/manifest.csv", dir / "toy/audio", dir / "feat", {}, 1});

  aac::TrainRunOptions opt;
  opt.manifest = dir / "toy/manifest.csv";
  opt.features_dir = dir / "feat";
  opt.out_dir = dir / "model";
  opt.config = aac::toy_recipe();
  opt.config.train.epochs = 2;
  opt.config.model.hidden_size = 16;
  opt.config.model.annotation_size = 16;
  const auto result = aac::train_run(opt);
  CHECK(result.log.size() == 2);
  for (const char* f : {"vocab.json", "model.json", "train_log.jsonl", "best.tens", "last.tens"})
    CHECK(fs::exists(dir / "model" / f));

  aac::CaptionRunOptions cap{opt.manifest, opt.features_dir, opt.out_dir, {}, {}};
  cap.decode.beam.width = 1;
  const auto beam1 = aac::caption_run(cap);
  cap.decode.greedy = true;
  const auto greedy = aac::caption_run(cap);
  REQUIRE(beam1.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(beam1[i].id == greedy[i].id);
    CHECK(beam1[i].caption == greedy[i].caption);
  }

  CHECK_THROWS_AS(aac::load_trained_model(dir / "model", dir / "model/missing.tens"),
                  aac::InputError);
  CHECK_THROWS_AS(aac::load_trained_model(dir / "nowhere"), aac::InputError);
  { std::ofstream(dir / "model/model.json", std::ios::trunc) << "{\"encoder\": "; }
  CHECK_THROWS_AS(aac::load_trained_model(dir / "model"), aac::JsonError);
}
