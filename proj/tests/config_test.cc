// tests/config_test.cc

// Copyright 2026  The speechedit Authors

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

#include "doctest.h"
#include "speechedit/config.h"
#include "test_util.h"

using namespace speechedit;

TEST_CASE("empty config gives every default") {
  const RunConfig c = ParseConfig("");
  CHECK(c.fbank.n_mels == 80);
  CHECK(c.fbank.frame_size == 800);
  CHECK(c.fbank.hop == 200);
  CHECK(c.fbank.n_fft == 1024);
  CHECK(c.model == EditModelConfig{});
  CHECK(c.train.learning_rate == 1e-3);
  CHECK(c.train.beta2 == 0.98);
  CHECK(c.schedule.steps == 2000);
  CHECK(c.schedule.batch_size == 8);
  CHECK(c.augment.recipe == "edit");
  CHECK(c.augment.mask_value == doctest::Approx(0.1));
  CHECK(c.augment.griffin_lim_iterations == 60);
  CHECK_FALSE(c.augment.mix_ratio.has_value());
  CHECK_FALSE(c.seed.has_value());
  CHECK(c.jobs == 1);
  CHECK(c.paths.manifest.empty());
}

TEST_CASE("values from every section are applied") {
  const RunConfig c = ParseConfig(R"(
seed = 42
jobs = 3
[paths]
manifest = "m.jsonl"
out = "outdir"
[fbank]
n_mels = 80
[model]
d_model = 32
steps = 50
learning_rate = 0.002
[augment]
recipe = "edit-feats"
mix_ratio = 1
[eval]
require_cer = true
)");
  CHECK(*c.seed == 42);
  CHECK(c.jobs == 3);
  CHECK(c.paths.manifest == "m.jsonl");
  CHECK(c.paths.out == "outdir");
  CHECK(c.model.d_model == 32);
  CHECK(c.model.seed == 42);
  CHECK(c.schedule.steps == 50);
  CHECK(c.train.learning_rate == 0.002);
  CHECK(c.augment.recipe == "edit-feats");
  CHECK(*c.augment.mix_ratio == 1.0);
  CHECK(c.eval.require_cer);
}

TEST_CASE("unknown keys and mistyped values are errors naming the key") {
  CHECK_THROWS_WITH_AS(ParseConfig("[fbank]\nn_melz = 80\n"), doctest::Contains("fbank.n_melz"), Error);
  CHECK_THROWS_WITH_AS(ParseConfig("[bogus]\nx = 1\n"), doctest::Contains("bogus"), Error);
  CHECK_THROWS_WITH_AS(ParseConfig("[fbank]\nn_mels = \"eighty\"\n"), doctest::Contains("fbank.n_mels"),
                       Error);
  CHECK_THROWS_WITH_AS(ParseConfig("[augment]\nallow_fallback = 1\n"),
                       doctest::Contains("augment.allow_fallback"), Error);
  CHECK_THROWS_AS(ParseConfig("[fbank\n"), Error);
  CHECK_THROWS_AS(LoadConfig("/nonexistent/c.toml"), Error);
}

TEST_CASE("n_mels = 81 is a valid feature config but no model accepts it") {
  const RunConfig c = ParseConfig("[fbank]\nn_mels = 81\n");
  CHECK(c.fbank.n_mels == 81);
  EditModelConfig mc;
  mc.phone_vocab = 4;
  mc.d_model = 8;
  mc.ff_width = 8;
  const SpeechEditor editor{EditModel<float>(mc), {}, {}};
  CHECK_THROWS_WITH_AS(editor.CheckFbank(c.fbank), doctest::Contains("81"), Error);
  CHECK_NOTHROW(editor.CheckFbank(ParseConfig("").fbank));
}

TEST_CASE("resolved config json is stable") {
  const RunConfig c = ParseConfig("seed = 7\n");
  const auto j = ConfigToJson(c);
  CHECK(j.contains("fbank"));
  CHECK(j.contains("model"));
  CHECK(j.dump() == ConfigToJson(ParseConfig("seed = 7\n")).dump());
}

TEST_CASE("load_config reads files") {
  testutil::TempDir dir("cfg");
  testutil::WriteFile(dir.str("c.toml"), "[augment]\nrecipe = \"splice\"\n");
  CHECK(LoadConfig(dir.str("c.toml")).augment.recipe == "splice");
}
