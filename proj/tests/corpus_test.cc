// tests/corpus_test.cc

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

#include <set>

#include "doctest.h"
#include "speechedit/corpus.h"
#include "speechedit/dsp.h"
#include "test_util.h"

using namespace speechedit;
using testutil::TempDir;

namespace {

Utterance SampleUtterance() {
  Utterance u;
  u.id = "u1";
  u.audio = "wav/u1.wav";
  u.speaker = "spk0";
  u.tokens = {{"你", Language::kMandarin, Entity::kNone},
              {"好", Language::kMandarin, Entity::kNone},
              {"world", Language::kEnglish, Entity::kNone}};
  return u;
}

}  // namespace

TEST_CASE("manifest line round-trips byte-identically") {
  const std::string line = SerializeManifestLine(SampleUtterance());
  CHECK(line ==
        R"({"id":"u1","audio":"wav/u1.wav","feats":null,"sample_rate":16000,"speaker":"spk0",)"
        R"("tokens":[{"surface":"你","lang":"zh","entity":"none"},{"surface":"好","lang":"zh",)"
        R"("entity":"none"},{"surface":"world","lang":"en","entity":"none"}]})");
  CHECK(SerializeManifestLine(ParseManifestLine(line)) == line);
  CHECK(ParseManifestLine(line) == SampleUtterance());
}

TEST_CASE("load_manifest: one line, duplicates, missing media") {
  TempDir dir("manifest");
  const std::string line = SerializeManifestLine(SampleUtterance());
  testutil::WriteFile(dir.str("one.jsonl"), line + "\n");
  CorpusManifest m = LoadManifest(dir.str("one.jsonl"));
  REQUIRE(m.entries.size() == 1);
  CHECK(SerializeManifestLine(m.entries[0]) == line);

  testutil::WriteFile(dir.str("dup.jsonl"), line + "\n" + line + "\n");
  CHECK_THROWS_WITH_AS(LoadManifest(dir.str("dup.jsonl")), doctest::Contains("u1"), Error);
  CHECK_THROWS_WITH_AS(LoadManifest(dir.str("dup.jsonl")), doctest::Contains(":2:"), Error);

  Utterance bare = SampleUtterance();
  bare.audio.reset();
  testutil::WriteFile(dir.str("bare.jsonl"), SerializeManifestLine(bare) + "\n");
  CHECK_THROWS_AS(LoadManifest(dir.str("bare.jsonl")), Error);

  testutil::WriteFile(dir.str("bad.jsonl"), line + "\n{not json\n");
  CHECK_THROWS_WITH_AS(LoadManifest(dir.str("bad.jsonl")), doctest::Contains(":2:"), Error);
}

TEST_CASE("token invariants") {
  Utterance u = SampleUtterance();
  u.tokens[0].surface = "你好";  // Mandarin tokens are single characters
  CHECK_THROWS_AS(ParseManifestLine(SerializeManifestLine(u)), Error);
  u = SampleUtterance();
  u.tokens[2].surface = "two words";
  CHECK_THROWS_AS(ParseManifestLine(SerializeManifestLine(u)), Error);
  u = SampleUtterance();
  u.sample_rate = 8000;
  CHECK_THROWS_AS(ParseManifestLine(SerializeManifestLine(u)), Error);
  u = SampleUtterance();
  u.tokens.clear();
  CHECK_THROWS_AS(ParseManifestLine(SerializeManifestLine(u)), Error);
}

TEST_CASE("property: random manifests round-trip") {
  SeededRng rng(11);
  const std::vector<std::string> zh = {"你", "好", "世", "界", "一", "人"};
  const std::vector<std::string> en = {"hello", "world", "john", "smith"};
  for (int trial = 0; trial < 100; ++trial) {
    Utterance u;
    u.id = "r" + std::to_string(trial);
    if (rng.Below(2)) u.audio = "a/" + u.id + ".wav";
    if (!u.audio || rng.Below(2)) u.feats = "f/" + u.id + ".melf";
    u.speaker = "s" + std::to_string(rng.Below(4));
    if (rng.Below(3) == 0) u.origin = "edit";
    const int n = 1 + static_cast<int>(rng.Below(8));
    for (int i = 0; i < n; ++i) {
      Token t;
      t.language = rng.Below(2) ? Language::kMandarin : Language::kEnglish;
      t.surface = t.language == Language::kMandarin ? zh[rng.Below(zh.size())] : en[rng.Below(en.size())];
      t.entity = rng.Below(4) == 0 ? Entity::kPersonName : Entity::kNone;
      u.tokens.push_back(t);
    }
    CHECK(ParseManifestLine(SerializeManifestLine(u)) == u);
  }
}

TEST_CASE("ingest_alignment: contiguous, overlap, unknown id, frame bound") {
  TempDir dir("align");
  CorpusManifest m;
  Utterance u = SampleUtterance();
  u.tokens.resize(2);
  m.entries.push_back(u);

  testutil::WriteFile(dir.str("ok.txt"), "u1 0 p0 0 20\nu1 1 p1 20 45\n");
  Alignment a = IngestAlignment(dir.str("ok.txt"), m);
  REQUIRE(a["u1"].size() == 2);
  CHECK(a["u1"][1].start_frame == a["u1"][0].end_frame);
  CHECK(AlignedFrameCount(a["u1"]) == 45);

  testutil::WriteFile(dir.str("overlap.txt"), "u1 0 p0 0 20\nu1 1 p1 15 30\n");
  CHECK_THROWS_WITH_AS(IngestAlignment(dir.str("overlap.txt"), m), doctest::Contains("overlap"), Error);

  testutil::WriteFile(dir.str("ghost.txt"), "u1 0 p0 0 20\nu1 1 p1 20 45\nghost 0 p0 0 5\n");
  CHECK_THROWS_WITH_AS(IngestAlignment(dir.str("ghost.txt"), m), doctest::Contains("ghost"), Error);

  testutil::WriteFile(dir.str("gap.txt"), "u1 0 p0 0 20\nu1 1 p1 22 45\n");
  CHECK_THROWS_AS(IngestAlignment(dir.str("gap.txt"), m), Error);

  testutil::WriteFile(dir.str("short.txt"), "u1 0 p0 0 20\n");
  CHECK_THROWS_AS(IngestAlignment(dir.str("short.txt"), m), Error);

  // end_frame beyond the available mel
  MelSpectrogram mel;
  mel.data = MelMatrix::Zero(40, 80);
  WriteMel(dir.str("u1.melf"), mel);
  m.entries[0].feats = "u1.melf";
  m.base_dir = dir.str();
  CHECK_THROWS_WITH_AS(IngestAlignment(dir.str("ok.txt"), m), doctest::Contains("40"), Error);
}

TEST_CASE("token_frame_span") {
  const AlignmentList a = {{"u", 0, "a", 0, 10}, {"u", 0, "b", 10, 30}, {"u", 1, "c", 30, 40}, {"u", 1, "d", 40, 50}};
  CHECK(TokenFrameSpan(a, 1) == std::make_pair(30, 50));
  CHECK(TokenFrameSpan(a, 0).first == 0);
  CHECK_THROWS_AS(TokenFrameSpan(a, 2), Error);
}

TEST_CASE("seconds to frames snaps outward") {
  CHECK(SecondsToFrameSpan(0.0, 0.25) == std::make_pair(0, 20));
  CHECK(SecondsToFrameSpan(0.01, 0.26) == std::make_pair(0, 21));
  CHECK(SecondsToFrameSpan(0.0125, 0.025) == std::make_pair(1, 2));
}

TEST_CASE("toy corpus: determinism and exact alignments") {
  TempDir a("toy_a"), b("toy_b");
  ToyCorpus ca = GenerateToyCorpus(7, 6, 20, a.str());
  GenerateToyCorpus(7, 6, 20, b.str());
  for (const char *f : {"manifest.jsonl", "alignment.txt", "lexicon.txt"})
    CHECK(testutil::ReadFile(a.str(f)) == testutil::ReadFile(b.str(f)));
  for (const Utterance &u : ca.manifest.entries)
    CHECK(testutil::ReadFile(a.str(*u.audio)) == testutil::ReadFile(b.str(*u.audio)));

  CorpusManifest loaded = LoadManifest(a.str("manifest.jsonl"));
  Alignment ali = IngestAlignment(a.str("alignment.txt"), loaded);
  FbankConfig fb;
  for (std::size_t i = 0; i < loaded.entries.size(); ++i) {
    const Utterance &u = loaded.entries[i];
    const AlignmentList &rows = ali.at(u.id);
    int covered = 0;
    for (const auto &r : rows) covered += r.end_frame - r.start_frame;
    CHECK(covered == AlignedFrameCount(rows));
    CHECK(covered == kToyFramesPerPhone * static_cast<int>(ca.phones[i].size()));
    const MelSpectrogram mel = ExtractFbank(ReadWav(loaded.Resolve(*u.audio)), fb);
    CHECK(mel.frames() == covered);
    CHECK(u.tokens.size() >= 3);
    CHECK(u.tokens.size() <= 8);
  }
}

TEST_CASE("toy corpus: phone spans carry the oracle tone bin") {
  TempDir dir("toy_tone");
  ToyCorpus toy = GenerateToyCorpus(3, 4, 20, dir.str());
  FbankConfig fb;
  int frames = 0, hits = 0;
  for (std::size_t i = 0; i < toy.manifest.entries.size(); ++i) {
    const Utterance &u = toy.manifest.entries[i];
    const MelSpectrogram mel = ExtractFbank(ReadWav(toy.manifest.Resolve(*u.audio)), fb);
    for (const AlignmentEntry &e : toy.alignment.at(u.id)) {
      const int phone = toy.phones[i][e.token_index];
      const int want = testutil::OracleToneBin(ToyPhoneFrequency(phone));
      // interior frames: the first and last frame of a phone straddle the edge
      for (int t = e.start_frame + 2; t < e.end_frame - 2; ++t) {
        Eigen::Index got;
        mel.data.row(t).maxCoeff(&got);
        hits += got == want;
        ++frames;
      }
    }
  }
  CHECK(hits == frames);
}

TEST_CASE("toy corpus: distinct seeds give distinct sequences") {
  std::set<std::vector<std::vector<int>>> seen;
  for (std::uint64_t seed = 0; seed < 100; ++seed) seen.insert(SampleToyPhoneSequences(seed, 5, 20));
  CHECK(seen.size() == 100);
  CHECK_THROWS_AS(SampleToyPhoneSequences(1, 5, 21), Error);
  CHECK_THROWS_AS(SampleToyPhoneSequences(1, 0, 20), Error);
}

TEST_CASE("toy phone frequencies and symbols") {
  CHECK(ToyPhoneFrequency(0) == 300.0);
  CHECK(ToyPhoneFrequency(19) == 2200.0);
  CHECK(ToyPhoneSymbol(7) == "p7");
  std::set<std::string> chars;
  for (int k = 0; k < kToyMaxVocab; ++k) chars.insert(ToyPhoneCharacter(k));
  CHECK(chars.size() == kToyMaxVocab);
}

TEST_CASE("frame boundaries map to samples at hop centres") {
  CHECK(FrameBoundaryToSample(0) == 300);
  CHECK(FrameBoundaryToSample(20) == 4300);
}

TEST_CASE("seeded rng is reproducible") {
  SeededRng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.Next() == b.Next());
  SeededRng c(9);
  for (int i = 0; i < 1000; ++i) {
    CHECK(c.Below(7) < 7);
    const double u = c.Uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
