// tests/toy_fixture.h

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

// Toy corpus plus everything needed to train or run the editor on it.
#ifndef SPEECHEDIT_TESTS_TOY_FIXTURE_H_
#define SPEECHEDIT_TESTS_TOY_FIXTURE_H_

#include <map>
#include <string>
#include <vector>

#include "speechedit/editor.h"

namespace testutil {

struct ToyFixture {
  speechedit::ToyCorpus corpus;
  speechedit::Lexicon lexicon;
  speechedit::MelStats stats;
  std::map<std::string, speechedit::MelSpectrogram> raw;         // by id
  std::map<std::string, speechedit::MelSpectrogram> normalized;  // by id
  speechedit::PhoneInventory phones;
  std::vector<speechedit::TrainExample> examples;

  speechedit::EditModelConfig ModelConfig(std::uint64_t seed = 1) const {
    speechedit::EditModelConfig cfg;
    cfg.phone_vocab = phones.size();
    cfg.seed = seed;
    return cfg;
  }
};

inline ToyFixture MakeToyFixture(std::uint64_t seed, int n_utts, const std::string &dir,
                                 int vocab = 20) {
  using namespace speechedit;
  ToyFixture f;
  f.corpus = GenerateToyCorpus(seed, n_utts, vocab, dir);
  f.lexicon = LoadLexicon(dir + "/lexicon.txt");
  const FbankConfig fbank;
  std::vector<MelSpectrogram> all;
  for (const Utterance &u : f.corpus.manifest.entries) {
    f.raw[u.id] = ExtractFbank(ReadWav(f.corpus.manifest.Resolve(*u.audio)), fbank);
    all.push_back(f.raw[u.id]);
  }
  f.stats = ComputeMelStats(all);
  for (const auto &[id, mel] : f.raw) f.normalized[id] = NormalizeMel(mel, f.stats);
  f.phones = BuildPhoneInventory(f.corpus.alignment, f.lexicon);
  f.examples = BuildTrainExamples(f.corpus.manifest, f.corpus.alignment, f.normalized, f.phones);
  return f;
}

}  // namespace testutil

#endif  // SPEECHEDIT_TESTS_TOY_FIXTURE_H_
