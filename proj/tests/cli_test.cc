// tests/cli_test.cc

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

#include <map>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "speechedit/cli.h"
#include "speechedit/corpus.h"
#include "test_util.h"

using namespace speechedit;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "speechedit");
  std::ostringstream out, err;
  Run r;
  r.code = RunCommand(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::size_t Lines(const std::string &s) { return std::count(s.begin(), s.end(), '\n'); }

const std::map<std::string, std::vector<std::string>> kFlags = {
    {"gen-toy", {"--out", "--seed", "--utts", "--vocab", "--edits", "--config", "--jobs"}},
    {"extract-feats", {"--manifest", "--out", "--config", "--jobs"}},
    {"train-editor",
     {"--manifest", "--alignment", "--lexicon", "--out", "--seed", "--steps", "--batch-size", "--config",
      "--jobs"}},
    {"augment",
     {"--recipe", "--manifest", "--alignment", "--lexicon", "--model", "--edits", "--templates", "--names",
      "--names-per-template", "--gl-iters", "--mix-ratio", "--real-manifest", "--no-fallback", "--out",
      "--seed", "--config", "--jobs"}},
    {"synth", {"--model", "--lexicon", "--text", "--gl-iters", "--no-fallback", "--out", "--config", "--jobs"}},
    {"eval", {"--ref", "--hyp", "--names", "--require-cer", "--require-wer", "--out", "--config", "--jobs"}},
};

}  // namespace

TEST_CASE("help text matches the snapshots and lists every flag") {
  CHECK(CommandNames().size() == kFlags.size());
  for (const std::string &cmd : CommandNames()) {
    CAPTURE(cmd);
    const std::string help = CommandHelp(cmd);
    CHECK(help == testutil::ReadFile(std::string(SPEECHEDIT_TEST_DATA) + "/help/" + cmd + ".txt"));
    for (const std::string &flag : kFlags.at(cmd)) CHECK(help.find(flag) != std::string::npos);
    const Run r = Invoke({cmd, "--help"});
    CHECK(r.code == 0);
    CHECK(r.out == help);
  }
  CHECK(CommandHelp("") == testutil::ReadFile(std::string(SPEECHEDIT_TEST_DATA) + "/help/speechedit.txt"));
}

TEST_CASE("usage and runtime errors are single lines") {
  Run r = Invoke({"frobnicate"});
  CHECK(r.code == 2);
  CHECK(Lines(r.err) == 1);
  CHECK(r.err.rfind("error: ", 0) == 0);

  r = Invoke({"augment", "--recipe", "bogus", "--seed", "1", "--out", "/tmp/x"});
  CHECK(r.code != 0);
  CHECK(Lines(r.err) == 1);
  CHECK(r.err.find("edit-feats+tts") != std::string::npos);
  CHECK(r.err.find("splice") != std::string::npos);

  r = Invoke({"eval", "--ref", "/nonexistent/ref.jsonl", "--hyp", "/nonexistent/h.tsv", "--out", "/tmp/x"});
  CHECK(r.code == 1);
  CHECK(Lines(r.err) == 1);
  CHECK(r.err.rfind("error: eval: ", 0) == 0);

  r = Invoke({"gen-toy", "--out", "/tmp/x"});  // stochastic without a seed
  CHECK(r.code != 0);
  CHECK(r.err.find("seed") != std::string::npos);

  r = Invoke({"gen-toy", "--out", "/tmp/x", "--seed", "1", "--bogus-flag"});
  CHECK(r.code == 2);
}

TEST_CASE("gen-toy and eval end to end, idempotent") {
  testutil::TempDir dir("cli");
  Run r = Invoke({"gen-toy", "--out", dir.str("a"), "--seed", "3", "--utts", "6", "--edits", "4"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("seed=3") != std::string::npos);
  const char *files[] = {"manifest.jsonl", "alignment.txt", "lexicon.txt", "edits.jsonl", "job.json"};
  std::map<std::string, std::string> first;
  for (const char *f : files) first[f] = testutil::ReadFile(dir.str(std::string("a/") + f));
  REQUIRE(Invoke({"gen-toy", "--out", dir.str("a"), "--seed", "3", "--utts", "6", "--edits", "4"}).code == 0);
  for (const char *f : files) CHECK(testutil::ReadFile(dir.str(std::string("a/") + f)) == first[f]);

  // identity hypotheses from the references
  const CorpusManifest m = LoadManifest(dir.str("a/manifest.jsonl"));
  std::string hyp;
  for (const Utterance &u : m.entries) {
    hyp += u.id + "\t";
    for (const Token &t : u.tokens) hyp += t.surface + " ";
    hyp += "\n";
  }
  testutil::WriteFile(dir.str("hyp.tsv"), hyp);
  r = Invoke({"eval", "--ref", dir.str("a/manifest.jsonl"), "--hyp", dir.str("hyp.tsv"), "--out", dir.str("ev")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mer=0") != std::string::npos);
  const auto report = nlohmann::json::parse(testutil::ReadFile(dir.str("ev/report.json")));
  for (const char *k : {"cer_man", "wer_eng", "mer", "entity_recall", "entity_precision"}) CHECK(report.contains(k));
  CHECK(report["mer"] == 0.0);
  const auto job = nlohmann::json::parse(testutil::ReadFile(dir.str("ev/job.json")));
  CHECK(job["command"] == "eval");
  CHECK(job.contains("version"));
  CHECK(job.contains("config"));
}

TEST_CASE("config file values and flag overrides") {
  testutil::TempDir dir("clicfg");
  testutil::WriteFile(dir.str("c.toml"), "seed = 5\n[paths]\nout = \"" + dir.str("fromcfg") + "\"\n");
  Run r = Invoke({"gen-toy", "--config", dir.str("c.toml"), "--utts", "3", "--edits", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("seed=5") != std::string::npos);
  r = Invoke({"gen-toy", "--config", dir.str("c.toml"), "--seed", "6", "--utts", "3", "--edits", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("seed=6") != std::string::npos);

  testutil::WriteFile(dir.str("bad.toml"), "[fbank]\nn_melz = 80\n");
  r = Invoke({"gen-toy", "--config", dir.str("bad.toml"), "--seed", "1", "--out", dir.str("x")});
  CHECK(r.code != 0);
  CHECK(r.err.find("n_melz") != std::string::npos);
  CHECK(Lines(r.err) == 1);
}
