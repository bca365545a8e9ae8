// tests/acceptance.cc

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

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance --cli <path to speechedit binary> [--only 1,2,...] [--work DIR]

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradcheck.h"
#include "json.hpp"
#include "speechedit/augpipe.h"
#include "speechedit/evalkit.h"
#include "speechedit/melsurgery.h"
#include "test_util.h"
#include "toy_fixture.h"

using namespace speechedit;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string Fmt(double v, int precision = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string Sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

// Shared state: criterion 5 trains the model that criterion 6 reuses.
struct Context {
  std::string cli;
  fs::path work;
  std::optional<testutil::ToyFixture> toy;
  std::optional<SpeechEditor> editor;

  const testutil::ToyFixture &Toy() {
    if (!toy) toy = testutil::MakeToyFixture(7, 50, (work / "toy").string());
    return *toy;
  }
};

// ---------------------------------------------------------------------------

Verdict FramingArithmetic(Context &) {
  Stopwatch clock;
  SeededRng rng(1);
  const FbankConfig fbank;
  int mismatches = 0;
  Waveform w;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index n = 800 + static_cast<Eigen::Index>(rng.Below(1000000 - 800 + 1));
    w.samples.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) w.samples[k] = static_cast<float>(rng.Uniform() - 0.5);
    if (ExtractFbank(w, fbank).frames() != 1 + (n - 800) / 200) ++mismatches;
  }
  const double secs = clock.Seconds();
  return {mismatches == 0 && secs < 30.0,
          std::to_string(mismatches) + " mismatches in 1000 lengths, " + Fmt(secs, 1) + " s (limit 30 s)"};
}

Verdict MaskStitchExactness(Context &) {
  SeededRng rng(2);
  int failures = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int frames = 1 + static_cast<int>(rng.Below(300));
    MelSpectrogram mel;
    mel.normalized = true;
    mel.data.resize(frames, 80);
    for (Eigen::Index i = 0; i < mel.data.size(); ++i) mel.data.data()[i] = static_cast<float>(rng.Normal());

    std::vector<EditRegion> regions;
    std::vector<MelSpectrogram> generated;
    for (int pos = static_cast<int>(rng.Below(20)); pos <= frames;) {
      const int end = pos + static_cast<int>(rng.Below(std::min(40, frames - pos) + 1));
      const int n = static_cast<int>(rng.Below(40));
      regions.push_back({pos, end, n});
      MelSpectrogram g;
      g.normalized = true;
      g.data = MelMatrix::Constant(n, 80, static_cast<float>(trial));
      generated.push_back(g);
      pos = end + 1 + static_cast<int>(rng.Below(40));
    }

    // masking every region leaves the rest bit-identical
    MelSpectrogram masked = mel;
    for (const EditRegion &r : regions) masked = MaskMel(masked, {r.start_frame, r.end_frame, 0.1f});
    const MelSpectrogram out = StitchMel(masked, regions, generated);

    Eigen::Index want = frames;
    for (const EditRegion &r : regions) want += r.new_length - r.width();
    bool ok = out.frames() == want;
    int src = 0, dst = 0;
    for (std::size_t i = 0; ok && i <= regions.size(); ++i) {
      const int until = i < regions.size() ? regions[i].start_frame : frames;
      const int run = until - src;
      ok = (out.data.middleRows(dst, run).array() == mel.data.middleRows(src, run).array()).all() &&
           (masked.data.middleRows(src, run).array() == mel.data.middleRows(src, run).array()).all();
      if (i < regions.size()) {
        dst += run + regions[i].new_length;
        src = regions[i].end_frame;
      }
    }
    failures += !ok;
  }
  return {failures == 0, std::to_string(failures) + " failing cases of 500"};
}

Verdict ErrorRateOracle(Context &) {
  SeededRng rng(3);
  static const char *kAlphabet[] = {"a", "b", "c", "d"};
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Token> a, b;
    std::vector<std::string> sa, sb;
    for (auto [v, s] : {std::pair{&a, &sa}, std::pair{&b, &sb}}) {
      const int n = static_cast<int>(rng.Below(11));
      for (int i = 0; i < n; ++i) {
        s->push_back(kAlphabet[rng.Below(4)]);
        v->push_back({s->back(), Language::kEnglish, Entity::kNone});
      }
    }
    if (EditDistanceAlignment(a, b).cost != testutil::BruteForceEditDistance(sa, sb)) ++mismatches;
  }
  const ErrorRates r = ComputeErrorRates(
      {EditDistanceAlignment(TokenizeMixed("你好世界world"), TokenizeMixed("你好世介world"))});
  const bool exact = r.cer_man == 25.0 && r.wer_eng == 0.0 && r.mer == 20.0;
  return {mismatches == 0 && exact, std::to_string(mismatches) + " DP/brute-force mismatches in 1000 pairs; CER " +
                                        Fmt(r.cer_man, 1) + " WER " + Fmt(r.wer_eng, 1) + " MER " + Fmt(r.mer, 1)};
}

Verdict GradientCheck(Context &) {
  Stopwatch clock;
  const testutil::GradCheckResult r = testutil::RunGradCheck();
  const double secs = clock.Seconds();
  return {r.max_relative_error < 1e-4 && secs < 120.0,
          "max relative error " + Sci(r.max_relative_error) + " (" + r.worst_tensor + "), max |analytic - numeric| " +
              Sci(r.max_abs_difference) + " over " + std::to_string(r.checked) + " parameters (" +
              std::to_string(r.significant) + " with |grad| > 1e-6), " + Fmt(secs, 1) + " s (limit 120 s)"};
}

Verdict EditingFidelity(Context &ctx) {
  Stopwatch clock;
  const testutil::ToyFixture &toy = ctx.Toy();
  EditModelConfig cfg = toy.ModelConfig(7);
  const TrainSchedule schedule{.steps = 2000, .batch_size = 8, .log_every = 500};
  const TrainState state = TrainEditModel(toy.examples, cfg, TrainOptions{}, schedule,
                                          [&](std::int64_t step, const LossTerms &l) {
                                            std::cerr << "  [5] step " << step << " loss " << l.total() << " ("
                                                      << Fmt(clock.Seconds(), 0) << " s)\n";
                                          });
  const double train_secs = clock.Seconds();
  ctx.editor = SpeechEditor{state.model, toy.stats, toy.phones};

  const double l1 = MaskedRegionL1(state.model, toy.examples, 99);

  int bin_hits = 0, bin_frames = 0, dur_hits = 0, dur_total = 0;
  for (int i = 0; i < 10; ++i) {
    const Utterance &u = toy.corpus.manifest.entries[i];
    const int original = toy.corpus.phones[i][1];
    const int target = (original + 7) % kToyMaxVocab;
    const EditScript script{{EditOp{EditKind::kReplace, 1, 1,
                                    {Token{ToyPhoneCharacter(target), Language::kMandarin, Entity::kNone}}}}};
    const EditOutcome out = InferEdit(*ctx.editor, u, toy.normalized.at(u.id), &toy.corpus.alignment.at(u.id),
                                      script, toy.lexicon);
    const MelSpectrogram raw = DenormalizeMel(out.mel, toy.stats);
    const int want = testutil::OracleToneBin(ToyPhoneFrequency(target));
    for (int t = out.generated_spans[0].first; t < out.generated_spans[0].second; ++t) {
      Eigen::Index got;
      raw.data.row(t).maxCoeff(&got);
      bin_hits += got == want;
      ++bin_frames;
    }
    for (int d : out.new_phone_durations) {
      dur_hits += std::abs(d - kToyFramesPerPhone) <= 2;
      ++dur_total;
    }
  }
  const double bin_rate = bin_frames ? static_cast<double>(bin_hits) / bin_frames : 0.0;
  const double dur_rate = dur_total ? static_cast<double>(dur_hits) / dur_total : 0.0;
  const bool pass = l1 < 0.1 && bin_rate >= 0.9 && dur_rate >= 0.9 && train_secs < 900.0;
  return {pass, "(a) masked-region L1 " + Fmt(l1, 4) + " (< 0.1); (b) tone-bin match " + Fmt(100 * bin_rate, 1) +
                    "% of " + std::to_string(bin_frames) + " frames (>= 90%); (c) durations within 2 of 20: " +
                    std::to_string(dur_hits) + "/" + std::to_string(dur_total) + "; training " +
                    Fmt(train_secs, 0) + " s (limit 900 s)"};
}

std::string TreeDigest(const fs::path &root) {
  std::set<std::string> names;
  for (const auto &e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) names.insert(fs::relative(e.path(), root).string());
  std::string all;
  for (const std::string &n : names) all += n + "\n" + testutil::ReadFile((root / n).string());
  return all;
}

Verdict RecipeMatrix(Context &ctx) {
  const testutil::ToyFixture &toy = ctx.Toy();
  if (!ctx.editor) {
    EditModelConfig cfg = toy.ModelConfig(7);
    ctx.editor = SpeechEditor{EditModel<float>(cfg), toy.stats, toy.phones};
  }
  const std::vector<EditSpec> specs = GenerateToyEditSpecs(toy.corpus.manifest, 20, 10, 7);
  std::vector<std::string> problems;
  std::vector<std::vector<Token>> reference_texts;
  int split_feats = -1, split_wave = -1;
  for (RecipeKind kind : AllRecipes()) {
    std::string digest;
    for (int run = 0; run < 2; ++run) {
      AugJob job;
      job.source = &toy.corpus.manifest;
      job.alignment = &toy.corpus.alignment;
      job.editor = &*ctx.editor;
      job.lexicon = &toy.lexicon;
      job.specs = specs;
      job.recipe = {kind, 7};
      job.out_dir = (ctx.work / "recipes" / (std::string(RecipeName(kind)) + "-" + std::to_string(run))).string();
      job.jobs = 4;
      const AugOutput out = BuildAugmentationSet(job);
      const std::string d = TreeDigest(job.out_dir);
      if (run == 1) {
        if (d != digest) problems.push_back(std::string(RecipeName(kind)) + ": rerun differs");
        continue;
      }
      digest = d;
      int feats = 0, wave = 0;
      for (std::size_t i = 0; i < out.manifest.entries.size(); ++i) {
        const Utterance &u = out.manifest.entries[i];
        const bool want_feats = out.applied[i] == RecipeKind::kEditFeats;
        const bool ok = want_feats ? (u.feats && !u.audio) : (u.audio && !u.feats);
        if (!ok) problems.push_back(std::string(RecipeName(kind)) + ": wrong artifacts for " + u.id);
        feats += u.feats.has_value();
        wave += u.audio.has_value();
        if (reference_texts.size() <= i) reference_texts.push_back(u.tokens);
        else if (reference_texts[i] != u.tokens) problems.push_back(std::string(RecipeName(kind)) + ": text differs");
      }
      if (out.manifest.entries.size() != 10) problems.push_back(std::string(RecipeName(kind)) + ": entry count");
      if (kind == RecipeKind::kEditFeats && feats != 10) problems.push_back("edit-feats: not all feats");
      if (kind != RecipeKind::kEditFeats && kind != RecipeKind::kEditFeatsPlusTts && wave != 10)
        problems.push_back(std::string(RecipeName(kind)) + ": not all waveforms");
      if (kind == RecipeKind::kEditFeatsPlusTts) {
        split_feats = feats;
        split_wave = wave;
      }
    }
  }
  if (split_feats != 5 || split_wave != 5) problems.push_back("edit-feats+tts split not 5+5");
  std::string detail = "5 recipes x 10 specs, edit-feats+tts split " + std::to_string(split_feats) + "+" +
                       std::to_string(split_wave) + ", reruns byte-identical";
  if (!problems.empty()) detail = problems.front() + " (" + std::to_string(problems.size()) + " problems)";
  return {problems.empty(), detail};
}

Verdict VocoderSanity(Context &ctx) {
  const FbankConfig fbank;
  Waveform sine;
  sine.samples.resize(16000);
  for (int t = 0; t < 16000; ++t)
    sine.samples[t] = static_cast<float>(0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * t / 16000.0));
  const Waveform out = GriffinLimVocode(ExtractFbank(sine, fbank), fbank, 60);
  const std::vector<double> x(out.samples.data(), out.samples.data() + out.size());
  const int n = static_cast<int>(x.size());
  const int peak = testutil::OraclePeakBin(x, n);
  const double expected = 440.0 * n / 16000.0;
  const bool peak_ok = std::abs(peak - expected) <= 1.0;

  const testutil::ToyFixture &toy = ctx.Toy();
  long agree = 0, total = 0;
  for (int i = 0; i < 10; ++i) {
    const MelSpectrogram &mel = toy.raw.at(toy.corpus.manifest.entries[i].id);
    const MelSpectrogram back = ExtractFbank(GriffinLimVocode(mel, fbank, 60), fbank);
    for (Eigen::Index t = 0; t < std::min(mel.frames(), back.frames()); ++t) {
      Eigen::Index a, b;
      mel.data.row(t).maxCoeff(&a);
      back.data.row(t).maxCoeff(&b);
      agree += a == b;
      ++total;
    }
  }
  const double rate = static_cast<double>(agree) / static_cast<double>(total);
  return {peak_ok && rate >= 0.9, "440 Hz peak at " + Fmt(peak * 16000.0 / n, 1) + " Hz (bin " +
                                      std::to_string(peak) + ", expected " + Fmt(expected, 1) +
                                      "); round-trip argmax agreement " + Fmt(100 * rate, 1) + "% (>= 90%)"};
}

int Shell(const std::string &cmd, const fs::path &log) {
  const std::string full = cmd + " >> '" + log.string() + "' 2>&1";
  const int status = std::system(full.c_str());
  return status == 0 ? 0 : (WIFEXITED(status) ? WEXITSTATUS(status) : 128);
}

Verdict CliEndToEnd(Context &ctx) {
  Stopwatch clock;
  const fs::path d = ctx.work / "cli";
  fs::remove_all(d);
  fs::create_directories(d);
  const fs::path log = d / "log.txt";
  const std::string q = "'";
  auto p = [&](const std::string &rel) { return q + (d / rel).string() + q; };
  const std::string bin = q + ctx.cli + q;

  std::vector<std::pair<std::string, std::string>> steps = {
      {"gen-toy", bin + " gen-toy --seed 7 --utts 50 --out " + p("toy")},
      {"extract-feats", bin + " extract-feats --manifest " + p("toy/manifest.jsonl") + " --out " + p("feats") +
                            " --jobs 4"},
      {"train-editor", bin + " train-editor --manifest " + p("feats/manifest.jsonl") + " --alignment " +
                           p("toy/alignment.txt") + " --lexicon " + p("toy/lexicon.txt") + " --seed 7 --out " +
                           p("model")},
  };
  for (RecipeKind kind : AllRecipes()) {
    const std::string name = RecipeName(kind);
    steps.push_back({"augment " + name, bin + " augment --recipe " + name + " --manifest " +
                                            p("feats/manifest.jsonl") + " --alignment " + p("toy/alignment.txt") +
                                            " --lexicon " + p("toy/lexicon.txt") + " --model " +
                                            p("model/model.ckpt") + " --edits " + p("toy/edits.jsonl") +
                                            " --seed 7 --jobs 4 --out " + p("aug-" + name)});
  }
  for (const auto &[name, cmd] : steps) {
    const int code = Shell(cmd, log);
    if (code != 0)
      return {false, name + " exited with " + std::to_string(code) + " (log: " + log.string() + ")"};
  }

  // identity hypotheses
  const CorpusManifest refs = LoadManifest((d / "toy/manifest.jsonl").string());
  std::string hyp;
  for (const Utterance &u : refs.entries) hyp += u.id + "\t" + JoinTokens(u.tokens) + "\n";
  testutil::WriteFile((d / "hyp.tsv").string(), hyp);
  const int code = Shell(bin + " eval --ref " + p("toy/manifest.jsonl") + " --hyp " + p("hyp.tsv") + " --out " +
                             p("eval"),
                         log);
  if (code != 0) return {false, "eval exited with " + std::to_string(code)};
  const auto report = nlohmann::json::parse(testutil::ReadFile((d / "eval/report.json").string()));
  const double mer = report.at("mer").get<double>();
  const double secs = clock.Seconds();
  return {mer == 0.0 && secs < 1800.0, "all commands exit 0, identity MER " + Fmt(mer, 1) + ", " +
                                           Fmt(secs, 0) + " s (limit 1800 s)"};
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"speechedit acceptance suite"};
  std::string cli, only, work;
  app.add_option("--cli", cli, "speechedit binary")->required();
  app.add_option("--only", only, "Comma-separated criteria to run");
  app.add_option("--work", work, "Scratch directory (default: a fresh temp dir)");
  CLI11_PARSE(app, argc, argv);

  std::optional<testutil::TempDir> temp;
  Context ctx;
  ctx.cli = fs::absolute(cli).string();
  if (work.empty()) {
    temp.emplace("acceptance");
    ctx.work = temp->path();
  } else {
    ctx.work = fs::absolute(work);
    fs::create_directories(ctx.work);
  }
  std::set<int> selected;
  for (std::stringstream ss(only); std::getline(ss, cli, ',');)
    if (!cli.empty()) selected.insert(std::stoi(cli));

  const std::vector<std::pair<std::string, std::function<Verdict(Context &)>>> criteria = {
      {"framing arithmetic", FramingArithmetic},   {"mask/stitch exactness", MaskStitchExactness},
      {"error-rate oracle", ErrorRateOracle},      {"gradient check", GradientCheck},
      {"toy editing fidelity", EditingFidelity},   {"recipe matrix", RecipeMatrix},
      {"vocoder sanity", VocoderSanity},           {"end-to-end CLI", CliEndToEnd},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    Verdict v;
    try {
      v = criteria[i].second(ctx);
    } catch (const std::exception &e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    all = all && v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << number << " (" << criteria[i].first
              << "): " << v.detail << std::endl;
  }
  return all ? 0 : 1;
}
