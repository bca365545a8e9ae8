// src/cli.cc

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

#include "speechedit/cli.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "speechedit/augpipe.h"
#include "speechedit/config.h"
#include "speechedit/corpus.h"
#include "speechedit/dsp.h"
#include "speechedit/editor.h"
#include "speechedit/evalkit.h"
#include "speechedit/textgen.h"

namespace speechedit {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> manifest, alignment, lexicon, names, templates, edits, model,
      real_manifest, ref, hyp, out, recipe, text;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs, steps, batch_size, gl_iters, names_per_template;
  std::optional<double> mix_ratio;
  int utts = 50, vocab = 20, n_edits = 10;
  bool require_cer = false, require_wer = false, no_fallback = false;
};

void AddCommon(CLI::App *cmd, Flags *f) {
  cmd->add_option("--config", f->config, "TOML run configuration");
  cmd->add_option("--jobs", f->jobs, "Worker threads (default 1)");
}

std::unique_ptr<CLI::App> MakeApp(Flags *f) {
  auto app = std::make_unique<CLI::App>("Text-based speech editing for ASR data augmentation",
                                        "speechedit");
  app->set_version_flag("--version", std::string(kVersion));
  app->require_subcommand(1, 1);

  CLI::App *gen = app->add_subcommand("gen-toy", "Generate the synthetic tone corpus");
  gen->add_option("--out", f->out, "Output directory");
  gen->add_option("--seed", f->seed, "Random seed");
  gen->add_option("--utts", f->utts, "Number of utterances")->capture_default_str();
  gen->add_option("--vocab", f->vocab, "Number of toy phones (<= 20)")->capture_default_str();
  gen->add_option("--edits", f->n_edits, "Number of edit specs written to edits.jsonl")
      ->capture_default_str();
  AddCommon(gen, f);

  CLI::App *ext = app->add_subcommand("extract-feats", "Extract log-mel features for a manifest");
  ext->add_option("--manifest", f->manifest, "Input manifest (JSONL)");
  ext->add_option("--out", f->out, "Output directory");
  AddCommon(ext, f);

  CLI::App *train = app->add_subcommand("train-editor", "Train the speech editing model");
  train->add_option("--manifest", f->manifest, "Training manifest (JSONL)");
  train->add_option("--alignment", f->alignment, "Phone alignment file");
  train->add_option("--lexicon", f->lexicon, "Pronunciation lexicon");
  train->add_option("--out", f->out, "Output directory");
  train->add_option("--seed", f->seed, "Random seed");
  train->add_option("--steps", f->steps, "Training steps (default 2000)");
  train->add_option("--batch-size", f->batch_size, "Utterances per step (default 8)");
  AddCommon(train, f);

  CLI::App *aug = app->add_subcommand("augment", "Build an augmentation set");
  aug->add_option("--recipe", f->recipe, "splice, tts, edit, edit-feats or edit-feats+tts");
  aug->add_option("--manifest", f->manifest, "Source manifest (JSONL)");
  aug->add_option("--alignment", f->alignment, "Phone alignment file");
  aug->add_option("--lexicon", f->lexicon, "Pronunciation lexicon");
  aug->add_option("--model", f->model, "Model checkpoint");
  aug->add_option("--edits", f->edits, "Edit specs (JSONL)");
  aug->add_option("--templates", f->templates, "Name template database (JSONL)");
  aug->add_option("--names", f->names, "Name list");
  aug->add_option("--names-per-template", f->names_per_template,
                  "Names drawn per template (default 1)");
  aug->add_option("--gl-iters", f->gl_iters, "Griffin-Lim iterations (default 60)");
  aug->add_option("--mix-ratio", f->mix_ratio, "Real utterances per augmented one");
  aug->add_option("--real-manifest", f->real_manifest, "Real pool for mixing (default: --manifest)");
  aug->add_flag("--no-fallback", f->no_fallback, "Reject words missing from the lexicon");
  aug->add_option("--out", f->out, "Output directory");
  aug->add_option("--seed", f->seed, "Random seed");
  AddCommon(aug, f);

  CLI::App *synth = app->add_subcommand("synth", "Synthesize text with the editing model");
  synth->add_option("--model", f->model, "Model checkpoint");
  synth->add_option("--lexicon", f->lexicon, "Pronunciation lexicon");
  synth->add_option("--text", f->text, "Text to synthesize");
  synth->add_option("--gl-iters", f->gl_iters, "Griffin-Lim iterations (default 60)");
  synth->add_flag("--no-fallback", f->no_fallback, "Reject words missing from the lexicon");
  synth->add_option("--out", f->out, "Output directory");
  AddCommon(synth, f);

  CLI::App *ev = app->add_subcommand("eval", "Score hypotheses (CER, WER, MER, names)");
  ev->add_option("--ref", f->ref, "Reference manifest (JSONL)");
  ev->add_option("--hyp", f->hyp, "Hypotheses, utt_id<TAB>text per line");
  ev->add_option("--names", f->names, "Name list for entity precision");
  ev->add_flag("--require-cer", f->require_cer, "Fail without Mandarin reference tokens");
  ev->add_flag("--require-wer", f->require_wer, "Fail without English reference tokens");
  ev->add_option("--out", f->out, "Output directory");
  AddCommon(ev, f);
  return app;
}

template <typename T>
void Overlay(const std::optional<T> &flag, T *target) {
  if (flag) *target = *flag;
}

RunConfig ResolveConfig(const Flags &f) {
  RunConfig c = f.config ? LoadConfig(*f.config) : RunConfig{};
  PathsConfig &p = c.paths;
  Overlay(f.manifest, &p.manifest);
  Overlay(f.alignment, &p.alignment);
  Overlay(f.lexicon, &p.lexicon);
  Overlay(f.names, &p.names);
  Overlay(f.templates, &p.templates);
  Overlay(f.edits, &p.edits);
  Overlay(f.model, &p.model);
  Overlay(f.real_manifest, &p.real_manifest);
  Overlay(f.ref, &p.ref);
  Overlay(f.hyp, &p.hyp);
  Overlay(f.out, &p.out);
  Overlay(f.recipe, &c.augment.recipe);
  Overlay(f.jobs, &c.jobs);
  Overlay(f.steps, &c.schedule.steps);
  Overlay(f.batch_size, &c.schedule.batch_size);
  Overlay(f.gl_iters, &c.augment.griffin_lim_iterations);
  Overlay(f.names_per_template, &c.augment.names_per_template);
  if (f.mix_ratio) c.augment.mix_ratio = *f.mix_ratio;
  if (f.seed) c.seed = c.model.seed = *f.seed;
  if (f.no_fallback) c.augment.allow_fallback = false;
  if (f.require_cer) c.eval.require_cer = true;
  if (f.require_wer) c.eval.require_wer = true;
  if (c.jobs < 1) Fail("--jobs must be >= 1");
  return c;
}

const std::string &Need(const std::string &value, const char *flag) {
  if (value.empty()) Fail("missing required ", flag);
  return value;
}

const std::string &NeedFile(const std::string &value, const char *flag) {
  Need(value, flag);
  if (!fs::exists(value)) Fail(flag, " path does not exist: ", value);
  return value;
}

std::uint64_t NeedSeed(const RunConfig &c, std::ostream &out) {
  if (!c.seed) Fail("missing required --seed (or top-level `seed` in the config)");
  out << "seed=" << *c.seed << "\n";
  return *c.seed;
}

void WriteJob(const fs::path &dir, const std::string &command, const RunConfig &c,
              ordered_json extra = ordered_json::object()) {
  ordered_json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["seed"] = c.seed ? ordered_json(*c.seed) : nullptr;
  j["config"] = ConfigToJson(c);
  for (auto &[k, v] : extra.items()) j[k] = v;
  std::ofstream os(dir / "job.json", std::ios::binary);
  os << j.dump(2) << '\n';
  if (!os) Fail("cannot write ", (dir / "job.json").string());
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
// failure in index order.
template <typename Fn>
void ParallelFor(std::size_t n, int jobs, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

int GenToy(const Flags &f, const RunConfig &c, std::ostream &out) {
  const fs::path dir = Need(c.paths.out, "--out");
  const std::uint64_t seed = NeedSeed(c, out);
  ToyCorpus toy = GenerateToyCorpus(seed, f.utts, f.vocab, dir.string());
  std::vector<EditSpec> specs = GenerateToyEditSpecs(toy.manifest, f.vocab, f.n_edits, seed);
  SaveEditSpecs((dir / "edits.jsonl").string(), specs);
  WriteJob(dir, "gen-toy", c,
           {{"utts", f.utts}, {"vocab", f.vocab}, {"edits", f.n_edits}});
  out << "wrote " << toy.manifest.entries.size() << " utterances and " << specs.size()
      << " edit specs to " << dir.string() << "\n";
  return 0;
}

int ExtractFeats(const RunConfig &c, std::ostream &out) {
  CorpusManifest manifest = LoadManifest(NeedFile(c.paths.manifest, "--manifest"));
  const fs::path dir = Need(c.paths.out, "--out");
  c.fbank.Check();
  fs::create_directories(dir / "feats");
  CorpusManifest result = RebaseManifest(manifest, dir.string());
  ParallelFor(manifest.entries.size(), c.jobs, [&](std::size_t i) {
    const Utterance &u = manifest.entries[i];
    if (!u.audio) Fail(u.id, ": no audio to extract features from");
    const MelSpectrogram mel = ExtractFbank(ReadWav(manifest.Resolve(*u.audio)), c.fbank);
    const std::string rel = "feats/" + u.id + ".melf";
    WriteMel((dir / rel).string(), mel);
    result.entries[i].feats = rel;
  });
  SaveManifest((dir / "manifest.jsonl").string(), result);
  WriteJob(dir, "extract-feats", c, {{"utterances", manifest.entries.size()}});
  out << "extracted features for " << manifest.entries.size() << " utterances\n";
  return 0;
}

int TrainEditor(const RunConfig &c, std::ostream &out) {
  const CorpusManifest manifest = LoadManifest(NeedFile(c.paths.manifest, "--manifest"));
  const Alignment alignment = IngestAlignment(NeedFile(c.paths.alignment, "--alignment"), manifest);
  const Lexicon lexicon = LoadLexicon(NeedFile(c.paths.lexicon, "--lexicon"));
  const fs::path dir = Need(c.paths.out, "--out");
  NeedSeed(c, out);
  if (c.fbank.n_mels != c.model.mel_bins)
    Fail("fbank.n_mels = ", c.fbank.n_mels, " does not match model.mel_bins = ", c.model.mel_bins);

  std::vector<MelSpectrogram> raw(manifest.entries.size());
  ParallelFor(raw.size(), c.jobs,
              [&](std::size_t i) { raw[i] = LoadRawMel(manifest, manifest.entries[i], c.fbank); });
  SpeechEditor editor{EditModel<float>(), ComputeMelStats(raw), BuildPhoneInventory(alignment, lexicon)};
  std::map<std::string, MelSpectrogram> mels;
  for (std::size_t i = 0; i < raw.size(); ++i)
    mels.emplace(manifest.entries[i].id, NormalizeMel(raw[i], editor.stats));
  const std::vector<TrainExample> examples =
      BuildTrainExamples(manifest, alignment, mels, editor.phones);

  EditModelConfig config = c.model;
  config.phone_vocab = editor.phones.size();
  fs::create_directories(dir);
  std::ofstream log(dir / "train_log.tsv", std::ios::binary);
  log << "step\tmasked_l1\tunmasked_l1\tduration\ttotal\n";
  TrainState state = TrainEditModel(
      examples, config, c.train, c.schedule, [&](std::int64_t step, const LossTerms &l) {
        log << step << '\t' << l.masked_l1 << '\t' << l.unmasked_l1 << '\t' << l.duration << '\t'
            << l.total() << '\n';
        out << "step " << step << " loss " << l.total() << "\n";
      });
  editor.model = state.model;
  SaveCheckpoint((dir / "model.ckpt").string(), editor);
  const double masked_l1 = MaskedRegionL1(editor.model, examples, *c.seed ^ 0xE7A1ull, c.train);
  WriteJob(dir, "train-editor", c,
           {{"examples", examples.size()},
            {"phones", editor.phones.size()},
            {"steps", state.step},
            {"masked_region_l1", masked_l1}});
  out << "masked_region_l1=" << masked_l1 << "\n";
  return 0;
}

int Augment(const RunConfig &c, std::ostream &out) {
  const AugRecipe recipe{ParseRecipe(c.augment.recipe), NeedSeed(c, out)};
  const CorpusManifest manifest = LoadManifest(NeedFile(c.paths.manifest, "--manifest"));
  std::optional<Alignment> alignment;
  if (!c.paths.alignment.empty())
    alignment = IngestAlignment(NeedFile(c.paths.alignment, "--alignment"), manifest);
  const Lexicon lexicon = LoadLexicon(NeedFile(c.paths.lexicon, "--lexicon"));
  const SpeechEditor editor = LoadCheckpoint(NeedFile(c.paths.model, "--model"));
  editor.CheckFbank(c.fbank);

  std::vector<EditSpec> specs;
  if (!c.paths.edits.empty()) specs = LoadEditSpecs(NeedFile(c.paths.edits, "--edits"));
  if (!c.paths.templates.empty()) {
    const CorpusManifest templates = LoadManifest(NeedFile(c.paths.templates, "--templates"), true);
    const auto names = LoadNameList(NeedFile(c.paths.names, "--names"));
    std::vector<EditSpec> more =
        SpecsFromTemplates(manifest, templates, names, c.augment.names_per_template, *c.seed);
    specs.insert(specs.end(), more.begin(), more.end());
  }
  if (specs.empty()) Fail("no edit specs: pass --edits and/or --templates with --names");

  AugJob job;
  job.source = &manifest;
  job.alignment = alignment ? &*alignment : nullptr;
  job.editor = &editor;
  job.lexicon = &lexicon;
  job.specs = std::move(specs);
  job.recipe = recipe;
  job.out_dir = Need(c.paths.out, "--out");
  job.fbank = c.fbank;
  job.griffin_lim_iterations = c.augment.griffin_lim_iterations;
  job.infer.mask_value = static_cast<float>(c.augment.mask_value);
  job.infer.allow_fallback = c.augment.allow_fallback;
  job.jobs = c.jobs;
  ordered_json run;
  run["command"] = "augment";
  run["version"] = kVersion;
  run["seed"] = *c.seed;
  run["config"] = ConfigToJson(c);
  job.provenance = std::move(run);
  const AugOutput result = BuildAugmentationSet(job);
  out << "wrote " << result.manifest.entries.size() << " " << RecipeName(recipe.kind)
      << " utterances to " << job.out_dir << "\n";

  if (c.augment.mix_ratio) {
    const std::string &real_path =
        c.paths.real_manifest.empty() ? c.paths.manifest : c.paths.real_manifest;
    const CorpusManifest real = LoadManifest(NeedFile(real_path, "--real-manifest"));
    CorpusManifest mixed = MixSets(result.manifest, real, *c.augment.mix_ratio, *c.seed);
    SaveManifest((fs::path(job.out_dir) / "mixed.jsonl").string(),
                 RebaseManifest(mixed, job.out_dir));
    out << "wrote mixed.jsonl with " << mixed.entries.size() << " utterances\n";
  }
  return 0;
}

int Synth(const RunConfig &c, const Flags &f, std::ostream &out) {
  const SpeechEditor editor = LoadCheckpoint(NeedFile(c.paths.model, "--model"));
  editor.CheckFbank(c.fbank);
  const Lexicon lexicon = LoadLexicon(NeedFile(c.paths.lexicon, "--lexicon"));
  if (!f.text || f.text->empty()) Fail("missing required --text");
  const std::vector<Token> tokens = TokensFromText(*f.text);
  if (tokens.empty()) Fail("--text contains no tokens");
  const fs::path dir = Need(c.paths.out, "--out");
  InferOptions options;
  options.mask_value = static_cast<float>(c.augment.mask_value);
  options.allow_fallback = c.augment.allow_fallback;
  std::vector<int> durations;
  const MelSpectrogram mel =
      DenormalizeMel(SynthFull(editor, tokens, lexicon, options, &durations), editor.stats);
  fs::create_directories(dir);
  WriteMel((dir / "synth.melf").string(), mel);
  WriteWav((dir / "synth.wav").string(),
           GriffinLimVocode(mel, c.fbank, c.augment.griffin_lim_iterations));
  WriteJob(dir, "synth", c, {{"text", *f.text}, {"durations", durations}, {"frames", mel.frames()}});
  out << "synthesized " << mel.frames() << " frames\n";
  return 0;
}

int Eval(const RunConfig &c, std::ostream &out) {
  const CorpusManifest refs = LoadManifest(NeedFile(c.paths.ref, "--ref"));
  const auto hyps = LoadHypotheses(NeedFile(c.paths.hyp, "--hyp"));
  std::vector<NameTokens> names;
  if (!c.paths.names.empty())
    for (const auto &name : LoadNameList(NeedFile(c.paths.names, "--names")))
      names.push_back([&] {
        NameTokens t;
        for (const Token &tok : RetokenizeMixed(name)) t.push_back(tok.surface);
        return t;
      }());
  const fs::path dir = Need(c.paths.out, "--out");
  std::vector<RateClass> required;
  if (c.eval.require_cer) required.push_back(RateClass::kMandarin);
  if (c.eval.require_wer) required.push_back(RateClass::kEnglish);
  const EvalReport report = Evaluate(refs, hyps, names, required);
  fs::create_directories(dir);
  std::ofstream os(dir / "report.json", std::ios::binary);
  os << ReportToJson(report);
  if (!os) Fail("cannot write ", (dir / "report.json").string());
  WriteJob(dir, "eval", c);
  out << "mer=" << report.rates.mer << " cer_man=" << report.rates.cer_man
      << " wer_eng=" << report.rates.wer_eng << " entity_recall=" << report.entities.recall
      << " entity_precision=" << report.entities.precision << "\n";
  return 0;
}

std::string OneLine(std::string s) {
  for (char &ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

const std::vector<std::string> &CommandNames() {
  static const std::vector<std::string> names = {"extract-feats", "gen-toy", "train-editor",
                                                  "augment",       "synth",   "eval"};
  return names;
}

std::string CommandHelp(const std::string &command) {
  Flags f;
  auto app = MakeApp(&f);
  if (command.empty()) return app->help();
  return app->get_subcommand(command)->help();
}

int RunCommand(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  Flags f;
  auto app = MakeApp(&f);
  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app->parse(rev);
  } catch (const CLI::CallForHelp &) {
    const auto subs = app->get_subcommands();
    out << (subs.empty() ? app->help() : subs.front()->help());
    return 0;
  } catch (const CLI::CallForVersion &) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError &e) {
    std::string msg = e.what();
    if (args.size() > 1 && args[1].rfind("-", 0) != 0 &&
        std::find(CommandNames().begin(), CommandNames().end(), args[1]) == CommandNames().end()) {
      msg = "unknown command '" + args[1] + "' (valid commands: extract-feats, gen-toy, "
            "train-editor, augment, synth, eval)";
    }
    err << "error: usage: " << OneLine(msg) << "\n";
    return 2;
  }

  const std::string command = app->get_subcommands().front()->get_name();
  try {
    const RunConfig c = ResolveConfig(f);
    if (command == "gen-toy") return GenToy(f, c, out);
    if (command == "extract-feats") return ExtractFeats(c, out);
    if (command == "train-editor") return TrainEditor(c, out);
    if (command == "augment") return Augment(c, out);
    if (command == "synth") return Synth(c, f, out);
    if (command == "eval") return Eval(c, out);
    Fail("unhandled command");
  } catch (const std::exception &e) {
    err << "error: " << command << ": " << OneLine(e.what()) << "\n";
    return 1;
  }
}

}  // namespace speechedit
