// src/augpipe.cc

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

#include "speechedit/augpipe.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "speechedit/melsurgery.h"

namespace speechedit {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

const char *RecipeName(RecipeKind kind) {
  switch (kind) {
    case RecipeKind::kSplice: return "splice";
    case RecipeKind::kTts: return "tts";
    case RecipeKind::kEdit: return "edit";
    case RecipeKind::kEditFeats: return "edit-feats";
    case RecipeKind::kEditFeatsPlusTts: return "edit-feats+tts";
  }
  return "?";
}

std::vector<RecipeKind> AllRecipes() {
  return {RecipeKind::kSplice, RecipeKind::kTts, RecipeKind::kEdit, RecipeKind::kEditFeats,
          RecipeKind::kEditFeatsPlusTts};
}

RecipeKind ParseRecipe(const std::string &name) {
  std::string valid;
  for (RecipeKind k : AllRecipes()) {
    if (name == RecipeName(k)) return k;
    valid += valid.empty() ? "" : ", ";
    valid += RecipeName(k);
  }
  Fail("unknown recipe '", name, "' (valid recipes: ", valid, ")");
}

// ---------------------------------------------------------------------------
// Edit specs

namespace {

ordered_json TokenJson(const Token &t) {
  return {{"surface", t.surface}, {"lang", LanguageName(t.language)}, {"entity", EntityName(t.entity)}};
}

Token TokenFromJson(const nlohmann::json &j) {
  Token t;
  t.surface = j.at("surface").get<std::string>();
  t.language = ParseLanguage(j.at("lang").get<std::string>());
  if (j.contains("entity")) t.entity = ParseEntity(j.at("entity").get<std::string>());
  CheckToken(t);
  return t;
}

}  // namespace

EditSpec ParseEditSpecLine(const std::string &line) {
  try {
    nlohmann::json j = nlohmann::json::parse(line);
    EditSpec spec;
    spec.id = j.at("id").get<std::string>();
    spec.source = j.at("source").get<std::string>();
    if (spec.id.empty() || spec.source.empty()) Fail("empty id or source");
    for (const auto &jo : j.at("ops")) {
      EditOp op;
      op.kind = ParseEditKind(jo.at("kind").get<std::string>());
      op.position = jo.at("position").get<int>();
      op.length = jo.value("length", 0);
      if (jo.contains("tokens"))
        for (const auto &jt : jo.at("tokens")) op.new_tokens.push_back(TokenFromJson(jt));
      spec.script.ops.push_back(std::move(op));
    }
    return spec;
  } catch (const nlohmann::json::exception &e) {
    Fail("bad edit spec: ", e.what());
  }
}

std::string SerializeEditSpecLine(const EditSpec &spec) {
  ordered_json j;
  j["id"] = spec.id;
  j["source"] = spec.source;
  ordered_json ops = ordered_json::array();
  for (const EditOp &op : spec.script.ops) {
    ordered_json jo;
    jo["kind"] = EditKindName(op.kind);
    jo["position"] = op.position;
    jo["length"] = op.length;
    ordered_json tokens = ordered_json::array();
    for (const Token &t : op.new_tokens) tokens.push_back(TokenJson(t));
    jo["tokens"] = std::move(tokens);
    ops.push_back(std::move(jo));
  }
  j["ops"] = std::move(ops);
  return j.dump();
}

std::vector<EditSpec> LoadEditSpecs(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail("cannot open edit specs ", path);
  std::vector<EditSpec> specs;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      specs.push_back(ParseEditSpecLine(line));
    } catch (const Error &e) {
      Fail(path, ":", lineno, ": ", e.what());
    }
  }
  return specs;
}

void SaveEditSpecs(const std::string &path, const std::vector<EditSpec> &specs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail("cannot write ", path);
  for (const EditSpec &s : specs) out << SerializeEditSpecLine(s) << '\n';
  if (!out) Fail("write failed: ", path);
}

std::vector<EditSpec> GenerateToyEditSpecs(const CorpusManifest &manifest, int vocab_size,
                                           int count, std::uint64_t seed) {
  if (manifest.entries.empty()) Fail("toy edit specs: empty manifest");
  if (count < 0) Fail("toy edit specs: negative count");
  if (vocab_size < 2 || vocab_size > kToyMaxVocab)
    Fail("toy edit specs: vocab_size must be in [2, ", kToyMaxVocab, "]");
  const auto words = ToyEnglishWords(vocab_size);
  SeededRng rng(seed);
  std::vector<std::size_t> order(manifest.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.Shuffle(&order);

  std::vector<EditSpec> specs;
  for (int k = 0; k < count; ++k) {
    const Utterance &u = manifest.entries[order[k % order.size()]];
    const int n = static_cast<int>(u.tokens.size());
    EditSpec spec{u.id + "-e" + std::to_string(k), u.id, {}};
    EditOp op;
    if (k % 3 == 1) {
      op.kind = EditKind::kInsert;
      op.position = static_cast<int>(rng.Below(n + 1));
      op.new_tokens = {{words[rng.Below(words.size())].first, Language::kEnglish, Entity::kNone}};
    } else {
      op.kind = EditKind::kReplace;
      op.position = static_cast<int>(rng.Below(n));
      op.length = 1;
      if (k % 3 == 0) {
        int phone = static_cast<int>(rng.Below(vocab_size));
        if (ToyPhoneCharacter(phone) == u.tokens[op.position].surface) phone = (phone + 1) % vocab_size;
        op.new_tokens = {{ToyPhoneCharacter(phone), Language::kMandarin, Entity::kNone}};
      } else {
        op.new_tokens = {{words[rng.Below(words.size())].first, Language::kEnglish, Entity::kNone}};
      }
    }
    spec.script.ops.push_back(std::move(op));
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::vector<EditSpec> SpecsFromTemplates(const CorpusManifest &sources,
                                         const CorpusManifest &templates,
                                         const std::vector<std::vector<Token>> &names,
                                         int names_per_template, std::uint64_t seed) {
  if (names.empty()) Fail("template specs: empty name list");
  if (names_per_template < 1) Fail("template specs: names_per_template must be >= 1");
  std::vector<std::size_t> order(names.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SeededRng rng(seed);
  rng.Shuffle(&order);

  std::vector<EditSpec> specs;
  std::size_t cursor = 0;
  for (const Utterance &t : templates.entries) {
    const Utterance *source = sources.Find(t.id);
    if (!source) Fail("template '", t.id, "' does not name a source utterance");
    for (int j = 0; j < names_per_template; ++j) {
      const auto &name = names[order[cursor++ % order.size()]];
      EditSpec spec{t.id + "-n" + std::to_string(j), t.id, {}};
      try {
        spec.script = ScriptFromTemplate(source->tokens, t.tokens, name);
      } catch (const Error &e) {
        Fail("template '", t.id, "': ", e.what());
      }
      specs.push_back(std::move(spec));
    }
  }
  return specs;
}

// ---------------------------------------------------------------------------
// Recipes

void AugJob::Validate() const {
  if (!source) Fail("augmentation job without a source manifest");
  if (out_dir.empty()) Fail("augmentation job without an output directory");
  if (griffin_lim_iterations < 0) Fail("griffin_lim_iterations must be >= 0");
  if (!editor) Fail("recipe ", RecipeName(recipe.kind), " needs a trained model");
  if (!lexicon) Fail("recipe ", RecipeName(recipe.kind), " needs a lexicon");
  editor->CheckFbank(fbank);
  const bool needs_alignment = recipe.kind != RecipeKind::kTts;
  std::set<std::string> ids;
  for (const EditSpec &s : specs) {
    if (!ids.insert(s.id).second) Fail("duplicate edit spec id '", s.id, "'");
    const Utterance *u = source->Find(s.source);
    if (!u) Fail("edit spec '", s.id, "' references unknown utterance '", s.source, "'");
    try {
      s.script.Validate(static_cast<int>(u->tokens.size()));
    } catch (const Error &e) {
      Fail("edit spec '", s.id, "': ", e.what());
    }
    if (needs_alignment && (!alignment || !alignment->count(s.source)))
      Fail("recipe ", RecipeName(recipe.kind), " needs an alignment for '", s.source, "'");
  }
}

namespace {

Waveform Vocode(const AugJob &job, const MelSpectrogram &normalized) {
  return GriffinLimVocode(DenormalizeMel(normalized, job.editor->stats), job.fbank,
                          job.griffin_lim_iterations);
}

// Vocoded segment trimmed to frames * hop samples: the half-window of
// overhang on each side belongs to the neighbouring frames.
Waveform SpliceSegment(const AugJob &job, const std::vector<Token> &tokens) {
  const MelSpectrogram mel = SynthFull(*job.editor, tokens, *job.lexicon, job.infer);
  const Waveform full = Vocode(job, mel);
  const Eigen::Index edge = (job.fbank.frame_size - job.fbank.hop) / 2;
  const Eigen::Index length = mel.frames() * job.fbank.hop;
  return Waveform{full.samples.segment(edge, length), full.sample_rate};
}

MelSpectrogram SourceMel(const AugJob &job, const Utterance &u) {
  return NormalizeMel(LoadRawMel(*job.source, u, job.fbank), job.editor->stats);
}

const AlignmentList *SourceAlignment(const AugJob &job, const std::string &id) {
  if (!job.alignment) return nullptr;
  auto it = job.alignment->find(id);
  return it == job.alignment->end() ? nullptr : &it->second;
}

}  // namespace

AugEntry RunRecipeForUtterance(const AugJob &job, const EditSpec &spec, RecipeKind kind) {
  if (kind == RecipeKind::kEditFeatsPlusTts) Fail("edit-feats+tts is resolved per spec first");
  if (!job.editor || !job.lexicon) Fail("recipe ", RecipeName(kind), " needs a model and lexicon");
  const Utterance *src = job.source->Find(spec.source);
  if (!src) Fail("unknown source utterance '", spec.source, "'");

  AugEntry entry;
  Utterance &out = entry.utterance;
  out.id = spec.id;
  out.sample_rate = job.fbank.sample_rate;
  out.speaker = src->speaker;
  out.origin = RecipeName(kind);
  out.tokens = ApplyEditScript(src->tokens, spec.script).tokens;

  switch (kind) {
    case RecipeKind::kSplice: {
      const AlignmentList *ali = SourceAlignment(job, src->id);
      if (!ali) Fail("splice: no alignment for '", src->id, "'");
      if (!src->audio) Fail("splice: '", src->id, "' has no audio");
      Waveform wave = ReadWav(job.source->Resolve(*src->audio));
      const std::vector<EditRegion> regions = EditRegionsFromAlignment(*ali, spec.script);
      for (std::size_t i = regions.size(); i-- > 0;) {
        const EditOp &op = spec.script.ops[i];
        const auto n = static_cast<std::int64_t>(wave.samples.size());
        SampleSpan cut{std::min(n, FrameBoundaryToSample(regions[i].start_frame, job.fbank.hop,
                                                         job.fbank.frame_size)),
                       std::min(n, FrameBoundaryToSample(regions[i].end_frame, job.fbank.hop,
                                                         job.fbank.frame_size))};
        Waveform insert{Eigen::VectorXf(), wave.sample_rate};
        if (!op.new_tokens.empty()) insert = SpliceSegment(job, op.new_tokens);
        wave = SpliceWaveform(wave, cut, insert);
      }
      entry.wave = std::move(wave);
      break;
    }
    case RecipeKind::kTts:
      entry.wave = Vocode(job, SynthFull(*job.editor, out.tokens, *job.lexicon, job.infer));
      break;
    case RecipeKind::kEdit:
    case RecipeKind::kEditFeats: {
      const AlignmentList *ali = SourceAlignment(job, src->id);
      if (!ali) Fail(RecipeName(kind), ": no alignment for '", src->id, "'");
      EditOutcome edit =
          InferEdit(*job.editor, *src, SourceMel(job, *src), ali, spec.script, *job.lexicon, job.infer);
      if (kind == RecipeKind::kEdit)
        entry.wave = Vocode(job, edit.mel);
      else
        entry.mel = DenormalizeMel(edit.mel, job.editor->stats);
      break;
    }
    case RecipeKind::kEditFeatsPlusTts: break;
  }
  if (entry.wave) out.audio = "wav/" + spec.id + ".wav";
  if (entry.mel) out.feats = "feats/" + spec.id + ".melf";
  return entry;
}

std::vector<RecipeKind> AssignRecipes(const AugRecipe &recipe, std::size_t spec_count) {
  if (recipe.kind != RecipeKind::kEditFeatsPlusTts)
    return std::vector<RecipeKind>(spec_count, recipe.kind);
  std::vector<std::size_t> order(spec_count);
  for (std::size_t i = 0; i < spec_count; ++i) order[i] = i;
  SeededRng rng(recipe.seed);
  rng.Shuffle(&order);
  std::vector<RecipeKind> kinds(spec_count, RecipeKind::kTts);
  for (std::size_t i = 0; i < (spec_count + 1) / 2; ++i) kinds[order[i]] = RecipeKind::kEditFeats;
  return kinds;
}

AugOutput BuildAugmentationSet(const AugJob &job) {
  job.Validate();
  const std::vector<RecipeKind> kinds = AssignRecipes(job.recipe, job.specs.size());
  const std::size_t n = job.specs.size();
  std::vector<AugEntry> entries(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (std::size_t i; !failed && (i = next++) < n;) {
      try {
        entries[i] = RunRecipeForUtterance(job, job.specs[i], kinds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  const int workers = std::clamp<int>(job.jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception &e) {
      Fail("augmentation failed for '", job.specs[i].id, "': ", e.what());
    }
  }

  const fs::path out(job.out_dir);
  fs::create_directories(out);
  AugOutput output;
  output.manifest.base_dir = job.out_dir;
  output.applied = kinds;
  for (AugEntry &e : entries) {
    if (e.wave) {
      fs::create_directories(out / "wav");
      WriteWav((out / *e.utterance.audio).string(), *e.wave);
    }
    if (e.mel) {
      fs::create_directories(out / "feats");
      WriteMel((out / *e.utterance.feats).string(), *e.mel);
    }
    output.manifest.entries.push_back(std::move(e.utterance));
  }
  SaveManifest((out / "manifest.jsonl").string(), output.manifest);

  ordered_json j;
  j["version"] = kVersion;
  j["recipe"] = RecipeName(job.recipe.kind);
  j["seed"] = job.recipe.seed;
  j["spec_count"] = n;
  j["griffin_lim_iterations"] = job.griffin_lim_iterations;
  j["mask_value"] = job.infer.mask_value;
  ordered_json assignments = ordered_json::array();
  for (std::size_t i = 0; i < n; ++i)
    assignments.push_back(
        {{"id", job.specs[i].id}, {"source", job.specs[i].source}, {"recipe", RecipeName(kinds[i])}});
  j["assignments"] = std::move(assignments);
  j["run"] = job.provenance;
  std::ofstream jf(out / "job.json", std::ios::binary);
  jf << j.dump(2) << '\n';
  if (!jf) Fail("cannot write ", (out / "job.json").string());
  return output;
}

// ---------------------------------------------------------------------------
// Mixing

namespace {

Utterance Resolved(const CorpusManifest &m, Utterance u) {
  if (u.audio) u.audio = m.Resolve(*u.audio);
  if (u.feats) u.feats = m.Resolve(*u.feats);
  return u;
}

}  // namespace

CorpusManifest MixSets(const CorpusManifest &augmented, const CorpusManifest &real, double ratio,
                       std::uint64_t seed) {
  if (!(ratio >= 0) || !std::isfinite(ratio)) Fail("mix ratio must be a finite value >= 0");
  const auto want = static_cast<std::size_t>(std::llround(ratio * augmented.entries.size()));
  if (want > real.entries.size())
    Fail("mixing needs ", want, " real utterances but the real pool has ", real.entries.size());
  SeededRng rng(seed);
  std::vector<std::size_t> pick(real.entries.size());
  for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
  rng.Shuffle(&pick);

  CorpusManifest mixed;
  for (const Utterance &u : augmented.entries) mixed.entries.push_back(Resolved(augmented, u));
  for (std::size_t i = 0; i < want; ++i) {
    Utterance u = Resolved(real, real.entries[pick[i]]);
    u.origin = "real";
    mixed.entries.push_back(std::move(u));
  }
  rng.Shuffle(&mixed.entries);
  ValidateManifest(mixed);
  return mixed;
}

CorpusManifest RebaseManifest(const CorpusManifest &manifest, const std::string &new_base_dir) {
  const fs::path base = fs::absolute(new_base_dir).lexically_normal();
  auto rebase = [&](const std::string &p) {
    if (fs::path(p).is_absolute()) return p;
    return fs::absolute(manifest.Resolve(p)).lexically_normal().lexically_relative(base).string();
  };
  CorpusManifest out;
  out.base_dir = new_base_dir;
  for (Utterance u : manifest.entries) {
    if (u.audio) u.audio = rebase(*u.audio);
    if (u.feats) u.feats = rebase(*u.feats);
    out.entries.push_back(std::move(u));
  }
  return out;
}

}  // namespace speechedit
