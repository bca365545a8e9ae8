// include/speechedit/augpipe.h

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

#ifndef SPEECHEDIT_AUGPIPE_H_
#define SPEECHEDIT_AUGPIPE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "speechedit/corpus.h"
#include "speechedit/dsp.h"
#include "speechedit/editor.h"
#include "speechedit/textgen.h"

namespace speechedit {

enum class RecipeKind { kSplice, kTts, kEdit, kEditFeats, kEditFeatsPlusTts };

/// splice, tts, edit, edit-feats, edit-feats+tts.
const char *RecipeName(RecipeKind kind);
/// Throws, listing the valid names, for anything else.
RecipeKind ParseRecipe(const std::string &name);
std::vector<RecipeKind> AllRecipes();

struct AugRecipe {
  RecipeKind kind = RecipeKind::kEdit;
  std::uint64_t seed = 0;
};

/// One edited utterance to produce: `source` names the real utterance,
/// `id` the augmented one.
struct EditSpec {
  std::string id;
  std::string source;
  EditScript script;

  bool operator==(const EditSpec &) const = default;
};

/// {"id", "source", "ops": [{"kind", "position", "length", "tokens": [...]}]}
EditSpec ParseEditSpecLine(const std::string &line);
std::string SerializeEditSpecLine(const EditSpec &spec);
std::vector<EditSpec> LoadEditSpecs(const std::string &path);
void SaveEditSpecs(const std::string &path, const std::vector<EditSpec> &specs);

/// Specs for the toy corpus cycling through three edit shapes: replace one
/// character by another, insert an English toy word, replace a character by
/// an English toy word. Deterministic in `seed`.
std::vector<EditSpec> GenerateToyEditSpecs(const CorpusManifest &manifest, int vocab_size,
                                           int count, std::uint64_t seed);

/// Template entries (ids naming source utterances, tokens with "<NAME>")
/// paired with names from `names`: each template receives `names_per_template`
/// names drawn without replacement from a seeded shuffle (cycling when the
/// list is shorter).
std::vector<EditSpec> SpecsFromTemplates(const CorpusManifest &sources,
                                         const CorpusManifest &templates,
                                         const std::vector<std::vector<Token>> &names,
                                         int names_per_template, std::uint64_t seed);

struct AugJob {
  const CorpusManifest *source = nullptr;
  const Alignment *alignment = nullptr;
  const SpeechEditor *editor = nullptr;
  const Lexicon *lexicon = nullptr;
  std::vector<EditSpec> specs;
  AugRecipe recipe;
  std::string out_dir;
  FbankConfig fbank;
  int griffin_lim_iterations = 60;
  InferOptions infer;
  int jobs = 1;
  /// Stored under "run" in <out>/job.json.
  nlohmann::ordered_json provenance;

  /// Throws unless every spec names a source utterance with a unique id and
  /// the inputs the recipe needs are present.
  void Validate() const;
};

/// One augmented utterance. `utterance.audio` / `feats` hold paths relative
/// to the output directory; the artifacts are kept in memory until written.
struct AugEntry {
  Utterance utterance;
  std::optional<Waveform> wave;
  std::optional<MelSpectrogram> mel;  // raw
};

/// Runs one concrete recipe (not EDIT_FEATS_PLUS_TTS) for one spec.
AugEntry RunRecipeForUtterance(const AugJob &job, const EditSpec &spec, RecipeKind kind);

/// Recipe actually applied to each spec. EDIT_FEATS_PLUS_TTS sends
/// ceil(N/2) specs, picked by a seeded shuffle, to EDIT_FEATS, the rest to TTS.
std::vector<RecipeKind> AssignRecipes(const AugRecipe &recipe, std::size_t spec_count);

struct AugOutput {
  CorpusManifest manifest;  // base_dir = output directory
  std::vector<RecipeKind> applied;
};

/// Writes <out>/wav/<id>.wav, <out>/feats/<id>.melf, <out>/manifest.jsonl and
/// <out>/job.json. The first failing spec (in spec order) aborts the run.
AugOutput BuildAugmentationSet(const AugJob &job);

/// All augmented entries plus round(ratio * N_aug) real entries sampled
/// without replacement and tagged "real", in a seeded shuffled order. Paths
/// in the result are resolved against each input's base directory.
CorpusManifest MixSets(const CorpusManifest &augmented, const CorpusManifest &real, double ratio,
                       std::uint64_t seed);

/// Rewrites relative paths so the manifest can be saved into `new_base_dir`.
CorpusManifest RebaseManifest(const CorpusManifest &manifest, const std::string &new_base_dir);

}  // namespace speechedit

#endif  // SPEECHEDIT_AUGPIPE_H_
