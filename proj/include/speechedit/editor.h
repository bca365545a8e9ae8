// include/speechedit/editor.h

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

#ifndef SPEECHEDIT_EDITOR_H_
#define SPEECHEDIT_EDITOR_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "speechedit/corpus.h"
#include "speechedit/dsp.h"
#include "speechedit/editmodel.h"
#include "speechedit/melsurgery.h"
#include "speechedit/textgen.h"

namespace speechedit {

/// Phone symbol table. Id 0 is reserved for "<unk>", used for letter
/// fallback phones the model has never seen.
class PhoneInventory {
 public:
  static constexpr const char *kUnknown = "<unk>";

  PhoneInventory();
  explicit PhoneInventory(const std::vector<std::string> &symbols);

  /// Adds a symbol if it is new; returns its id.
  int Add(const std::string &symbol);
  /// -1 when unknown.
  int Find(const std::string &symbol) const;
  const std::vector<std::string> &symbols() const { return symbols_; }
  int size() const { return static_cast<int>(symbols_.size()); }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, int> index_;
};

/// Every phone of the alignment and the lexicon.
PhoneInventory BuildPhoneInventory(const Alignment &alignment, const Lexicon &lexicon);

/// A trained editing model together with what it needs at inference time.
struct SpeechEditor {
  EditModel<float> model;
  MelStats stats;
  PhoneInventory phones;

  /// Throws when the feature configuration does not match the model.
  void CheckFbank(const FbankConfig &fbank) const;
};

/// Checkpoint: "SEDCKPT1", u32 length + JSON header (model config, phone
/// symbols), u32 bins + f32 means + f32 stddevs, u32 tensor count, then per
/// tensor u32 name length, name, u32 rows, u32 cols, row-major f32 data. All
/// integers and floats little-endian.
void SaveCheckpoint(const std::string &path, const SpeechEditor &editor);
SpeechEditor LoadCheckpoint(const std::string &path);

/// Training examples for every manifest entry with an alignment. `mels` holds
/// normalized spectrograms keyed by utterance id. A mel that is longer than
/// its alignment has the surplus frames attached to the final phone.
std::vector<TrainExample> BuildTrainExamples(const CorpusManifest &manifest,
                                             const Alignment &alignment,
                                             const std::map<std::string, MelSpectrogram> &mels,
                                             const PhoneInventory &phones);

struct TrainSchedule {
  int steps = 2000;
  int batch_size = 8;
  int log_every = 100;
};

using TrainLogger = std::function<void(std::int64_t step, const LossTerms &loss)>;

/// Runs `schedule.steps` Adam steps over seeded epoch shuffles of `examples`.
TrainState TrainEditModel(const std::vector<TrainExample> &examples, const EditModelConfig &config,
                          const TrainOptions &options, const TrainSchedule &schedule,
                          const TrainLogger &log = nullptr);

struct InferOptions {
  float mask_value = kDefaultMaskValue;
  bool allow_fallback = true;  // letter fallback for out-of-lexicon words
};

struct EditOutcome {
  MelSpectrogram mel;                // normalized, stitched
  std::vector<Token> tokens;         // edited text
  std::vector<EditRegion> regions;   // in original frames, new_length filled in
  std::vector<std::pair<int, int>> generated_spans;  // regions in output frames
  std::vector<int> new_phone_durations;              // realized, in phone order
};

/// Masks the edited regions, regenerates them with the model and stitches the
/// result into the original. Frames outside the regions are copied from
/// `mel` bit-exactly.
EditOutcome InferEdit(const SpeechEditor &editor, const Utterance &utterance,
                      const MelSpectrogram &mel, const AlignmentList *alignment,
                      const EditScript &script, const Lexicon &lexicon,
                      const InferOptions &options = {});

/// Raw (unnormalized) mel of a manifest entry: read from its feats file when
/// present, otherwise extracted from its audio.
MelSpectrogram LoadRawMel(const CorpusManifest &manifest, const Utterance &utterance,
                          const FbankConfig &fbank);

/// Phone ids for `tokens` via the lexicon.
std::vector<int> PhoneIdsForTokens(const SpeechEditor &editor, const std::vector<Token> &tokens,
                                   const Lexicon &lexicon, bool allow_fallback);

/// Whole-utterance synthesis: every frame masked, every duration predicted.
MelSpectrogram SynthPhones(const SpeechEditor &editor, const std::vector<int> &phone_ids,
                           const InferOptions &options = {},
                           std::vector<int> *durations = nullptr);
MelSpectrogram SynthFull(const SpeechEditor &editor, const std::vector<Token> &tokens,
                         const Lexicon &lexicon, const InferOptions &options = {},
                         std::vector<int> *durations = nullptr);

}  // namespace speechedit

#endif  // SPEECHEDIT_EDITOR_H_
