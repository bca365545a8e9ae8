// include/speechedit/corpus.h

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

#ifndef SPEECHEDIT_CORPUS_H_
#define SPEECHEDIT_CORPUS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "speechedit/common.h"

namespace speechedit {

enum class Language { kMandarin, kEnglish };
enum class Entity { kNone, kPersonName };

struct Token {
  std::string surface;
  Language language = Language::kMandarin;
  Entity entity = Entity::kNone;

  bool operator==(const Token &) const = default;
};

/// Manifest tags: "zh" / "en" and "none" / "person".
const char *LanguageName(Language language);
Language ParseLanguage(const std::string &tag);
const char *EntityName(Entity entity);
Entity ParseEntity(const std::string &tag);

/// Number of UTF-8 code points in `s`.
std::size_t Utf8Length(const std::string &s);

/// Throws if the token violates the surface rules for its language.
void CheckToken(const Token &token);

/// Placeholder surface used by sentence templates.
inline constexpr const char *kNamePlaceholder = "<NAME>";

struct Utterance {
  std::string id;
  std::optional<std::string> audio;  // path to a WAV file
  std::optional<std::string> feats;  // path to a mel file
  int sample_rate = 16000;
  std::string speaker;
  std::vector<Token> tokens;
  /// Provenance tag for augmented / mixed manifests ("real", "edit", ...).
  std::optional<std::string> origin;

  bool operator==(const Utterance &) const = default;
};

struct CorpusManifest {
  std::vector<Utterance> entries;
  /// Relative audio/feats paths are resolved against this directory.
  std::string base_dir;

  const Utterance *Find(const std::string &id) const;
  std::string Resolve(const std::string &path) const;
};

struct AlignmentEntry {
  std::string utterance_id;
  int token_index = 0;
  std::string phone;
  int start_frame = 0;
  int end_frame = 0;  // exclusive

  bool operator==(const AlignmentEntry &) const = default;
};

using AlignmentList = std::vector<AlignmentEntry>;
using Alignment = std::map<std::string, AlignmentList>;

/// One manifest record as a single JSON line (no trailing newline).
/// `allow_placeholders` admits "<NAME>" tokens (template databases).
Utterance ParseManifestLine(const std::string &line, bool allow_placeholders = false);
std::string SerializeManifestLine(const Utterance &utt);

CorpusManifest LoadManifest(const std::string &path, bool allow_placeholders = false);
void SaveManifest(const std::string &path, const CorpusManifest &manifest);
/// Checks id uniqueness and per-entry invariants.
void ValidateManifest(const CorpusManifest &manifest, bool allow_placeholders = false);

/// Rows are `utt_id token_index phone start_frame end_frame`.
Alignment IngestAlignment(const std::string &path, const CorpusManifest &manifest);
/// Same checks applied to rows already in memory.
Alignment ValidateAlignment(std::vector<AlignmentEntry> rows, const CorpusManifest &manifest);
void SaveAlignment(const std::string &path, const Alignment &alignment);

/// Union of a token's phone spans, [start, end).
std::pair<int, int> TokenFrameSpan(const AlignmentList &alignment, int token_index);

/// Aligner times in seconds to a frame span: floor(start/hop), ceil(end/hop).
std::pair<int, int> SecondsToFrameSpan(double start_seconds, double end_seconds,
                                       double hop_seconds = 0.0125);

/// Total frame count covered by an utterance's alignment.
int AlignedFrameCount(const AlignmentList &alignment);

/// Sample offset of the boundary in front of frame `frame`. Frames are
/// centred on their hop, so a frame boundary sits (frame_size - hop) / 2
/// samples after the hop grid.
std::int64_t FrameBoundaryToSample(int frame, int hop = 200, int frame_size = 800);

// ---------------------------------------------------------------------------
// Toy tone corpus.
//
// Phone k renders as a sine at 300 + 100 k Hz for exactly 4000 samples (20
// frames). Every utterance is framed with (frame_size - hop) / 2 = 300 zero
// samples on each side, so an utterance of n phones has exactly 20 n frames
// and each frame's centre falls inside the phone that owns it.

inline constexpr int kToySamplesPerPhone = 4000;
inline constexpr int kToyFramesPerPhone = 20;
inline constexpr int kToyEdgePadding = 300;
inline constexpr double kToyAmplitude = 0.5;
inline constexpr int kToyMaxVocab = 20;

double ToyPhoneFrequency(int phone);
std::string ToyPhoneSymbol(int phone);
/// Mandarin character carrying toy phone `phone`.
std::string ToyPhoneCharacter(int phone);
/// English words of the toy lexicon with their phone ids.
std::vector<std::pair<std::string, std::vector<int>>> ToyEnglishWords(int vocab_size);

struct ToyCorpus {
  CorpusManifest manifest;
  Alignment alignment;
  std::vector<std::vector<int>> phones;  // per utterance, manifest order
};

/// Phone sequences only (no files); deterministic in `seed`.
std::vector<std::vector<int>> SampleToyPhoneSequences(std::uint64_t seed, int n_utts,
                                                      int vocab_size);

/// Renders a phone sequence to samples, including the edge padding.
std::vector<float> RenderToyPhones(const std::vector<int> &phones);

/// Writes manifest.jsonl, alignment.txt, lexicon.txt and wav/<id>.wav under
/// `out_dir`.
ToyCorpus GenerateToyCorpus(std::uint64_t seed, int n_utts, int vocab_size,
                            const std::string &out_dir);

/// Deterministic 64-bit generator used everywhere a seed is accepted. Kept
/// separate from <random> distributions, whose output is
/// implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t Next();
  /// Uniform integer in [0, n).
  std::uint64_t Below(std::uint64_t n);
  /// Uniform double in [0, 1).
  double Uniform();
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T> *v) {
    for (std::size_t i = v->size(); i > 1; --i) std::swap((*v)[i - 1], (*v)[Below(i)]);
  }

 private:
  std::uint64_t state_;
};

}  // namespace speechedit

#endif  // SPEECHEDIT_CORPUS_H_
