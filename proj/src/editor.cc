// src/editor.cc

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

#include "speechedit/editor.h"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "binary_io.h"
#include "json.hpp"

namespace speechedit {

using internal::ReadF32;
using internal::ReadU32;
using internal::WriteF32;
using internal::WriteU32;

PhoneInventory::PhoneInventory() { Add(kUnknown); }

PhoneInventory::PhoneInventory(const std::vector<std::string> &symbols) {
  if (symbols.empty() || symbols.front() != kUnknown)
    Fail("phone inventory must start with ", kUnknown);
  for (const std::string &s : symbols)
    if (Find(s) >= 0) Fail("duplicate phone symbol '", s, "'");
    else Add(s);
}

int PhoneInventory::Add(const std::string &symbol) {
  if (const int id = Find(symbol); id >= 0) return id;
  const int id = size();
  symbols_.push_back(symbol);
  index_.emplace(symbol, id);
  return id;
}

int PhoneInventory::Find(const std::string &symbol) const {
  auto it = index_.find(symbol);
  return it == index_.end() ? -1 : it->second;
}

PhoneInventory BuildPhoneInventory(const Alignment &alignment, const Lexicon &lexicon) {
  // Sorted so the ids do not depend on corpus order.
  std::vector<std::string> symbols;
  for (const auto &[id, entries] : alignment)
    for (const AlignmentEntry &e : entries) symbols.push_back(e.phone);
  for (const auto &[word, phones] : lexicon.entries())
    symbols.insert(symbols.end(), phones.begin(), phones.end());
  std::sort(symbols.begin(), symbols.end());
  symbols.erase(std::unique(symbols.begin(), symbols.end()), symbols.end());
  PhoneInventory inventory;
  for (const std::string &s : symbols) inventory.Add(s);
  return inventory;
}

void SpeechEditor::CheckFbank(const FbankConfig &fbank) const {
  if (fbank.n_mels != model.config().mel_bins)
    Fail("feature config has n_mels = ", fbank.n_mels, " but the model expects mel_bins = ",
         model.config().mel_bins);
}

namespace {

nlohmann::ordered_json ConfigToJson(const EditModelConfig &c) {
  nlohmann::ordered_json j;
  j["phone_vocab"] = c.phone_vocab;
  j["d_model"] = c.d_model;
  j["n_text_blocks"] = c.n_text_blocks;
  j["n_speech_blocks"] = c.n_speech_blocks;
  j["n_joint_blocks"] = c.n_joint_blocks;
  j["n_heads"] = c.n_heads;
  j["ff_width"] = c.ff_width;
  j["dropout"] = c.dropout;
  j["mel_bins"] = c.mel_bins;
  j["duration_offset"] = c.duration_offset;
  j["masked_loss_weight"] = c.masked_loss_weight;
  j["seed"] = c.seed;
  return j;
}

EditModelConfig ConfigFromJson(const nlohmann::json &j) {
  EditModelConfig c;
  c.phone_vocab = j.at("phone_vocab").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_text_blocks = j.at("n_text_blocks").get<int>();
  c.n_speech_blocks = j.at("n_speech_blocks").get<int>();
  c.n_joint_blocks = j.at("n_joint_blocks").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.ff_width = j.at("ff_width").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.mel_bins = j.at("mel_bins").get<int>();
  c.duration_offset = j.at("duration_offset").get<double>();
  c.masked_loss_weight = j.at("masked_loss_weight").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

void WriteString(std::ostream &os, const std::string &s) {
  WriteU32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string ReadString(std::istream &is, std::uint32_t limit) {
  const std::uint32_t n = ReadU32(is);
  if (!is || n > limit) Fail("corrupt checkpoint string");
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace

void SaveCheckpoint(const std::string &path, const SpeechEditor &editor) {
  std::ofstream os(path, std::ios::binary);
  if (!os) Fail("cannot open checkpoint for writing: ", path);
  os.write("SEDCKPT1", 8);
  nlohmann::ordered_json header;
  header["config"] = ConfigToJson(editor.model.config());
  header["phones"] = editor.phones.symbols();
  WriteString(os, header.dump());
  const Eigen::Index bins = editor.stats.mean.size();
  WriteU32(os, static_cast<std::uint32_t>(bins));
  for (Eigen::Index b = 0; b < bins; ++b) WriteF32(os, editor.stats.mean[b]);
  for (Eigen::Index b = 0; b < bins; ++b) WriteF32(os, editor.stats.stddev[b]);
  auto tensors = const_cast<EditModelParams<float> &>(editor.model.params()).Tensors();
  WriteU32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto &t : tensors) {
    WriteString(os, t.name);
    WriteU32(os, static_cast<std::uint32_t>(t.value->rows()));
    WriteU32(os, static_cast<std::uint32_t>(t.value->cols()));
    for (Eigen::Index r = 0; r < t.value->rows(); ++r)
      for (Eigen::Index c = 0; c < t.value->cols(); ++c) WriteF32(os, (*t.value)(r, c));
  }
  if (!os) Fail("error writing checkpoint: ", path);
}

SpeechEditor LoadCheckpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail("cannot open checkpoint: ", path);
  char magic[8];
  if (!is.read(magic, 8) || std::string(magic, 8) != "SEDCKPT1")
    Fail("not a speech editor checkpoint: ", path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(ReadString(is, 1u << 24));
  } catch (const nlohmann::json::exception &e) {
    Fail("corrupt checkpoint header in ", path, ": ", e.what());
  }
  EditModelConfig config;
  PhoneInventory phones;
  try {
    config = ConfigFromJson(header.at("config"));
    phones = PhoneInventory(header.at("phones").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception &e) {
    Fail("corrupt checkpoint header in ", path, ": ", e.what());
  }
  config.Check();
  if (phones.size() != config.phone_vocab)
    Fail("checkpoint ", path, ": ", phones.size(), " phone symbols for phone_vocab ",
         config.phone_vocab);

  MelStats stats;
  const std::uint32_t bins = ReadU32(is);
  if (!is || bins > 4096) Fail("corrupt checkpoint stats in ", path);
  stats.mean.resize(bins);
  stats.stddev.resize(bins);
  for (std::uint32_t b = 0; b < bins; ++b) stats.mean[b] = ReadF32(is);
  for (std::uint32_t b = 0; b < bins; ++b) stats.stddev[b] = ReadF32(is);

  // Shapes come from a freshly initialised model; the file must match.
  EditModel<float> shaped(config);
  EditModelParams<float> params = shaped.params();
  auto tensors = params.Tensors();
  const std::uint32_t count = ReadU32(is);
  if (count != tensors.size())
    Fail("checkpoint ", path, " has ", count, " tensors, expected ", tensors.size());
  for (auto &t : tensors) {
    const std::string name = ReadString(is, 1024);
    const std::uint32_t rows = ReadU32(is), cols = ReadU32(is);
    if (name != t.name || rows != t.value->rows() || cols != t.value->cols())
      Fail("checkpoint ", path, ": tensor '", name, "' [", rows, "x", cols, "] does not match '",
           t.name, "' [", t.value->rows(), "x", t.value->cols(), "]");
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) (*t.value)(r, c) = ReadF32(is);
  }
  if (!is) Fail("truncated checkpoint: ", path);
  return SpeechEditor{EditModel<float>(config, std::move(params)), std::move(stats),
                      std::move(phones)};
}

std::vector<TrainExample> BuildTrainExamples(const CorpusManifest &manifest,
                                             const Alignment &alignment,
                                             const std::map<std::string, MelSpectrogram> &mels,
                                             const PhoneInventory &phones) {
  std::vector<TrainExample> examples;
  for (const Utterance &utt : manifest.entries) {
    auto ali = alignment.find(utt.id);
    if (ali == alignment.end()) continue;
    auto mel = mels.find(utt.id);
    if (mel == mels.end()) Fail("no mel for aligned utterance '", utt.id, "'");
    if (!mel->second.normalized) Fail("training mel for '", utt.id, "' is not normalized");
    TrainExample ex;
    ex.id = utt.id;
    for (const AlignmentEntry &e : ali->second) {
      const int id = phones.Find(e.phone);
      if (id < 0) Fail("phone '", e.phone, "' of '", utt.id, "' missing from inventory");
      ex.phones.push_back(id);
      ex.durations.push_back(e.end_frame - e.start_frame);
      ex.token_of_phone.push_back(e.token_index);
    }
    const int aligned = AlignedFrameCount(ali->second);
    if (mel->second.frames() < aligned)
      Fail("mel for '", utt.id, "' has ", mel->second.frames(), " frames, alignment covers ",
           aligned);
    ex.durations.back() += static_cast<int>(mel->second.frames()) - aligned;
    ex.target = mel->second.data;
    examples.push_back(std::move(ex));
  }
  return examples;
}

TrainState TrainEditModel(const std::vector<TrainExample> &examples, const EditModelConfig &config,
                          const TrainOptions &options, const TrainSchedule &schedule,
                          const TrainLogger &log) {
  if (examples.empty()) Fail("train: no training examples");
  if (schedule.batch_size < 1) Fail("train: batch_size must be >= 1");
  TrainState state(config, options);
  SeededRng order_rng(config.seed ^ 0xBA7C4ull);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  for (int step = 0; step < schedule.steps; ++step) {
    std::vector<const TrainExample *> batch;
    while (static_cast<int>(batch.size()) < std::min<int>(schedule.batch_size, examples.size())) {
      if (cursor == order.size()) {
        order_rng.Shuffle(&order);
        cursor = 0;
      }
      batch.push_back(&examples[order[cursor++]]);
    }
    const StepResult result = TrainStep(&state, batch);
    if (log && (step % std::max(1, schedule.log_every) == 0 || step + 1 == schedule.steps))
      log(state.step, result.loss);
  }
  return state;
}

MelSpectrogram LoadRawMel(const CorpusManifest &manifest, const Utterance &utterance,
                          const FbankConfig &fbank) {
  if (utterance.feats) {
    MelSpectrogram mel = ReadMel(manifest.Resolve(*utterance.feats));
    if (mel.normalized) Fail(utterance.id, ": feats file holds normalized features");
    if (mel.bins() != fbank.n_mels)
      Fail(utterance.id, ": feats have ", mel.bins(), " bins, expected ", fbank.n_mels);
    return mel;
  }
  if (!utterance.audio) Fail(utterance.id, ": neither audio nor feats");
  return ExtractFbank(ReadWav(manifest.Resolve(*utterance.audio)), fbank);
}

std::vector<int> PhoneIdsForTokens(const SpeechEditor &editor, const std::vector<Token> &tokens,
                                   const Lexicon &lexicon, bool allow_fallback) {
  std::vector<int> ids;
  for (const Token &token : tokens) {
    const Phonemization ph = Phonemize(token, lexicon);
    if (ph.fallback && !allow_fallback)
      Fail("word '", token.surface, "' is not in the lexicon and fallback is disabled");
    for (const std::string &p : ph.phones) {
      const int id = editor.phones.Find(p);
      if (id < 0 && !ph.fallback)
        Fail("phone '", p, "' of word '", token.surface, "' is unknown to the model");
      ids.push_back(std::max(id, 0));
    }
  }
  return ids;
}

EditOutcome InferEdit(const SpeechEditor &editor, const Utterance &utterance,
                      const MelSpectrogram &mel, const AlignmentList *alignment,
                      const EditScript &script, const Lexicon &lexicon,
                      const InferOptions &options) {
  if (!alignment || alignment->empty())
    Fail("infer_edit: utterance '", utterance.id, "' has no alignment");
  if (!mel.normalized) Fail("infer_edit: mel must be normalized");
  const int token_count = static_cast<int>(utterance.tokens.size());
  if (alignment->back().token_index + 1 != token_count)
    Fail("infer_edit: alignment of '", utterance.id, "' does not match its tokens");
  script.Validate(token_count);

  EditOutcome outcome;
  outcome.tokens = ApplyEditScript(utterance.tokens, script).tokens;
  if (script.empty()) {
    outcome.mel = mel;
    return outcome;
  }
  outcome.regions = EditRegionsFromAlignment(*alignment, script);
  const int aligned = AlignedFrameCount(*alignment);
  if (aligned > mel.frames())
    Fail("infer_edit: alignment of '", utterance.id, "' covers ", aligned, " frames, mel has ",
         mel.frames());
  const int tail = static_cast<int>(mel.frames()) - aligned;

  // Phone sequence of the edited text; kept tokens keep their aligned
  // durations, new phones get -1 until predicted.
  std::vector<int> phones, durations, op_of_phone;
  auto keep_tokens = [&](int begin, int end) {
    for (const AlignmentEntry &e : *alignment) {
      if (e.token_index < begin || e.token_index >= end) continue;
      const int id = editor.phones.Find(e.phone);
      if (id < 0) Fail("infer_edit: aligned phone '", e.phone, "' unknown to the model");
      phones.push_back(id);
      durations.push_back(e.end_frame - e.start_frame);
      op_of_phone.push_back(-1);
    }
  };
  int cursor = 0;
  for (std::size_t i = 0; i < script.ops.size(); ++i) {
    const EditOp &op = script.ops[i];
    keep_tokens(cursor, op.position);
    for (int id : PhoneIdsForTokens(editor, op.new_tokens, lexicon, options.allow_fallback)) {
      phones.push_back(id);
      durations.push_back(-1);
      op_of_phone.push_back(static_cast<int>(i));
    }
    cursor = op.position + op.length;
  }
  keep_tokens(cursor, token_count);
  if (phones.empty()) Fail("infer_edit: the edit leaves no phones");
  if (tail > 0) {
    if (op_of_phone.back() >= 0)
      Fail("infer_edit: cannot append after unaligned trailing frames of '", utterance.id, "'");
    durations.back() += tail;
  }

  const DurationPrediction predicted = editor.model.PredictDurations(phones);
  for (std::size_t p = 0; p < phones.size(); ++p) {
    if (op_of_phone[p] < 0) continue;
    durations[p] = predicted.realized[p];
    outcome.regions[op_of_phone[p]].new_length += durations[p];
    outcome.new_phone_durations.push_back(durations[p]);
  }

  // Masked input of the new length.
  std::vector<MelSpectrogram> fills;
  for (const EditRegion &r : outcome.regions) {
    MelSpectrogram fill;
    fill.normalized = true;
    fill.data = MelMatrix::Constant(r.new_length, mel.bins(), options.mask_value);
    fills.push_back(std::move(fill));
  }
  const MelSpectrogram masked = StitchMel(mel, outcome.regions, fills);
  EditInput<float> input;
  input.phones = phones;
  input.durations = durations;
  input.masked_mel = masked.data;
  input.frame_mask.assign(masked.frames(), 0);
  int shift = 0;
  for (const EditRegion &r : outcome.regions) {
    const int start = r.start_frame + shift;
    outcome.generated_spans.emplace_back(start, start + r.new_length);
    std::fill(input.frame_mask.begin() + start, input.frame_mask.begin() + start + r.new_length, 1);
    shift += r.new_length - r.width();
  }

  bool any_generated = false;
  for (const EditRegion &r : outcome.regions) any_generated |= r.new_length > 0;
  std::vector<MelSpectrogram> generated(outcome.regions.size());
  if (any_generated) {
    const Matrix<float> predicted_mel = editor.model.Forward(input).mel;
    for (std::size_t i = 0; i < outcome.regions.size(); ++i) {
      const auto [start, end] = outcome.generated_spans[i];
      generated[i].normalized = true;
      generated[i].data = predicted_mel.middleRows(start, end - start);
    }
  } else {
    for (auto &g : generated) g.normalized = true;
  }
  outcome.mel = StitchMel(mel, outcome.regions, generated);
  return outcome;
}

MelSpectrogram SynthPhones(const SpeechEditor &editor, const std::vector<int> &phone_ids,
                           const InferOptions &options, std::vector<int> *durations) {
  if (phone_ids.empty()) Fail("synth: empty phone sequence");
  const DurationPrediction predicted = editor.model.PredictDurations(phone_ids);
  EditInput<float> input;
  input.phones = phone_ids;
  input.durations = predicted.realized;
  const int frames = std::accumulate(input.durations.begin(), input.durations.end(), 0);
  input.masked_mel = Matrix<float>::Constant(frames, editor.model.config().mel_bins,
                                             options.mask_value);
  input.frame_mask.assign(frames, 1);
  MelSpectrogram mel;
  mel.normalized = true;
  mel.data = editor.model.Forward(input).mel;
  if (durations) *durations = predicted.realized;
  return mel;
}

MelSpectrogram SynthFull(const SpeechEditor &editor, const std::vector<Token> &tokens,
                         const Lexicon &lexicon, const InferOptions &options,
                         std::vector<int> *durations) {
  if (tokens.empty()) Fail("synth: empty token sequence");
  return SynthPhones(editor, PhoneIdsForTokens(editor, tokens, lexicon, options.allow_fallback),
                     options, durations);
}

}  // namespace speechedit
