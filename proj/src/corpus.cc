// src/corpus.cc

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

#include "speechedit/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "speechedit/dsp.h"

namespace speechedit {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::size_t Utf8Length(const std::string &s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

void CheckToken(const Token &token) {
  if (token.surface.empty()) Fail("token with empty surface");
  if (token.language == Language::kMandarin) {
    if (Utf8Length(token.surface) != 1)
      Fail("Mandarin token '", token.surface, "' is not a single character");
  } else {
    for (unsigned char c : token.surface)
      if (std::isspace(c)) Fail("English token '", token.surface, "' contains whitespace");
  }
}

const Utterance *CorpusManifest::Find(const std::string &id) const {
  for (const Utterance &u : entries)
    if (u.id == id) return &u;
  return nullptr;
}

std::string CorpusManifest::Resolve(const std::string &path) const {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / p).string();
}

const char *LanguageName(Language l) { return l == Language::kMandarin ? "zh" : "en"; }

Language ParseLanguage(const std::string &s) {
  if (s == "zh") return Language::kMandarin;
  if (s == "en") return Language::kEnglish;
  Fail("unknown language tag '", s, "' (expected zh or en)");
}

const char *EntityName(Entity e) { return e == Entity::kNone ? "none" : "person"; }

Entity ParseEntity(const std::string &s) {
  if (s == "none") return Entity::kNone;
  if (s == "person") return Entity::kPersonName;
  Fail("unknown entity tag '", s, "' (expected none or person)");
}

namespace {

std::optional<std::string> OptionalPath(const nlohmann::json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) Fail("field '", key, "' must be a string or null");
  return it->get<std::string>();
}

void ValidateUtterance(const Utterance &u, bool allow_placeholders) {
  if (u.id.empty()) Fail("utterance with empty id");
  if (u.sample_rate != 16000)
    Fail("utterance '", u.id, "': sample_rate ", u.sample_rate, " (must be 16000)");
  if (u.tokens.empty()) Fail("utterance '", u.id, "' has no tokens");
  if (!u.audio && !u.feats) Fail("utterance '", u.id, "' has neither audio nor feats");
  for (const Token &t : u.tokens) {
    if (allow_placeholders && t.surface == kNamePlaceholder) continue;
    CheckToken(t);
  }
}

}  // namespace

Utterance ParseManifestLine(const std::string &line, bool allow_placeholders) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error &e) {
    Fail("malformed JSON: ", e.what());
  }
  if (!j.is_object()) Fail("record is not a JSON object");
  try {
    Utterance u;
    u.id = j.at("id").get<std::string>();
    u.audio = OptionalPath(j, "audio");
    u.feats = OptionalPath(j, "feats");
    u.sample_rate = j.at("sample_rate").get<int>();
    u.speaker = j.at("speaker").get<std::string>();
    if (auto it = j.find("origin"); it != j.end() && !it->is_null())
      u.origin = it->get<std::string>();
    for (const auto &jt : j.at("tokens")) {
      Token t;
      t.surface = jt.at("surface").get<std::string>();
      t.language = ParseLanguage(jt.at("lang").get<std::string>());
      t.entity = jt.contains("entity") ? ParseEntity(jt.at("entity").get<std::string>())
                                       : Entity::kNone;
      u.tokens.push_back(std::move(t));
    }
    ValidateUtterance(u, allow_placeholders);
    return u;
  } catch (const nlohmann::json::exception &e) {
    Fail("bad record: ", e.what());
  }
}

std::string SerializeManifestLine(const Utterance &u) {
  ordered_json j;
  j["id"] = u.id;
  j["audio"] = u.audio ? ordered_json(*u.audio) : ordered_json(nullptr);
  j["feats"] = u.feats ? ordered_json(*u.feats) : ordered_json(nullptr);
  j["sample_rate"] = u.sample_rate;
  j["speaker"] = u.speaker;
  if (u.origin) j["origin"] = *u.origin;
  ordered_json tokens = ordered_json::array();
  for (const Token &t : u.tokens)
    tokens.push_back({{"surface", t.surface},
                      {"lang", LanguageName(t.language)},
                      {"entity", EntityName(t.entity)}});
  j["tokens"] = std::move(tokens);
  return j.dump();
}

void ValidateManifest(const CorpusManifest &manifest, bool allow_placeholders) {
  std::set<std::string> seen;
  for (const Utterance &u : manifest.entries) {
    ValidateUtterance(u, allow_placeholders);
    if (!seen.insert(u.id).second) Fail("duplicate utterance id '", u.id, "'");
  }
}

CorpusManifest LoadManifest(const std::string &path, bool allow_placeholders) {
  std::ifstream is(path);
  if (!is) Fail("cannot open manifest: ", path);
  CorpusManifest manifest;
  manifest.base_dir = fs::path(path).parent_path().string();
  std::set<std::string> seen;
  std::string line;
  for (int line_no = 1; std::getline(is, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Utterance u;
    try {
      u = ParseManifestLine(line, allow_placeholders);
    } catch (const Error &e) {
      Fail("manifest ", path, ":", line_no, ": ", e.what());
    }
    if (!seen.insert(u.id).second)
      Fail("manifest ", path, ":", line_no, ": duplicate utterance id '", u.id, "'");
    manifest.entries.push_back(std::move(u));
  }
  return manifest;
}

void SaveManifest(const std::string &path, const CorpusManifest &manifest) {
  std::ofstream os(path, std::ios::binary);
  if (!os) Fail("cannot open manifest for writing: ", path);
  for (const Utterance &u : manifest.entries) os << SerializeManifestLine(u) << '\n';
  if (!os) Fail("error writing manifest: ", path);
}

Alignment ValidateAlignment(std::vector<AlignmentEntry> rows, const CorpusManifest &manifest) {
  Alignment alignment;
  for (AlignmentEntry &row : rows) {
    if (!manifest.Find(row.utterance_id))
      Fail("alignment references unknown utterance id '", row.utterance_id, "'");
    alignment[row.utterance_id].push_back(std::move(row));
  }
  for (auto &[id, entries] : alignment) {
    const Utterance &utt = *manifest.Find(id);
    std::stable_sort(entries.begin(), entries.end(),
                     [](const AlignmentEntry &a, const AlignmentEntry &b) {
                       return a.start_frame < b.start_frame;
                     });
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const AlignmentEntry &e = entries[i];
      if (e.start_frame < 0 || e.end_frame <= e.start_frame)
        Fail("alignment for '", id, "': bad span [", e.start_frame, ",", e.end_frame, ")");
      if (i == 0) {
        if (e.start_frame != 0) Fail("alignment for '", id, "' does not start at frame 0");
        if (e.token_index != 0) Fail("alignment for '", id, "' does not start at token 0");
        continue;
      }
      const AlignmentEntry &prev = entries[i - 1];
      if (e.start_frame < prev.end_frame)
        Fail("alignment for '", id, "': overlapping spans [", prev.start_frame, ",",
             prev.end_frame, ") and [", e.start_frame, ",", e.end_frame, ")");
      if (e.start_frame > prev.end_frame)
        Fail("alignment for '", id, "': gap between frames ", prev.end_frame, " and ",
             e.start_frame);
      if (e.token_index != prev.token_index && e.token_index != prev.token_index + 1)
        Fail("alignment for '", id, "': token indices not consecutive at frame ",
             e.start_frame);
    }
    const int last_token = entries.back().token_index;
    if (last_token + 1 != static_cast<int>(utt.tokens.size()))
      Fail("alignment for '", id, "' covers ", last_token + 1, " tokens, utterance has ",
           utt.tokens.size());
    if (utt.feats) {
      const std::string mel_path = manifest.Resolve(*utt.feats);
      if (fs::exists(mel_path)) {
        const std::uint32_t frames = ReadMelFrameCount(mel_path);
        if (static_cast<std::uint32_t>(entries.back().end_frame) > frames)
          Fail("alignment for '", id, "' ends at frame ", entries.back().end_frame,
               " but the mel has ", frames, " frames");
      }
    }
  }
  return alignment;
}

Alignment IngestAlignment(const std::string &path, const CorpusManifest &manifest) {
  std::ifstream is(path);
  if (!is) Fail("cannot open alignment file: ", path);
  std::vector<AlignmentEntry> rows;
  std::string line;
  for (int line_no = 1; std::getline(is, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    AlignmentEntry e;
    std::string extra;
    if (!(fields >> e.utterance_id >> e.token_index >> e.phone >> e.start_frame >>
          e.end_frame) ||
        (fields >> extra))
      Fail("alignment ", path, ":", line_no, ": expected 'utt_id token_index phone start end'");
    rows.push_back(std::move(e));
  }
  try {
    return ValidateAlignment(std::move(rows), manifest);
  } catch (const Error &e) {
    Fail("alignment ", path, ": ", e.what());
  }
}

void SaveAlignment(const std::string &path, const Alignment &alignment) {
  std::ofstream os(path, std::ios::binary);
  if (!os) Fail("cannot open alignment file for writing: ", path);
  for (const auto &[id, entries] : alignment)
    for (const AlignmentEntry &e : entries)
      os << e.utterance_id << ' ' << e.token_index << ' ' << e.phone << ' ' << e.start_frame
         << ' ' << e.end_frame << '\n';
  if (!os) Fail("error writing alignment file: ", path);
}

std::pair<int, int> TokenFrameSpan(const AlignmentList &alignment, int token_index) {
  int start = -1, end = -1;
  for (const AlignmentEntry &e : alignment) {
    if (e.token_index != token_index) continue;
    start = start < 0 ? e.start_frame : std::min(start, e.start_frame);
    end = std::max(end, e.end_frame);
  }
  if (start < 0) Fail("token index ", token_index, " not present in alignment");
  return {start, end};
}

std::pair<int, int> SecondsToFrameSpan(double start_seconds, double end_seconds,
                                       double hop_seconds) {
  const int start = static_cast<int>(std::floor(start_seconds / hop_seconds + 1e-9));
  const int end = static_cast<int>(std::ceil(end_seconds / hop_seconds - 1e-9));
  return {start, std::max(end, start + 1)};
}

int AlignedFrameCount(const AlignmentList &alignment) {
  return alignment.empty() ? 0 : alignment.back().end_frame;
}

std::int64_t FrameBoundaryToSample(int frame, int hop, int frame_size) {
  return static_cast<std::int64_t>(frame) * hop + (frame_size - hop) / 2;
}

// --- Toy corpus --------------------------------------------------------------

double ToyPhoneFrequency(int phone) { return 300.0 + 100.0 * phone; }

std::string ToyPhoneSymbol(int phone) { return "p" + std::to_string(phone); }

std::string ToyPhoneCharacter(int phone) {
  static const char *const kChars[kToyMaxVocab] = {"零", "一", "二", "三", "四", "五", "六",
                                                   "七", "八", "九", "十", "百", "千", "万",
                                                   "天", "地", "人", "山", "水", "火"};
  if (phone < 0 || phone >= kToyMaxVocab) Fail("toy phone ", phone, " out of range");
  return kChars[phone];
}

std::vector<std::pair<std::string, std::vector<int>>> ToyEnglishWords(int vocab_size) {
  static const char *const kWords[] = {"alpha", "bravo", "charlie", "delta", "echo", "foxtrot"};
  std::vector<std::pair<std::string, std::vector<int>>> words;
  for (int i = 0; i < 6; ++i) {
    std::vector<int> phones = {(7 + 3 * i) % vocab_size};
    if (i % 2 == 1) phones.push_back((2 + 5 * i) % vocab_size);
    words.emplace_back(kWords[i], std::move(phones));
  }
  return words;
}

std::vector<std::vector<int>> SampleToyPhoneSequences(std::uint64_t seed, int n_utts,
                                                      int vocab_size) {
  if (vocab_size < 1 || vocab_size > kToyMaxVocab)
    Fail("toy corpus: vocab_size must be in [1, ", kToyMaxVocab, "], got ", vocab_size);
  if (n_utts < 1) Fail("toy corpus: n_utts must be >= 1");
  SeededRng rng(seed);
  std::vector<std::vector<int>> sequences(n_utts);
  for (auto &phones : sequences) {
    const int length = 3 + static_cast<int>(rng.Below(6));
    for (int i = 0; i < length; ++i) phones.push_back(static_cast<int>(rng.Below(vocab_size)));
  }
  return sequences;
}

std::vector<float> RenderToyPhones(const std::vector<int> &phones) {
  std::vector<float> samples(2 * kToyEdgePadding + phones.size() * kToySamplesPerPhone, 0.0f);
  std::size_t offset = kToyEdgePadding;
  for (int phone : phones) {
    const double w = 2.0 * std::numbers::pi * ToyPhoneFrequency(phone) / 16000.0;
    for (int n = 0; n < kToySamplesPerPhone; ++n)
      samples[offset + n] = static_cast<float>(kToyAmplitude * std::sin(w * n));
    offset += kToySamplesPerPhone;
  }
  return samples;
}

ToyCorpus GenerateToyCorpus(std::uint64_t seed, int n_utts, int vocab_size,
                            const std::string &out_dir) {
  ToyCorpus corpus;
  corpus.phones = SampleToyPhoneSequences(seed, n_utts, vocab_size);
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "wav", ec);
  if (ec) Fail("cannot create toy corpus directory ", out_dir, ": ", ec.message());
  corpus.manifest.base_dir = out_dir;

  std::vector<AlignmentEntry> rows;
  for (int i = 0; i < n_utts; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "toy%04d", i);
    Utterance u;
    u.id = id;
    u.audio = "wav/" + u.id + ".wav";
    u.speaker = "spk" + std::to_string(i % 4);
    const auto &phones = corpus.phones[i];
    for (std::size_t k = 0; k < phones.size(); ++k) {
      u.tokens.push_back({ToyPhoneCharacter(phones[k]), Language::kMandarin, Entity::kNone});
      const int start = static_cast<int>(k) * kToyFramesPerPhone;
      rows.push_back({u.id, static_cast<int>(k), ToyPhoneSymbol(phones[k]), start,
                      start + kToyFramesPerPhone});
    }
    const std::vector<float> samples = RenderToyPhones(phones);
    Waveform wave;
    wave.samples = Eigen::Map<const Eigen::VectorXf>(samples.data(),
                                                      static_cast<Eigen::Index>(samples.size()));
    WriteWav((fs::path(out_dir) / *u.audio).string(), wave);
    corpus.manifest.entries.push_back(std::move(u));
  }
  corpus.alignment = ValidateAlignment(std::move(rows), corpus.manifest);

  SaveManifest((fs::path(out_dir) / "manifest.jsonl").string(), corpus.manifest);
  SaveAlignment((fs::path(out_dir) / "alignment.txt").string(), corpus.alignment);
  std::ofstream lex((fs::path(out_dir) / "lexicon.txt").string(), std::ios::binary);
  if (!lex) Fail("cannot write toy lexicon in ", out_dir);
  for (int k = 0; k < vocab_size; ++k) lex << ToyPhoneCharacter(k) << ' ' << ToyPhoneSymbol(k) << '\n';
  for (const auto &[word, phones] : ToyEnglishWords(vocab_size)) {
    lex << word;
    for (int p : phones) lex << ' ' << ToyPhoneSymbol(p);
    lex << '\n';
  }
  return corpus;
}

// splitmix64
std::uint64_t SeededRng::Next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t SeededRng::Below(std::uint64_t n) {
  if (n == 0) Fail("SeededRng::Below(0)");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do x = Next();
  while (x >= limit);
  return x % n;
}

double SeededRng::Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

double SeededRng::Normal() {
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace speechedit
