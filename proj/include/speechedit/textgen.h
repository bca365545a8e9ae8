// include/speechedit/textgen.h

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

#ifndef SPEECHEDIT_TEXTGEN_H_
#define SPEECHEDIT_TEXTGEN_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "speechedit/corpus.h"

namespace speechedit {

enum class EditKind { kInsert, kReplace, kDelete };

const char *EditKindName(EditKind kind);
EditKind ParseEditKind(const std::string &name);

/// Positions always refer to the ORIGINAL token sequence. INSERT goes in
/// front of `position`; REPLACE/DELETE consume [position, position+length).
struct EditOp {
  EditKind kind = EditKind::kInsert;
  int position = 0;
  int length = 0;
  std::vector<Token> new_tokens;

  bool operator==(const EditOp &) const = default;
};

struct EditScript {
  std::vector<EditOp> ops;

  bool empty() const { return ops.empty(); }
  /// Throws unless every op is well formed against a sequence of
  /// `token_count` tokens and the ops are sorted and non-overlapping.
  void Validate(int token_count) const;

  bool operator==(const EditScript &) const = default;
};

using TokenRange = std::pair<int, int>;  // [begin, end)

struct EditedTokens {
  std::vector<Token> tokens;
  /// Ranges of newly introduced tokens in `tokens`, one per INSERT/REPLACE.
  std::vector<TokenRange> new_ranges;
};

EditedTokens ApplyEditScript(const std::vector<Token> &tokens, const EditScript &script);

enum class CodeswitchMode { kInsert, kReplace };

/// Single-op script putting an English phrase into a Mandarin sentence.
EditScript MakeCodeswitchEdit(const std::vector<Token> &tokens, const std::vector<Token> &phrase,
                              CodeswitchMode mode, int position, int length);

struct FilledTemplate {
  std::vector<Token> tokens;
  std::vector<TokenRange> entity_ranges;
};

/// Replaces every "<NAME>" placeholder with the full name.
FilledTemplate FillNameTemplate(const std::vector<Token> &template_tokens,
                                const std::vector<Token> &name);

/// Derives the edit turning `source` into the template filled with `name`.
/// The template must equal `source` except that some spans (possibly empty)
/// are written as a single "<NAME>" placeholder.
EditScript ScriptFromTemplate(const std::vector<Token> &source,
                              const std::vector<Token> &template_tokens,
                              const std::vector<Token> &name);

/// Case-folded word -> phone sequence.
class Lexicon {
 public:
  void Add(const std::string &word, std::vector<std::string> phones);
  const std::vector<std::string> *Find(const std::string &word) const;
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::vector<std::string>> &entries() const { return entries_; }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

/// One entry per line: `word ph1 ph2 ...`.
Lexicon LoadLexicon(const std::string &path);

struct Phonemization {
  std::vector<std::string> phones;
  bool fallback = false;  // true when the word was not in the lexicon
};

/// Lexicon lookup; unknown words fall back to one pseudo-phone per
/// character (ASCII letters upper-cased).
Phonemization Phonemize(const Token &token, const Lexicon &lexicon);

/// ASCII-only lower-casing (the toolkit's case fold).
std::string CaseFold(const std::string &s);

/// Splits a line of space separated words into tokens: ASCII words become
/// English tokens, other words are split into one Mandarin token per code
/// point.
std::vector<Token> TokensFromText(const std::string &text, Entity entity = Entity::kNone);

/// Name list: one name per line, tokens separated by spaces. All tokens are
/// tagged as person names.
std::vector<std::vector<Token>> LoadNameList(const std::string &path);

}  // namespace speechedit

#endif  // SPEECHEDIT_TEXTGEN_H_
