// src/textgen.cc

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

#include "speechedit/textgen.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace speechedit {

const char *EditKindName(EditKind kind) {
  switch (kind) {
    case EditKind::kInsert: return "insert";
    case EditKind::kReplace: return "replace";
    case EditKind::kDelete: return "delete";
  }
  return "?";
}

EditKind ParseEditKind(const std::string &name) {
  if (name == "insert") return EditKind::kInsert;
  if (name == "replace") return EditKind::kReplace;
  if (name == "delete") return EditKind::kDelete;
  Fail("unknown edit kind '", name, "' (expected insert, replace or delete)");
}

void EditScript::Validate(int token_count) const {
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const EditOp &op = ops[i];
    if (op.position < 0 || op.position > token_count)
      Fail("edit op ", i, ": position ", op.position, " out of range [0, ", token_count, "]");
    if (op.length < 0 || op.position + op.length > token_count)
      Fail("edit op ", i, ": span [", op.position, ",", op.position + op.length,
           ") exceeds ", token_count, " tokens");
    switch (op.kind) {
      case EditKind::kInsert:
        if (op.length != 0) Fail("edit op ", i, ": insert must have length 0");
        if (op.new_tokens.empty()) Fail("edit op ", i, ": insert without new tokens");
        break;
      case EditKind::kReplace:
        if (op.length == 0) Fail("edit op ", i, ": replace must consume at least one token");
        if (op.new_tokens.empty()) Fail("edit op ", i, ": replace without new tokens");
        break;
      case EditKind::kDelete:
        if (op.length == 0) Fail("edit op ", i, ": delete must consume at least one token");
        if (!op.new_tokens.empty()) Fail("edit op ", i, ": delete carries new tokens");
        break;
    }
    for (const Token &t : op.new_tokens) CheckToken(t);
    if (i > 0) {
      const EditOp &prev = ops[i - 1];
      if (prev.position + prev.length > op.position)
        Fail("edit ops ", i - 1, " and ", i, " overlap or are not sorted by position");
    }
  }
}

EditedTokens ApplyEditScript(const std::vector<Token> &tokens, const EditScript &script) {
  script.Validate(static_cast<int>(tokens.size()));
  EditedTokens out;
  int cursor = 0;
  for (const EditOp &op : script.ops) {
    out.tokens.insert(out.tokens.end(), tokens.begin() + cursor, tokens.begin() + op.position);
    if (!op.new_tokens.empty()) {
      const int begin = static_cast<int>(out.tokens.size());
      out.tokens.insert(out.tokens.end(), op.new_tokens.begin(), op.new_tokens.end());
      out.new_ranges.emplace_back(begin, static_cast<int>(out.tokens.size()));
    }
    cursor = op.position + op.length;
  }
  out.tokens.insert(out.tokens.end(), tokens.begin() + cursor, tokens.end());
  return out;
}

EditScript MakeCodeswitchEdit(const std::vector<Token> &tokens, const std::vector<Token> &phrase,
                              CodeswitchMode mode, int position, int length) {
  const int count = static_cast<int>(tokens.size());
  if (position < 0 || position > count)
    Fail("codeswitch edit: position ", position, " beyond sequence of ", count, " tokens");
  if (phrase.empty()) Fail("codeswitch edit: empty phrase");
  for (const Token &t : phrase)
    if (t.language != Language::kEnglish)
      Fail("codeswitch edit: phrase token '", t.surface, "' is not English");
  EditOp op;
  op.position = position;
  op.new_tokens = phrase;
  if (mode == CodeswitchMode::kReplace) {
    if (length <= 0) Fail("codeswitch edit: replace needs length >= 1");
    if (position + length > count)
      Fail("codeswitch edit: replace span [", position, ",", position + length, ") exceeds ",
           count, " tokens");
    op.kind = EditKind::kReplace;
    op.length = length;
  } else {
    op.kind = EditKind::kInsert;
  }
  EditScript script{{op}};
  script.Validate(count);
  return script;
}

FilledTemplate FillNameTemplate(const std::vector<Token> &template_tokens,
                                const std::vector<Token> &name) {
  if (name.empty()) Fail("fill_name_template: empty name");
  for (const Token &t : name)
    if (t.entity != Entity::kPersonName)
      Fail("fill_name_template: name token '", t.surface, "' is not tagged as a person name");
  FilledTemplate out;
  for (const Token &t : template_tokens) {
    if (t.surface != kNamePlaceholder) {
      out.tokens.push_back(t);
      continue;
    }
    const int begin = static_cast<int>(out.tokens.size());
    out.tokens.insert(out.tokens.end(), name.begin(), name.end());
    out.entity_ranges.emplace_back(begin, static_cast<int>(out.tokens.size()));
  }
  if (out.entity_ranges.empty()) Fail("fill_name_template: template has no <NAME> placeholder");
  return out;
}

EditScript ScriptFromTemplate(const std::vector<Token> &source,
                              const std::vector<Token> &template_tokens,
                              const std::vector<Token> &name) {
  // Validates the name and the presence of a placeholder.
  FillNameTemplate(template_tokens, name);
  EditScript script;
  std::size_t i = 0, j = 0;
  while (j < template_tokens.size()) {
    if (template_tokens[j].surface != kNamePlaceholder) {
      if (i >= source.size() || source[i].surface != template_tokens[j].surface)
        Fail("template token '", template_tokens[j].surface,
             "' does not match the source utterance at position ", i);
      ++i, ++j;
      continue;
    }
    // The placeholder stands for source tokens up to the next anchor.
    const std::size_t begin = i;
    const bool last = j + 1 == template_tokens.size();
    if (last) {
      i = source.size();
    } else {
      const std::string &anchor = template_tokens[j + 1].surface;
      if (anchor == kNamePlaceholder) Fail("template has adjacent <NAME> placeholders");
      while (i < source.size() && source[i].surface != anchor) ++i;
    }
    EditOp op;
    op.position = static_cast<int>(begin);
    op.length = static_cast<int>(i - begin);
    op.kind = op.length == 0 ? EditKind::kInsert : EditKind::kReplace;
    op.new_tokens = name;
    script.ops.push_back(std::move(op));
    ++j;
  }
  if (i != source.size()) Fail("template is shorter than the source utterance");
  script.Validate(static_cast<int>(source.size()));
  return script;
}

std::string CaseFold(const std::string &s) {
  std::string out = s;
  for (char &c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

void Lexicon::Add(const std::string &word, std::vector<std::string> phones) {
  if (word.empty()) Fail("lexicon: empty word");
  if (phones.empty()) Fail("lexicon: word '", word, "' has no phones");
  entries_[CaseFold(word)] = std::move(phones);
}

const std::vector<std::string> *Lexicon::Find(const std::string &word) const {
  auto it = entries_.find(CaseFold(word));
  return it == entries_.end() ? nullptr : &it->second;
}

Lexicon LoadLexicon(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail("cannot open lexicon: ", path);
  Lexicon lexicon;
  std::string line;
  for (int line_no = 1; std::getline(is, line); ++line_no) {
    std::istringstream fields(line);
    std::string word, phone;
    if (!(fields >> word)) continue;
    std::vector<std::string> phones;
    while (fields >> phone) phones.push_back(phone);
    if (phones.empty()) Fail("lexicon ", path, ":", line_no, ": word '", word, "' has no phones");
    lexicon.Add(word, std::move(phones));
  }
  return lexicon;
}

namespace {
// Splits UTF-8 text into code points.
std::vector<std::string> CodePoints(const std::string &s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t n = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : 4;
    n = std::min(n, s.size() - i);
    out.push_back(s.substr(i, n));
    i += n;
  }
  return out;
}
}  // namespace

Phonemization Phonemize(const Token &token, const Lexicon &lexicon) {
  if (token.surface.empty()) Fail("phonemize: empty token");
  Phonemization result;
  if (const auto *phones = lexicon.Find(token.surface)) {
    result.phones = *phones;
    return result;
  }
  result.fallback = true;
  for (std::string cp : CodePoints(token.surface)) {
    if (cp.size() == 1) cp[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(cp[0])));
    result.phones.push_back(cp);
  }
  return result;
}

std::vector<Token> TokensFromText(const std::string &text, Entity entity) {
  std::vector<Token> tokens;
  std::istringstream words(text);
  std::string word;
  while (words >> word) {
    const bool ascii = std::all_of(word.begin(), word.end(),
                                   [](char c) { return static_cast<unsigned char>(c) < 0x80; });
    if (ascii) {
      tokens.push_back({CaseFold(word), Language::kEnglish, entity});
    } else {
      for (const std::string &cp : CodePoints(word))
        tokens.push_back({cp, Language::kMandarin, entity});
    }
  }
  return tokens;
}

std::vector<std::vector<Token>> LoadNameList(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail("cannot open name list: ", path);
  std::vector<std::vector<Token>> names;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<Token> name = TokensFromText(line, Entity::kPersonName);
    if (!name.empty()) names.push_back(std::move(name));
  }
  if (names.empty()) Fail("name list ", path, " is empty");
  return names;
}

}  // namespace speechedit
