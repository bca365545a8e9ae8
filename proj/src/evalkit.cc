// src/evalkit.cc

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

#include "speechedit/evalkit.h"

#include <algorithm>
#include <fstream>

#include "json.hpp"

#include "speechedit/textgen.h"

namespace speechedit {

namespace {

// Decodes one UTF-8 code point at s[*pos], advancing *pos. Malformed bytes
// decode as U+FFFD and advance by one.
char32_t NextCodePoint(const std::string &s, std::size_t *pos) {
  unsigned char c = s[*pos];
  int extra = c < 0x80 ? 0 : (c >> 5) == 0x6 ? 1 : (c >> 4) == 0xE ? 2 : (c >> 3) == 0x1E ? 3 : -1;
  if (extra < 0 || *pos + extra >= s.size()) {
    ++*pos;
    return 0xFFFD;
  }
  char32_t cp = extra == 0 ? c : c & (0x3F >> extra);
  for (int i = 1; i <= extra; ++i) {
    unsigned char cc = s[*pos + i];
    if ((cc & 0xC0) != 0x80) {
      ++*pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  *pos += extra + 1;
  return cp;
}

bool IsCjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0x20000 && cp <= 0x2A6DF) || (cp >= 0xF900 && cp <= 0xFAFF) ||
         (cp >= 0x2A700 && cp <= 0x2EBEF);
}

bool IsAsciiLetter(char32_t cp) { return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z'); }

double Percent(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

ErrorCounts &ClassOf(PairCounts *c, const Token &t) {
  return t.language == Language::kMandarin ? c->mandarin : c->english;
}

}  // namespace

std::vector<Token> TokenizeMixed(const std::string &text) {
  std::vector<Token> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back({CaseFold(word), Language::kEnglish, Entity::kNone});
    word.clear();
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t begin = pos;
    char32_t cp = NextCodePoint(text, &pos);
    if (IsAsciiLetter(cp)) {
      word.push_back(static_cast<char>(cp));
      continue;
    }
    flush();
    if (IsCjk(cp)) out.push_back({text.substr(begin, pos - begin), Language::kMandarin, Entity::kNone});
  }
  flush();
  return out;
}

std::vector<Token> RetokenizeMixed(const std::vector<Token> &tokens) {
  std::vector<Token> out;
  for (const Token &t : tokens)
    for (Token piece : TokenizeMixed(t.surface)) {
      piece.entity = t.entity;
      out.push_back(std::move(piece));
    }
  return out;
}

ScoredPair EditDistanceAlignment(const std::vector<Token> &ref, const std::vector<Token> &hyp,
                                 const std::string &utterance_id) {
  const int n = static_cast<int>(ref.size()), m = static_cast<int>(hyp.size());
  std::vector<int> d((n + 1) * (m + 1));
  auto at = [&](int i, int j) -> int & { return d[i * (m + 1) + j]; };
  for (int i = 0; i <= n; ++i) at(i, 0) = i;
  for (int j = 0; j <= m; ++j) at(0, j) = j;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= m; ++j) {
      int diag = at(i - 1, j - 1) + (ref[i - 1].surface == hyp[j - 1].surface ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }

  ScoredPair pair{utterance_id, ref, hyp, {}, at(n, m)};
  int i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      bool same = ref[i - 1].surface == hyp[j - 1].surface;
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        pair.alignment.push_back({same ? AlignOp::kMatch : AlignOp::kSubstitute, i - 1, j - 1});
        --i, --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      pair.alignment.push_back({AlignOp::kDelete, i - 1, -1});
      --i;
    } else {
      pair.alignment.push_back({AlignOp::kInsert, -1, j - 1});
      --j;
    }
  }
  std::reverse(pair.alignment.begin(), pair.alignment.end());
  return pair;
}

ErrorCounts &ErrorCounts::operator+=(const ErrorCounts &o) {
  ref_tokens += o.ref_tokens;
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  return *this;
}

PairCounts CountErrors(const ScoredPair &pair) {
  PairCounts c;
  for (const Token &t : pair.ref) {
    ++ClassOf(&c, t).ref_tokens;
    ++c.mixed.ref_tokens;
  }
  for (const AlignedPair &a : pair.alignment) {
    switch (a.op) {
      case AlignOp::kMatch: break;
      case AlignOp::kSubstitute:
        ++ClassOf(&c, pair.ref[a.ref_index]).substitutions;
        ++c.mixed.substitutions;
        break;
      case AlignOp::kDelete:
        ++ClassOf(&c, pair.ref[a.ref_index]).deletions;
        ++c.mixed.deletions;
        break;
      case AlignOp::kInsert:
        ++ClassOf(&c, pair.hyp[a.hyp_index]).insertions;
        ++c.mixed.insertions;
        break;
    }
  }
  return c;
}

ErrorRates ComputeErrorRates(const std::vector<ScoredPair> &pairs,
                             const std::vector<RateClass> &required) {
  ErrorRates r;
  for (const ScoredPair &p : pairs) {
    PairCounts c = CountErrors(p);
    r.counts.mandarin += c.mandarin;
    r.counts.english += c.english;
    r.counts.mixed += c.mixed;
  }
  auto requested = [&](RateClass k) {
    return std::find(required.begin(), required.end(), k) != required.end();
  };
  if (r.counts.mandarin.ref_tokens == 0) {
    if (requested(RateClass::kMandarin)) Fail("CER requested but there are no Mandarin reference tokens");
    r.flags.push_back("no_mandarin_reference");
  }
  if (r.counts.english.ref_tokens == 0) {
    if (requested(RateClass::kEnglish)) Fail("WER requested but there are no English reference tokens");
    r.flags.push_back("no_english_reference");
  }
  if (r.counts.mixed.ref_tokens == 0) r.flags.push_back("no_reference_tokens");
  r.cer_man = Percent(r.counts.mandarin.errors(), r.counts.mandarin.ref_tokens);
  r.wer_eng = Percent(r.counts.english.errors(), r.counts.english.ref_tokens);
  r.mer = Percent(r.counts.mixed.errors(), r.counts.mixed.ref_tokens);
  return r;
}

std::vector<std::pair<int, int>> EntityRanges(const std::vector<Token> &tokens) {
  std::vector<std::pair<int, int>> ranges;
  for (int i = 0, n = static_cast<int>(tokens.size()); i < n;) {
    if (tokens[i].entity != Entity::kPersonName) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && tokens[j].entity == Entity::kPersonName) ++j;
    ranges.emplace_back(i, j);
    i = j;
  }
  return ranges;
}

namespace {

NameTokens Surfaces(const std::vector<Token> &tokens, int begin, int end) {
  NameTokens out;
  for (int i = begin; i < end; ++i) out.push_back(CaseFold(tokens[i].surface));
  return out;
}

struct Occurrence {
  int start;
  NameTokens name;
  bool claimed = false;
};

std::vector<Occurrence> FindOccurrences(const std::vector<Token> &hyp,
                                        const std::vector<NameTokens> &names) {
  NameTokens words = Surfaces(hyp, 0, static_cast<int>(hyp.size()));
  std::vector<Occurrence> out;
  for (std::size_t i = 0; i < words.size();) {
    const NameTokens *best = nullptr;
    for (const NameTokens &name : names) {
      if (name.empty() || name.size() > words.size() - i) continue;
      if (best && name.size() <= best->size()) continue;
      if (std::equal(name.begin(), name.end(), words.begin() + i)) best = &name;
    }
    if (!best) {
      ++i;
      continue;
    }
    out.push_back({static_cast<int>(i), *best});
    i += best->size();
  }
  return out;
}

}  // namespace

EntityScores EntityMetrics(const std::vector<EntityReference> &refs,
                           const std::vector<std::vector<Token>> &hyps,
                           const std::vector<NameTokens> &name_list) {
  if (refs.size() != hyps.size())
    Fail("entity metrics: ", refs.size(), " references but ", hyps.size(), " hypotheses");
  EntityScores s;
  for (std::size_t u = 0; u < refs.size(); ++u) {
    std::vector<NameTokens> names;
    for (const NameTokens &n : name_list) names.push_back(n);
    std::vector<NameTokens> ref_names;
    for (auto [b, e] : refs[u].entity_ranges) {
      if (b < 0 || e > static_cast<int>(refs[u].tokens.size()) || b >= e)
        Fail("entity metrics: bad entity range [", b, ",", e, ")");
      ref_names.push_back(Surfaces(refs[u].tokens, b, e));
      names.push_back(ref_names.back());
    }
    std::vector<Occurrence> occ = FindOccurrences(hyps[u], names);
    s.ref_occurrences += static_cast<std::int64_t>(ref_names.size());
    s.hyp_occurrences += static_cast<std::int64_t>(occ.size());
    for (const NameTokens &name : ref_names) {
      for (Occurrence &o : occ) {
        if (o.claimed || o.name != name) continue;
        o.claimed = true;
        ++s.hits;
        break;
      }
    }
  }
  if (s.ref_occurrences == 0) s.flags.push_back("no_reference_names");
  if (s.hyp_occurrences == 0) s.flags.push_back("no_hypothesis_names");
  s.recall = Percent(s.hits, s.ref_occurrences);
  s.precision = Percent(s.hits, s.hyp_occurrences);
  return s;
}

std::map<std::string, std::string> LoadHypotheses(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail("cannot open hypothesis file ", path);
  std::map<std::string, std::string> hyps;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    std::string id = line.substr(0, tab);
    if (id.empty()) Fail(path, ":", lineno, ": missing utterance id");
    std::string text = tab == std::string::npos ? "" : line.substr(tab + 1);
    if (!hyps.emplace(id, text).second) Fail(path, ":", lineno, ": duplicate utterance id '", id, "'");
  }
  return hyps;
}

std::string JoinTokens(const std::vector<Token> &tokens) {
  std::string out;
  for (const Token &t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.surface;
  }
  return out;
}

EvalReport Evaluate(const CorpusManifest &refs, const std::map<std::string, std::string> &hyps,
                    const std::vector<NameTokens> &name_list,
                    const std::vector<RateClass> &required) {
  for (const auto &[id, text] : hyps)
    if (!refs.Find(id)) Fail("hypothesis for unknown utterance '", id, "'");

  EvalReport report;
  std::vector<ScoredPair> pairs;
  std::vector<EntityReference> entity_refs;
  std::vector<std::vector<Token>> hyp_tokens;
  for (const Utterance &u : refs.entries) {
    std::vector<Token> ref = RetokenizeMixed(u.tokens);
    auto it = hyps.find(u.id);
    if (it == hyps.end()) report.flags.push_back("missing_hypothesis:" + u.id);
    std::vector<Token> hyp = TokenizeMixed(it == hyps.end() ? "" : it->second);
    pairs.push_back(EditDistanceAlignment(ref, hyp, u.id));
    report.utterances.push_back({u.id, JoinTokens(ref), JoinTokens(hyp), CountErrors(pairs.back())});
    entity_refs.push_back({ref, EntityRanges(ref)});
    hyp_tokens.push_back(std::move(hyp));
  }
  report.rates = ComputeErrorRates(pairs, required);
  report.entities = EntityMetrics(entity_refs, hyp_tokens, name_list);
  report.flags.insert(report.flags.end(), report.rates.flags.begin(), report.rates.flags.end());
  report.flags.insert(report.flags.end(), report.entities.flags.begin(), report.entities.flags.end());
  return report;
}

namespace {

nlohmann::ordered_json CountsJson(const ErrorCounts &c) {
  nlohmann::ordered_json j;
  j["ref_tokens"] = c.ref_tokens;
  j["sub"] = c.substitutions;
  j["del"] = c.deletions;
  j["ins"] = c.insertions;
  j["errors"] = c.errors();
  return j;
}

nlohmann::ordered_json PairCountsJson(const PairCounts &c) {
  nlohmann::ordered_json j;
  j["mandarin"] = CountsJson(c.mandarin);
  j["english"] = CountsJson(c.english);
  j["mixed"] = CountsJson(c.mixed);
  return j;
}

}  // namespace

std::string ReportToJson(const EvalReport &report) {
  nlohmann::ordered_json j;
  j["cer_man"] = report.rates.cer_man;
  j["wer_eng"] = report.rates.wer_eng;
  j["mer"] = report.rates.mer;
  j["entity_recall"] = report.entities.recall;
  j["entity_precision"] = report.entities.precision;
  j["counts"] = PairCountsJson(report.rates.counts);
  nlohmann::ordered_json e;
  e["ref_occurrences"] = report.entities.ref_occurrences;
  e["hits"] = report.entities.hits;
  e["hyp_occurrences"] = report.entities.hyp_occurrences;
  j["entity_counts"] = e;
  j["flags"] = report.flags;
  nlohmann::ordered_json utts = nlohmann::ordered_json::array();
  for (const UtteranceScore &u : report.utterances) {
    nlohmann::ordered_json x;
    x["id"] = u.id;
    x["ref"] = u.ref_text;
    x["hyp"] = u.hyp_text;
    x["counts"] = PairCountsJson(u.counts);
    utts.push_back(std::move(x));
  }
  j["utterances"] = std::move(utts);
  return j.dump(2) + "\n";
}

}  // namespace speechedit
