// include/speechedit/evalkit.h

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

#ifndef SPEECHEDIT_EVALKIT_H_
#define SPEECHEDIT_EVALKIT_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "speechedit/corpus.h"

namespace speechedit {

/// CJK ideographs become single-character Mandarin tokens, maximal ASCII
/// letter runs become case-folded English tokens, everything else separates.
std::vector<Token> TokenizeMixed(const std::string &text);

/// Re-tokenizes manifest tokens with TokenizeMixed, keeping entity tags.
std::vector<Token> RetokenizeMixed(const std::vector<Token> &tokens);

enum class AlignOp { kMatch, kSubstitute, kDelete, kInsert };

struct AlignedPair {
  AlignOp op = AlignOp::kMatch;
  int ref_index = -1;  // -1 for insertions
  int hyp_index = -1;  // -1 for deletions
};

struct ScoredPair {
  std::string utterance_id;
  std::vector<Token> ref;
  std::vector<Token> hyp;
  std::vector<AlignedPair> alignment;  // in sequence order
  int cost = 0;
};

/// Unit-cost Levenshtein on token surfaces. The backtrace prefers
/// substitution, then deletion, then insertion.
ScoredPair EditDistanceAlignment(const std::vector<Token> &ref, const std::vector<Token> &hyp,
                                 const std::string &utterance_id = "");

struct ErrorCounts {
  std::int64_t ref_tokens = 0;
  std::int64_t substitutions = 0;
  std::int64_t deletions = 0;
  std::int64_t insertions = 0;

  std::int64_t errors() const { return substitutions + deletions + insertions; }
  ErrorCounts &operator+=(const ErrorCounts &o);
};

/// Substitutions and deletions count against the reference token's class,
/// insertions against the inserted token's class.
struct PairCounts {
  ErrorCounts mandarin, english, mixed;
};
PairCounts CountErrors(const ScoredPair &pair);

enum class RateClass { kMandarin, kEnglish };

struct ErrorRates {
  double cer_man = 0;  // percent
  double wer_eng = 0;
  double mer = 0;
  PairCounts counts;
  std::vector<std::string> flags;
};

/// Rates in percent. A class without reference tokens yields 0 and a flag,
/// unless it is listed in `required`, in which case it is an error.
ErrorRates ComputeErrorRates(const std::vector<ScoredPair> &pairs,
                             const std::vector<RateClass> &required = {});

using NameTokens = std::vector<std::string>;  // case-folded surfaces

/// Maximal runs of PERSON_NAME tokens.
std::vector<std::pair<int, int>> EntityRanges(const std::vector<Token> &tokens);

struct EntityReference {
  std::vector<Token> tokens;
  std::vector<std::pair<int, int>> entity_ranges;
};

struct EntityScores {
  double recall = 0;  // percent
  double precision = 0;
  std::int64_t ref_occurrences = 0;
  std::int64_t hits = 0;
  std::int64_t hyp_occurrences = 0;
  std::vector<std::string> flags;
};

/// Hypothesis occurrences of list names are found left to right, longest
/// name first, without overlap; reference names absent from the list are
/// searched too. Each reference occurrence claims the leftmost unclaimed
/// hypothesis occurrence of the same name.
EntityScores EntityMetrics(const std::vector<EntityReference> &refs,
                           const std::vector<std::vector<Token>> &hyps,
                           const std::vector<NameTokens> &name_list);

/// `utt_id<TAB>text` per line. Duplicate ids are an error.
std::map<std::string, std::string> LoadHypotheses(const std::string &path);

struct UtteranceScore {
  std::string id;
  std::string ref_text;
  std::string hyp_text;
  PairCounts counts;
};

struct EvalReport {
  ErrorRates rates;
  EntityScores entities;
  std::vector<UtteranceScore> utterances;
  std::vector<std::string> flags;  // union of rate, entity and input flags
};

/// Scores every reference utterance. A reference without a hypothesis is
/// scored against an empty hypothesis and flagged; a hypothesis id absent
/// from the references is an error.
EvalReport Evaluate(const CorpusManifest &refs, const std::map<std::string, std::string> &hyps,
                    const std::vector<NameTokens> &name_list = {},
                    const std::vector<RateClass> &required = {});

/// Stable-keyed JSON document (pretty printed, trailing newline).
std::string ReportToJson(const EvalReport &report);

/// Space-joined surfaces.
std::string JoinTokens(const std::vector<Token> &tokens);

}  // namespace speechedit

#endif  // SPEECHEDIT_EVALKIT_H_
