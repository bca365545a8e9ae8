// include/speechedit/config.h

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

#ifndef SPEECHEDIT_CONFIG_H_
#define SPEECHEDIT_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "speechedit/dsp.h"
#include "speechedit/editmodel.h"
#include "speechedit/editor.h"

namespace speechedit {

struct PathsConfig {
  std::string manifest;
  std::string alignment;
  std::string lexicon;
  std::string names;
  std::string templates;
  std::string edits;
  std::string model;
  std::string real_manifest;
  std::string ref;
  std::string hyp;
  std::string out;
};

struct AugmentConfig {
  std::string recipe = "edit";
  int griffin_lim_iterations = 60;
  double mask_value = kDefaultMaskValue;
  std::optional<double> mix_ratio;  // mix with real data when set
  int names_per_template = 1;
  bool allow_fallback = true;
};

struct EvalConfig {
  bool require_cer = false;
  bool require_wer = false;
};

/// Everything a command can be configured with. File values are applied over
/// the defaults, command-line flags over the file.
struct RunConfig {
  PathsConfig paths;
  FbankConfig fbank;
  EditModelConfig model;
  TrainOptions train;
  TrainSchedule schedule;
  AugmentConfig augment;
  EvalConfig eval;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

/// Sections: paths, fbank, model, augment, eval, plus top-level `seed` and
/// `jobs`. Unknown sections or keys and mistyped values are errors naming
/// the offending key.
RunConfig ParseConfig(const std::string &text, const std::string &source_name = "config");
RunConfig LoadConfig(const std::string &path);

/// Resolved configuration for job.json.
nlohmann::ordered_json ConfigToJson(const RunConfig &config);

}  // namespace speechedit

#endif  // SPEECHEDIT_CONFIG_H_
