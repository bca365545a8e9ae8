// src/config.cc

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

#include "speechedit/config.h"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "toml.hpp"

namespace speechedit {

namespace {

using Setter = std::function<void(const toml::node &, const std::string &key)>;
using Section = std::map<std::string, Setter>;

const char *TypeName(const toml::node &n) {
  switch (n.type()) {
    case toml::node_type::string: return "string";
    case toml::node_type::integer: return "integer";
    case toml::node_type::floating_point: return "float";
    case toml::node_type::boolean: return "boolean";
    case toml::node_type::table: return "table";
    case toml::node_type::array: return "array";
    default: return "date/time";
  }
}

[[noreturn]] void TypeError(const toml::node &n, const std::string &key, const char *want) {
  Fail("config key '", key, "' must be ", want, ", got ", TypeName(n));
}

Setter Str(std::string *out) {
  return [out](const toml::node &n, const std::string &key) {
    if (!n.is_string()) TypeError(n, key, "a string");
    *out = *n.value<std::string>();
  };
}

Setter Int(int *out) {
  return [out](const toml::node &n, const std::string &key) {
    if (!n.is_integer()) TypeError(n, key, "an integer");
    const std::int64_t v = *n.value<std::int64_t>();
    if (v < INT32_MIN || v > INT32_MAX) Fail("config key '", key, "' is out of range");
    *out = static_cast<int>(v);
  };
}

Setter Real(double *out) {
  return [out](const toml::node &n, const std::string &key) {
    if (!n.is_number()) TypeError(n, key, "a number");
    *out = *n.value<double>();
  };
}

Setter RealF(float *out) {
  return [out](const toml::node &n, const std::string &key) {
    if (!n.is_number()) TypeError(n, key, "a number");
    *out = static_cast<float>(*n.value<double>());
  };
}

Setter Bool(bool *out) {
  return [out](const toml::node &n, const std::string &key) {
    if (!n.is_boolean()) TypeError(n, key, "a boolean");
    *out = *n.value<bool>();
  };
}

Setter Seed(std::optional<std::uint64_t> *out) {
  return [out](const toml::node &n, const std::string &key) {
    if (!n.is_integer()) TypeError(n, key, "an integer");
    const std::int64_t v = *n.value<std::int64_t>();
    if (v < 0) Fail("config key '", key, "' must be >= 0");
    *out = static_cast<std::uint64_t>(v);
  };
}

void Apply(const toml::table &table, const std::string &prefix, const Section &section) {
  for (const auto &[k, node] : table) {
    const std::string key = prefix + std::string(k.str());
    auto it = section.find(std::string(k.str()));
    if (it == section.end()) Fail("unknown config key '", key, "'");
    it->second(node, key);
  }
}

}  // namespace

RunConfig ParseConfig(const std::string &text, const std::string &source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error &e) {
    std::ostringstream msg;
    msg << source_name << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
        << e.description();
    Fail(msg.str());
  }

  RunConfig c;
  PathsConfig &p = c.paths;
  FbankConfig &f = c.fbank;
  EditModelConfig &m = c.model;
  AugmentConfig &a = c.augment;
  bool model_seed_set = false;

  const std::map<std::string, Section> sections = {
      {"paths",
       {{"manifest", Str(&p.manifest)}, {"alignment", Str(&p.alignment)},
        {"lexicon", Str(&p.lexicon)}, {"names", Str(&p.names)},
        {"templates", Str(&p.templates)}, {"edits", Str(&p.edits)}, {"model", Str(&p.model)},
        {"real_manifest", Str(&p.real_manifest)}, {"ref", Str(&p.ref)}, {"hyp", Str(&p.hyp)},
        {"out", Str(&p.out)}}},
      {"fbank",
       {{"sample_rate", Int(&f.sample_rate)}, {"n_mels", Int(&f.n_mels)},
        {"frame_size", Int(&f.frame_size)}, {"hop", Int(&f.hop)}, {"n_fft", Int(&f.n_fft)},
        {"fmin", Real(&f.fmin)}, {"fmax", Real(&f.fmax)}, {"log_floor", Real(&f.log_floor)}}},
      {"model",
       {{"d_model", Int(&m.d_model)}, {"n_text_blocks", Int(&m.n_text_blocks)},
        {"n_speech_blocks", Int(&m.n_speech_blocks)}, {"n_joint_blocks", Int(&m.n_joint_blocks)},
        {"n_heads", Int(&m.n_heads)}, {"ff_width", Int(&m.ff_width)},
        {"dropout", Real(&m.dropout)}, {"mel_bins", Int(&m.mel_bins)},
        {"duration_offset", Real(&m.duration_offset)},
        {"masked_loss_weight", Real(&m.masked_loss_weight)},
        {"seed",
         [&](const toml::node &n, const std::string &key) {
           if (!n.is_integer() || *n.value<std::int64_t>() < 0)
             TypeError(n, key, "a non-negative integer");
           model_seed_set = true;
           m.seed = static_cast<std::uint64_t>(*n.value<std::int64_t>());
         }},
        {"steps", Int(&c.schedule.steps)}, {"batch_size", Int(&c.schedule.batch_size)},
        {"log_every", Int(&c.schedule.log_every)},
        {"learning_rate", Real(&c.train.learning_rate)}, {"beta1", Real(&c.train.beta1)},
        {"beta2", Real(&c.train.beta2)}, {"epsilon", Real(&c.train.epsilon)},
        {"min_mask_fraction", Real(&c.train.min_mask_fraction)},
        {"max_mask_fraction", Real(&c.train.max_mask_fraction)},
        {"mask_value", RealF(&c.train.mask_value)}}},
      {"augment",
       {{"recipe", Str(&a.recipe)}, {"griffin_lim_iterations", Int(&a.griffin_lim_iterations)},
        {"mask_value", Real(&a.mask_value)},
        {"mix_ratio",
         [&](const toml::node &n, const std::string &key) {
           if (!n.is_number()) TypeError(n, key, "a number");
           a.mix_ratio = *n.value<double>();
         }},
        {"names_per_template", Int(&a.names_per_template)},
        {"allow_fallback", Bool(&a.allow_fallback)}}},
      {"eval", {{"require_cer", Bool(&c.eval.require_cer)}, {"require_wer", Bool(&c.eval.require_wer)}}},
  };
  const Section top = {{"seed", Seed(&c.seed)}, {"jobs", Int(&c.jobs)}};

  for (const auto &[k, node] : root) {
    const std::string key(k.str());
    if (auto s = sections.find(key); s != sections.end()) {
      if (!node.is_table()) TypeError(node, key, "a table");
      Apply(*node.as_table(), key + ".", s->second);
    } else if (auto t = top.find(key); t != top.end()) {
      t->second(node, key);
    } else {
      Fail("unknown config key '", key, "'");
    }
  }
  if (!model_seed_set && c.seed) m.seed = *c.seed;
  f.Check();
  if (c.jobs < 1) Fail("config key 'jobs' must be >= 1");
  return c;
}

RunConfig LoadConfig(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail("cannot open config ", path);
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str(), path);
}

nlohmann::ordered_json ConfigToJson(const RunConfig &c) {
  nlohmann::ordered_json j;
  const PathsConfig &p = c.paths;
  j["paths"] = {{"manifest", p.manifest}, {"alignment", p.alignment}, {"lexicon", p.lexicon},
                {"names", p.names},       {"templates", p.templates}, {"edits", p.edits},
                {"model", p.model},       {"real_manifest", p.real_manifest},
                {"ref", p.ref},           {"hyp", p.hyp},             {"out", p.out}};
  const FbankConfig &f = c.fbank;
  j["fbank"] = {{"sample_rate", f.sample_rate}, {"n_mels", f.n_mels}, {"frame_size", f.frame_size},
                {"hop", f.hop},                 {"n_fft", f.n_fft},   {"fmin", f.fmin},
                {"fmax", f.fmax},               {"log_floor", f.log_floor}};
  const EditModelConfig &m = c.model;
  j["model"] = {{"d_model", m.d_model},
                {"n_text_blocks", m.n_text_blocks},
                {"n_speech_blocks", m.n_speech_blocks},
                {"n_joint_blocks", m.n_joint_blocks},
                {"n_heads", m.n_heads},
                {"ff_width", m.ff_width},
                {"dropout", m.dropout},
                {"mel_bins", m.mel_bins},
                {"duration_offset", m.duration_offset},
                {"masked_loss_weight", m.masked_loss_weight},
                {"seed", m.seed},
                {"steps", c.schedule.steps},
                {"batch_size", c.schedule.batch_size},
                {"log_every", c.schedule.log_every},
                {"learning_rate", c.train.learning_rate},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"epsilon", c.train.epsilon},
                {"min_mask_fraction", c.train.min_mask_fraction},
                {"max_mask_fraction", c.train.max_mask_fraction},
                {"mask_value", c.train.mask_value}};
  const AugmentConfig &a = c.augment;
  j["augment"] = {{"recipe", a.recipe},
                  {"griffin_lim_iterations", a.griffin_lim_iterations},
                  {"mask_value", a.mask_value},
                  {"mix_ratio", a.mix_ratio ? nlohmann::ordered_json(*a.mix_ratio) : nullptr},
                  {"names_per_template", a.names_per_template},
                  {"allow_fallback", a.allow_fallback}};
  j["eval"] = {{"require_cer", c.eval.require_cer}, {"require_wer", c.eval.require_wer}};
  j["seed"] = c.seed ? nlohmann::ordered_json(*c.seed) : nullptr;
  j["jobs"] = c.jobs;
  return j;
}

}  // namespace speechedit
