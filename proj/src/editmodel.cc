// src/editmodel.cc

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

#include "speechedit/editmodel.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace speechedit {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

template <typename Params, typename F>
void ForEachTensor(Params &p, F &&f) {
  f(std::string("phone_embedding"), p.phone_embedding);
  auto blocks = [&f](const std::string &prefix, auto &list) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      auto &b = list[i];
      const std::string n = prefix + "." + std::to_string(i) + ".";
      f(n + "ln1_gain", b.ln1_gain);
      f(n + "ln1_bias", b.ln1_bias);
      f(n + "wq", b.wq);
      f(n + "bq", b.bq);
      f(n + "wk", b.wk);
      f(n + "bk", b.bk);
      f(n + "wv", b.wv);
      f(n + "bv", b.bv);
      f(n + "wo", b.wo);
      f(n + "bo", b.bo);
      f(n + "ln2_gain", b.ln2_gain);
      f(n + "ln2_bias", b.ln2_bias);
      f(n + "w1", b.w1);
      f(n + "b1", b.b1);
      f(n + "w2", b.w2);
      f(n + "b2", b.b2);
    }
  };
  blocks("text", p.text_blocks);
  blocks("speech", p.speech_blocks);
  blocks("joint", p.joint_blocks);
  f(std::string("dur_w1"), p.dur_w1);
  f(std::string("dur_b1"), p.dur_b1);
  f(std::string("dur_w2"), p.dur_w2);
  f(std::string("dur_b2"), p.dur_b2);
  f(std::string("mel_in_w"), p.mel_in_w);
  f(std::string("mel_in_b"), p.mel_in_b);
  f(std::string("mask_embedding"), p.mask_embedding);
  f(std::string("mel_out_w"), p.mel_out_w);
  f(std::string("mel_out_b"), p.mel_out_b);
}

template <typename S>
Matrix<S> Gelu(const Matrix<S> &x) {
  const auto a = x.array();
  return (S(0.5) * a * (S(1) + (S(kGeluC) * (a + S(0.044715) * a.cube())).tanh())).matrix();
}

template <typename S>
Matrix<S> GeluGrad(const Matrix<S> &x) {
  const auto a = x.array();
  const auto t = (S(kGeluC) * (a + S(0.044715) * a.cube())).tanh().eval();
  return (S(0.5) * (S(1) + t) +
          S(0.5) * a * (S(1) - t.square()) * S(kGeluC) * (S(1) + S(3 * 0.044715) * a.square()))
      .matrix();
}

template <typename S>
void AddBias(Matrix<S> *x, const Matrix<S> &bias) {
  x->rowwise() += bias.row(0);
}

template <typename S>
struct LayerNormCache {
  Matrix<S> xhat;
  Vector<S> rstd;
};

template <typename S>
Matrix<S> LayerNormForward(const Matrix<S> &x, const Matrix<S> &gain, const Matrix<S> &bias,
                           LayerNormCache<S> *cache) {
  const Vector<S> mean = x.rowwise().mean();
  const Matrix<S> centered = x.colwise() - mean;
  const Vector<S> var = centered.array().square().rowwise().mean();
  const Vector<S> rstd = (var.array() + S(kLayerNormEps)).rsqrt();
  Matrix<S> xhat = centered.array().colwise() * rstd.array();
  Matrix<S> y = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = rstd;
  }
  return y;
}

template <typename S>
Matrix<S> LayerNormBackward(const Matrix<S> &dy, const Matrix<S> &gain,
                            const LayerNormCache<S> &cache, Matrix<S> *d_gain,
                            Matrix<S> *d_bias) {
  *d_gain += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  *d_bias += dy.colwise().sum();
  const Matrix<S> dxhat = dy.array().rowwise() * gain.row(0).array();
  const Vector<S> mean_d = dxhat.rowwise().mean();
  const Vector<S> mean_dx = (dxhat.array() * cache.xhat.array()).rowwise().mean();
  return (((dxhat.colwise() - mean_d).array() - cache.xhat.array().colwise() * mean_dx.array())
              .colwise() *
          cache.rstd.array())
      .matrix();
}

template <typename S>
void SoftmaxRows(Matrix<S> *m) {
  for (Eigen::Index r = 0; r < m->rows(); ++r) {
    auto row = m->row(r);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
}

template <typename S>
struct BlockCache {
  LayerNormCache<S> ln1, ln2;
  Matrix<S> h1, q, k, v, heads_out, h2, pre, act;
  std::vector<Matrix<S>> probs;
};

template <typename S>
Matrix<S> BlockForward(const BlockParams<S> &p, const Matrix<S> &x, int n_heads,
                       BlockCache<S> *cache) {
  const Eigen::Index d = x.cols(), dh = d / n_heads;
  const S scale = S(1) / std::sqrt(S(dh));
  LayerNormCache<S> ln1, ln2;
  Matrix<S> h1 = LayerNormForward(x, p.ln1_gain, p.ln1_bias, cache ? &ln1 : nullptr);
  Matrix<S> q = h1 * p.wq, k = h1 * p.wk, v = h1 * p.wv;
  AddBias(&q, p.bq);
  AddBias(&k, p.bk);
  AddBias(&v, p.bv);
  Matrix<S> heads_out(x.rows(), d);
  std::vector<Matrix<S>> probs(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    Matrix<S> scores = scale * (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose());
    SoftmaxRows(&scores);
    heads_out.middleCols(h * dh, dh).noalias() = scores * v.middleCols(h * dh, dh);
    probs[h] = std::move(scores);
  }
  Matrix<S> x2 = heads_out * p.wo;
  AddBias(&x2, p.bo);
  x2 += x;
  Matrix<S> h2 = LayerNormForward(x2, p.ln2_gain, p.ln2_bias, cache ? &ln2 : nullptr);
  Matrix<S> pre = h2 * p.w1;
  AddBias(&pre, p.b1);
  Matrix<S> act = Gelu(pre);
  Matrix<S> y = act * p.w2;
  AddBias(&y, p.b2);
  y += x2;
  if (cache) {
    cache->ln1 = std::move(ln1);
    cache->ln2 = std::move(ln2);
    cache->h1 = std::move(h1);
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->heads_out = std::move(heads_out);
    cache->probs = std::move(probs);
    cache->h2 = std::move(h2);
    cache->pre = std::move(pre);
    cache->act = std::move(act);
  }
  return y;
}

template <typename S>
Matrix<S> BlockBackward(const BlockParams<S> &p, const BlockCache<S> &c, const Matrix<S> &dy,
                        int n_heads, BlockParams<S> *g) {
  const Eigen::Index d = dy.cols(), dh = d / n_heads;
  const S scale = S(1) / std::sqrt(S(dh));
  // feed-forward branch
  g->w2.noalias() += c.act.transpose() * dy;
  g->b2 += dy.colwise().sum();
  const Matrix<S> d_pre = ((dy * p.w2.transpose()).array() * GeluGrad(c.pre).array()).matrix();
  g->w1.noalias() += c.h2.transpose() * d_pre;
  g->b1 += d_pre.colwise().sum();
  Matrix<S> dx2 = dy + LayerNormBackward<S>(d_pre * p.w1.transpose(), p.ln2_gain, c.ln2,
                                            &g->ln2_gain, &g->ln2_bias);
  // attention branch
  g->wo.noalias() += c.heads_out.transpose() * dx2;
  g->bo += dx2.colwise().sum();
  const Matrix<S> d_heads = dx2 * p.wo.transpose();
  Matrix<S> dq(dy.rows(), d), dk(dy.rows(), d), dv(dy.rows(), d);
  for (int h = 0; h < n_heads; ++h) {
    const Matrix<S> &prob = c.probs[h];
    const auto d_out = d_heads.middleCols(h * dh, dh);
    const Matrix<S> d_prob = d_out * c.v.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh).noalias() = prob.transpose() * d_out;
    const Vector<S> row_dot = (d_prob.array() * prob.array()).rowwise().sum();
    const Matrix<S> d_scores =
        scale * (prob.array() * (d_prob.colwise() - row_dot).array()).matrix();
    dq.middleCols(h * dh, dh).noalias() = d_scores * c.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = d_scores.transpose() * c.q.middleCols(h * dh, dh);
  }
  g->wq.noalias() += c.h1.transpose() * dq;
  g->wk.noalias() += c.h1.transpose() * dk;
  g->wv.noalias() += c.h1.transpose() * dv;
  g->bq += dq.colwise().sum();
  g->bk += dk.colwise().sum();
  g->bv += dv.colwise().sum();
  const Matrix<S> dh1 = dq * p.wq.transpose() + dk * p.wk.transpose() + dv * p.wv.transpose();
  return dx2 + LayerNormBackward<S>(dh1, p.ln1_gain, c.ln1, &g->ln1_gain, &g->ln1_bias);
}

template <typename S>
BlockParams<S> InitBlock(int d, int ff, SeededRng *rng) {
  auto normal = [rng](Eigen::Index rows, Eigen::Index cols) {
    Matrix<S> m(rows, cols);
    const double std = 1.0 / std::sqrt(static_cast<double>(rows));
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<S>(std * rng->Normal());
    return m;
  };
  BlockParams<S> b;
  b.ln1_gain = Matrix<S>::Ones(1, d);
  b.ln1_bias = Matrix<S>::Zero(1, d);
  b.wq = normal(d, d);
  b.bq = Matrix<S>::Zero(1, d);
  b.wk = normal(d, d);
  b.bk = Matrix<S>::Zero(1, d);
  b.wv = normal(d, d);
  b.bv = Matrix<S>::Zero(1, d);
  b.wo = normal(d, d);
  b.bo = Matrix<S>::Zero(1, d);
  b.ln2_gain = Matrix<S>::Ones(1, d);
  b.ln2_bias = Matrix<S>::Zero(1, d);
  b.w1 = normal(d, ff);
  b.b1 = Matrix<S>::Zero(1, ff);
  b.w2 = normal(ff, d);
  b.b2 = Matrix<S>::Zero(1, d);
  return b;
}

template <typename S>
void CheckInput(const EditModelConfig &config, const EditInput<S> &in) {
  if (in.phones.empty()) Fail("edit_forward: empty phone sequence");
  if (in.durations.size() != in.phones.size())
    Fail("edit_forward: ", in.durations.size(), " durations for ", in.phones.size(), " phones");
  long total = 0;
  for (int d : in.durations) {
    if (d < 1) Fail("edit_forward: phone duration ", d, " < 1");
    total += d;
  }
  for (int p : in.phones)
    if (p < 0 || p >= config.phone_vocab)
      Fail("edit_forward: phone id ", p, " outside vocabulary of ", config.phone_vocab);
  if (total != in.masked_mel.rows())
    Fail("edit_forward: durations sum to ", total, " frames, masked mel has ",
         in.masked_mel.rows());
  if (in.masked_mel.cols() != config.mel_bins)
    Fail("edit_forward: mel has ", in.masked_mel.cols(), " bins, model expects ",
         config.mel_bins);
  if (static_cast<Eigen::Index>(in.frame_mask.size()) != in.masked_mel.rows())
    Fail("edit_forward: frame mask length ", in.frame_mask.size(), " != ",
         in.masked_mel.rows(), " frames");
}

}  // namespace

void EditModelConfig::Check() const {
  if (phone_vocab < 1) Fail("model: phone_vocab must be positive");
  if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0)
    Fail("model: d_model ", d_model, " must be divisible by n_heads ", n_heads);
  if (n_text_blocks < 0 || n_speech_blocks < 0 || n_joint_blocks < 0 || ff_width < 1)
    Fail("model: invalid block counts or ff_width");
  if (mel_bins != 80) Fail("model: mel_bins must be 80, got ", mel_bins);
  if (dropout != 0.0) Fail("model: dropout is not supported (must be 0)");
  if (!(duration_offset > 0.0)) Fail("model: duration_offset must be positive");
  if (!(masked_loss_weight > 0.0)) Fail("model: masked_loss_weight must be positive");
}

template <typename S>
std::vector<NamedTensor<S>> EditModelParams<S>::Tensors() {
  std::vector<NamedTensor<S>> out;
  ForEachTensor(*this, [&out](const std::string &name, Matrix<S> &m) { out.push_back({name, &m}); });
  return out;
}

template <typename S>
EditModelParams<S> EditModelParams<S>::ZerosLike() const {
  EditModelParams<S> z = *this;
  ForEachTensor(z, [](const std::string &, Matrix<S> &m) { m.setZero(); });
  return z;
}

template <typename S>
Eigen::Index EditModelParams<S>::Size() const {
  Eigen::Index n = 0;
  ForEachTensor(*this, [&n](const std::string &, const Matrix<S> &m) { n += m.size(); });
  return n;
}

template <typename S>
template <typename Other>
EditModelParams<Other> EditModelParams<S>::Cast() const {
  EditModelParams<Other> out;
  out.text_blocks.resize(text_blocks.size());
  out.speech_blocks.resize(speech_blocks.size());
  out.joint_blocks.resize(joint_blocks.size());
  std::vector<const Matrix<S> *> sources;
  ForEachTensor(*this, [&sources](const std::string &, const Matrix<S> &m) { sources.push_back(&m); });
  std::size_t i = 0;
  ForEachTensor(out, [&](const std::string &, Matrix<Other> &m) {
    m = sources[i++]->template cast<Other>();
  });
  return out;
}

DurationPrediction RealizeDurations(const Eigen::VectorXd &log_durations, double offset) {
  DurationPrediction out;
  out.log_durations = log_durations;
  out.realized.resize(log_durations.size());
  for (Eigen::Index i = 0; i < log_durations.size(); ++i) {
    const double frames = std::exp(std::min(log_durations[i], 30.0)) - offset;
    out.realized[i] = std::max(1, static_cast<int>(std::lround(frames)));
  }
  return out;
}

template <typename S>
Matrix<S> LengthRegulate(const Matrix<S> &encodings, const std::vector<int> &durations) {
  if (static_cast<Eigen::Index>(durations.size()) != encodings.rows())
    Fail("length_regulate: ", durations.size(), " durations for ", encodings.rows(), " phones");
  long total = 0;
  for (int d : durations) {
    if (d < 1) Fail("length_regulate: duration ", d, " < 1");
    total += d;
  }
  Matrix<S> out(total, encodings.cols());
  Eigen::Index row = 0;
  for (std::size_t p = 0; p < durations.size(); ++p)
    for (int j = 0; j < durations[p]; ++j) out.row(row++) = encodings.row(p);
  return out;
}

template <typename S>
Matrix<S> SinusoidalPositions(Eigen::Index length, int width) {
  Matrix<S> pe(length, width);
  for (Eigen::Index pos = 0; pos < length; ++pos)
    for (int i = 0; i < width; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / width);
      pe(pos, i) = static_cast<S>(i % 2 == 0 ? std::sin(pos * rate) : std::cos(pos * rate));
    }
  return pe;
}

template <typename S>
LossTerms TrainingLoss(const Matrix<S> &pred_mel, const Matrix<S> &target_mel,
                       const std::vector<char> &frame_mask, const Vector<S> &pred_log_dur,
                       const Vector<S> &target_log_dur, const std::vector<int> &scored_phones,
                       double lambda, Matrix<S> *d_mel, Vector<S> *d_log_durations) {
  if (pred_mel.rows() != target_mel.rows() || pred_mel.cols() != target_mel.cols())
    Fail("training_loss: predicted mel ", pred_mel.rows(), "x", pred_mel.cols(),
         " vs target ", target_mel.rows(), "x", target_mel.cols());
  if (static_cast<Eigen::Index>(frame_mask.size()) != pred_mel.rows())
    Fail("training_loss: frame mask length mismatch");
  if (pred_log_dur.size() != target_log_dur.size())
    Fail("training_loss: log-duration length mismatch");
  const double cells = static_cast<double>(pred_mel.size());
  LossTerms loss;
  if (d_mel) d_mel->resize(pred_mel.rows(), pred_mel.cols());
  for (Eigen::Index t = 0; t < pred_mel.rows(); ++t) {
    const double w = frame_mask[t] ? lambda : 1.0;
    const auto diff = (pred_mel.row(t) - target_mel.row(t)).array();
    const double row = static_cast<double>(diff.abs().sum()) * w / cells;
    (frame_mask[t] ? loss.masked_l1 : loss.unmasked_l1) += row;
    if (d_mel) d_mel->row(t) = (diff.sign() * S(w / cells)).matrix();
  }
  if (d_log_durations) d_log_durations->setZero(pred_log_dur.size());
  if (!scored_phones.empty()) {
    const double n = static_cast<double>(scored_phones.size());
    for (int p : scored_phones) {
      if (p < 0 || p >= pred_log_dur.size()) Fail("training_loss: scored phone ", p, " out of range");
      const double diff = static_cast<double>(pred_log_dur[p] - target_log_dur[p]);
      loss.duration += diff * diff / n;
      if (d_log_durations) (*d_log_durations)[p] += static_cast<S>(2.0 * diff / n);
    }
  }
  return loss;
}

template <typename S>
struct EditModel<S>::Tape {
  std::vector<BlockCache<S>> text, speech, joint;
  Matrix<S> text_out, dur_pre, dur_act, joint_out;
};

template <typename S>
EditModel<S>::EditModel(const EditModelConfig &config) : config_(config) {
  config_.Check();
  SeededRng rng(config_.seed);
  const int d = config_.d_model, ff = config_.ff_width;
  auto normal = [&rng](Eigen::Index rows, Eigen::Index cols, double std) {
    Matrix<S> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<S>(std * rng.Normal());
    return m;
  };
  params_.phone_embedding = normal(config_.phone_vocab, d, 1.0);
  for (int i = 0; i < config_.n_text_blocks; ++i) params_.text_blocks.push_back(InitBlock<S>(d, ff, &rng));
  for (int i = 0; i < config_.n_speech_blocks; ++i)
    params_.speech_blocks.push_back(InitBlock<S>(d, ff, &rng));
  for (int i = 0; i < config_.n_joint_blocks; ++i)
    params_.joint_blocks.push_back(InitBlock<S>(d, ff, &rng));
  params_.dur_w1 = normal(d, d, 1.0 / std::sqrt(d));
  params_.dur_b1 = Matrix<S>::Zero(1, d);
  params_.dur_w2 = Matrix<S>::Zero(d, 1);
  params_.dur_b2 = Matrix<S>::Zero(1, 1);
  params_.mel_in_w = normal(config_.mel_bins, d, 1.0 / std::sqrt(config_.mel_bins));
  params_.mel_in_b = Matrix<S>::Zero(1, d);
  params_.mask_embedding = normal(1, d, 1.0);
  params_.mel_out_w = normal(d, config_.mel_bins, 1.0 / std::sqrt(d));
  params_.mel_out_b = Matrix<S>::Zero(1, config_.mel_bins);
}

template <typename S>
EditModel<S>::EditModel(const EditModelConfig &config, EditModelParams<S> params)
    : config_(config), params_(std::move(params)) {
  config_.Check();
  const int d = config_.d_model;
  if (params_.phone_embedding.rows() != config_.phone_vocab ||
      params_.phone_embedding.cols() != d ||
      static_cast<int>(params_.text_blocks.size()) != config_.n_text_blocks ||
      static_cast<int>(params_.speech_blocks.size()) != config_.n_speech_blocks ||
      static_cast<int>(params_.joint_blocks.size()) != config_.n_joint_blocks ||
      params_.mel_in_w.rows() != config_.mel_bins || params_.mel_out_w.cols() != config_.mel_bins)
    Fail("model parameters do not match the configuration");
}

template <typename S>
Matrix<S> EditModel<S>::EncodeText(const std::vector<int> &phones) const {
  if (phones.empty()) Fail("encode_text: empty phone sequence");
  const Eigen::Index n = static_cast<Eigen::Index>(phones.size());
  Matrix<S> x = SinusoidalPositions<S>(n, config_.d_model);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (phones[i] < 0 || phones[i] >= config_.phone_vocab)
      Fail("encode_text: phone id ", phones[i], " outside vocabulary");
    x.row(i) += params_.phone_embedding.row(phones[i]);
  }
  for (const auto &block : params_.text_blocks) x = BlockForward<S>(block, x, config_.n_heads, nullptr);
  return x;
}

template <typename S>
Vector<S> EditModel<S>::PredictLogDurations(const Matrix<S> &text_encodings) const {
  Matrix<S> pre = text_encodings * params_.dur_w1;
  AddBias(&pre, params_.dur_b1);
  Matrix<S> out = Gelu(pre) * params_.dur_w2;
  AddBias(&out, params_.dur_b2);
  return out.col(0);
}

template <typename S>
DurationPrediction EditModel<S>::PredictDurations(const std::vector<int> &phones) const {
  const Vector<S> log_dur = PredictLogDurations(EncodeText(phones));
  return RealizeDurations(log_dur.template cast<double>(), config_.duration_offset);
}

template <typename S>
EditForwardOutput<S> EditModel<S>::Run(const EditInput<S> &in, Tape *tape) const {
  CheckInput(config_, in);
  const int heads = config_.n_heads, d = config_.d_model;
  const Eigen::Index n_phones = static_cast<Eigen::Index>(in.phones.size());
  const Eigen::Index frames = in.masked_mel.rows();

  if (tape) {
    tape->text.resize(params_.text_blocks.size());
    tape->speech.resize(params_.speech_blocks.size());
    tape->joint.resize(params_.joint_blocks.size());
  }

  Matrix<S> text = SinusoidalPositions<S>(n_phones, d);
  for (Eigen::Index i = 0; i < n_phones; ++i) text.row(i) += params_.phone_embedding.row(in.phones[i]);
  for (std::size_t b = 0; b < params_.text_blocks.size(); ++b)
    text = BlockForward<S>(params_.text_blocks[b], text, heads, tape ? &tape->text[b] : nullptr);

  Matrix<S> dur_pre = text * params_.dur_w1;
  AddBias(&dur_pre, params_.dur_b1);
  Matrix<S> dur_act = Gelu(dur_pre);
  Matrix<S> log_dur = dur_act * params_.dur_w2;
  AddBias(&log_dur, params_.dur_b2);

  Matrix<S> speech = in.masked_mel * params_.mel_in_w;
  AddBias(&speech, params_.mel_in_b);
  speech += SinusoidalPositions<S>(frames, d);
  for (Eigen::Index t = 0; t < frames; ++t)
    if (in.frame_mask[t]) speech.row(t) += params_.mask_embedding.row(0);
  for (std::size_t b = 0; b < params_.speech_blocks.size(); ++b)
    speech = BlockForward<S>(params_.speech_blocks[b], speech, heads,
                             tape ? &tape->speech[b] : nullptr);

  Matrix<S> joint = LengthRegulate<S>(text, in.durations) + speech;
  for (std::size_t b = 0; b < params_.joint_blocks.size(); ++b)
    joint = BlockForward<S>(params_.joint_blocks[b], joint, heads, tape ? &tape->joint[b] : nullptr);

  EditForwardOutput<S> out;
  out.mel = joint * params_.mel_out_w;
  AddBias(&out.mel, params_.mel_out_b);
  out.log_durations = log_dur.col(0);
  if (tape) {
    tape->text_out = std::move(text);
    tape->dur_pre = std::move(dur_pre);
    tape->dur_act = std::move(dur_act);
    tape->joint_out = std::move(joint);
  }
  return out;
}

template <typename S>
void EditModel<S>::Backward(const EditInput<S> &in, const Tape &tape, const Matrix<S> &d_mel,
                            const Vector<S> &d_log_dur, EditModelParams<S> *g, S scale) const {
  const int heads = config_.n_heads;
  const Matrix<S> d_out = scale * d_mel;
  g->mel_out_w.noalias() += tape.joint_out.transpose() * d_out;
  g->mel_out_b += d_out.colwise().sum();
  Matrix<S> d_joint = d_out * params_.mel_out_w.transpose();
  for (std::size_t b = params_.joint_blocks.size(); b-- > 0;)
    d_joint = BlockBackward<S>(params_.joint_blocks[b], tape.joint[b], d_joint, heads,
                               &g->joint_blocks[b]);

  // Speech stream.
  Matrix<S> d_speech = d_joint;
  for (std::size_t b = params_.speech_blocks.size(); b-- > 0;)
    d_speech = BlockBackward<S>(params_.speech_blocks[b], tape.speech[b], d_speech, heads,
                                &g->speech_blocks[b]);
  g->mel_in_w.noalias() += in.masked_mel.transpose() * d_speech;
  g->mel_in_b += d_speech.colwise().sum();
  for (Eigen::Index t = 0; t < d_speech.rows(); ++t)
    if (in.frame_mask[t]) g->mask_embedding.row(0) += d_speech.row(t);

  // Text stream: length regulator and duration predictor both feed it.
  Matrix<S> d_text = Matrix<S>::Zero(tape.text_out.rows(), tape.text_out.cols());
  Eigen::Index row = 0;
  for (std::size_t p = 0; p < in.durations.size(); ++p) {
    d_text.row(p) = d_joint.middleRows(row, in.durations[p]).colwise().sum();
    row += in.durations[p];
  }
  const Matrix<S> d_log = scale * d_log_dur;
  g->dur_w2.noalias() += tape.dur_act.transpose() * d_log;
  g->dur_b2 += d_log.colwise().sum();
  const Matrix<S> d_dur_pre =
      ((d_log * params_.dur_w2.transpose()).array() * GeluGrad(tape.dur_pre).array()).matrix();
  g->dur_w1.noalias() += tape.text_out.transpose() * d_dur_pre;
  g->dur_b1 += d_dur_pre.colwise().sum();
  d_text.noalias() += d_dur_pre * params_.dur_w1.transpose();
  for (std::size_t b = params_.text_blocks.size(); b-- > 0;)
    d_text = BlockBackward<S>(params_.text_blocks[b], tape.text[b], d_text, heads,
                              &g->text_blocks[b]);
  for (std::size_t p = 0; p < in.phones.size(); ++p)
    g->phone_embedding.row(in.phones[p]) += d_text.row(p);
}

template <typename S>
EditForwardOutput<S> EditModel<S>::Forward(const EditInput<S> &input) const {
  return Run(input, nullptr);
}

template <typename S>
Vector<S> EditModel<S>::TargetLogDurations(const std::vector<int> &durations) const {
  Vector<S> out(durations.size());
  for (std::size_t i = 0; i < durations.size(); ++i)
    out[i] = static_cast<S>(std::log(durations[i] + config_.duration_offset));
  return out;
}

template <typename S>
LossTerms EditModel<S>::Loss(const EditInput<S> &input, const Matrix<S> &target_mel,
                             const std::vector<int> &scored_phones) const {
  const EditForwardOutput<S> out = Run(input, nullptr);
  return TrainingLoss<S>(out.mel, target_mel, input.frame_mask, out.log_durations,
                         TargetLogDurations(input.durations), scored_phones,
                         config_.masked_loss_weight);
}

template <typename S>
LossTerms EditModel<S>::LossAndGradient(const EditInput<S> &input, const Matrix<S> &target_mel,
                                        const std::vector<int> &scored_phones,
                                        EditModelParams<S> *grads, S grad_scale) const {
  Tape tape;
  const EditForwardOutput<S> out = Run(input, &tape);
  Matrix<S> d_mel;
  Vector<S> d_log_dur;
  const LossTerms loss = TrainingLoss<S>(out.mel, target_mel, input.frame_mask, out.log_durations,
                                         TargetLogDurations(input.durations), scored_phones,
                                         config_.masked_loss_weight, &d_mel, &d_log_dur);
  Backward(input, tape, d_mel, d_log_dur, grads, grad_scale);
  return loss;
}

// --- Training ----------------------------------------------------------------

std::pair<int, int> SampleTokenMask(const TrainExample &example, double min_fraction,
                                    double max_fraction, SeededRng *rng) {
  if (example.phones.empty()) Fail("sample_token_mask: empty example");
  // Token frame boundaries.
  std::vector<int> bounds = {0};
  int frame = 0;
  for (std::size_t p = 0; p < example.phones.size(); ++p) {
    frame += example.durations[p];
    const bool last_of_token = p + 1 == example.phones.size() ||
                               example.token_of_phone[p + 1] != example.token_of_phone[p];
    if (last_of_token) bounds.push_back(frame);
  }
  const double total = frame;
  std::vector<std::pair<int, int>> valid;
  std::pair<int, int> closest{0, bounds[1]};
  double closest_gap = 1e300;
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i)
    for (std::size_t j = i + 1; j < bounds.size(); ++j) {
      const double fraction = (bounds[j] - bounds[i]) / total;
      if (fraction >= min_fraction - 1e-12 && fraction <= max_fraction + 1e-12) {
        valid.emplace_back(bounds[i], bounds[j]);
        continue;
      }
      const double gap = fraction < min_fraction ? min_fraction - fraction : fraction - max_fraction;
      if (gap < closest_gap) {
        closest_gap = gap;
        closest = {bounds[i], bounds[j]};
      }
    }
  if (valid.empty()) return closest;
  return valid[rng->Below(valid.size())];
}

EditInput<float> MakeMaskedInput(const TrainExample &example, std::pair<int, int> span,
                                 float mask_value) {
  EditInput<float> in;
  in.phones = example.phones;
  in.durations = example.durations;
  in.masked_mel = example.target;
  in.frame_mask.assign(example.target.rows(), 0);
  for (int t = span.first; t < span.second; ++t) {
    in.masked_mel.row(t).setConstant(mask_value);
    in.frame_mask[t] = 1;
  }
  return in;
}

TrainState::TrainState(const EditModelConfig &config, TrainOptions opts)
    : model(config), rng(config.seed ^ 0x5EED5EED5EEDull), options(opts) {
  first_moment = model.params().ZerosLike();
  second_moment = model.params().ZerosLike();
}

StepResult TrainStep(TrainState *state, const std::vector<const TrainExample *> &batch) {
  if (batch.empty()) Fail("train_step: empty batch");
  const TrainOptions &opt = state->options;
  EditModelParams<float> grads = state->model.params().ZerosLike();
  StepResult result;
  const float scale = 1.0f / static_cast<float>(batch.size());
  for (const TrainExample *ex : batch) {
    const auto span = SampleTokenMask(*ex, opt.min_mask_fraction, opt.max_mask_fraction,
                                      &state->rng);
    const EditInput<float> input = MakeMaskedInput(*ex, span, opt.mask_value);
    std::vector<int> all(ex->phones.size());
    std::iota(all.begin(), all.end(), 0);
    const Matrix<float> target = ex->target;
    const LossTerms loss = state->model.LossAndGradient(input, target, all, &grads, scale);
    if (!std::isfinite(loss.total()))
      Fail("train_step ", state->step, ": non-finite loss on '", ex->id,
           "' (masked ", loss.masked_l1, ", unmasked ", loss.unmasked_l1, ", duration ",
           loss.duration, ")");
    result.loss.masked_l1 += loss.masked_l1 * scale;
    result.loss.unmasked_l1 += loss.unmasked_l1 * scale;
    result.loss.duration += loss.duration * scale;
  }

  ++state->step;
  const double t = static_cast<double>(state->step);
  const float lr = static_cast<float>(opt.learning_rate);
  const float c1 = static_cast<float>(1.0 / (1.0 - std::pow(opt.beta1, t)));
  const float c2 = static_cast<float>(1.0 / (1.0 - std::pow(opt.beta2, t)));
  const float b1 = static_cast<float>(opt.beta1), b2 = static_cast<float>(opt.beta2);
  const float eps = static_cast<float>(opt.epsilon);
  auto params = state->model.params().Tensors();
  auto m = state->first_moment.Tensors();
  auto v = state->second_moment.Tensors();
  auto g = grads.Tensors();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto gi = g[i].value->array();
    m[i].value->array() = b1 * m[i].value->array() + (1.0f - b1) * gi;
    v[i].value->array() = b2 * v[i].value->array() + (1.0f - b2) * gi.square();
    params[i].value->array() -=
        lr * (m[i].value->array() * c1) / ((v[i].value->array() * c2).sqrt() + eps);
  }
  return result;
}

double MaskedRegionL1(const EditModel<float> &model, const std::vector<TrainExample> &examples,
                      std::uint64_t seed, const TrainOptions &options) {
  SeededRng rng(seed);
  double sum = 0.0, cells = 0.0;
  for (const TrainExample &ex : examples) {
    const auto span = SampleTokenMask(ex, options.min_mask_fraction, options.max_mask_fraction, &rng);
    const EditInput<float> input = MakeMaskedInput(ex, span, options.mask_value);
    const Matrix<float> pred = model.Forward(input).mel;
    const int rows = span.second - span.first;
    sum += (pred.middleRows(span.first, rows) - ex.target.middleRows(span.first, rows))
               .cwiseAbs()
               .cast<double>()
               .sum();
    cells += static_cast<double>(rows) * pred.cols();
  }
  return cells > 0 ? sum / cells : 0.0;
}

template struct EditModelParams<float>;
template struct EditModelParams<double>;
template EditModelParams<double> EditModelParams<float>::Cast<double>() const;
template EditModelParams<float> EditModelParams<double>::Cast<float>() const;
template EditModelParams<float> EditModelParams<float>::Cast<float>() const;
template class EditModel<float>;
template class EditModel<double>;
template Matrix<float> LengthRegulate<float>(const Matrix<float> &, const std::vector<int> &);
template Matrix<double> LengthRegulate<double>(const Matrix<double> &, const std::vector<int> &);
template Matrix<float> SinusoidalPositions<float>(Eigen::Index, int);
template Matrix<double> SinusoidalPositions<double>(Eigen::Index, int);
template LossTerms TrainingLoss<float>(const Matrix<float> &, const Matrix<float> &,
                                       const std::vector<char> &, const Vector<float> &,
                                       const Vector<float> &, const std::vector<int> &, double,
                                       Matrix<float> *, Vector<float> *);
template LossTerms TrainingLoss<double>(const Matrix<double> &, const Matrix<double> &,
                                        const std::vector<char> &, const Vector<double> &,
                                        const Vector<double> &, const std::vector<int> &, double,
                                        Matrix<double> *, Vector<double> *);

}  // namespace speechedit
