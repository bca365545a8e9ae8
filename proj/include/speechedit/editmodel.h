// include/speechedit/editmodel.h

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

#ifndef SPEECHEDIT_EDITMODEL_H_
#define SPEECHEDIT_EDITMODEL_H_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "speechedit/corpus.h"
#include "speechedit/dsp.h"

namespace speechedit {

/// Architecture and loss hyper-parameters of the editing network. The sizes
/// are chosen so the network overfits a toy corpus on one CPU core and stays
/// small enough for exhaustive finite-difference checks.
struct EditModelConfig {
  int phone_vocab = 0;
  int d_model = 64;
  int n_text_blocks = 2;
  int n_speech_blocks = 2;
  int n_joint_blocks = 2;
  int n_heads = 2;
  int ff_width = 128;
  double dropout = 0.0;
  int mel_bins = 80;
  double duration_offset = 1.0;
  double masked_loss_weight = 2.0;  // lambda
  std::uint64_t seed = 0;

  void Check() const;
  bool operator==(const EditModelConfig &) const = default;
};

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Pre-LayerNorm self-attention block. Linear weights are stored [in x out]
/// and biases / LayerNorm parameters as [1 x width] rows.
template <typename Scalar>
struct BlockParams {
  Matrix<Scalar> ln1_gain, ln1_bias;
  Matrix<Scalar> wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix<Scalar> ln2_gain, ln2_bias;
  Matrix<Scalar> w1, b1, w2, b2;
};

template <typename Scalar>
struct NamedTensor {
  std::string name;
  Matrix<Scalar> *value;
};

template <typename Scalar>
struct EditModelParams {
  Matrix<Scalar> phone_embedding;  // phone_vocab x d
  std::vector<BlockParams<Scalar>> text_blocks, speech_blocks, joint_blocks;
  Matrix<Scalar> dur_w1, dur_b1, dur_w2, dur_b2;
  Matrix<Scalar> mel_in_w, mel_in_b;
  Matrix<Scalar> mask_embedding;  // 1 x d, added to masked frames
  Matrix<Scalar> mel_out_w, mel_out_b;

  /// Every parameter tensor with a stable name, in a fixed order.
  std::vector<NamedTensor<Scalar>> Tensors();
  /// Same shapes, all zeros.
  EditModelParams ZerosLike() const;
  Eigen::Index Size() const;

  template <typename Other>
  EditModelParams<Other> Cast() const;
};

/// Per-phone log-duration outputs and the integer frame counts they imply.
struct DurationPrediction {
  Eigen::VectorXd log_durations;
  std::vector<int> realized;
};

/// realized = max(1, round(exp(log_duration) - offset)).
DurationPrediction RealizeDurations(const Eigen::VectorXd &log_durations, double offset);

/// Row j of the result is the encoding of the phone owning frame j.
template <typename Scalar>
Matrix<Scalar> LengthRegulate(const Matrix<Scalar> &encodings, const std::vector<int> &durations);

/// Sinusoidal position table [length x width].
template <typename Scalar>
Matrix<Scalar> SinusoidalPositions(Eigen::Index length, int width);

/// Network input for one utterance.
template <typename Scalar>
struct EditInput {
  std::vector<int> phones;
  std::vector<int> durations;   // frames per phone, sum == masked_mel rows
  Matrix<Scalar> masked_mel;    // frames x mel_bins, normalized, mask applied
  std::vector<char> frame_mask;  // 1 where the frame is masked
};

template <typename Scalar>
struct EditForwardOutput {
  Matrix<Scalar> mel;             // frames x mel_bins, normalized
  Vector<Scalar> log_durations;  // per phone
};

struct LossTerms {
  double masked_l1 = 0.0;    // lambda-weighted masked frames, already / (T * bins)
  double unmasked_l1 = 0.0;  // unmasked frames, / (T * bins)
  double duration = 0.0;     // mean squared log-duration error
  double total() const { return masked_l1 + unmasked_l1 + duration; }
};

/// L = mean-L1 over all cells with weight lambda on masked frames and 1
/// elsewhere, plus the mean squared log-duration error over `scored_phones`.
/// When gradients are requested they are written (not accumulated) into
/// `d_mel` / `d_log_durations`.
template <typename Scalar>
LossTerms TrainingLoss(const Matrix<Scalar> &pred_mel, const Matrix<Scalar> &target_mel,
                       const std::vector<char> &frame_mask, const Vector<Scalar> &pred_log_dur,
                       const Vector<Scalar> &target_log_dur,
                       const std::vector<int> &scored_phones, double lambda,
                       Matrix<Scalar> *d_mel = nullptr, Vector<Scalar> *d_log_durations = nullptr);

/// Text encoder, duration predictor, length regulator, speech encoder and
/// joint net.
template <typename Scalar>
class EditModel {
 public:
  EditModel() = default;
  /// Random initialisation from config.seed. The last duration layer starts
  /// at zero, so an untrained model predicts log-duration 0 everywhere.
  explicit EditModel(const EditModelConfig &config);
  EditModel(const EditModelConfig &config, EditModelParams<Scalar> params);

  const EditModelConfig &config() const { return config_; }
  EditModelParams<Scalar> &params() { return params_; }
  const EditModelParams<Scalar> &params() const { return params_; }

  /// Text encoder output, phones x d_model.
  Matrix<Scalar> EncodeText(const std::vector<int> &phones) const;
  Vector<Scalar> PredictLogDurations(const Matrix<Scalar> &text_encodings) const;
  DurationPrediction PredictDurations(const std::vector<int> &phones) const;

  EditForwardOutput<Scalar> Forward(const EditInput<Scalar> &input) const;

  /// Forward + loss + backward. Gradients are ADDED to `grads` scaled by
  /// `grad_scale`.
  LossTerms LossAndGradient(const EditInput<Scalar> &input, const Matrix<Scalar> &target_mel,
                            const std::vector<int> &scored_phones,
                            EditModelParams<Scalar> *grads, Scalar grad_scale = Scalar(1)) const;

  /// Forward + loss only.
  LossTerms Loss(const EditInput<Scalar> &input, const Matrix<Scalar> &target_mel,
                 const std::vector<int> &scored_phones) const;

 private:
  struct Tape;
  EditForwardOutput<Scalar> Run(const EditInput<Scalar> &input, Tape *tape) const;
  void Backward(const EditInput<Scalar> &input, const Tape &tape, const Matrix<Scalar> &d_mel,
                const Vector<Scalar> &d_log_dur, EditModelParams<Scalar> *grads,
                Scalar scale) const;
  Vector<Scalar> TargetLogDurations(const std::vector<int> &durations) const;

  EditModelConfig config_;
  EditModelParams<Scalar> params_;
};

// ---------------------------------------------------------------------------
// Training.

/// One training utterance: aligned phones plus the normalized target mel.
struct TrainExample {
  std::string id;
  std::vector<int> phones;
  std::vector<int> durations;
  std::vector<int> token_of_phone;  // token index owning each phone
  MelMatrix target;                 // normalized
};

struct TrainOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  double min_mask_fraction = 0.15;
  double max_mask_fraction = 0.5;
  float mask_value = 0.1f;
};

/// Picks one contiguous whole-token span covering a fraction of the frames in
/// [min_fraction, max_fraction] (uniformly among the valid spans; the span
/// closest to the range when none qualifies). Returns a frame span.
std::pair<int, int> SampleTokenMask(const TrainExample &example, double min_fraction,
                                    double max_fraction, SeededRng *rng);

/// Builds the network input for `example` with frames [start, end) masked.
EditInput<float> MakeMaskedInput(const TrainExample &example, std::pair<int, int> span,
                                 float mask_value);

struct TrainState {
  EditModel<float> model;
  EditModelParams<float> first_moment, second_moment;
  std::int64_t step = 0;
  SeededRng rng{0};
  TrainOptions options;

  explicit TrainState(const EditModelConfig &config, TrainOptions opts = {});
};

struct StepResult {
  LossTerms loss;  // averaged over the batch, before the update
};

/// One Adam update on `batch`. Throws on a non-finite loss.
StepResult TrainStep(TrainState *state, const std::vector<const TrainExample *> &batch);

/// Mean absolute error over masked cells, with masks drawn by the training
/// policy from a generator seeded with `seed`.
double MaskedRegionL1(const EditModel<float> &model, const std::vector<TrainExample> &examples,
                      std::uint64_t seed, const TrainOptions &options = {});

}  // namespace speechedit

#endif  // SPEECHEDIT_EDITMODEL_H_
