// include/speechedit/dsp.h

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

#ifndef SPEECHEDIT_DSP_H_
#define SPEECHEDIT_DSP_H_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "speechedit/common.h"

namespace speechedit {

/// Row-major so that one frame is a contiguous run of bins, which is also the
/// on-disk layout of the mel binary format.
using MelMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FbankConfig {
  int sample_rate = 16000;
  int n_mels = 80;
  int frame_size = 800;  // 50 ms
  int hop = 200;         // 12.5 ms
  int n_fft = 1024;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-10;

  int NumBins() const { return n_fft / 2 + 1; }
  /// Throws if the invariants between the fields do not hold.
  void Check() const;
};

struct Waveform {
  Eigen::VectorXf samples;
  int sample_rate = 16000;

  Eigen::Index size() const { return samples.size(); }
};

/// frames x n_mels matrix of natural-log mel energies.
struct MelSpectrogram {
  MelMatrix data;
  bool normalized = false;

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index bins() const { return data.cols(); }
};

/// Per-bin mean / standard deviation used for mean-variance normalization.
struct MelStats {
  Eigen::VectorXf mean;
  Eigen::VectorXf stddev;
};

/// HTK mel scale.
double HzToMel(double hz);
double MelToHz(double mel);

/// Triangular filters equally spaced on the mel scale, [n_mels x n_fft/2+1].
Eigen::MatrixXd BuildMelFilterbank(const FbankConfig &config);

/// Symmetric Hann window, w[n] = 0.5 - 0.5 cos(2 pi n / (length - 1)).
Eigen::VectorXd HannWindow(int length);

/// Number of frames produced for a signal of `num_samples` samples.
Eigen::Index NumFrames(Eigen::Index num_samples, const FbankConfig &config);

/// Log-mel filterbank features. No dithering, no pre-emphasis, no centering:
/// frame t covers samples [t*hop, t*hop + frame_size).
MelSpectrogram ExtractFbank(const Waveform &wave, const FbankConfig &config);

/// Mel to waveform by pseudo-inverting the filterbank and running Griffin-Lim
/// phase recovery from zero phase. When `convergence` is non-null it receives
/// the spectral convergence of the estimate before each iteration and after
/// the last one (iterations + 1 values).
Waveform GriffinLimVocode(const MelSpectrogram &mel, const FbankConfig &config,
                          int iterations, std::vector<double> *convergence = nullptr);

MelStats ComputeMelStats(const std::vector<MelSpectrogram> &mels);
MelSpectrogram NormalizeMel(const MelSpectrogram &mel, const MelStats &stats);
MelSpectrogram DenormalizeMel(const MelSpectrogram &mel, const MelStats &stats);

/// Mel binary format: "MELF", u32 frames, u32 bins, u8 normalized flag, then
/// row-major little-endian f32 data.
void WriteMel(const std::string &path, const MelSpectrogram &mel);
MelSpectrogram ReadMel(const std::string &path);
/// Reads only the header and returns the frame count.
std::uint32_t ReadMelFrameCount(const std::string &path);

/// Mono 16-bit PCM RIFF/WAVE.
void WriteWav(const std::string &path, const Waveform &wave);
Waveform ReadWav(const std::string &path);

}  // namespace speechedit

#endif  // SPEECHEDIT_DSP_H_
