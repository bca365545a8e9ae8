// src/dsp.cc

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

#include "speechedit/dsp.h"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <optional>

#include "binary_io.h"

namespace speechedit {

using internal::ReadU16;
using internal::ReadU32;
using internal::WriteU16;
using internal::WriteU32;

namespace {

using ComplexVector = std::vector<std::complex<double>>;

// Reusable real FFT of size n_fft over a zero-padded, windowed frame. Every
// transform runs on the same member buffers, so backends that plan against
// concrete arrays (FFTW) build exactly one forward and one inverse plan here,
// under a lock, and never again.
class FrameTransform {
 public:
  explicit FrameTransform(const FbankConfig &config)
      : config_(config), window_(HannWindow(config.frame_size)),
        real_(config.n_fft, 0.0), half_(config.NumBins()) {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fft_.emplace();
    fft_->SetFlag(Eigen::FFT<double>::HalfSpectrum);
    fft_->fwd(half_.data(), real_.data(), config_.n_fft);
    fft_->inv(real_.data(), half_.data(), config_.n_fft);
  }

  ~FrameTransform() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fft_.reset();
  }

  FrameTransform(const FrameTransform &) = delete;
  FrameTransform &operator=(const FrameTransform &) = delete;

  // Spectrum of samples [offset, offset + frame_size) of `signal`.
  void Forward(const double *frame, ComplexVector *spectrum) {
    std::fill(real_.begin(), real_.end(), 0.0);
    for (int n = 0; n < config_.frame_size; ++n) real_[n] = frame[n] * window_[n];
    fft_->fwd(half_.data(), real_.data(), config_.n_fft);
    spectrum->assign(half_.begin(), half_.end());
  }

  // Inverse of a half spectrum, returning the first frame_size samples.
  void Inverse(const ComplexVector &spectrum, std::vector<double> *frame) {
    std::copy(spectrum.begin(), spectrum.end(), half_.begin());
    fft_->inv(real_.data(), half_.data(), config_.n_fft);
    frame->assign(real_.begin(), real_.begin() + config_.frame_size);
  }

  const Eigen::VectorXd &window() const { return window_; }

 private:
  static std::mutex &PlannerMutex() {
    static std::mutex mutex;
    return mutex;
  }

  const FbankConfig &config_;
  Eigen::VectorXd window_;
  std::vector<double> real_;
  ComplexVector half_;
  std::optional<Eigen::FFT<double>> fft_;
};

// |STFT(x)| as frames x bins.
Eigen::MatrixXd StftMagnitude(const std::vector<double> &signal, Eigen::Index frames,
                              const FbankConfig &config, FrameTransform *transform,
                              std::vector<ComplexVector> *spectra) {
  Eigen::MatrixXd magnitude(frames, config.NumBins());
  spectra->resize(frames);
  for (Eigen::Index t = 0; t < frames; ++t) {
    transform->Forward(signal.data() + t * config.hop, &(*spectra)[t]);
    for (int k = 0; k < config.NumBins(); ++k) magnitude(t, k) = std::abs((*spectra)[t][k]);
  }
  return magnitude;
}

// Least-squares inverse STFT (weighted overlap-add normalised by the summed
// squared window).
std::vector<double> InverseStft(const std::vector<ComplexVector> &spectra,
                                const FbankConfig &config, FrameTransform *transform) {
  const Eigen::Index frames = static_cast<Eigen::Index>(spectra.size());
  const Eigen::Index length = (frames - 1) * config.hop + config.frame_size;
  std::vector<double> signal(length, 0.0), weight(length, 0.0), frame;
  const Eigen::VectorXd &window = transform->window();
  for (Eigen::Index t = 0; t < frames; ++t) {
    transform->Inverse(spectra[t], &frame);
    const Eigen::Index offset = t * config.hop;
    for (int n = 0; n < config.frame_size; ++n) {
      signal[offset + n] += window[n] * frame[n];
      weight[offset + n] += window[n] * window[n];
    }
  }
  // overlap weight floored where the window tapers to zero
  const double floor = 1e-2 * *std::max_element(weight.begin(), weight.end());
  for (Eigen::Index n = 0; n < length; ++n) signal[n] /= std::max(weight[n], floor);
  return signal;
}

void CheckStats(const MelStats &stats, Eigen::Index bins) {
  if (stats.mean.size() != bins || stats.stddev.size() != bins)
    Fail("normalization stats have ", stats.mean.size(), " bins, mel has ", bins);
  for (Eigen::Index b = 0; b < bins; ++b)
    if (!(stats.stddev[b] > 0.0f)) Fail("normalization stats: zero stddev in bin ", b);
}

}  // namespace

void FbankConfig::Check() const {
  if (sample_rate != 16000) Fail("fbank: sample_rate must be 16000, got ", sample_rate);
  if (n_mels < 1) Fail("fbank: n_mels must be positive");
  if (frame_size < 1 || frame_size > n_fft)
    Fail("fbank: frame_size ", frame_size, " must be in [1, n_fft=", n_fft, "]");
  if (hop < 1 || hop > frame_size) Fail("fbank: hop ", hop, " must be in [1, frame_size]");
  if (fmin < 0.0 || fmax <= fmin || fmax > sample_rate / 2.0)
    Fail("fbank: need 0 <= fmin < fmax <= sample_rate/2");
  if (!(log_floor > 0.0)) Fail("fbank: log_floor must be positive");
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::VectorXd HannWindow(int length) {
  Eigen::VectorXd w(length);
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int n = 0; n < length; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
  return w;
}

Eigen::MatrixXd BuildMelFilterbank(const FbankConfig &config) {
  config.Check();
  const int bins = config.NumBins();
  const double mel_low = HzToMel(config.fmin), mel_high = HzToMel(config.fmax);
  const double delta = (mel_high - mel_low) / (config.n_mels + 1);
  Eigen::MatrixXd banks = Eigen::MatrixXd::Zero(config.n_mels, bins);
  for (int m = 0; m < config.n_mels; ++m) {
    const double left = mel_low + m * delta, center = left + delta, right = center + delta;
    for (int k = 0; k < bins; ++k) {
      const double mel = HzToMel(static_cast<double>(k) * config.sample_rate / config.n_fft);
      if (mel > left && mel < right)
        banks(m, k) = mel <= center ? (mel - left) / delta : (right - mel) / delta;
    }
  }
  return banks;
}

Eigen::Index NumFrames(Eigen::Index num_samples, const FbankConfig &config) {
  if (num_samples < config.frame_size) return 0;
  return 1 + (num_samples - config.frame_size) / config.hop;
}

MelSpectrogram ExtractFbank(const Waveform &wave, const FbankConfig &config) {
  config.Check();
  if (wave.sample_rate != config.sample_rate)
    Fail("extract_fbank: waveform sample rate ", wave.sample_rate, " != ", config.sample_rate);
  const Eigen::Index frames = NumFrames(wave.size(), config);
  if (frames < 1)
    Fail("extract_fbank: waveform has ", wave.size(), " samples, need at least ",
         config.frame_size);
  const Eigen::MatrixXd banks = BuildMelFilterbank(config);
  FrameTransform transform(config);
  std::vector<double> signal(wave.samples.data(), wave.samples.data() + wave.size());
  const double log_floor = std::log(config.log_floor);

  MelSpectrogram mel;
  mel.data.resize(frames, config.n_mels);
  // nonzero bin range of each triangle
  std::vector<std::pair<int, int>> support(config.n_mels, {0, 0});
  for (int m = 0; m < config.n_mels; ++m) {
    int k = 0;
    while (k < config.NumBins() && banks(m, k) == 0.0) ++k;
    int end = k;
    for (int j = k; j < config.NumBins(); ++j)
      if (banks(m, j) != 0.0) end = j + 1;
    support[m] = {k, end};
  }
  ComplexVector spectrum;
  Eigen::VectorXd power(config.NumBins());
  for (Eigen::Index t = 0; t < frames; ++t) {
    transform.Forward(signal.data() + t * config.hop, &spectrum);
    for (int k = 0; k < config.NumBins(); ++k) power[k] = std::norm(spectrum[k]);
    for (int m = 0; m < config.n_mels; ++m) {
      const auto [lo, hi] = support[m];
      const double energy = banks.row(m).segment(lo, hi - lo).dot(power.segment(lo, hi - lo));
      mel.data(t, m) = static_cast<float>(energy > config.log_floor ? std::log(energy) : log_floor);
    }
  }
  return mel;
}

Waveform GriffinLimVocode(const MelSpectrogram &mel, const FbankConfig &config,
                          int iterations, std::vector<double> *convergence) {
  config.Check();
  if (mel.normalized) Fail("griffin_lim: input mel is normalized; denormalize it first");
  if (mel.bins() != config.n_mels)
    Fail("griffin_lim: mel has ", mel.bins(), " bins, config expects ", config.n_mels);
  if (mel.frames() < 1) Fail("griffin_lim: empty mel");
  if (iterations < 0) Fail("griffin_lim: negative iteration count");

  const Eigen::MatrixXd banks = BuildMelFilterbank(config);
  const Eigen::MatrixXd inverse = banks.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::MatrixXd energy = mel.data.cast<double>().array().exp().matrix();
  // frames x bins target magnitude
  const Eigen::MatrixXd target =
      (energy * inverse.transpose()).array().max(0.0).sqrt().matrix();
  const double target_norm = std::max(target.norm(), 1e-30);

  FrameTransform transform(config);
  const Eigen::Index frames = mel.frames();
  std::vector<ComplexVector> spectra(frames, ComplexVector(config.NumBins()));
  for (Eigen::Index t = 0; t < frames; ++t)
    for (int k = 0; k < config.NumBins(); ++k) spectra[t][k] = target(t, k);

  std::vector<double> signal = InverseStft(spectra, config, &transform);
  if (convergence) convergence->clear();
  for (int it = 0; it <= iterations; ++it) {
    if (it == iterations && !convergence) break;
    std::vector<ComplexVector> estimate;
    const Eigen::MatrixXd magnitude =
        StftMagnitude(signal, frames, config, &transform, &estimate);
    if (convergence) convergence->push_back((magnitude - target).norm() / target_norm);
    if (it == iterations) break;
    for (Eigen::Index t = 0; t < frames; ++t)
      for (int k = 0; k < config.NumBins(); ++k) {
        const std::complex<double> s = estimate[t][k];
        const double a = std::abs(s);
        spectra[t][k] = a > 0.0 ? target(t, k) * (s / a) : std::complex<double>(target(t, k));
      }
    signal = InverseStft(spectra, config, &transform);
  }

  Waveform wave;
  wave.sample_rate = config.sample_rate;
  wave.samples.resize(static_cast<Eigen::Index>(signal.size()));
  for (std::size_t n = 0; n < signal.size(); ++n)
    wave.samples[n] = static_cast<float>(std::clamp(signal[n], -1.0, 1.0));
  return wave;
}

MelStats ComputeMelStats(const std::vector<MelSpectrogram> &mels) {
  if (mels.empty()) Fail("compute_mel_stats: no spectrograms");
  const Eigen::Index bins = mels.front().bins();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(bins), sum_sq = Eigen::VectorXd::Zero(bins);
  double count = 0.0;
  for (const MelSpectrogram &mel : mels) {
    if (mel.normalized) Fail("compute_mel_stats: input is already normalized");
    if (mel.bins() != bins) Fail("compute_mel_stats: inconsistent bin counts");
    const Eigen::MatrixXd d = mel.data.cast<double>();
    sum += d.colwise().sum().transpose();
    count += static_cast<double>(d.rows());
  }
  const Eigen::VectorXd mean = sum / count;
  for (const MelSpectrogram &mel : mels) {
    const Eigen::MatrixXd centered = mel.data.cast<double>().rowwise() - mean.transpose();
    sum_sq += centered.array().square().colwise().sum().matrix().transpose();
  }
  MelStats stats;
  stats.mean = mean.cast<float>();
  stats.stddev = (sum_sq / count).array().sqrt().matrix().cast<float>();
  return stats;
}

MelSpectrogram NormalizeMel(const MelSpectrogram &mel, const MelStats &stats) {
  if (mel.normalized) Fail("normalize_mel: input is already normalized");
  CheckStats(stats, mel.bins());
  MelSpectrogram out;
  out.normalized = true;
  const Eigen::ArrayXd mean = stats.mean.cast<double>().array();
  const Eigen::ArrayXd stddev = stats.stddev.cast<double>().array();
  out.data = ((mel.data.cast<double>().array().rowwise() - mean.transpose()).rowwise() /
              stddev.transpose())
                 .cast<float>();
  return out;
}

MelSpectrogram DenormalizeMel(const MelSpectrogram &mel, const MelStats &stats) {
  if (!mel.normalized) Fail("denormalize_mel: input is not normalized");
  CheckStats(stats, mel.bins());
  MelSpectrogram out;
  const Eigen::ArrayXd mean = stats.mean.cast<double>().array();
  const Eigen::ArrayXd stddev = stats.stddev.cast<double>().array();
  out.data = ((mel.data.cast<double>().array().rowwise() * stddev.transpose()).rowwise() +
              mean.transpose())
                 .cast<float>();
  return out;
}

void WriteMel(const std::string &path, const MelSpectrogram &mel) {
  std::ofstream os(path, std::ios::binary);
  if (!os) Fail("cannot open mel file for writing: ", path);
  os.write("MELF", 4);
  WriteU32(os, static_cast<std::uint32_t>(mel.frames()));
  WriteU32(os, static_cast<std::uint32_t>(mel.bins()));
  const char flag = mel.normalized ? 1 : 0;
  os.write(&flag, 1);
  for (Eigen::Index i = 0; i < mel.data.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, mel.data.data() + i, 4);
    WriteU32(os, bits);
  }
  if (!os) Fail("error writing mel file: ", path);
}

namespace {
void ReadMelHeader(std::istream &is, const std::string &path, std::uint32_t *frames,
                   std::uint32_t *bins, bool *normalized) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "MELF", 4) != 0)
    Fail("not a mel file (bad magic): ", path);
  *frames = ReadU32(is);
  *bins = ReadU32(is);
  char flag = 0;
  is.read(&flag, 1);
  if (!is) Fail("truncated mel header: ", path);
  if (flag != 0 && flag != 1) Fail("bad normalized flag in mel file: ", path);
  *normalized = flag == 1;
}
}  // namespace

MelSpectrogram ReadMel(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail("cannot open mel file: ", path);
  std::uint32_t frames, bins;
  MelSpectrogram mel;
  ReadMelHeader(is, path, &frames, &bins, &mel.normalized);
  mel.data.resize(frames, bins);
  for (Eigen::Index i = 0; i < mel.data.size(); ++i) {
    const std::uint32_t bits = ReadU32(is);
    std::memcpy(mel.data.data() + i, &bits, 4);
  }
  if (!is) Fail("truncated mel data: ", path);
  return mel;
}

std::uint32_t ReadMelFrameCount(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail("cannot open mel file: ", path);
  std::uint32_t frames, bins;
  bool normalized;
  ReadMelHeader(is, path, &frames, &bins, &normalized);
  return frames;
}

void WriteWav(const std::string &path, const Waveform &wave) {
  std::ofstream os(path, std::ios::binary);
  if (!os) Fail("cannot open wav file for writing: ", path);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(wave.size()) * 2;
  os.write("RIFF", 4);
  WriteU32(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  WriteU32(os, 16);
  WriteU16(os, 1);  // PCM
  WriteU16(os, 1);  // mono
  WriteU32(os, static_cast<std::uint32_t>(wave.sample_rate));
  WriteU32(os, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  WriteU16(os, 2);
  WriteU16(os, 16);
  os.write("data", 4);
  WriteU32(os, data_bytes);
  for (Eigen::Index n = 0; n < wave.size(); ++n) {
    const float x = std::clamp(wave.samples[n], -1.0f, 1.0f);
    const auto v = static_cast<std::int16_t>(std::lround(x * 32767.0f));
    WriteU16(os, static_cast<std::uint16_t>(v));
  }
  if (!os) Fail("error writing wav file: ", path);
}

Waveform ReadWav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail("cannot open wav file: ", path);
  char tag[4];
  if (!is.read(tag, 4) || std::memcmp(tag, "RIFF", 4) != 0) Fail("not a RIFF file: ", path);
  ReadU32(is);
  if (!is.read(tag, 4) || std::memcmp(tag, "WAVE", 4) != 0) Fail("not a WAVE file: ", path);
  Waveform wave;
  bool have_format = false;
  while (is.read(tag, 4)) {
    const std::uint32_t size = ReadU32(is);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      const std::uint16_t format = ReadU16(is), channels = ReadU16(is);
      wave.sample_rate = static_cast<int>(ReadU32(is));
      ReadU32(is);
      ReadU16(is);
      const std::uint16_t bits = ReadU16(is);
      if (format != 1 || channels != 1 || bits != 16)
        Fail("unsupported wav encoding (need mono 16-bit PCM): ", path);
      is.ignore(size - 16);
      have_format = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_format) Fail("wav data chunk before fmt chunk: ", path);
      wave.samples.resize(size / 2);
      for (Eigen::Index n = 0; n < wave.size(); ++n)
        wave.samples[n] = static_cast<float>(static_cast<std::int16_t>(ReadU16(is))) / 32768.0f;
      if (!is) Fail("truncated wav data: ", path);
      if (wave.sample_rate != 16000)
        Fail("unsupported sample rate ", wave.sample_rate, " in ", path, " (need 16000)");
      return wave;
    } else {
      is.ignore(size + (size & 1));
    }
  }
  Fail("wav file has no data chunk: ", path);
}

}  // namespace speechedit
