// tests/editmodel_test.cc

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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gradcheck.h"
#include "speechedit/editmodel.h"
#include "test_util.h"
#include "toy_fixture.h"

using namespace speechedit;

namespace {

EditModelConfig SmallConfig() {
  EditModelConfig cfg;
  cfg.phone_vocab = 12;
  cfg.d_model = 16;
  cfg.ff_width = 32;
  cfg.seed = 4;
  return cfg;
}

EditInput<double> ShapeInput(int phones, int frames_per_phone) {
  EditInput<double> in;
  for (int p = 0; p < phones; ++p) {
    in.phones.push_back(1 + p % 11);
    in.durations.push_back(frames_per_phone);
  }
  const int frames = phones * frames_per_phone;
  in.masked_mel = Matrix<double>::Constant(frames, 80, -0.3);
  in.frame_mask.assign(frames, 0);
  return in;
}

std::vector<int> AllPhones(std::size_t n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("forward shape contract") {
  EditModel<double> model(SmallConfig());
  EditInput<double> in = ShapeInput(10, 20);
  for (int t = 40; t < 80; ++t) in.frame_mask[t] = 1;
  EditForwardOutput<double> out = model.Forward(in);
  CHECK(out.mel.rows() == 200);
  CHECK(out.mel.cols() == 80);
  CHECK(out.log_durations.size() == 10);
  CHECK(out.mel.allFinite());

  in.frame_mask.assign(200, 0);  // nothing masked: still a full prediction
  CHECK(model.Forward(in).mel.rows() == 200);

  in.durations[0] = 19;
  CHECK_THROWS_AS(model.Forward(in), Error);
  CHECK_THROWS_AS(model.Forward(ShapeInput(0, 1)), Error);
}

TEST_CASE("property: output frames equal the duration sum") {
  EditModel<double> model(SmallConfig());
  SeededRng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    EditInput<double> in;
    int frames = 0;
    const int n = 1 + static_cast<int>(rng.Below(6));
    for (int p = 0; p < n; ++p) {
      in.phones.push_back(static_cast<int>(rng.Below(12)));
      in.durations.push_back(1 + static_cast<int>(rng.Below(7)));
      frames += in.durations.back();
    }
    in.masked_mel = Matrix<double>::Zero(frames, 80);
    in.frame_mask.assign(frames, static_cast<char>(rng.Below(2)));
    CHECK(model.Forward(in).mel.rows() == frames);
  }
}

TEST_CASE("analytic gradients match central differences") {
  const testutil::GradCheckResult r = testutil::RunGradCheck();
  INFO("worst tensor: " << r.worst_tensor);
  CHECK(r.max_relative_error < 1e-4);
  CHECK(r.checked > 1000);
  CHECK(r.significant > r.checked / 2);
  // every tensor group was exercised
  CHECK(r.per_tensor.count("dur_w1") == 1);
  CHECK(r.per_tensor.count("mask_embedding") == 1);
}

TEST_CASE("length_regulate") {
  Matrix<double> enc(3, 2);
  enc << 1, 2, 3, 4, 5, 6;
  const Matrix<double> out = LengthRegulate(enc, {2, 1, 3});
  REQUIRE(out.rows() == 6);
  const int owner[] = {0, 0, 1, 2, 2, 2};
  for (int j = 0; j < 6; ++j) CHECK(out.row(j) == enc.row(owner[j]));
  CHECK(LengthRegulate(enc, {1, 1, 1}) == enc);
  CHECK_THROWS_AS(LengthRegulate(enc, {1, 0, 1}), Error);
  CHECK_THROWS_AS(LengthRegulate(enc, {1, 1}), Error);
}

TEST_CASE("duration realization") {
  EditModel<double> model(SmallConfig());
  const DurationPrediction d = model.PredictDurations({1, 2, 3});
  CHECK(d.log_durations.cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.realized == std::vector<int>{1, 1, 1});

  Eigen::VectorXd logits(3);
  logits << -40.0, std::log(21.0), std::log(4.4);
  CHECK(RealizeDurations(logits, 1.0).realized == std::vector<int>{1, 20, 3});
}

TEST_CASE("training loss: perfect fit, hand oracle, lambda linearity") {
  Matrix<double> pred(2, 2), target(2, 2);
  pred << 1.0, 2.0, 3.0, 4.0;
  target << 1.5, 2.0, 2.0, 5.0;
  Vector<double> plog(2), tlog(2);
  plog << 0.1, 0.5;
  tlog << std::log(2.0), std::log(3.0);
  const std::vector<char> mask = {0, 1};

  LossTerms zero = TrainingLoss(target, target, mask, tlog, tlog, {0, 1}, 2.0);
  CHECK(zero.total() == 0.0);

  // unmasked row: |1-1.5| + |2-2| = 0.5, masked row: 2 * (|3-2| + |4-5|) = 4,
  // both over 4 cells; duration: mean of squared log errors.
  const double d0 = 0.1 - std::log(2.0), d1 = 0.5 - std::log(3.0);
  const double want = 0.5 / 4.0 + 4.0 / 4.0 + (d0 * d0 + d1 * d1) / 2.0;
  Matrix<double> dmel;
  Vector<double> ddur;
  LossTerms l = TrainingLoss(pred, target, mask, plog, tlog, {0, 1}, 2.0, &dmel, &ddur);
  CHECK(std::abs(l.total() - want) < 1e-12);
  CHECK(std::abs(l.unmasked_l1 - 0.125) < 1e-12);
  CHECK(std::abs(l.masked_l1 - 1.0) < 1e-12);
  CHECK(std::abs(ddur[0] - d0) < 1e-12);  // 2 * d0 / 2
  CHECK(dmel(0, 0) == -0.25);
  CHECK(dmel(1, 0) == 0.5);

  const LossTerms doubled = TrainingLoss(pred, target, mask, plog, tlog, {0, 1}, 4.0);
  CHECK(std::abs(doubled.masked_l1 - 2.0 * l.masked_l1) < 1e-12);
  CHECK(doubled.unmasked_l1 == l.unmasked_l1);
  CHECK(doubled.duration == l.duration);

  // only scored phones contribute to the duration term
  const LossTerms one = TrainingLoss(pred, target, mask, plog, tlog, {1}, 2.0);
  CHECK(std::abs(one.duration - d1 * d1) < 1e-12);

  Matrix<double> wrong(3, 2);
  wrong.setZero();
  CHECK_THROWS_AS(TrainingLoss(wrong, target, mask, plog, tlog, {0}, 2.0), Error);
}

TEST_CASE("mask sampling covers whole tokens within the fraction range") {
  testutil::TempDir dir("mask");
  const testutil::ToyFixture toy = testutil::MakeToyFixture(7, 20, dir.str());
  SeededRng rng(1);
  for (const TrainExample &ex : toy.examples) {
    const int total = static_cast<int>(ex.target.rows());
    for (int k = 0; k < 20; ++k) {
      const auto [s, e] = SampleTokenMask(ex, 0.15, 0.5, &rng);
      CHECK(s % kToyFramesPerPhone == 0);
      CHECK(e % kToyFramesPerPhone == 0);
      CHECK(e > s);
      const double f = static_cast<double>(e - s) / total;
      CHECK(f >= 0.15 - 1e-12);
      CHECK(f <= 0.5 + 1e-12);
    }
  }
}

TEST_CASE("train_step: determinism, descent, overfit") {
  testutil::TempDir dir("train");
  const testutil::ToyFixture toy = testutil::MakeToyFixture(7, 2, dir.str());
  const EditModelConfig cfg = toy.ModelConfig(5);
  const std::vector<const TrainExample *> batch = {&toy.examples[0], &toy.examples[1]};

  TrainState a(cfg), b(cfg);
  for (int i = 0; i < 5; ++i) CHECK(TrainStep(&a, batch).loss.total() == TrainStep(&b, batch).loss.total());
  auto ta = a.model.params().Tensors(), tb = b.model.params().Tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) CHECK(*ta[i].value == *tb[i].value);

  // fixed masks for before/after comparisons
  auto batch_loss = [&](const EditModel<float> &m) {
    double total = 0;
    for (const TrainExample *ex : batch) {
      const int frames = static_cast<int>(ex->target.rows());
      const EditInput<float> in = MakeMaskedInput(*ex, {frames / 3, frames / 3 + 20}, 0.1f);
      const Matrix<float> target = ex->target;
      total += m.Loss(in, target, AllPhones(ex->phones.size())).total();
    }
    return total;
  };

  TrainState c(cfg);
  const double initial = batch_loss(c.model);
  TrainStep(&c, batch);
  CHECK(batch_loss(c.model) < initial);

  for (int i = 1; i < 200; ++i) TrainStep(&c, batch);
  CHECK(batch_loss(c.model) < 0.1 * initial);
}
