// src/melsurgery.cc

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

#include "speechedit/melsurgery.h"

namespace speechedit {

std::vector<EditRegion> EditRegionsFromAlignment(const AlignmentList &alignment,
                                                 const EditScript &script) {
  if (alignment.empty()) Fail("edit_region_from_alignment: empty alignment");
  const int token_count = alignment.back().token_index + 1;
  script.Validate(token_count);
  const int total_frames = AlignedFrameCount(alignment);
  std::vector<EditRegion> regions;
  for (const EditOp &op : script.ops) {
    EditRegion region;
    if (op.kind == EditKind::kInsert) {
      region.start_frame = op.position == token_count
                               ? total_frames
                               : TokenFrameSpan(alignment, op.position).first;
      region.end_frame = region.start_frame;
    } else {
      region.start_frame = TokenFrameSpan(alignment, op.position).first;
      region.end_frame = TokenFrameSpan(alignment, op.position + op.length - 1).second;
    }
    if (!regions.empty() && regions.back().end_frame > region.start_frame)
      Fail("edit_region_from_alignment: regions overlap at frame ", region.start_frame);
    regions.push_back(region);
  }
  return regions;
}

MelSpectrogram MaskMel(const MelSpectrogram &mel, const MaskSpec &spec) {
  if (!mel.normalized) Fail("mask_mel: input mel is not normalized");
  if (spec.start_frame < 0 || spec.start_frame > spec.end_frame || spec.end_frame > mel.frames())
    Fail("mask_mel: span [", spec.start_frame, ",", spec.end_frame, ") outside ", mel.frames(),
         " frames");
  MelSpectrogram out = mel;
  out.data.middleRows(spec.start_frame, spec.end_frame - spec.start_frame).setConstant(
      spec.fill_value);
  return out;
}

Eigen::Index StitchedLength(Eigen::Index original_frames, const std::vector<EditRegion> &regions) {
  Eigen::Index length = original_frames;
  for (const EditRegion &r : regions) length += r.new_length - r.width();
  return length;
}

MelSpectrogram StitchMel(const MelSpectrogram &original, const std::vector<EditRegion> &regions,
                         const std::vector<MelSpectrogram> &generated) {
  if (regions.size() != generated.size())
    Fail("stitch_mel: ", regions.size(), " regions but ", generated.size(), " generated blocks");
  int previous_end = 0;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const EditRegion &r = regions[i];
    if (r.start_frame < previous_end || r.end_frame < r.start_frame ||
        r.end_frame > original.frames())
      Fail("stitch_mel: region ", i, " [", r.start_frame, ",", r.end_frame,
           ") is out of order or out of bounds");
    if (generated[i].frames() != r.new_length)
      Fail("stitch_mel: region ", i, " expects ", r.new_length, " frames, got ",
           generated[i].frames());
    if (r.new_length > 0 && generated[i].bins() != original.bins())
      Fail("stitch_mel: region ", i, " has ", generated[i].bins(), " bins, original has ",
           original.bins());
    if (r.new_length > 0 && generated[i].normalized != original.normalized)
      Fail("stitch_mel: normalization flag mismatch in region ", i);
    previous_end = r.end_frame;
  }

  MelSpectrogram out;
  out.normalized = original.normalized;
  out.data.resize(StitchedLength(original.frames(), regions), original.bins());
  Eigen::Index src = 0, dst = 0;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Eigen::Index keep = regions[i].start_frame - src;
    out.data.middleRows(dst, keep) = original.data.middleRows(src, keep);
    dst += keep;
    out.data.middleRows(dst, regions[i].new_length) = generated[i].data;
    dst += regions[i].new_length;
    src = regions[i].end_frame;
  }
  out.data.middleRows(dst, original.frames() - src) =
      original.data.middleRows(src, original.frames() - src);
  return out;
}

Waveform SpliceWaveform(const Waveform &original, SampleSpan cut, const Waveform &insert) {
  if (cut.start < 0 || cut.start > cut.end || cut.end > original.size())
    Fail("splice_waveform: cut [", cut.start, ",", cut.end, ") outside ", original.size(),
         " samples");
  if (insert.sample_rate != original.sample_rate || insert.sample_rate != 16000)
    Fail("splice_waveform: sample rate mismatch (", original.sample_rate, " vs ",
         insert.sample_rate, ")");
  Waveform out;
  out.sample_rate = original.sample_rate;
  const Eigen::Index tail = original.size() - cut.end;
  out.samples.resize(cut.start + insert.size() + tail);
  out.samples.head(cut.start) = original.samples.head(cut.start);
  out.samples.segment(cut.start, insert.size()) = insert.samples;
  out.samples.tail(tail) = original.samples.tail(tail);
  return out;
}

}  // namespace speechedit
