// include/speechedit/melsurgery.h

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

#ifndef SPEECHEDIT_MELSURGERY_H_
#define SPEECHEDIT_MELSURGERY_H_

#include <cstdint>
#include <vector>

#include "speechedit/corpus.h"
#include "speechedit/dsp.h"
#include "speechedit/textgen.h"

namespace speechedit {

/// Fill value written into masked frames, in normalized-feature units.
inline constexpr float kDefaultMaskValue = 0.1f;

struct MaskSpec {
  int start_frame = 0;
  int end_frame = 0;  // exclusive
  float fill_value = kDefaultMaskValue;
};

/// Span of the original mel replaced by `new_length` generated frames. An
/// insertion is a zero-width region (start == end).
struct EditRegion {
  int start_frame = 0;
  int end_frame = 0;
  int new_length = 0;

  int width() const { return end_frame - start_frame; }
  bool operator==(const EditRegion &) const = default;
};

/// One region per op, in script order. `new_length` is left at 0; callers
/// that know the generated length fill it in.
std::vector<EditRegion> EditRegionsFromAlignment(const AlignmentList &alignment,
                                                 const EditScript &script);

MelSpectrogram MaskMel(const MelSpectrogram &mel, const MaskSpec &spec);

/// Replaces each region of `original` by the matching generated block.
MelSpectrogram StitchMel(const MelSpectrogram &original, const std::vector<EditRegion> &regions,
                         const std::vector<MelSpectrogram> &generated);

/// Frame count after stitching.
Eigen::Index StitchedLength(Eigen::Index original_frames, const std::vector<EditRegion> &regions);

struct SampleSpan {
  std::int64_t start = 0;
  std::int64_t end = 0;
};

/// original[0:cut.start] ++ insert ++ original[cut.end:], no crossfade.
Waveform SpliceWaveform(const Waveform &original, SampleSpan cut, const Waveform &insert);

}  // namespace speechedit

#endif  // SPEECHEDIT_MELSURGERY_H_
