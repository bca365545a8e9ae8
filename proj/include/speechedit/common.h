// include/speechedit/common.h

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

#ifndef SPEECHEDIT_COMMON_H_
#define SPEECHEDIT_COMMON_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace speechedit {

inline constexpr const char *kVersion = "0.3.0";

/// All recoverable failures in the toolkit are reported as Error. The message
/// is a single line so the CLI can forward it verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace internal {
template <typename... Args>
std::string Concat(const Args &...args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}
}  // namespace internal

template <typename... Args>
[[noreturn]] void Fail(const Args &...args) {
  throw Error(internal::Concat(args...));
}

}  // namespace speechedit

#endif  // SPEECHEDIT_COMMON_H_
