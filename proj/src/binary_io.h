// src/binary_io.h

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

#ifndef SPEECHEDIT_BINARY_IO_H_
#define SPEECHEDIT_BINARY_IO_H_

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace speechedit {
namespace internal {

// Little-endian integer / float helpers shared by the binary formats.

inline void WriteU32(std::ostream &os, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v & 0xff),
                                  static_cast<unsigned char>((v >> 8) & 0xff),
                                  static_cast<unsigned char>((v >> 16) & 0xff),
                                  static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char *>(bytes), 4);
}

inline std::uint32_t ReadU32(std::istream &is) {
  unsigned char bytes[4] = {0, 0, 0, 0};
  is.read(reinterpret_cast<char *>(bytes), 4);
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

inline void WriteU16(std::ostream &os, std::uint16_t v) {
  const unsigned char bytes[2] = {static_cast<unsigned char>(v & 0xff),
                                  static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char *>(bytes), 2);
}

inline std::uint16_t ReadU16(std::istream &is) {
  unsigned char bytes[2] = {0, 0};
  is.read(reinterpret_cast<char *>(bytes), 2);
  return static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
}

inline void WriteF32(std::ostream &os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  WriteU32(os, bits);
}

inline float ReadF32(std::istream &is) {
  const std::uint32_t bits = ReadU32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace internal
}  // namespace speechedit

#endif  // SPEECHEDIT_BINARY_IO_H_
