// Copyright 2026 The virtmic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian field helpers shared by the WAV, LCM1, OBF1 and IRT1 codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "common.hpp"

namespace virtmic {

class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& out) : out_(out) {}

  void Tag(const char (&tag)[5]) { out_.write(tag, 4); }
  void U8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void U16(std::uint16_t v) { Le(v); }
  void U32(std::uint32_t v) { Le(v); }
  void F32(float v) { Le(std::bit_cast<std::uint32_t>(v)); }
  void F64(double v) { Le(std::bit_cast<std::uint64_t>(v)); }

 private:
  template <typename T>
  void Le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      out_.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::ostream& out_;
};

class ByteReader {
 public:
  ByteReader(std::istream& in, std::string name)
      : in_(in), name_(std::move(name)) {}

  std::string Tag() {
    char buf[4];
    Read(buf, 4);
    return std::string(buf, 4);
  }
  std::uint8_t U8() {
    char c;
    Read(&c, 1);
    return static_cast<std::uint8_t>(c);
  }
  std::uint16_t U16() { return Le<std::uint16_t>(); }
  std::uint32_t U32() { return Le<std::uint32_t>(); }
  double F64() { return std::bit_cast<double>(Le<std::uint64_t>()); }
  std::vector<char> Bytes(std::size_t n) {
    std::vector<char> buf(n);
    if (n) Read(buf.data(), n);
    return buf;
  }

 private:
  template <typename T>
  T Le() {
    unsigned char buf[sizeof(T)];
    Read(reinterpret_cast<char*>(buf), sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<T>(buf[i]) << (8 * i));
    return v;
  }
  void Read(char* dst, std::size_t n) {
    if (!in_.read(dst, static_cast<std::streamsize>(n)))
      Fail(ErrorCode::kFormat, "truncated file: " + name_);
  }
  std::istream& in_;
  std::string name_;
};

}  // namespace virtmic
