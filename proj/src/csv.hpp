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

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <type_traits>
#include <vector>

#include <fmt/format.h>

#include "common.hpp"

namespace virtmic {

// Header row first, newline-terminated rows, doubles at round-trip precision.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path)
      : path_(path), out_(path) {
    if (!out_) Fail(ErrorCode::kIo, "cannot write " + path.string());
  }

  void Header(std::initializer_list<std::string> cols) {
    Header(std::vector<std::string>(cols));
  }
  void Header(const std::vector<std::string>& cols) { RawRow(cols); }

  void RawRow(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  template <typename... Ts>
  void Row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << Cell(cells), first = false), ...);
    out_ << '\n';
  }

  void Row(const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out_ << (i ? "," : "") << Cell(cells[i]);
    out_ << '\n';
  }

  void Close() {
    out_.close();
    if (!out_) Fail(ErrorCode::kIo, "write failed: " + path_.string());
  }

  template <typename T>
  static std::string Cell(const T& v) {
    if constexpr (std::is_floating_point_v<T>)
      return fmt::format("{:.17g}", v);
    else
      return fmt::format("{}", v);
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace virtmic
