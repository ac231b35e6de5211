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

#include "signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "binary_io.hpp"

namespace virtmic {

MultichannelSignal::MultichannelSignal(Matrix samples, double sample_rate,
                                       std::vector<std::string> labels)
    : samples_(std::move(samples)),
      sample_rate_(sample_rate),
      labels_(std::move(labels)) {
  if (samples_.rows() < 1 || samples_.cols() < 1)
    Fail(ErrorCode::kInvalidArgument,
         "signal needs at least one channel and one sample");
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
    Fail(ErrorCode::kInvalidArgument, "sample rate must be positive");
  if (labels_.empty()) {
    for (Eigen::Index c = 0; c < samples_.rows(); ++c)
      labels_.push_back(fmt::format("ch{}", c + 1));
  } else if (static_cast<Eigen::Index>(labels_.size()) != samples_.rows()) {
    Fail(ErrorCode::kDimensionMismatch, "channel label count != channels");
  }
}

MultichannelSignal MultichannelSignal::Slice(Eigen::Index start,
                                             Eigen::Index count) const {
  if (start < 0 || count < 1 || start + count > length())
    Fail(ErrorCode::kIndexOutOfRange,
         fmt::format("slice [{}, {}) outside signal of length {}", start,
                     start + count, length()));
  return MultichannelSignal(samples_.middleCols(start, count), sample_rate_,
                            labels_);
}

namespace {

constexpr std::uint16_t kWavPcm = 1;
constexpr std::uint16_t kWavFloat = 3;
constexpr std::uint16_t kWavExtensible = 0xFFFE;

}  // namespace

MultichannelSignal ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  ByteReader r(in, path.string());
  if (r.Tag() != "RIFF") Fail(ErrorCode::kFormat, "not a RIFF file");
  r.U32();
  if (r.Tag() != "WAVE") Fail(ErrorCode::kFormat, "not a WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::vector<char> data;
  while (in.peek() != EOF) {
    const std::string id = r.Tag();
    const std::uint32_t size = r.U32();
    if (id == "fmt ") {
      std::vector<char> chunk = r.Bytes(size);
      if (size < 16) Fail(ErrorCode::kFormat, "short fmt chunk");
      std::memcpy(&format, chunk.data(), 2);
      std::memcpy(&channels, chunk.data() + 2, 2);
      std::memcpy(&rate, chunk.data() + 4, 4);
      std::memcpy(&bits, chunk.data() + 14, 2);
      if (format == kWavExtensible && size >= 26)
        std::memcpy(&format, chunk.data() + 24, 2);
      have_fmt = true;
    } else if (id == "data") {
      data = r.Bytes(size);
    } else {
      r.Bytes(size);
    }
    if (size % 2 == 1 && in.peek() != EOF) r.Bytes(1);
  }
  if (!have_fmt || channels == 0) Fail(ErrorCode::kFormat, "missing fmt chunk");

  const int bytes = bits / 8;
  const bool ok = (format == kWavPcm && (bits == 16 || bits == 24)) ||
                  (format == kWavFloat && bits == 32);
  if (!ok)
    Fail(ErrorCode::kFormat,
         fmt::format("unsupported WAV encoding (format {}, {} bits)", format,
                     bits));
  const std::size_t frames = data.size() / (bytes * channels);
  if (frames == 0) Fail(ErrorCode::kFormat, "WAV has no samples");

  Matrix samples(channels, static_cast<Eigen::Index>(frames));
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  for (std::size_t n = 0; n < frames; ++n) {
    for (int c = 0; c < channels; ++c, p += bytes) {
      double v = 0.0;
      if (format == kWavFloat) {
        float f;
        std::memcpy(&f, p, 4);
        v = f;
      } else if (bits == 16) {
        const auto s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
        v = s / 32768.0;
      } else {
        std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
        if (s & 0x800000) s -= 0x1000000;
        v = s / 8388608.0;
      }
      samples(c, static_cast<Eigen::Index>(n)) = v;
    }
  }
  return MultichannelSignal(std::move(samples), rate);
}

void WriteWav(const std::filesystem::path& path, const MultichannelSignal& sig,
              WavEncoding encoding) {
  const int bytes = encoding == WavEncoding::kPcm16 ? 2
                    : encoding == WavEncoding::kPcm24 ? 3
                                                       : 4;
  const auto channels = static_cast<std::uint16_t>(sig.channels());
  const auto rate = static_cast<std::uint32_t>(std::lround(sig.sample_rate()));
  const auto data_size =
      static_cast<std::uint32_t>(sig.length() * channels * bytes);

  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  ByteWriter w(out);
  w.Tag("RIFF");
  w.U32(36 + data_size);
  w.Tag("WAVE");
  w.Tag("fmt ");
  w.U32(16);
  w.U16(encoding == WavEncoding::kFloat32 ? kWavFloat : kWavPcm);
  w.U16(channels);
  w.U32(rate);
  w.U32(rate * channels * bytes);
  w.U16(static_cast<std::uint16_t>(channels * bytes));
  w.U16(static_cast<std::uint16_t>(bytes * 8));
  w.Tag("data");
  w.U32(data_size);
  for (Eigen::Index n = 0; n < sig.length(); ++n) {
    for (Eigen::Index c = 0; c < sig.channels(); ++c) {
      const double v = sig.samples()(c, n);
      if (encoding == WavEncoding::kFloat32) {
        w.F32(static_cast<float>(v));
        continue;
      }
      const double full = encoding == WavEncoding::kPcm16 ? 32768.0 : 8388608.0;
      const auto q = static_cast<std::int32_t>(
          std::clamp(std::lround(v * full), -std::lround(full),
                     std::lround(full) - 1));
      w.U8(static_cast<std::uint8_t>(q & 0xFF));
      w.U8(static_cast<std::uint8_t>((q >> 8) & 0xFF));
      if (encoding == WavEncoding::kPcm24)
        w.U8(static_cast<std::uint8_t>((q >> 16) & 0xFF));
    }
  }
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

namespace {

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

MultichannelSignal ReadSignalCsv(const std::filesystem::path& path,
                                 double sample_rate) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kFormat, "empty CSV");
  const std::vector<std::string> labels = SplitCsv(line);
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = SplitCsv(line);
    if (cells.size() != labels.size())
      Fail(ErrorCode::kFormat,
           fmt::format("{}:{}: expected {} columns, got {}", path.string(),
                       lineno, labels.size(), cells.size()));
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        Fail(ErrorCode::kFormat,
             fmt::format("{}:{}: bad number '{}'", path.string(), lineno, c));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) Fail(ErrorCode::kFormat, "CSV has no samples");
  Matrix samples(static_cast<Eigen::Index>(labels.size()),
                 static_cast<Eigen::Index>(rows.size()));
  for (std::size_t n = 0; n < rows.size(); ++n)
    for (std::size_t c = 0; c < labels.size(); ++c)
      samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(n)) =
          rows[n][c];
  return MultichannelSignal(std::move(samples), sample_rate, labels);
}

void WriteSignalCsv(const std::filesystem::path& path,
                    const MultichannelSignal& sig) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  for (std::size_t c = 0; c < sig.labels().size(); ++c)
    out << (c ? "," : "") << sig.labels()[c];
  out << '\n';
  for (Eigen::Index n = 0; n < sig.length(); ++n) {
    for (Eigen::Index c = 0; c < sig.channels(); ++c)
      out << (c ? "," : "") << fmt::format("{:.17g}", sig.samples()(c, n));
    out << '\n';
  }
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

MultichannelSignal LoadSignal(const std::filesystem::path& path,
                              double csv_sample_rate) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  if (ext == ".wav") return ReadWav(path);
  if (ext == ".csv") return ReadSignalCsv(path, csv_sample_rate);
  Fail(ErrorCode::kFormat, "unknown signal file type: " + path.string());
}

}  // namespace virtmic
