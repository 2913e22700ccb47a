// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace compsim {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ImageRgb8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved rgb
};

struct ImageGray16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;
};

// In-memory PNG codecs. Decoding rejects images of the wrong bit depth or
// color type with ImageError; 8-bit decoding accepts gray, gray+alpha and
// rgba inputs and drops alpha.
std::vector<std::uint8_t> encode_png(const ImageRgb8& image);
std::vector<std::uint8_t> encode_png(const ImageGray16& image);
ImageRgb8 decode_png_rgb8(std::span<const std::uint8_t> bytes);
ImageGray16 decode_png_gray16(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const ImageRgb8& image);
void write_png(const std::filesystem::path& path, const ImageGray16& image);
ImageRgb8 read_png_rgb8(const std::filesystem::path& path);
ImageGray16 read_png_gray16(const std::filesystem::path& path);

// Rounds [0, 1] values (clamped) to 8 bits.
std::uint8_t to_u8(double v);

}  // namespace compsim
