// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace compsim {

namespace {

struct ErrorState {
  std::jmp_buf jump;
  char message[256] = {};
};

void on_error(png_structp png, png_const_charp msg) {
  auto* state = static_cast<ErrorState*>(png_get_error_ptr(png));
  std::snprintf(state->message, sizeof(state->message), "%s", msg);
  std::longjmp(state->jump, 1);
}

void on_warning(png_structp, png_const_charp) {}

void on_write(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void on_flush(png_structp) {}

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void on_read(png_structp png, png_bytep data, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes.size()) png_error(png, "unexpected end of data");
  std::memcpy(data, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

// Rows are passed already in PNG byte order (16-bit samples big-endian).
std::vector<std::uint8_t> encode(int width, int height, int bit_depth, int color_type,
                                 const std::vector<std::uint8_t>& packed, std::size_t row_bytes) {
  if (width <= 0 || height <= 0) throw ImageError("encode_png: empty image");
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(packed.data() + static_cast<std::size_t>(y) * row_bytes);
  ErrorState state;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state, on_error, on_warning);
  if (!png) throw ImageError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(state.jump)) {
    png_destroy_write_struct(&png, &info);
    throw ImageError(std::string("png encode: ") + state.message);
  }
  png_set_write_fn(png, &out, on_write, on_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

struct Decoded {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::size_t row_bytes = 0;
  std::vector<std::uint8_t> pixels;
};

Decoded decode(std::span<const std::uint8_t> bytes, bool expand_to_rgb8) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw ImageError("not a PNG stream");
  ReadCursor cursor{bytes, 0};
  ErrorState state;
  Decoded d;
  std::vector<png_bytep> rows;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, on_error, on_warning);
  if (!png) throw ImageError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(state.jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError(std::string("png decode: ") + state.message);
  }
  png_set_read_fn(png, &cursor, on_read);
  png_read_info(png, info);
  if (expand_to_rgb8) {
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);
  d.width = static_cast<int>(png_get_image_width(png, info));
  d.height = static_cast<int>(png_get_image_height(png, info));
  d.bit_depth = png_get_bit_depth(png, info);
  d.color_type = png_get_color_type(png, info);
  d.row_bytes = png_get_rowbytes(png, info);
  d.pixels.resize(d.row_bytes * static_cast<std::size_t>(d.height));
  rows.resize(static_cast<std::size_t>(d.height));
  for (int y = 0; y < d.height; ++y) rows[y] = d.pixels.data() + static_cast<std::size_t>(y) * d.row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError("write failed for " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageRgb8& image) {
  const std::size_t expected = static_cast<std::size_t>(image.width) * image.height * 3;
  if (image.data.size() != expected) throw ImageError("encode_png: buffer size does not match dimensions");
  return encode(image.width, image.height, 8, PNG_COLOR_TYPE_RGB, image.data, static_cast<std::size_t>(image.width) * 3);
}

std::vector<std::uint8_t> encode_png(const ImageGray16& image) {
  const std::size_t expected = static_cast<std::size_t>(image.width) * image.height;
  if (image.data.size() != expected) throw ImageError("encode_png: buffer size does not match dimensions");
  std::vector<std::uint8_t> packed(expected * 2);
  for (std::size_t i = 0; i < expected; ++i) {
    packed[2 * i] = static_cast<std::uint8_t>(image.data[i] >> 8);
    packed[2 * i + 1] = static_cast<std::uint8_t>(image.data[i] & 0xFF);
  }
  return encode(image.width, image.height, 16, PNG_COLOR_TYPE_GRAY, packed, static_cast<std::size_t>(image.width) * 2);
}

ImageRgb8 decode_png_rgb8(std::span<const std::uint8_t> bytes) {
  Decoded d = decode(bytes, true);
  if (d.bit_depth != 8 || d.color_type != PNG_COLOR_TYPE_RGB) throw ImageError("expected an 8-bit color PNG");
  ImageRgb8 out;
  out.width = d.width;
  out.height = d.height;
  out.data.resize(static_cast<std::size_t>(d.width) * d.height * 3);
  for (int y = 0; y < d.height; ++y)
    std::memcpy(out.data.data() + static_cast<std::size_t>(y) * d.width * 3,
                d.pixels.data() + static_cast<std::size_t>(y) * d.row_bytes, static_cast<std::size_t>(d.width) * 3);
  return out;
}

ImageGray16 decode_png_gray16(std::span<const std::uint8_t> bytes) {
  Decoded d = decode(bytes, false);
  if (d.bit_depth != 16 || d.color_type != PNG_COLOR_TYPE_GRAY) throw ImageError("expected a 16-bit grayscale PNG");
  ImageGray16 out;
  out.width = d.width;
  out.height = d.height;
  out.data.resize(static_cast<std::size_t>(d.width) * d.height);
  for (int y = 0; y < d.height; ++y) {
    const std::uint8_t* row = d.pixels.data() + static_cast<std::size_t>(y) * d.row_bytes;
    for (int x = 0; x < d.width; ++x)
      out.data[static_cast<std::size_t>(y) * d.width + x] =
          static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const ImageRgb8& image) { write_file(path, encode_png(image)); }
void write_png(const std::filesystem::path& path, const ImageGray16& image) { write_file(path, encode_png(image)); }

ImageRgb8 read_png_rgb8(const std::filesystem::path& path) {
  try {
    return decode_png_rgb8(read_file(path));
  } catch (const ImageError& e) {
    throw ImageError(path.string() + ": " + e.what());
  }
}

ImageGray16 read_png_gray16(const std::filesystem::path& path) {
  try {
    return decode_png_gray16(read_file(path));
  } catch (const ImageError& e) {
    throw ImageError(path.string() + ": " + e.what());
  }
}

std::uint8_t to_u8(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

}  // namespace compsim
