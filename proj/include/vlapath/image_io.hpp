// Copyright 2026 The vlapath Authors
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

// PNG (3-channel) and planar raw (any channel count) image files.
//
// Planar layout: ASCII magic "VLPIMG1\n", then width, height, channels as
// little-endian uint32, then one width*height plane per channel.

#pragma once

#include <png.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "vlapath/error.hpp"
#include "vlapath/render.hpp"

namespace vlapath {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

inline void write_png(const std::filesystem::path& file, const Image& img) {
  if (img.channels != 3) throw Error(ErrorCode::kChannelMismatch, "PNG output needs 3 channels");
  detail::FilePtr fp(std::fopen(file.string().c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::kIo, "cannot open " + file.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "failed writing " + file.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.pixel(0, y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Reads any PNG as 8-bit RGB: palette and grayscale expand, alpha is
/// dropped, 16-bit samples are truncated.
inline Image read_png(const std::filesystem::path& file) {
  detail::FilePtr fp(std::fopen(file.string().c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  std::array<png_byte, 8> sig{};
  if (std::fread(sig.data(), 1, sig.size(), fp.get()) != sig.size() || png_sig_cmp(sig.data(), 0, sig.size()) != 0) {
    throw Error(ErrorCode::kIo, file.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "libpng initialization failed");
  }
  Image img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "corrupt PNG " + file.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, static_cast<int>(sig.size()));
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  img = Image(width, height, 3, 0);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[static_cast<std::size_t>(y)] = img.pixel(0, y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline constexpr char kPlanarMagic[] = "VLPIMG1\n";

inline void write_planar(const std::filesystem::path& file, const Image& img) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + file.string() + " for writing");
  out.write(kPlanarMagic, 8);
  for (std::uint32_t v : {static_cast<std::uint32_t>(img.width), static_cast<std::uint32_t>(img.height),
                          static_cast<std::uint32_t>(img.channels)}) {
    const std::array<char, 4> le{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(le.data(), 4);
  }
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<char> plane(n);
  for (int c = 0; c < img.channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) plane[i] = static_cast<char>(img.data[i * img.channels + c]);
    out.write(plane.data(), static_cast<std::streamsize>(n));
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + file.string());
}

inline Image read_planar(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), 8);
  if (!in || std::string(magic.data(), 8) != std::string(kPlanarMagic, 8)) {
    throw Error(ErrorCode::kIo, file.string() + " is not a planar image dump");
  }
  std::array<std::uint32_t, 3> header{};
  for (auto& v : header) {
    std::array<unsigned char, 4> le{};
    in.read(reinterpret_cast<char*>(le.data()), 4);
    v = le[0] | (le[1] << 8) | (le[2] << 16) | (static_cast<std::uint32_t>(le[3]) << 24);
  }
  if (!in) throw Error(ErrorCode::kIo, "truncated planar header");
  Image img(static_cast<int>(header[0]), static_cast<int>(header[1]), static_cast<int>(header[2]), 0);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<char> plane(n);
  for (int c = 0; c < img.channels; ++c) {
    in.read(plane.data(), static_cast<std::streamsize>(n));
    if (!in) throw Error(ErrorCode::kIo, "truncated planar data");
    for (std::size_t i = 0; i < n; ++i) img.data[i * img.channels + c] = static_cast<std::uint8_t>(plane[i]);
  }
  return img;
}

}  // namespace vlapath
