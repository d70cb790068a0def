// Copyright 2026 The ggpseg Authors
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

#include "service/png.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <memory>
#include <utility>

#include "numerics/errors.hpp"

namespace ggpseg {
namespace {

// libpng reports errors by longjmp; the message is kept here and turned into
// an exception once control is back in C++ code.
struct ErrorSink {
  std::string message;
};

void on_png_error(png_structp png, png_const_charp message) {
  static_cast<ErrorSink*>(png_get_error_ptr(png))->message = message;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

struct Reader {
  const std::string* bytes;
  std::size_t offset = 0;
};

void write_bytes(png_structp p, png_bytep data, png_size_t length) {
  static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data),
                                                        length);
}

void read_bytes(png_structp p, png_bytep data, png_size_t length) {
  auto* r = static_cast<Reader*>(png_get_io_ptr(p));
  if (r->offset + length > r->bytes->size()) png_error(p, "truncated stream");
  std::memcpy(data, r->bytes->data() + r->offset, length);
  r->offset += length;
}

}  // namespace

std::string encode_png_gray(const std::vector<std::uint8_t>& pixels, std::size_t height,
                            std::size_t width) {
  if (pixels.size() != height * width || height == 0 || width == 0) {
    throw DimensionError("png: pixel count does not match extent");
  }
  // Heap-held so nothing automatic is modified between setjmp and longjmp.
  auto out = std::make_unique<std::string>();
  auto sink = std::make_unique<ErrorSink>();
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, sink.get(), on_png_error, on_png_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: cannot allocate writer");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("png: " + sink->message);
  }
  png_set_write_fn(png, out.get(), write_bytes, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < height; ++y) {
    png_write_row(png, pixels.data() + y * width);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return std::move(*out);
}

GrayImage decode_png_gray(const std::string& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8)) {
    throw FormatError("png: bad signature");
  }
  auto sink = std::make_unique<ErrorSink>();
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, sink.get(), on_png_error, on_png_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: cannot allocate reader");
  }
  auto image = std::make_unique<GrayImage>();
  auto reader = std::make_unique<Reader>(Reader{&bytes});
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: " + sink->message);
  }
  png_set_read_fn(png, reader.get(), read_bytes);
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(png, info) != 8) {
    png_error(png, "only 8-bit grayscale is supported");
  }
  image->height = png_get_image_height(png, info);
  image->width = png_get_image_width(png, info);
  image->pixels.resize(image->height * image->width);
  for (std::size_t y = 0; y < image->height; ++y) {
    png_read_row(png, image->pixels.data() + y * image->width, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return std::move(*image);
}

std::vector<std::uint8_t> window_level(const float* values, std::size_t count, float low,
                                       float high) {
  std::vector<std::uint8_t> out(count);
  const float span = high - low;
  for (std::size_t i = 0; i < count; ++i) {
    const float t = std::clamp((values[i] - low) / span, 0.0f, 1.0f);
    out[i] = static_cast<std::uint8_t>(std::lround(t * 255.0f));
  }
  return out;
}

}  // namespace ggpseg
