#pragma once

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "tiledet/types.hpp"

namespace tiledet {

/// Decoded PNG: 1- or 3-channel image plus a separate alpha plane when the
/// source carried one (empty otherwise).
struct LoadedImage {
  ImageBuffer image;
  std::vector<std::uint8_t> alpha;

  bool has_alpha() const { return !alpha.empty(); }
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void png_error_fn(png_structp png, png_const_charp msg) {
  // message copied out by the catch site via error_ptr
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err && err->empty()) *err = msg;
  std::longjmp(png_jmpbuf(png), 1);
}

inline void png_warn_fn(png_structp, png_const_charp) {}

struct MemWriteState {
  std::vector<std::uint8_t>* out;
};

inline void png_mem_write(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<MemWriteState*>(png_get_io_ptr(png));
  st->out->insert(st->out->end(), data, data + len);
}

inline void png_mem_flush(png_structp) {}

}  // namespace detail

inline LoadedImage read_png(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("cannot open image: " + path.string());

  std::string errmsg;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &errmsg,
                                           detail::png_error_fn, detail::png_warn_fn);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }

  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("bad PNG \"" + path.string() + "\": " + (errmsg.empty() ? "decode error" : errmsg));
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Normalize everything to 8-bit gray / gray+alpha / RGB / RGBA.
  png_set_strip_16(png);
  png_set_packing(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int nch = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);

  raw.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const bool has_alpha = (nch == 2 || nch == 4);
  const int color_ch = (nch >= 3) ? 3 : 1;
  LoadedImage out;
  out.image = ImageBuffer(static_cast<int>(w), static_cast<int>(h), color_ch);
  if (has_alpha) out.alpha.resize(static_cast<std::size_t>(w) * h);

  for (png_uint_32 y = 0; y < h; ++y) {
    const std::uint8_t* src = raw.data() + y * rowbytes;
    for (png_uint_32 x = 0; x < w; ++x) {
      const std::uint8_t* px = src + static_cast<std::size_t>(x) * nch;
      for (int c = 0; c < color_ch; ++c) out.image.at(static_cast<int>(x), static_cast<int>(y), c) = px[c];
      if (has_alpha) out.alpha[static_cast<std::size_t>(y) * w + x] = px[color_ch];
    }
  }
  return out;
}

inline ImageBuffer read_png_image(const std::filesystem::path& path) {
  return read_png(path).image;
}

namespace detail {

inline void encode_png_impl(const ImageBuffer& img, std::vector<std::uint8_t>& out) {
  if (!img.valid()) throw InvariantError("encode_png: invalid image buffer");

  std::string errmsg;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg,
                                            detail::png_error_fn, detail::png_warn_fn);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }

  std::vector<png_bytep> rows(img.height);
  detail::MemWriteState st{&out};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed: " + (errmsg.empty() ? std::string("write error") : errmsg));
  }

  png_set_write_fn(png, &st, detail::png_mem_write, detail::png_mem_flush);
  // Fixed settings so identical pixels always produce identical bytes.
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  auto* base = const_cast<std::uint8_t*>(img.pixels.data());
  const std::size_t rowbytes = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y) rows[y] = base + static_cast<std::size_t>(y) * rowbytes;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  std::vector<std::uint8_t> out;
  detail::encode_png_impl(img, out);
  return out;
}

inline void write_png(const ImageBuffer& img, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_png(img);
  detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("cannot write image: " + path.string());
  if (std::fwrite(bytes.data(), 1, bytes.size(), fp.get()) != bytes.size())
    throw IoError("short write: " + path.string());
}

/// RGBA (or gray+alpha) PNG from a color image and a separate alpha plane.
inline void write_png_with_alpha(const ImageBuffer& img, const std::vector<std::uint8_t>& alpha,
                                 const std::filesystem::path& path) {
  if (!img.valid()) throw InvariantError("write_png_with_alpha: invalid image buffer");
  if (alpha.size() != static_cast<std::size_t>(img.width) * img.height)
    throw InvariantError("write_png_with_alpha: alpha plane size mismatch");
  ImageBuffer interleaved(img.width, img.height, img.channels + 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c)
        interleaved.at(x, y, c) = img.pixels[img.index(x, y, c)];
      interleaved.at(x, y, img.channels) = alpha[static_cast<std::size_t>(y) * img.width + x];
    }

  std::string errmsg;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg,
                                            detail::png_error_fn, detail::png_warn_fn);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  std::vector<std::uint8_t> bytes;
  std::vector<png_bytep> rows(interleaved.height);
  detail::MemWriteState st{&bytes};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed: " + (errmsg.empty() ? std::string("write error") : errmsg));
  }
  png_set_write_fn(png, &st, detail::png_mem_write, detail::png_mem_flush);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(interleaved.width),
               static_cast<png_uint_32>(interleaved.height), 8,
               interleaved.channels == 2 ? PNG_COLOR_TYPE_GRAY_ALPHA : PNG_COLOR_TYPE_RGB_ALPHA,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  auto* base = interleaved.pixels.data();
  const std::size_t rowbytes =
      static_cast<std::size_t>(interleaved.width) * interleaved.channels;
  for (int y = 0; y < interleaved.height; ++y)
    rows[y] = base + static_cast<std::size_t>(y) * rowbytes;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);

  detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("cannot write image: " + path.string());
  if (std::fwrite(bytes.data(), 1, bytes.size(), fp.get()) != bytes.size())
    throw IoError("short write: " + path.string());
}

inline std::string base64_encode(const std::uint8_t* data, std::size_t n) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= n; i += 3) {
    const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rem = n - i;
  if (rem == 1) {
    const std::uint32_t v = data[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rem == 2) {
    const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

inline std::string base64_encode(const std::vector<std::uint8_t>& data) {
  return base64_encode(data.data(), data.size());
}

}  // namespace tiledet
