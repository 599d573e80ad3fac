#include "advshape/png_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "advshape/errors.hpp"

namespace advshape {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void png_error_to_longjmp(png_structp png, png_const_charp) {
  std::longjmp(png_jmpbuf(png), 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

}  // namespace

RgbImage load_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open PNG for reading: " + path);

  unsigned char signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw DecodeError("not a PNG file: " + path);
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_to_longjmp, png_warning_ignore);
  if (!png) throw DecodeError("libpng read-struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DecodeError("libpng info-struct allocation failed");
  }

  std::vector<unsigned char> interleaved;
  std::vector<png_bytep> row_pointers;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  bool unsupported_depth = false;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError("malformed PNG: " + path);
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);

  if (bit_depth == 16) {
    unsupported_depth = true;
  } else {
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    // Alpha is discarded.
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    interleaved.resize(rowbytes * height);
    row_pointers.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) row_pointers[y] = interleaved.data() + y * rowbytes;
    png_read_image(png, row_pointers.data());
    png_read_end(png, nullptr);
  }

  png_destroy_read_struct(&png, &info, nullptr);

  if (unsupported_depth) {
    throw UnsupportedFormatError("unsupported PNG bit depth 16: " + path);
  }

  RgbImage out(static_cast<int>(width), static_cast<int>(height));
  const std::size_t n = out.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    out.r[i] = interleaved[3 * i + 0] / 255.0;
    out.g[i] = interleaved[3 * i + 1] / 255.0;
    out.b[i] = interleaved[3 * i + 2] / 255.0;
  }
  return out;
}

void save_png(const RgbImage& img, const std::string& path) {
  if (img.width <= 0 || img.height <= 0) throw UsageError("save_png: empty image");

  const std::size_t n = img.pixel_count();
  std::vector<unsigned char> interleaved(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      double v = img.plane(c)[i];
      v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      interleaved[3 * i + c] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
  }

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open PNG for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_to_longjmp, png_warning_ignore);
  if (!png) throw IoError("libpng write-struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng info-struct allocation failed");
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG write failed: " + path);
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t rowbytes = static_cast<std::size_t>(img.width) * 3;
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(interleaved.data() + y * rowbytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace advshape
