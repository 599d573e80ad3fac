#ifndef ADVSHAPE_PNG_IO_HPP
#define ADVSHAPE_PNG_IO_HPP

#include <string>

#include "advshape/image.hpp"

namespace advshape {

/// Decode an 8-bit PNG into unit-interval planes (v/255). Grayscale and
/// palette images are promoted to RGB; an alpha channel is discarded.
///
/// Throws IoError for a missing file, DecodeError for malformed data and
/// UnsupportedFormatError for 16-bit channels.
RgbImage load_png(const std::string& path);

/// Encode as 8-bit RGB, rounding each intensity to the nearest 1/255.
/// Values outside [0,1] are clamped. Throws IoError when the path is not
/// writable.
void save_png(const RgbImage& img, const std::string& path);

}  // namespace advshape

#endif  // ADVSHAPE_PNG_IO_HPP
