#include "advshape/image.hpp"

#include <algorithm>
#include <cmath>

#include "advshape/errors.hpp"

namespace advshape {

namespace {

// Offset-free analog YUV (BT.601 luma weights).
constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;
constexpr double kChromaU = 0.492;
constexpr double kChromaV = 0.877;

void require(bool cond, const char* msg) {
  if (!cond) throw UsageError(msg);
}

}  // namespace

RgbImage::RgbImage(int w, int h, double fill)
    : width(w), height(h), r(pixel_count(), fill), g(pixel_count(), fill), b(pixel_count(), fill) {
  require(w > 0 && h > 0, "image dimensions must be positive");
}

std::vector<double>& RgbImage::plane(int c) {
  switch (c) {
    case 0: return r;
    case 1: return g;
    default: return b;
  }
}

const std::vector<double>& RgbImage::plane(int c) const {
  switch (c) {
    case 0: return r;
    case 1: return g;
    default: return b;
  }
}

YuvImage::YuvImage(int w, int h, double fill)
    : width(w), height(h), y(pixel_count(), fill), u(pixel_count(), fill), v(pixel_count(), fill) {
  require(w > 0 && h > 0, "image dimensions must be positive");
}

std::vector<double>& YuvImage::plane(int c) {
  switch (c) {
    case 0: return y;
    case 1: return u;
    default: return v;
  }
}

const std::vector<double>& YuvImage::plane(int c) const {
  switch (c) {
    case 0: return y;
    case 1: return u;
    default: return v;
  }
}

NoiseField::NoiseField(int w, int h, ColorDomain d, double fill)
    : width(w), height(h), domain(d), c0(pixel_count(), fill), c1(pixel_count(), fill), c2(pixel_count(), fill) {
  require(w > 0 && h > 0, "noise dimensions must be positive");
}

std::vector<double>& NoiseField::plane(int c) {
  switch (c) {
    case 0: return c0;
    case 1: return c1;
    default: return c2;
  }
}

const std::vector<double>& NoiseField::plane(int c) const {
  switch (c) {
    case 0: return c0;
    case 1: return c1;
    default: return c2;
  }
}

YuvImage rgb_to_yuv(const RgbImage& img) {
  YuvImage out(img.width, img.height);
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double luma = kLumaR * img.r[i] + kLumaG * img.g[i] + kLumaB * img.b[i];
    out.y[i] = luma;
    out.u[i] = kChromaU * (img.b[i] - luma);
    out.v[i] = kChromaV * (img.r[i] - luma);
  }
  return out;
}

RgbImage yuv_to_rgb(const YuvImage& img) {
  RgbImage out(img.width, img.height);
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double red = img.y[i] + img.v[i] / kChromaV;
    const double blue = img.y[i] + img.u[i] / kChromaU;
    const double green = (img.y[i] - kLumaR * red - kLumaB * blue) / kLumaG;
    out.r[i] = red;
    out.g[i] = green;
    out.b[i] = blue;
  }
  return out;
}

NoiseField noise_rgb_to_yuv(const NoiseField& n) {
  if (n.domain != ColorDomain::Rgb) throw UsageError("noise_rgb_to_yuv: noise is not RGB-domain");
  NoiseField out(n.width, n.height, ColorDomain::Yuv);
  const std::size_t count = n.pixel_count();
  for (std::size_t i = 0; i < count; ++i) {
    const double luma = kLumaR * n.c0[i] + kLumaG * n.c1[i] + kLumaB * n.c2[i];
    out.c0[i] = luma;
    out.c1[i] = kChromaU * (n.c2[i] - luma);
    out.c2[i] = kChromaV * (n.c0[i] - luma);
  }
  return out;
}

NoiseField noise_yuv_to_rgb(const NoiseField& n) {
  if (n.domain != ColorDomain::Yuv) throw UsageError("noise_yuv_to_rgb: noise is not YUV-domain");
  NoiseField out(n.width, n.height, ColorDomain::Rgb);
  const std::size_t count = n.pixel_count();
  for (std::size_t i = 0; i < count; ++i) {
    const double red = n.c0[i] + n.c2[i] / kChromaV;
    const double blue = n.c0[i] + n.c1[i] / kChromaU;
    const double green = (n.c0[i] - kLumaR * red - kLumaB * blue) / kLumaG;
    out.c0[i] = red;
    out.c1[i] = green;
    out.c2[i] = blue;
  }
  return out;
}

double l2_distance(const RgbImage& a, const RgbImage& b) {
  require(a.width == b.width && a.height == b.height, "l2_distance: dimension mismatch");
  double sum = 0.0;
  const std::size_t n = a.pixel_count();
  for (int c = 0; c < 3; ++c) {
    const auto& pa = a.plane(c);
    const auto& pb = b.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = pa[i] - pb[i];
      sum += d * d;
    }
  }
  return std::sqrt(sum);
}

double noise_l2_norm(const NoiseField& n) {
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (double v : n.plane(c)) sum += v * v;
  }
  return std::sqrt(sum);
}

RgbImage clip_unit(RgbImage img) {
  for (int c = 0; c < 3; ++c) {
    for (double& v : img.plane(c)) v = std::clamp(v, 0.0, 1.0);
  }
  return img;
}

NoiseField image_difference(const RgbImage& a, const RgbImage& b) {
  require(a.width == b.width && a.height == b.height, "image_difference: dimension mismatch");
  NoiseField out(a.width, a.height, ColorDomain::Rgb);
  const std::size_t n = a.pixel_count();
  for (int c = 0; c < 3; ++c) {
    const auto& pa = a.plane(c);
    const auto& pb = b.plane(c);
    auto& po = out.plane(c);
    for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
  }
  return out;
}

RgbImage add_noise(const RgbImage& img, const NoiseField& n) {
  require(img.width == n.width && img.height == n.height, "add_noise: dimension mismatch");
  if (n.domain != ColorDomain::Rgb) throw UsageError("add_noise: noise is not RGB-domain");
  RgbImage out = img;
  const std::size_t count = img.pixel_count();
  for (int c = 0; c < 3; ++c) {
    auto& po = out.plane(c);
    const auto& pn = n.plane(c);
    for (std::size_t i = 0; i < count; ++i) po[i] += pn[i];
  }
  return out;
}

}  // namespace advshape
