#ifndef ADVSHAPE_IMAGE_HPP
#define ADVSHAPE_IMAGE_HPP

#include <cstddef>
#include <vector>

namespace advshape {

enum class ColorDomain { Rgb, Yuv };

/// Planar RGB image with unit-interval intensities. Operations that can push
/// values out of [0,1] (inverse color transform, noise addition) document it;
/// clip_unit restores the invariant.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<double> r, g, b;

  RgbImage() = default;
  RgbImage(int w, int h, double fill = 0.0);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  std::vector<double>& plane(int c);
  const std::vector<double>& plane(int c) const;

  double& at(int c, int y, int x) { return plane(c)[static_cast<std::size_t>(y) * width + x]; }
  double at(int c, int y, int x) const { return plane(c)[static_cast<std::size_t>(y) * width + x]; }
};

/// Planar image in the offset-free analog YUV used throughout: luma in [0,1],
/// chroma zero-centered.
struct YuvImage {
  int width = 0;
  int height = 0;
  std::vector<double> y, u, v;

  YuvImage() = default;
  YuvImage(int w, int h, double fill = 0.0);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  std::vector<double>& plane(int c);
  const std::vector<double>& plane(int c) const;
};

/// Signed 3-plane perturbation tagged with the color domain its channels
/// live in (R,G,B vs Y,U,V).
struct NoiseField {
  int width = 0;
  int height = 0;
  ColorDomain domain = ColorDomain::Rgb;
  std::vector<double> c0, c1, c2;

  NoiseField() = default;
  NoiseField(int w, int h, ColorDomain d, double fill = 0.0);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  std::vector<double>& plane(int c);
  const std::vector<double>& plane(int c) const;
};

/// Luma/chroma transform, offset-free analog form: Y = 0.299R+0.587G+0.114B,
/// U = 0.492(B-Y), V = 0.877(R-Y).
YuvImage rgb_to_yuv(const RgbImage& img);

/// Exact algebraic inverse of rgb_to_yuv. Output is NOT clipped; out-of-gamut
/// values pass through so callers can inspect pre-clip data.
RgbImage yuv_to_rgb(const YuvImage& img);

/// Linear part of the color transform applied to a perturbation. Valid because
/// the transform has no offset, so it commutes with image subtraction.
NoiseField noise_rgb_to_yuv(const NoiseField& n);
NoiseField noise_yuv_to_rgb(const NoiseField& n);

/// Euclidean distance over all pixels and all three channels.
double l2_distance(const RgbImage& a, const RgbImage& b);

/// L2 norm of a noise field over all planes.
double noise_l2_norm(const NoiseField& n);

/// Clamp every intensity to [0,1].
RgbImage clip_unit(RgbImage img);

/// a - b as an RGB-domain noise field.
NoiseField image_difference(const RgbImage& a, const RgbImage& b);

/// img + n (RGB domain), unclipped.
RgbImage add_noise(const RgbImage& img, const NoiseField& n);

}  // namespace advshape

#endif  // ADVSHAPE_IMAGE_HPP
