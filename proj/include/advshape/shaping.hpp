#ifndef ADVSHAPE_SHAPING_HPP
#define ADVSHAPE_SHAPING_HPP

#include <vector>

#include "advshape/image.hpp"

namespace advshape {

/// Center-peaked multiplicative spatial weight. Peak-normalized: the value at
/// the geometric image center is 1, falling off radially as a Gaussian, so
/// noise keeps full strength at the center and fades toward the edges.
struct GaussianMask {
  int width = 0;
  int height = 0;
  double sigma = 0.0;
  std::vector<double> values;  // row-major, each in (0,1]

  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Knobs of the noise-shaping step: chroma scale (0 removes all color noise,
/// 1 leaves it untouched) and the mask standard deviation in pixels.
struct ShapeConfig {
  double alpha = 1.0;
  double sigma = 0.0;  // <= 0 means default_sigma for the image size
};

/// Mask standard deviation used when none is given: proportional to image
/// size, 190/299 of the smaller dimension.
double default_sigma(int width, int height);

/// values[y][x] = exp(-((y-cy)^2 + (x-cx)^2) / (2 sigma^2)) with the center at
/// ((width-1)/2, (height-1)/2); for even dimensions the peak sits between the
/// four central pixels.
GaussianMask make_mask(int width, int height, double sigma);

/// Scale the chroma planes by alpha, then window every plane by the mask.
NoiseField shape_noise(const NoiseField& yuv_noise, const ShapeConfig& cfg, const GaussianMask& mask);

/// Full shaping pipeline without the final clip: convert image and noise to
/// YUV, shape the noise, add, convert back to RGB. May leave values outside
/// [0,1].
RgbImage compose_adversarial_raw(const RgbImage& img, const NoiseField& rgb_noise,
                                 const ShapeConfig& cfg, const GaussianMask& mask);

/// compose_adversarial_raw followed by clip_unit.
RgbImage compose_adversarial(const RgbImage& img, const NoiseField& rgb_noise,
                             const ShapeConfig& cfg, const GaussianMask& mask);

}  // namespace advshape

#endif  // ADVSHAPE_SHAPING_HPP
