#include "advshape/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advshape/errors.hpp"

namespace advshape {

double default_sigma(int width, int height) {
  return 190.0 / 299.0 * std::min(width, height);
}

GaussianMask make_mask(int width, int height, double sigma) {
  if (width <= 0 || height <= 0) throw UsageError("make_mask: dimensions must be positive");
  if (!(sigma > 0.0)) throw UsageError("make_mask: sigma must be positive");

  GaussianMask mask;
  mask.width = width;
  mask.height = height;
  mask.sigma = sigma;
  mask.values.resize(static_cast<std::size_t>(width) * height);

  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dy = y - cy;
      const double dx = x - cx;
      double v = std::exp(-(dy * dy + dx * dx) * inv_two_sigma_sq);
      // Keep the plane strictly positive even when exp underflows.
      v = std::max(v, std::numeric_limits<double>::min());
      mask.values[static_cast<std::size_t>(y) * width + x] = v;
    }
  }
  return mask;
}

NoiseField shape_noise(const NoiseField& yuv_noise, const ShapeConfig& cfg, const GaussianMask& mask) {
  if (yuv_noise.domain != ColorDomain::Yuv) throw UsageError("shape_noise: noise is not YUV-domain");
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw UsageError("shape_noise: alpha must be in [0,1]");
  if (yuv_noise.width != mask.width || yuv_noise.height != mask.height) {
    throw UsageError("shape_noise: noise and mask dimensions differ");
  }

  NoiseField out(yuv_noise.width, yuv_noise.height, ColorDomain::Yuv);
  const std::size_t n = yuv_noise.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = mask.values[i];
    out.c0[i] = w * yuv_noise.c0[i];
    out.c1[i] = w * (cfg.alpha * yuv_noise.c1[i]);
    out.c2[i] = w * (cfg.alpha * yuv_noise.c2[i]);
  }
  return out;
}

RgbImage compose_adversarial_raw(const RgbImage& img, const NoiseField& rgb_noise,
                                 const ShapeConfig& cfg, const GaussianMask& mask) {
  if (img.width != rgb_noise.width || img.height != rgb_noise.height) {
    throw UsageError("compose_adversarial: image and noise dimensions differ");
  }

  const YuvImage base = rgb_to_yuv(img);
  const NoiseField shaped = shape_noise(noise_rgb_to_yuv(rgb_noise), cfg, mask);

  YuvImage adv(img.width, img.height);
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    adv.y[i] = base.y[i] + shaped.c0[i];
    adv.u[i] = base.u[i] + shaped.c1[i];
    adv.v[i] = base.v[i] + shaped.c2[i];
  }
  return yuv_to_rgb(adv);
}

RgbImage compose_adversarial(const RgbImage& img, const NoiseField& rgb_noise,
                             const ShapeConfig& cfg, const GaussianMask& mask) {
  return clip_unit(compose_adversarial_raw(img, rgb_noise, cfg, mask));
}

}  // namespace advshape
