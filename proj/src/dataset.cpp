#include "advshape/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "advshape/errors.hpp"
#include "advshape/rng.hpp"

namespace advshape {

namespace {

constexpr int kMaxClasses = 5;

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double hh = std::fmod(h, 1.0) * 6.0;
  const int sector = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

bool inside_shape(int shape, double x, double y, double cx, double cy, double half) {
  const double dx = x - cx;
  const double dy = y - cy;
  switch (shape) {
    case 0:  // disk
      return dx * dx + dy * dy <= half * half;
    case 1:  // square
      return std::abs(dx) <= half && std::abs(dy) <= half;
    case 2: {  // horizontal stripes
      if (std::abs(dx) > half || std::abs(dy) > half) return false;
      const double band = std::max(2.0, half * 0.5);
      const int idx = static_cast<int>(std::floor((y - (cy - half)) / band));
      return idx % 2 == 0;
    }
    case 3: {  // vertical bars
      if (std::abs(dx) > half || std::abs(dy) > half) return false;
      const double band = std::max(2.0, half * 0.5);
      const int idx = static_cast<int>(std::floor((x - (cx - half)) / band));
      return idx % 2 == 0;
    }
    default:  // diamond
      return std::abs(dx) + std::abs(dy) <= half * 1.25;
  }
}

}  // namespace

std::vector<std::string> toy_class_names(int class_count) {
  static const std::vector<std::string> kNames = {"disk", "square", "stripes", "bars", "diamond"};
  if (class_count < 2 || class_count > kMaxClasses) {
    throw UsageError("toy_class_names: class_count must be in [2, 5]");
  }
  return {kNames.begin(), kNames.begin() + class_count};
}

ToyDataset generate_toy_dataset(std::uint64_t seed, int count, int size, int class_count) {
  if (count <= 0) throw UsageError("generate_toy_dataset: count must be positive");
  if (size < 8) throw UsageError("generate_toy_dataset: size must be at least 8");
  if (class_count < 2 || class_count > kMaxClasses) {
    throw UsageError("generate_toy_dataset: class_count must be in [2, 5]");
  }

  ToyDataset out;
  out.seed = seed;
  out.class_count = class_count;
  out.images.reserve(count);
  out.labels.reserve(count);

  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const int label = i % class_count;
    RgbImage img(size, size);

    // Class signal rides on luminance (bright low-saturation shape on a dark
    // background, hue jittered per image) so chroma carries little of the
    // decision boundary, mirroring the luma dominance of the full-scale nets.
    const double bg_level = rng.uniform(0.08, 0.30);
    const double bg_r = std::clamp(bg_level + rng.uniform(-0.015, 0.015), 0.0, 1.0);
    const double bg_g = std::clamp(bg_level + rng.uniform(-0.015, 0.015), 0.0, 1.0);
    const double bg_b = std::clamp(bg_level + rng.uniform(-0.015, 0.015), 0.0, 1.0);

    double fg_r, fg_g, fg_b;
    hsv_to_rgb(rng.uniform(0.0, 1.0), rng.uniform(0.08, 0.25), rng.uniform(0.65, 0.95),
               fg_r, fg_g, fg_b);

    const double cx = size * (0.5 + rng.uniform(-0.15, 0.15));
    const double cy = size * (0.5 + rng.uniform(-0.15, 0.15));
    const double half = size * rng.uniform(0.18, 0.30);

    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const bool fg = inside_shape(label, x + 0.5, y + 0.5, cx, cy, half);
        double r = fg ? fg_r : bg_r;
        double g = fg ? fg_g : bg_g;
        double b = fg ? fg_b : bg_b;
        r += rng.uniform(-0.02, 0.02);
        g += rng.uniform(-0.02, 0.02);
        b += rng.uniform(-0.02, 0.02);
        img.at(0, y, x) = std::clamp(r, 0.0, 1.0);
        img.at(1, y, x) = std::clamp(g, 0.0, 1.0);
        img.at(2, y, x) = std::clamp(b, 0.0, 1.0);
      }
    }
    out.images.push_back(std::move(img));
    out.labels.push_back(label);
  }
  return out;
}

}  // namespace advshape
