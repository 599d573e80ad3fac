#ifndef ADVSHAPE_DATASET_HPP
#define ADVSHAPE_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "advshape/image.hpp"

namespace advshape {

/// Deterministic synthetic dataset of colored-shape images. Class identity is
/// carried by geometry (disk, square, stripes, ...) while hue, position and
/// background are jittered, so luminance carries the separating signal.
struct ToyDataset {
  std::vector<RgbImage> images;
  std::vector<int> labels;
  std::uint64_t seed = 0;
  int class_count = 0;
};

/// Shape names for the supported class counts (2..5).
std::vector<std::string> toy_class_names(int class_count);

/// Regeneration with the same arguments is bit-identical. Labels are assigned
/// round-robin so every class appears when count >= class_count.
ToyDataset generate_toy_dataset(std::uint64_t seed, int count, int size, int class_count);

}  // namespace advshape

#endif  // ADVSHAPE_DATASET_HPP
