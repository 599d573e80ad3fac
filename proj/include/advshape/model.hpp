#ifndef ADVSHAPE_MODEL_HPP
#define ADVSHAPE_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "advshape/dataset.hpp"
#include "advshape/image.hpp"

namespace advshape {

enum class LayerKind { Dense, Conv, Relu, Flatten };

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  // Conv parameters (valid padding).
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  // Dense parameters; dense layers require a flattened (n,1,1) input.
  int in_size = 0;
  int out_size = 0;
};

/// Small feed-forward classifier. Weights are stored as 32-bit floats (the
/// serialized form); all arithmetic runs in double.
struct Model {
  int input_channels = 3;
  int input_height = 0;
  int input_width = 0;
  int class_count = 0;
  std::vector<std::string> class_names;
  std::vector<LayerSpec> layers;
  std::vector<std::vector<float>> weights;  // empty for relu/flatten
  std::vector<std::vector<float>> biases;
};

/// Checks that layer shapes chain from the input shape to class_count logits
/// and that stored weight array lengths match. Throws UsageError.
void validate_model(const Model& m);

/// Reference architecture: two strided 3x3 convolutions with relu, then a
/// dense readout. Square input of the given size, He-initialized from seed.
Model make_toy_classifier(int input_size, int class_count, std::uint64_t seed);

std::vector<double> predict_logits(const Model& m, const RgbImage& img);

/// Argmax with lowest-index tie-break.
int predict_class(const Model& m, const RgbImage& img);

double cross_entropy_loss(const Model& m, const RgbImage& img, int label);

/// Exact reverse-mode gradient of cross_entropy_loss with respect to every
/// input intensity, as an RGB-domain noise field.
NoiseField input_gradient(const Model& m, const RgbImage& img, int label);

/// Vector-Jacobian product: gradient of <cotangent, logits> with respect to
/// the input. cross_entropy and margin losses are both thin wrappers over it.
NoiseField input_gradient_from_cotangent(const Model& m, const RgbImage& img,
                                         const std::vector<double>& cotangent);

struct TrainConfig {
  int epochs = 60;
  double learning_rate = 0.05;
  int batch_size = 16;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Model model;
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// Mini-batch gradient descent, deterministic given the config seed.
/// Throws NumericError if the loss becomes non-finite.
TrainResult train(const Model& m, const ToyDataset& data, const TrainConfig& cfg);

double dataset_accuracy(const Model& m, const ToyDataset& data);

/// Versioned binary model file: magic, format version, architecture
/// descriptor, little-endian 32-bit float weights.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

}  // namespace advshape

#endif  // ADVSHAPE_MODEL_HPP
