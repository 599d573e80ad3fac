#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "advshape/dataset.hpp"
#include "advshape/errors.hpp"
#include "advshape/model.hpp"
#include "advshape/rng.hpp"

using namespace advshape;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("advshape_test_" + name)).string();
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LayerSpec conv_spec(int in_c, int out_c, int kernel, int stride) {
  LayerSpec s;
  s.kind = LayerKind::Conv;
  s.in_channels = in_c;
  s.out_channels = out_c;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec dense_spec(int in_size, int out_size) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.in_size = in_size;
  s.out_size = out_size;
  return s;
}

LayerSpec plain_spec(LayerKind kind) {
  LayerSpec s;
  s.kind = kind;
  return s;
}

std::size_t weight_count(const LayerSpec& s) {
  if (s.kind == LayerKind::Conv)
    return static_cast<std::size_t>(s.out_channels) * s.in_channels * s.kernel * s.kernel;
  if (s.kind == LayerKind::Dense) return static_cast<std::size_t>(s.out_size) * s.in_size;
  return 0;
}

std::size_t bias_count(const LayerSpec& s) {
  if (s.kind == LayerKind::Conv) return s.out_channels;
  if (s.kind == LayerKind::Dense) return s.out_size;
  return 0;
}

Model build_model(int input_size, int classes, std::vector<LayerSpec> layers, Rng& rng) {
  Model m;
  m.input_height = input_size;
  m.input_width = input_size;
  m.class_count = classes;
  m.layers = std::move(layers);
  for (const LayerSpec& s : m.layers) {
    std::vector<float> w(weight_count(s)), b(bias_count(s));
    for (float& v : w) v = static_cast<float>(rng.uniform(-0.6, 0.6));
    for (float& v : b) v = static_cast<float>(rng.uniform(-0.2, 0.2));
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  validate_model(m);
  return m;
}

RgbImage random_image(Rng& rng, int size, double lo = 0.1, double hi = 0.9) {
  RgbImage img(size, size);
  for (int c = 0; c < 3; ++c)
    for (double& v : img.plane(c)) v = rng.uniform(lo, hi);
  return img;
}

// Central finite differences of the cross-entropy loss against the exact
// reverse-mode gradient.
void check_gradient(const Model& m, const RgbImage& img, int label) {
  const double h = 1e-4;
  NoiseField grad = input_gradient(m, img, label);
  RgbImage probe = img;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      const double saved = probe.plane(c)[i];
      probe.plane(c)[i] = saved + h;
      const double up = cross_entropy_loss(m, probe, label);
      probe.plane(c)[i] = saved - h;
      const double down = cross_entropy_loss(m, probe, label);
      probe.plane(c)[i] = saved;

      const double fd = (up - down) / (2.0 * h);
      const double ana = grad.plane(c)[i];
      const double scale = std::max({std::abs(fd), std::abs(ana), 1e-6});
      CHECK(std::abs(fd - ana) / scale < 1e-4);
    }
  }
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("validate_model accepts the toy architecture and rejects breakage") {
  Model good = make_toy_classifier(16, 3, 1);
  CHECK_NOTHROW(validate_model(good));

  SUBCASE("wrong dense input size") {
    Model bad = good;
    bad.layers.back().in_size += 1;
    CHECK_THROWS_AS(validate_model(bad), UsageError);
  }
  SUBCASE("wrong weight array length") {
    Model bad = good;
    bad.weights[0].pop_back();
    CHECK_THROWS_AS(validate_model(bad), UsageError);
  }
  SUBCASE("logits do not match class count") {
    Model bad = good;
    bad.class_count = 4;
    CHECK_THROWS_AS(validate_model(bad), UsageError);
  }
  SUBCASE("non-finite weight") {
    Model bad = good;
    bad.weights[0][0] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(validate_model(bad), UsageError);
  }
}

TEST_CASE("toy classifier construction is deterministic") {
  Model a = make_toy_classifier(16, 3, 99);
  Model b = make_toy_classifier(16, 3, 99);
  REQUIRE(a.weights.size() == b.weights.size());
  for (std::size_t i = 0; i < a.weights.size(); ++i) CHECK(a.weights[i] == b.weights[i]);
  Model c = make_toy_classifier(16, 3, 100);
  CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  // All-zero dense layer: every logit is 0.
  Rng rng(1);
  Model m = build_model(4, 3, {plain_spec(LayerKind::Flatten), dense_spec(48, 3)}, rng);
  for (float& v : m.weights[1]) v = 0.0f;
  for (float& v : m.biases[1]) v = 0.0f;
  RgbImage img = random_image(rng, 4);
  CHECK(predict_class(m, img) == 0);
  std::vector<double> logits = predict_logits(m, img);
  REQUIRE(logits.size() == 3);
  for (double z : logits) CHECK(z == 0.0);
}

TEST_CASE("cross entropy matches a softmax computed from the logits") {
  Rng rng(8);
  Model m = make_toy_classifier(12, 3, 17);
  RgbImage img = random_image(rng, 12);
  std::vector<double> z = predict_logits(m, img);
  const int label = 1;

  double zmax = z[0];
  for (double v : z) zmax = std::max(zmax, v);
  double denom = 0.0;
  for (double v : z) denom += std::exp(v - zmax);
  const double expected = -(z[label] - zmax - std::log(denom));
  CHECK(cross_entropy_loss(m, img, label) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(cross_entropy_loss(m, img, 3), UsageError);
}

TEST_CASE("input gradient matches finite differences on every layer type") {
  // Five architectures that together cover dense, conv (strided and not),
  // relu and flatten.
  Rng rng(123);
  {
    Model m = build_model(4, 3, {plain_spec(LayerKind::Flatten), dense_spec(48, 3)}, rng);
    check_gradient(m, random_image(rng, 4), 0);
  }
  {
    Model m = build_model(4, 2,
                          {conv_spec(3, 4, 3, 1), plain_spec(LayerKind::Relu),
                           plain_spec(LayerKind::Flatten), dense_spec(16, 2)},
                          rng);
    check_gradient(m, random_image(rng, 4), 1);
  }
  {
    Model m = build_model(5, 3,
                          {conv_spec(3, 2, 3, 2), plain_spec(LayerKind::Flatten),
                           dense_spec(8, 3)},
                          rng);
    check_gradient(m, random_image(rng, 5), 2);
  }
  {
    Model m = build_model(6, 2,
                          {plain_spec(LayerKind::Flatten), dense_spec(108, 10),
                           plain_spec(LayerKind::Relu), dense_spec(10, 2)},
                          rng);
    check_gradient(m, random_image(rng, 6), 0);
  }
  {
    Model m = make_toy_classifier(8, 3, 55);
    check_gradient(m, random_image(rng, 8), 1);
  }
}

TEST_CASE("cross entropy gradient is the softmax-minus-onehot cotangent pull") {
  Rng rng(5);
  Model m = make_toy_classifier(10, 3, 3);
  RgbImage img = random_image(rng, 10);
  const int label = 2;

  std::vector<double> z = predict_logits(m, img);
  double zmax = z[0];
  for (double v : z) zmax = std::max(zmax, v);
  double denom = 0.0;
  for (double v : z) denom += std::exp(v - zmax);
  std::vector<double> cot(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    cot[i] = std::exp(z[i] - zmax) / denom - (static_cast<int>(i) == label ? 1.0 : 0.0);

  NoiseField a = input_gradient(m, img, label);
  NoiseField b = input_gradient_from_cotangent(m, img, cot);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
      CHECK(a.plane(c)[i] == doctest::Approx(b.plane(c)[i]).epsilon(1e-12));
}

TEST_CASE("training is deterministic and actually learns") {
  ToyDataset data = generate_toy_dataset(21, 12, 16, 2);
  Model init = make_toy_classifier(16, 2, 7);

  TrainConfig cfg;
  cfg.epochs = 25;
  cfg.seed = 9;
  TrainResult a = train(init, data, cfg);
  TrainResult b = train(init, data, cfg);
  for (std::size_t i = 0; i < a.model.weights.size(); ++i)
    CHECK(a.model.weights[i] == b.model.weights[i]);

  const double before = dataset_accuracy(init, data);
  CHECK(a.accuracy > before);
  CHECK(a.accuracy > 0.7);
  CHECK(a.accuracy == dataset_accuracy(a.model, data));

  SUBCASE("zero epochs returns the input weights") {
    TrainConfig none;
    none.epochs = 0;
    TrainResult r = train(init, data, none);
    for (std::size_t i = 0; i < init.weights.size(); ++i)
      CHECK(r.model.weights[i] == init.weights[i]);
  }
  SUBCASE("a divergent learning rate raises a numeric error") {
    TrainConfig wild;
    wild.epochs = 50;
    wild.learning_rate = 1e18;
    CHECK_THROWS_AS(train(init, data, wild), NumericError);
  }
}

TEST_CASE("save and load roundtrip the model byte for byte") {
  Model m = make_toy_classifier(16, 3, 31);
  const std::string p1 = temp_path("model_a.bin");
  const std::string p2 = temp_path("model_b.bin");
  save_model(m, p1);
  Model loaded = load_model(p1);
  save_model(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));

  CHECK(loaded.input_width == m.input_width);
  CHECK(loaded.class_count == m.class_count);
  CHECK(loaded.class_names == m.class_names);
  REQUIRE(loaded.weights.size() == m.weights.size());
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    CHECK(loaded.weights[i] == m.weights[i]);
    CHECK(loaded.biases[i] == m.biases[i]);
  }
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("model file error cases") {
  Model m = make_toy_classifier(16, 3, 31);
  const std::string path = temp_path("model_err.bin");
  save_model(m, path);
  std::vector<char> bytes = slurp(path);

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_model(temp_path("no_such_model.bin")), IoError);
  }
  SUBCASE("truncated file") {
    std::ofstream(path, std::ios::binary).write(bytes.data(), bytes.size() / 3);
    CHECK_THROWS_AS(load_model(path), ModelFormatError);
  }
  SUBCASE("wrong magic") {
    bytes[0] = 'X';
    std::ofstream(path, std::ios::binary).write(bytes.data(), bytes.size());
    CHECK_THROWS_AS(load_model(path), ModelFormatError);
  }
  SUBCASE("unknown version") {
    bytes[8] = 99;  // little-endian u32 version follows the 8-byte magic
    std::ofstream(path, std::ios::binary).write(bytes.data(), bytes.size());
    CHECK_THROWS_AS(load_model(path), ModelVersionError);
  }
  fs::remove(path);
}

}  // TEST_SUITE
