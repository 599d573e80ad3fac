#include "advshape/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "advshape/errors.hpp"
#include "advshape/rng.hpp"

namespace advshape {

namespace {

using json = nlohmann::json;

struct Shape3 {
  int c = 0, h = 0, w = 0;
  std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
};

struct Tensor3 {
  Shape3 shape;
  std::vector<double> data;

  Tensor3() = default;
  explicit Tensor3(Shape3 s) : shape(s), data(s.size(), 0.0) {}

  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * shape.h + y) * shape.w + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * shape.h + y) * shape.w + x];
  }
};

int conv_out_dim(int in, int kernel, int stride) { return (in - kernel) / stride + 1; }

Shape3 layer_output_shape(const LayerSpec& spec, Shape3 in) {
  switch (spec.kind) {
    case LayerKind::Conv: {
      if (spec.in_channels != in.c) throw UsageError("conv layer input channels mismatch");
      if (spec.kernel <= 0 || spec.stride <= 0) throw UsageError("conv layer parameters invalid");
      if (in.h < spec.kernel || in.w < spec.kernel) throw UsageError("conv kernel larger than input");
      return {spec.out_channels, conv_out_dim(in.h, spec.kernel, spec.stride),
              conv_out_dim(in.w, spec.kernel, spec.stride)};
    }
    case LayerKind::Relu:
      return in;
    case LayerKind::Flatten:
      return {static_cast<int>(in.size()), 1, 1};
    case LayerKind::Dense:
      if (in.h != 1 || in.w != 1) throw UsageError("dense layer requires a flattened input");
      if (spec.in_size != in.c) throw UsageError("dense layer input size mismatch");
      return {spec.out_size, 1, 1};
  }
  throw UsageError("unknown layer kind");
}

std::size_t layer_weight_count(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::Conv:
      return static_cast<std::size_t>(spec.out_channels) * spec.in_channels * spec.kernel * spec.kernel;
    case LayerKind::Dense:
      return static_cast<std::size_t>(spec.out_size) * spec.in_size;
    default:
      return 0;
  }
}

std::size_t layer_bias_count(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::Conv: return spec.out_channels;
    case LayerKind::Dense: return spec.out_size;
    default: return 0;
  }
}

Tensor3 image_to_tensor(const RgbImage& img) {
  Tensor3 t({3, img.height, img.width});
  const std::size_t n = img.pixel_count();
  for (int c = 0; c < 3; ++c) {
    const auto& plane = img.plane(c);
    std::copy(plane.begin(), plane.end(), t.data.begin() + c * n);
  }
  return t;
}

Tensor3 layer_forward(const LayerSpec& spec, const std::vector<float>& w,
                      const std::vector<float>& b, const Tensor3& in) {
  Tensor3 out(layer_output_shape(spec, in.shape));
  switch (spec.kind) {
    case LayerKind::Conv: {
      const int k = spec.kernel, s = spec.stride;
      for (int oc = 0; oc < out.shape.c; ++oc) {
        for (int oy = 0; oy < out.shape.h; ++oy) {
          for (int ox = 0; ox < out.shape.w; ++ox) {
            double acc = b[oc];
            for (int ic = 0; ic < in.shape.c; ++ic) {
              const std::size_t wbase = ((static_cast<std::size_t>(oc) * in.shape.c + ic) * k) * k;
              for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                  acc += static_cast<double>(w[wbase + ky * k + kx]) *
                         in.at(ic, oy * s + ky, ox * s + kx);
                }
              }
            }
            out.at(oc, oy, ox) = acc;
          }
        }
      }
      break;
    }
    case LayerKind::Relu:
      for (std::size_t i = 0; i < in.data.size(); ++i) out.data[i] = in.data[i] > 0.0 ? in.data[i] : 0.0;
      break;
    case LayerKind::Flatten:
      out.data = in.data;
      break;
    case LayerKind::Dense:
      for (int o = 0; o < spec.out_size; ++o) {
        double acc = b[o];
        const std::size_t wbase = static_cast<std::size_t>(o) * spec.in_size;
        for (int i = 0; i < spec.in_size; ++i) acc += static_cast<double>(w[wbase + i]) * in.data[i];
        out.data[o] = acc;
      }
      break;
  }
  return out;
}

// Gradient with respect to the layer input.
Tensor3 layer_backward_input(const LayerSpec& spec, const std::vector<float>& w,
                             const Tensor3& in, const Tensor3& grad_out) {
  Tensor3 grad_in(in.shape);
  switch (spec.kind) {
    case LayerKind::Conv: {
      const int k = spec.kernel, s = spec.stride;
      for (int oc = 0; oc < grad_out.shape.c; ++oc) {
        for (int oy = 0; oy < grad_out.shape.h; ++oy) {
          for (int ox = 0; ox < grad_out.shape.w; ++ox) {
            const double gv = grad_out.at(oc, oy, ox);
            for (int ic = 0; ic < in.shape.c; ++ic) {
              const std::size_t wbase = ((static_cast<std::size_t>(oc) * in.shape.c + ic) * k) * k;
              for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                  grad_in.at(ic, oy * s + ky, ox * s + kx) +=
                      static_cast<double>(w[wbase + ky * k + kx]) * gv;
                }
              }
            }
          }
        }
      }
      break;
    }
    case LayerKind::Relu:
      for (std::size_t i = 0; i < in.data.size(); ++i) {
        grad_in.data[i] = in.data[i] > 0.0 ? grad_out.data[i] : 0.0;
      }
      break;
    case LayerKind::Flatten:
      grad_in.data = grad_out.data;
      break;
    case LayerKind::Dense:
      for (int o = 0; o < spec.out_size; ++o) {
        const double gv = grad_out.data[o];
        const std::size_t wbase = static_cast<std::size_t>(o) * spec.in_size;
        for (int i = 0; i < spec.in_size; ++i) {
          grad_in.data[i] += static_cast<double>(w[wbase + i]) * gv;
        }
      }
      break;
  }
  return grad_in;
}

void layer_backward_params(const LayerSpec& spec, const Tensor3& in, const Tensor3& grad_out,
                           std::vector<double>& dw, std::vector<double>& db) {
  switch (spec.kind) {
    case LayerKind::Conv: {
      const int k = spec.kernel, s = spec.stride;
      for (int oc = 0; oc < grad_out.shape.c; ++oc) {
        for (int oy = 0; oy < grad_out.shape.h; ++oy) {
          for (int ox = 0; ox < grad_out.shape.w; ++ox) {
            const double gv = grad_out.at(oc, oy, ox);
            db[oc] += gv;
            for (int ic = 0; ic < in.shape.c; ++ic) {
              const std::size_t wbase = ((static_cast<std::size_t>(oc) * in.shape.c + ic) * k) * k;
              for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                  dw[wbase + ky * k + kx] += in.at(ic, oy * s + ky, ox * s + kx) * gv;
                }
              }
            }
          }
        }
      }
      break;
    }
    case LayerKind::Dense:
      for (int o = 0; o < spec.out_size; ++o) {
        const double gv = grad_out.data[o];
        db[o] += gv;
        const std::size_t wbase = static_cast<std::size_t>(o) * spec.in_size;
        for (int i = 0; i < spec.in_size; ++i) dw[wbase + i] += in.data[i] * gv;
      }
      break;
    default:
      break;
  }
}

// Forward pass keeping each layer's input for the backward sweep.
Tensor3 forward_cached(const Model& m, const RgbImage& img, std::vector<Tensor3>* cache) {
  if (img.width != m.input_width || img.height != m.input_height) {
    throw UsageError("model input shape mismatch");
  }
  Tensor3 cur = image_to_tensor(img);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (cache) cache->push_back(cur);
    cur = layer_forward(m.layers[i], m.weights[i], m.biases[i], cur);
  }
  return cur;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

NoiseField tensor_to_noise(const Tensor3& t) {
  NoiseField out(t.shape.w, t.shape.h, ColorDomain::Rgb);
  const std::size_t n = out.pixel_count();
  for (int c = 0; c < 3; ++c) {
    std::copy(t.data.begin() + c * n, t.data.begin() + (c + 1) * n, out.plane(c).begin());
  }
  return out;
}

void check_label(const Model& m, int label) {
  if (label < 0 || label >= m.class_count) throw UsageError("label outside class range");
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw ModelFormatError("model file truncated");
  return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
         (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
}

void write_f32_array(std::ostream& out, const std::vector<float>& values) {
  for (float f : values) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
    write_u32(out, bits);
  }
}

void read_f32_array(std::istream& in, std::vector<float>& values, std::size_t count) {
  values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = std::bit_cast<float>(read_u32(in));
  }
}

constexpr char kMagic[8] = {'A', 'D', 'V', 'S', 'H', 'M', 'D', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv: return "conv";
    case LayerKind::Relu: return "relu";
    case LayerKind::Flatten: return "flatten";
  }
  return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "dense") return LayerKind::Dense;
  if (name == "conv") return LayerKind::Conv;
  if (name == "relu") return LayerKind::Relu;
  if (name == "flatten") return LayerKind::Flatten;
  throw ModelFormatError("unknown layer kind in model file: " + name);
}

}  // namespace

void validate_model(const Model& m) {
  if (m.input_channels != 3) throw UsageError("model input must have 3 channels");
  if (m.input_height <= 0 || m.input_width <= 0) throw UsageError("model input shape invalid");
  if (m.class_count < 2) throw UsageError("model needs at least 2 classes");
  if (m.weights.size() != m.layers.size() || m.biases.size() != m.layers.size()) {
    throw UsageError("model weight arrays do not match layer list");
  }
  Shape3 shape{m.input_channels, m.input_height, m.input_width};
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    shape = layer_output_shape(m.layers[i], shape);
    if (m.weights[i].size() != layer_weight_count(m.layers[i]) ||
        m.biases[i].size() != layer_bias_count(m.layers[i])) {
      throw UsageError("layer weight count mismatch");
    }
    for (float v : m.weights[i]) {
      if (!std::isfinite(v)) throw UsageError("model weights must be finite");
    }
  }
  if (shape.c != m.class_count || shape.h != 1 || shape.w != 1) {
    throw UsageError("model output shape does not match class count");
  }
}

Model make_toy_classifier(int input_size, int class_count, std::uint64_t seed) {
  if (input_size < 8) throw UsageError("make_toy_classifier: input size must be at least 8");

  Model m;
  m.input_height = input_size;
  m.input_width = input_size;
  m.class_count = class_count;
  m.class_names = toy_class_names(class_count);

  const int h1 = conv_out_dim(input_size, 3, 2);
  const int h2 = conv_out_dim(h1, 3, 2);

  LayerSpec conv1{LayerKind::Conv, 3, 6, 3, 2, 0, 0};
  LayerSpec relu{LayerKind::Relu};
  LayerSpec conv2{LayerKind::Conv, 6, 12, 3, 2, 0, 0};
  LayerSpec flatten{LayerKind::Flatten};
  LayerSpec dense{LayerKind::Dense, 0, 0, 0, 1, 12 * h2 * h2, class_count};
  m.layers = {conv1, relu, conv2, relu, flatten, dense};

  Rng rng(seed);
  m.weights.resize(m.layers.size());
  m.biases.resize(m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& spec = m.layers[i];
    m.weights[i].resize(layer_weight_count(spec));
    m.biases[i].assign(layer_bias_count(spec), 0.0f);
    double fan_in = 1.0;
    if (spec.kind == LayerKind::Conv) fan_in = spec.in_channels * spec.kernel * spec.kernel;
    if (spec.kind == LayerKind::Dense) fan_in = spec.in_size;
    const double stddev = std::sqrt(2.0 / fan_in);
    for (auto& w : m.weights[i]) w = static_cast<float>(rng.normal() * stddev);
  }
  validate_model(m);
  return m;
}

std::vector<double> predict_logits(const Model& m, const RgbImage& img) {
  const Tensor3 out = forward_cached(m, img, nullptr);
  return out.data;
}

int predict_class(const Model& m, const RgbImage& img) {
  const std::vector<double> logits = predict_logits(m, img);
  int best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  }
  return best;
}

double cross_entropy_loss(const Model& m, const RgbImage& img, int label) {
  check_label(m, label);
  const std::vector<double> logits = predict_logits(m, img);
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - top);
  return std::log(sum) - (logits[label] - top);
}

NoiseField input_gradient_from_cotangent(const Model& m, const RgbImage& img,
                                         const std::vector<double>& cotangent) {
  if (static_cast<int>(cotangent.size()) != m.class_count) {
    throw UsageError("cotangent length must equal class count");
  }
  std::vector<Tensor3> cache;
  cache.reserve(m.layers.size());
  forward_cached(m, img, &cache);

  Tensor3 grad({m.class_count, 1, 1});
  grad.data = cotangent;
  for (std::size_t i = m.layers.size(); i-- > 0;) {
    grad = layer_backward_input(m.layers[i], m.weights[i], cache[i], grad);
  }
  return tensor_to_noise(grad);
}

NoiseField input_gradient(const Model& m, const RgbImage& img, int label) {
  check_label(m, label);
  std::vector<double> cot = softmax(predict_logits(m, img));
  cot[label] -= 1.0;
  return input_gradient_from_cotangent(m, img, cot);
}

double dataset_accuracy(const Model& m, const ToyDataset& data) {
  if (data.images.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    if (predict_class(m, data.images[i]) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / data.images.size();
}

TrainResult train(const Model& m, const ToyDataset& data, const TrainConfig& cfg) {
  validate_model(m);
  if (data.images.empty()) throw UsageError("train: dataset is empty");
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    if (data.images[i].width != m.input_width || data.images[i].height != m.input_height) {
      throw UsageError("train: dataset image size does not match model input");
    }
    if (data.labels[i] < 0 || data.labels[i] >= m.class_count) {
      throw UsageError("train: label outside class range");
    }
  }
  if (cfg.batch_size <= 0) throw UsageError("train: batch size must be positive");

  TrainResult result;
  result.model = m;
  Model& cur = result.model;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.images.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<std::vector<double>> grad_w(cur.layers.size());
  std::vector<std::vector<double>> grad_b(cur.layers.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the explicit engine, for reproducibility.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t l = 0; l < cur.layers.size(); ++l) {
        grad_w[l].assign(cur.weights[l].size(), 0.0);
        grad_b[l].assign(cur.biases[l].size(), 0.0);
      }

      for (std::size_t pos = start; pos < stop; ++pos) {
        const std::size_t idx = order[pos];
        std::vector<Tensor3> cache;
        cache.reserve(cur.layers.size());
        const Tensor3 out = forward_cached(cur, data.images[idx], &cache);

        std::vector<double> probs = softmax(out.data);
        const double loss = -std::log(std::max(probs[data.labels[idx]], 1e-300));
        if (!std::isfinite(loss)) throw NumericError("train: loss diverged");

        Tensor3 grad({cur.class_count, 1, 1});
        grad.data = probs;
        grad.data[data.labels[idx]] -= 1.0;

        for (std::size_t l = cur.layers.size(); l-- > 0;) {
          layer_backward_params(cur.layers[l], cache[l], grad, grad_w[l], grad_b[l]);
          if (l > 0) grad = layer_backward_input(cur.layers[l], cur.weights[l], cache[l], grad);
        }
      }

      const double scale = cfg.learning_rate / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < cur.layers.size(); ++l) {
        for (std::size_t i = 0; i < cur.weights[l].size(); ++i) {
          cur.weights[l][i] = static_cast<float>(cur.weights[l][i] - scale * grad_w[l][i]);
        }
        for (std::size_t i = 0; i < cur.biases[l].size(); ++i) {
          cur.biases[l][i] = static_cast<float>(cur.biases[l][i] - scale * grad_b[l][i]);
        }
      }
    }
  }

  double loss_sum = 0.0;
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    loss_sum += cross_entropy_loss(cur, data.images[i], data.labels[i]);
  }
  result.mean_loss = loss_sum / data.images.size();
  result.accuracy = dataset_accuracy(cur, data);
  return result;
}

void save_model(const Model& m, const std::string& path) {
  validate_model(m);

  json arch;
  arch["input"] = {m.input_channels, m.input_height, m.input_width};
  arch["classes"] = m.class_count;
  arch["class_names"] = m.class_names;
  json layers = json::array();
  for (const auto& spec : m.layers) {
    json layer;
    layer["type"] = layer_kind_name(spec.kind);
    if (spec.kind == LayerKind::Conv) {
      layer["in"] = spec.in_channels;
      layer["out"] = spec.out_channels;
      layer["kernel"] = spec.kernel;
      layer["stride"] = spec.stride;
    } else if (spec.kind == LayerKind::Dense) {
      layer["in"] = spec.in_size;
      layer["out"] = spec.out_size;
    }
    layers.push_back(layer);
  }
  arch["layers"] = layers;
  const std::string arch_text = arch.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open model file for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kFormatVersion);
  write_u32(out, static_cast<std::uint32_t>(arch_text.size()));
  out.write(arch_text.data(), static_cast<std::streamsize>(arch_text.size()));
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    write_f32_array(out, m.weights[i]);
    write_f32_array(out, m.biases[i]);
  }
  if (!out) throw IoError("model write failed: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ModelFormatError("not a model file: " + path);
  }
  const std::uint32_t version = read_u32(in);
  if (version != kFormatVersion) {
    throw ModelVersionError("unsupported model format version " + std::to_string(version));
  }
  const std::uint32_t arch_len = read_u32(in);
  std::string arch_text(arch_len, '\0');
  in.read(arch_text.data(), arch_len);
  if (!in) throw ModelFormatError("model file truncated");

  json arch;
  try {
    arch = json::parse(arch_text);
  } catch (const json::exception&) {
    throw ModelFormatError("model architecture block is not valid JSON");
  }

  Model m;
  try {
    m.input_channels = arch.at("input").at(0).get<int>();
    m.input_height = arch.at("input").at(1).get<int>();
    m.input_width = arch.at("input").at(2).get<int>();
    m.class_count = arch.at("classes").get<int>();
    m.class_names = arch.at("class_names").get<std::vector<std::string>>();
    for (const auto& layer : arch.at("layers")) {
      LayerSpec spec;
      spec.kind = layer_kind_from_name(layer.at("type").get<std::string>());
      if (spec.kind == LayerKind::Conv) {
        spec.in_channels = layer.at("in").get<int>();
        spec.out_channels = layer.at("out").get<int>();
        spec.kernel = layer.at("kernel").get<int>();
        spec.stride = layer.at("stride").get<int>();
      } else if (spec.kind == LayerKind::Dense) {
        spec.in_size = layer.at("in").get<int>();
        spec.out_size = layer.at("out").get<int>();
      }
      m.layers.push_back(spec);
    }
  } catch (const json::exception&) {
    throw ModelFormatError("model architecture block is missing fields");
  }

  m.weights.resize(m.layers.size());
  m.biases.resize(m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    read_f32_array(in, m.weights[i], layer_weight_count(m.layers[i]));
    read_f32_array(in, m.biases[i], layer_bias_count(m.layers[i]));
  }
  try {
    validate_model(m);
  } catch (const UsageError& e) {
    throw ModelFormatError(std::string("model file inconsistent: ") + e.what());
  }
  return m;
}

}  // namespace advshape
