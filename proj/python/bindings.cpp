#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "advshape/attacks.hpp"
#include "advshape/dataset.hpp"
#include "advshape/errors.hpp"
#include "advshape/image.hpp"
#include "advshape/model.hpp"
#include "advshape/png_io.hpp"
#include "advshape/report.hpp"
#include "advshape/search.hpp"
#include "advshape/shaping.hpp"

namespace py = pybind11;
using namespace advshape;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Images and noise fields cross the boundary as (height, width, 3) float64.
void check_hw3(const Array& arr, const char* what) {
  if (arr.ndim() != 3 || arr.shape(2) != 3) {
    throw UsageError(std::string(what) + " must have shape (height, width, 3)");
  }
}

RgbImage image_from_array(const Array& arr) {
  check_hw3(arr, "image");
  RgbImage img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  auto view = arr.unchecked<3>();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = view(y, x, c);
    }
  }
  return img;
}

Array image_to_array(const RgbImage& img) {
  Array arr({img.height, img.width, 3});
  auto view = arr.mutable_unchecked<3>();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) view(y, x, c) = img.at(c, y, x);
    }
  }
  return arr;
}

NoiseField noise_from_array(const Array& arr, ColorDomain domain) {
  check_hw3(arr, "noise");
  NoiseField n(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)), domain);
  auto view = arr.unchecked<3>();
  for (int y = 0; y < n.height; ++y) {
    for (int x = 0; x < n.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        n.plane(c)[static_cast<std::size_t>(y) * n.width + x] = view(y, x, c);
      }
    }
  }
  return n;
}

Array noise_to_array(const NoiseField& n) {
  Array arr({n.height, n.width, 3});
  auto view = arr.mutable_unchecked<3>();
  for (int y = 0; y < n.height; ++y) {
    for (int x = 0; x < n.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        view(y, x, c) = n.plane(c)[static_cast<std::size_t>(y) * n.width + x];
      }
    }
  }
  return arr;
}

Array yuv_to_array(const YuvImage& img) {
  Array arr({img.height, img.width, 3});
  auto view = arr.mutable_unchecked<3>();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
      view(y, x, 0) = img.y[i];
      view(y, x, 1) = img.u[i];
      view(y, x, 2) = img.v[i];
    }
  }
  return arr;
}

YuvImage yuv_from_array(const Array& arr) {
  check_hw3(arr, "yuv image");
  YuvImage img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  auto view = arr.unchecked<3>();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
      img.y[i] = view(y, x, 0);
      img.u[i] = view(y, x, 1);
      img.v[i] = view(y, x, 2);
    }
  }
  return img;
}

GaussianMask mask_for(const RgbImage& img, double sigma) {
  const double s = sigma > 0.0 ? sigma : default_sigma(img.width, img.height);
  return make_mask(img.width, img.height, s);
}

AttackConfig attack_config(const std::string& name, double cw_c, double cw_kappa,
                           double cw_step, int mim_iterations, double mim_decay) {
  AttackConfig cfg;
  cfg.kind = attack_from_name(name);
  cfg.cw.c = cw_c;
  cfg.cw.kappa = cw_kappa;
  cfg.cw.step_size = cw_step;
  cfg.mim.iterations = mim_iterations;
  cfg.mim.decay = mim_decay;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adversarial image generation with YUV chroma scaling and Gaussian masking";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<DecodeError>(m, "DecodeError", PyExc_ValueError);
  py::register_exception<ModelFormatError>(m, "ModelFormatError", PyExc_ValueError);

  py::class_<Model>(m, "Model")
      .def_property_readonly("input_width", [](const Model& mm) { return mm.input_width; })
      .def_property_readonly("input_height", [](const Model& mm) { return mm.input_height; })
      .def_property_readonly("class_count", [](const Model& mm) { return mm.class_count; })
      .def_property_readonly("class_names", [](const Model& mm) { return mm.class_names; })
      .def("predict_class",
           [](const Model& mm, const Array& img) { return predict_class(mm, image_from_array(img)); })
      .def("predict_logits",
           [](const Model& mm, const Array& img) { return predict_logits(mm, image_from_array(img)); })
      .def("cross_entropy_loss",
           [](const Model& mm, const Array& img, int label) {
             return cross_entropy_loss(mm, image_from_array(img), label);
           })
      .def("input_gradient",
           [](const Model& mm, const Array& img, int label) {
             return noise_to_array(input_gradient(mm, image_from_array(img), label));
           })
      .def("save", [](const Model& mm, const std::string& path) { save_model(mm, path); });

  py::class_<SearchResult>(m, "SearchResult")
      .def_readonly("success", &SearchResult::success)
      .def_readonly("fallback_used", &SearchResult::fallback_used)
      .def_readonly("best_l2", &SearchResult::best_l2)
      .def_readonly("strength_at_best", &SearchResult::strength_at_best)
      .def_readonly("attempts", &SearchResult::attempts)
      .def_property_readonly("best_image",
                             [](const SearchResult& r) { return image_to_array(r.best_image); })
      .def_property_readonly("log", [](const SearchResult& r) {
        py::list entries;
        for (const AttemptRecord& rec : r.log) {
          entries.append(py::make_tuple(rec.strength, rec.l2, rec.success));
        }
        return entries;
      });

  m.def("load_model", &load_model, py::arg("path"));
  m.def(
      "make_toy_classifier",
      [](int size, int classes, std::uint64_t seed) { return make_toy_classifier(size, classes, seed); },
      py::arg("size") = 32, py::arg("classes") = 3, py::arg("seed") = 101);
  m.def(
      "train_toy_classifier",
      [](int size, int classes, std::uint64_t model_seed, std::uint64_t dataset_seed, int count,
         int epochs, double lr, int batch, std::uint64_t train_seed) {
        const ToyDataset data = generate_toy_dataset(dataset_seed, count, size, classes);
        Model model = make_toy_classifier(size, classes, model_seed);
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.learning_rate = lr;
        cfg.batch_size = batch;
        cfg.seed = train_seed;
        TrainResult result = train(model, data, cfg);
        return py::make_tuple(result.model, result.accuracy, result.mean_loss);
      },
      py::arg("size") = 32, py::arg("classes") = 3, py::arg("model_seed") = 101,
      py::arg("dataset_seed") = 11, py::arg("count") = 64, py::arg("epochs") = 60,
      py::arg("lr") = 0.05, py::arg("batch") = 16, py::arg("train_seed") = 7);

  m.def(
      "generate_toy_dataset",
      [](std::uint64_t seed, int count, int size, int classes) {
        const ToyDataset data = generate_toy_dataset(seed, count, size, classes);
        py::list images;
        for (const RgbImage& img : data.images) images.append(image_to_array(img));
        return py::make_tuple(images, data.labels);
      },
      py::arg("seed") = 11, py::arg("count") = 64, py::arg("size") = 32, py::arg("classes") = 3);

  m.def("rgb_to_yuv",
        [](const Array& img) { return yuv_to_array(rgb_to_yuv(image_from_array(img))); });
  m.def("yuv_to_rgb",
        [](const Array& img) { return image_to_array(yuv_to_rgb(yuv_from_array(img))); });
  m.def("l2_distance", [](const Array& a, const Array& b) {
    return l2_distance(image_from_array(a), image_from_array(b));
  });
  m.def("clip_unit", [](const Array& img) { return image_to_array(clip_unit(image_from_array(img))); });
  m.def("default_sigma", &default_sigma, py::arg("width"), py::arg("height"));
  m.def(
      "make_mask",
      [](int width, int height, double sigma) {
        const GaussianMask mask = make_mask(width, height, sigma);
        py::array_t<double> arr({height, width});
        auto view = arr.mutable_unchecked<2>();
        for (int y = 0; y < height; ++y) {
          for (int x = 0; x < width; ++x) view(y, x) = mask.at(y, x);
        }
        return arr;
      },
      py::arg("width"), py::arg("height"), py::arg("sigma"));
  m.def(
      "shape_noise",
      [](const Array& yuv_noise, double alpha, double sigma) {
        NoiseField n = noise_from_array(yuv_noise, ColorDomain::Yuv);
        const double s = sigma > 0.0 ? sigma : default_sigma(n.width, n.height);
        const GaussianMask mask = make_mask(n.width, n.height, s);
        return noise_to_array(shape_noise(n, {alpha, s}, mask));
      },
      py::arg("yuv_noise"), py::arg("alpha"), py::arg("sigma") = 0.0);
  m.def(
      "compose_adversarial",
      [](const Array& img, const Array& rgb_noise, double alpha, double sigma) {
        const RgbImage image = image_from_array(img);
        const GaussianMask mask = mask_for(image, sigma);
        return image_to_array(compose_adversarial(image, noise_from_array(rgb_noise, ColorDomain::Rgb),
                                                  {alpha, mask.sigma}, mask));
      },
      py::arg("image"), py::arg("noise"), py::arg("alpha"), py::arg("sigma") = 0.0);

  m.def(
      "fgsm_noise",
      [](const Model& model, const Array& img, int label, double epsilon) {
        return noise_to_array(fgsm_noise(model, image_from_array(img), label, {epsilon}));
      },
      py::arg("model"), py::arg("image"), py::arg("label"), py::arg("epsilon"));
  m.def(
      "mim_noise",
      [](const Model& model, const Array& img, int label, double epsilon, int iterations,
         double decay) {
        MimConfig cfg;
        cfg.epsilon = epsilon;
        cfg.iterations = iterations;
        cfg.decay = decay;
        return noise_to_array(mim_noise(model, image_from_array(img), label, cfg));
      },
      py::arg("model"), py::arg("image"), py::arg("label"), py::arg("epsilon"),
      py::arg("iterations") = 10, py::arg("decay") = 1.0);
  m.def(
      "cw_l2_noise",
      [](const Model& model, const Array& img, int label, double c, double kappa, int iterations,
         double step_size) {
        CwConfig cfg;
        cfg.c = c;
        cfg.kappa = kappa;
        cfg.max_iterations = iterations;
        cfg.step_size = step_size;
        return noise_to_array(cw_l2_noise(model, image_from_array(img), label, cfg));
      },
      py::arg("model"), py::arg("image"), py::arg("label"), py::arg("c") = 1.0,
      py::arg("kappa") = 0.0, py::arg("iterations") = 20, py::arg("step_size") = 0.01);

  m.def(
      "search_minimal",
      [](const Model& model, const Array& img, int label, const std::string& attack, double alpha,
         double sigma, bool shaping, double cw_c, double cw_kappa, double cw_step,
         int mim_iterations, double mim_decay) {
        const RgbImage image = image_from_array(img);
        const AttackConfig cfg =
            attack_config(attack, cw_c, cw_kappa, cw_step, mim_iterations, mim_decay);
        const GaussianMask mask = mask_for(image, sigma);
        return search_minimal(model, image, label, cfg, {alpha, mask.sigma}, mask,
                              StrengthSchedule::defaults_for(cfg.kind), shaping);
      },
      py::arg("model"), py::arg("image"), py::arg("label"), py::arg("attack") = "fgsm",
      py::arg("alpha") = 0.6, py::arg("sigma") = 0.0, py::arg("shaping") = true,
      py::arg("cw_c") = 1.0, py::arg("cw_kappa") = 0.0, py::arg("cw_step") = 0.01,
      py::arg("mim_iterations") = 10, py::arg("mim_decay") = 1.0);
  m.def(
      "search_with_fallback",
      [](const Model& model, const Array& img, int label, const std::string& attack, double alpha,
         double sigma, double cw_c, double cw_kappa, double cw_step, int mim_iterations,
         double mim_decay) {
        const RgbImage image = image_from_array(img);
        const AttackConfig cfg =
            attack_config(attack, cw_c, cw_kappa, cw_step, mim_iterations, mim_decay);
        const GaussianMask mask = mask_for(image, sigma);
        return search_with_fallback(model, image, label, cfg, {alpha, mask.sigma}, mask,
                                    StrengthSchedule::defaults_for(cfg.kind));
      },
      py::arg("model"), py::arg("image"), py::arg("label"), py::arg("attack") = "fgsm",
      py::arg("alpha") = 0.6, py::arg("sigma") = 0.0, py::arg("cw_c") = 1.0,
      py::arg("cw_kappa") = 0.0, py::arg("cw_step") = 0.01, py::arg("mim_iterations") = 10,
      py::arg("mim_decay") = 1.0);

  m.def("load_png", [](const std::string& path) { return image_to_array(load_png(path)); });
  m.def("save_png",
        [](const Array& img, const std::string& path) { save_png(image_from_array(img), path); });

  m.def("improvement_summary", [](const std::string& path) {
    const ImprovementTable table = improvement_table(load_improvement_columns(path));
    py::list rows;
    for (const ImprovementRow& row : table.rows) {
      py::dict d;
      d["label"] = row.label;
      d["baseline_mean"] = row.baseline_mean;
      d["best_alpha"] = row.best_alpha;
      d["best_mean"] = row.best_mean;
      d["improvement_pct"] = row.improvement_pct;
      rows.append(std::move(d));
    }
    py::dict result;
    result["rows"] = std::move(rows);
    result["mean_improvement_pct"] = table.mean_improvement_pct;
    return result;
  });
}
