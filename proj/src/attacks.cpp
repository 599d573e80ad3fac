#include "advshape/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "advshape/errors.hpp"

namespace advshape {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_shapes(const Model& m, const RgbImage& img, int label) {
  if (img.width != m.input_width || img.height != m.input_height) {
    throw UsageError("attack: image does not match model input shape");
  }
  if (label < 0 || label >= m.class_count) throw UsageError("attack: label outside class range");
}

}  // namespace

std::string attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::Fgsm: return "fgsm";
    case AttackKind::Mim: return "mim";
    case AttackKind::CwL2: return "cw";
  }
  throw UsageError("unknown attack kind");
}

AttackKind attack_from_name(const std::string& name) {
  if (name == "fgsm") return AttackKind::Fgsm;
  if (name == "mim") return AttackKind::Mim;
  if (name == "cw" || name == "cw-l2" || name == "cwl2") return AttackKind::CwL2;
  throw UsageError("unknown attack name: " + name);
}

NoiseField fgsm_noise(const Model& m, const RgbImage& img, int label, const FgsmConfig& cfg) {
  check_shapes(m, img, label);
  if (cfg.epsilon < 0.0) throw UsageError("fgsm: epsilon must be nonnegative");

  NoiseField noise(img.width, img.height, ColorDomain::Rgb);
  if (cfg.epsilon == 0.0) return noise;

  const NoiseField grad = input_gradient(m, img, label);
  for (int c = 0; c < 3; ++c) {
    const auto& g = grad.plane(c);
    auto& out = noise.plane(c);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = cfg.epsilon * sign(g[i]);
  }
  return noise;
}

NoiseField mim_noise(const Model& m, const RgbImage& img, int label, const MimConfig& cfg) {
  check_shapes(m, img, label);
  if (cfg.epsilon < 0.0) throw UsageError("mim: epsilon must be nonnegative");
  if (cfg.iterations < 1) throw UsageError("mim: iterations must be at least 1");
  if (cfg.decay < 0.0) throw UsageError("mim: decay must be nonnegative");

  NoiseField zero(img.width, img.height, ColorDomain::Rgb);
  if (cfg.epsilon == 0.0) return zero;

  const double beta = cfg.epsilon / cfg.iterations;
  RgbImage adv = img;
  NoiseField momentum = zero;

  for (int t = 0; t < cfg.iterations; ++t) {
    const NoiseField grad = input_gradient(m, adv, label);

    double l1 = 0.0;
    for (int c = 0; c < 3; ++c) {
      for (double v : grad.plane(c)) l1 += std::abs(v);
    }
    if (l1 == 0.0) throw DegenerateGradientError("mim: zero loss gradient at iterate");

    for (int c = 0; c < 3; ++c) {
      auto& mom = momentum.plane(c);
      const auto& g = grad.plane(c);
      for (std::size_t i = 0; i < mom.size(); ++i) mom[i] = cfg.decay * mom[i] + g[i] / l1;
    }

    const double l2 = noise_l2_norm(momentum);
    if (l2 == 0.0) throw DegenerateGradientError("mim: momentum cancelled to zero");

    for (int c = 0; c < 3; ++c) {
      auto& plane = adv.plane(c);
      const auto& mom = momentum.plane(c);
      for (std::size_t i = 0; i < plane.size(); ++i) {
        plane[i] = std::clamp(plane[i] + beta * mom[i] / l2, 0.0, 1.0);
      }
    }
  }
  return image_difference(adv, img);
}

NoiseField cw_l2_noise(const Model& m, const RgbImage& img, int label, const CwConfig& cfg) {
  check_shapes(m, img, label);
  if (cfg.c < 0.0) throw UsageError("cw: c must be nonnegative");
  if (cfg.kappa < 0.0) throw UsageError("cw: kappa must be nonnegative");
  if (cfg.max_iterations < 1) throw UsageError("cw: max_iterations must be at least 1");
  if (cfg.step_size <= 0.0) throw UsageError("cw: step size must be positive");

  constexpr double kDelta = 1e-6;
  const std::size_t n = img.pixel_count();

  // w lives in tanh space; A = (tanh(w)+1)/2 stays in [0,1] by construction.
  std::vector<std::vector<double>> w(3, std::vector<double>(n));
  for (int c = 0; c < 3; ++c) {
    const auto& plane = img.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::clamp(plane[i], kDelta, 1.0 - kDelta);
      w[c][i] = std::atanh(2.0 * v - 1.0);
    }
  }

  RgbImage adv(img.width, img.height);
  const auto materialize = [&] {
    for (int c = 0; c < 3; ++c) {
      auto& plane = adv.plane(c);
      for (std::size_t i = 0; i < n; ++i) plane[i] = 0.5 * (std::tanh(w[c][i]) + 1.0);
    }
  };

  // Objective pieces at the current adversarial image. The margin cotangent
  // e_y - e_j feeds the backward pass only while the hinge is active.
  const auto evaluate = [&](double& objective, std::vector<double>& cot) {
    const std::vector<double> logits = predict_logits(m, adv);
    int runner = label == 0 ? 1 : 0;
    for (int i = 0; i < m.class_count; ++i) {
      if (i != label && logits[i] > logits[runner]) runner = i;
    }
    const double margin = logits[label] - logits[runner];
    double dist_sq = 0.0;
    for (int c = 0; c < 3; ++c) {
      const auto& a = adv.plane(c);
      const auto& o = img.plane(c);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - o[i];
        dist_sq += d * d;
      }
    }
    objective = dist_sq + cfg.c * std::max(margin, -cfg.kappa);
    cot.assign(m.class_count, 0.0);
    if (margin > -cfg.kappa) {
      cot[label] = cfg.c;
      cot[runner] = -cfg.c;
    }
  };

  materialize();
  double objective = 0.0;
  std::vector<double> cot;
  evaluate(objective, cot);
  if (!std::isfinite(objective)) throw NumericError("cw: non-finite objective");

  RgbImage best = adv;
  double best_objective = objective;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const bool margin_active =
        std::any_of(cot.begin(), cot.end(), [](double v) { return v != 0.0; });
    NoiseField margin_grad = margin_active
                                 ? input_gradient_from_cotangent(m, adv, cot)
                                 : NoiseField(img.width, img.height, ColorDomain::Rgb);

    for (int c = 0; c < 3; ++c) {
      const auto& a = adv.plane(c);
      const auto& o = img.plane(c);
      const auto& mg = margin_grad.plane(c);
      for (std::size_t i = 0; i < n; ++i) {
        const double d_obj_d_a = 2.0 * (a[i] - o[i]) + mg[i];
        const double t = std::tanh(w[c][i]);
        w[c][i] -= cfg.step_size * d_obj_d_a * 0.5 * (1.0 - t * t);
      }
    }

    materialize();
    evaluate(objective, cot);
    if (!std::isfinite(objective)) throw NumericError("cw: non-finite objective");
    if (objective < best_objective) {
      best_objective = objective;
      best = adv;
    }
  }

  return image_difference(best, img);
}

NoiseField generate_noise(const Model& m, const RgbImage& img, int label, const AttackConfig& cfg,
                          double strength) {
  switch (cfg.kind) {
    case AttackKind::Fgsm: {
      FgsmConfig fc = cfg.fgsm;
      fc.epsilon = strength;
      return fgsm_noise(m, img, label, fc);
    }
    case AttackKind::Mim: {
      MimConfig mc = cfg.mim;
      mc.epsilon = strength;
      return mim_noise(m, img, label, mc);
    }
    case AttackKind::CwL2: {
      CwConfig cc = cfg.cw;
      const long iters = std::lround(strength);
      if (iters < 1) throw UsageError("cw: strength must round to at least 1 iteration");
      cc.max_iterations = static_cast<int>(iters);
      return cw_l2_noise(m, img, label, cc);
    }
  }
  throw UsageError("unknown attack kind");
}

}  // namespace advshape
