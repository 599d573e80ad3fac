#include "advshape/search.hpp"

#include <cmath>

#include "advshape/errors.hpp"

namespace advshape {

namespace {

constexpr double kStrengthEps = 1e-12;

bool strength_descends(AttackKind kind) { return kind != AttackKind::CwL2; }

}  // namespace

StrengthSchedule StrengthSchedule::defaults_for(AttackKind kind) {
  StrengthSchedule s;
  switch (kind) {
    case AttackKind::Fgsm:
      // 10 / 0.025 / 5 on the usual 0-255 pixel scale, rescaled to [0,1].
      s.initial = 10.0 / 255.0;
      s.step = 0.025 / 255.0;
      s.failure_boost = 5.0 / 255.0;
      s.max_attempts = 500;
      break;
    case AttackKind::Mim:
      // The toy classifier needs far larger perturbations than a full-scale
      // net would, so the schedule is rescaled to keep searches short.
      s.initial = 0.2;
      s.step = 0.01;
      s.max_attempts = 500;
      break;
    case AttackKind::CwL2:
      // Strength is the iteration budget; it grows, so the attempt cap is
      // what bounds the loop (and the desk-scale runtime).
      s.initial = 20.0;
      s.step = 20.0;
      s.max_attempts = 5;
      break;
  }
  return s;
}

bool is_successful(const Model& m, const RgbImage& adv, int label) {
  if (label < 0 || label >= m.class_count) throw UsageError("is_successful: label outside class range");
  return predict_class(m, adv) != label;
}

SearchResult search_minimal(const Model& m, const RgbImage& img, int label,
                            const AttackConfig& attack, const ShapeConfig& shape,
                            const GaussianMask& mask, const StrengthSchedule& sched,
                            bool shaping_enabled) {
  if (sched.step <= 0.0) throw UsageError("search: schedule step must be positive");
  if (sched.max_attempts < 1) throw UsageError("search: attempt budget must be positive");
  if (is_successful(m, img, label)) {
    throw UsageError("search: clean image is not correctly classified");
  }

  const bool descends = strength_descends(attack.kind);
  const double up_step = sched.failure_boost > 0.0 ? sched.failure_boost : sched.step;

  SearchResult result;
  // Strengths are recomputed from phase base + counter so the visited grid
  // is exact (no accumulated float drift) and matches an external scan.
  double phase_base = sched.initial;
  int phase_index = 0;
  bool found = false;

  while (result.attempts < sched.max_attempts) {
    double strength;
    if (!found) {
      strength = phase_base + phase_index * up_step;
    } else if (descends) {
      strength = phase_base - phase_index * sched.step;
      if (strength < sched.min_strength - kStrengthEps) break;
    } else {
      strength = phase_base + phase_index * sched.step;
    }

    const NoiseField noise = generate_noise(m, img, label, attack, strength);
    const RgbImage adv = shaping_enabled ? compose_adversarial(img, noise, shape, mask)
                                         : clip_unit(add_noise(img, noise));
    const double l2 = l2_distance(adv, img);
    const bool success = is_successful(m, adv, label);
    ++result.attempts;
    result.log.push_back({strength, l2, success});

    if (success) {
      if (!found || l2 < result.best_l2) {
        result.best_image = adv;
        result.best_l2 = l2;
        result.strength_at_best = strength;
      }
      if (!found) {
        // Descent restarts from the first success.
        found = true;
        phase_base = strength;
        phase_index = 1;
      } else {
        ++phase_index;
      }
    } else {
      if (found) break;  // first failure after a success ends the loop
      ++phase_index;
    }
  }

  result.success = found;
  return result;
}

SearchResult search_with_fallback(const Model& m, const RgbImage& img, int label,
                                  const AttackConfig& attack, const ShapeConfig& shape,
                                  const GaussianMask& mask, const StrengthSchedule& sched) {
  SearchResult shaped = search_minimal(m, img, label, attack, shape, mask, sched, true);
  SearchResult baseline = search_minimal(m, img, label, attack, shape, mask, sched, false);

  if (baseline.success && (!shaped.success || baseline.best_l2 < shaped.best_l2)) {
    baseline.fallback_used = true;
    return baseline;
  }
  return shaped;
}

}  // namespace advshape
