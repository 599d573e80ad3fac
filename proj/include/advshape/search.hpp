#ifndef ADVSHAPE_SEARCH_HPP
#define ADVSHAPE_SEARCH_HPP

#include <vector>

#include "advshape/attacks.hpp"
#include "advshape/image.hpp"
#include "advshape/model.hpp"
#include "advshape/shaping.hpp"

namespace advshape {

/// Strength schedule of the minimal-noise loop. "Strength" is epsilon for
/// FGSM/MIM and the iteration count for C&W, which is why C&W steps upward
/// where the others step down.
struct StrengthSchedule {
  double initial = 0.0;
  double step = 0.0;          // per-attempt decrement (FGSM/MIM) or increment (C&W)
  double failure_boost = 0.0;  // pre-success upward step; 0 means reuse step
  double min_strength = 0.0;
  int max_attempts = 500;

  static StrengthSchedule defaults_for(AttackKind kind);
};

struct AttemptRecord {
  double strength = 0.0;
  double l2 = 0.0;
  bool success = false;
};

struct SearchResult {
  bool success = false;
  bool fallback_used = false;
  RgbImage best_image;
  double best_l2 = 0.0;
  double strength_at_best = 0.0;
  int attempts = 0;
  std::vector<AttemptRecord> log;
};

/// True iff the model assigns any label other than the ground truth.
bool is_successful(const Model& m, const RgbImage& adv, int label);

/// Minimal-strength loop: attempt at the current strength, store the best
/// (lowest-L2) success, then move strength toward lower L2 (down for
/// FGSM/MIM, up for C&W). Before the first success the strength is stepped
/// upward (FGSM by the failure boost). Stops on a failure after a success,
/// strength underflow, or the attempt budget.
///
/// Requires the clean image to be correctly classified.
SearchResult search_minimal(const Model& m, const RgbImage& img, int label,
                            const AttackConfig& attack, const ShapeConfig& shape,
                            const GaussianMask& mask, const StrengthSchedule& sched,
                            bool shaping_enabled);

/// Runs the search with shaping on and off and returns the better result:
/// the lower-L2 success (ties keep the shaped one), with fallback_used set
/// when the unshaped baseline wins.
SearchResult search_with_fallback(const Model& m, const RgbImage& img, int label,
                                  const AttackConfig& attack, const ShapeConfig& shape,
                                  const GaussianMask& mask, const StrengthSchedule& sched);

}  // namespace advshape

#endif  // ADVSHAPE_SEARCH_HPP
