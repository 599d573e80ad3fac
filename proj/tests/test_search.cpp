#include <doctest.h>

#include <cmath>
#include <vector>

#include "advshape/attacks.hpp"
#include "advshape/errors.hpp"
#include "advshape/model.hpp"
#include "advshape/rng.hpp"
#include "advshape/search.hpp"
#include "advshape/shaping.hpp"

using namespace advshape;

namespace {

LayerSpec flatten_spec() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

LayerSpec dense_spec(int in_size, int out_size) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.in_size = in_size;
  s.out_size = out_size;
  return s;
}

Model linear_model(int w, int h, Rng& rng) {
  Model m;
  m.input_height = h;
  m.input_width = w;
  m.class_count = 2;
  m.layers = {flatten_spec(), dense_spec(3 * w * h, 2)};
  m.weights.resize(2);
  m.biases.resize(2);
  m.weights[1].resize(static_cast<std::size_t>(2) * 3 * w * h);
  m.biases[1].assign(2, 0.0f);
  for (float& v : m.weights[1]) v = static_cast<float>(rng.uniform(-0.8, 0.8));
  validate_model(m);
  return m;
}

RgbImage interior_image(Rng& rng, int w, int h) {
  RgbImage img(w, h);
  for (int c = 0; c < 3; ++c)
    for (double& v : img.plane(c)) v = rng.uniform(0.3, 0.7);
  return img;
}

struct ScanOutcome {
  bool success = false;
  double strength = 0.0;
  double l2 = 0.0;
};

// Brute-force replay of the schedule: climb by the boost until the first
// success, then walk down by the decrement while successes continue, all
// within the shared attempt budget. Returns the lowest-L2 success.
ScanOutcome grid_scan(const Model& m, const RgbImage& img, int label, const AttackConfig& attack,
                      const StrengthSchedule& sched) {
  ScanOutcome out;
  const double up = sched.failure_boost > 0.0 ? sched.failure_boost : sched.step;
  int attempts = 0;

  double first_success = 0.0;
  int k = 0;
  while (attempts < sched.max_attempts) {
    const double eps = sched.initial + k * up;
    const NoiseField noise = generate_noise(m, img, label, attack, eps);
    const RgbImage adv = clip_unit(add_noise(img, noise));
    ++attempts;
    if (is_successful(m, adv, label)) {
      out.success = true;
      out.strength = eps;
      out.l2 = l2_distance(adv, img);
      first_success = eps;
      break;
    }
    ++k;
  }
  if (!out.success) return out;

  for (int j = 1; attempts < sched.max_attempts; ++j) {
    const double eps = first_success - j * sched.step;
    if (eps < sched.min_strength - 1e-12) break;
    const NoiseField noise = generate_noise(m, img, label, attack, eps);
    const RgbImage adv = clip_unit(add_noise(img, noise));
    ++attempts;
    if (!is_successful(m, adv, label)) break;
    const double l2 = l2_distance(adv, img);
    if (l2 < out.l2) {
      out.strength = eps;
      out.l2 = l2;
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("search") {

TEST_CASE("disabled shaping equals an exhaustive scan of the schedule") {
  // Twenty seeded linear instances; the search must pick exactly the scan's
  // epsilon and L2.
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 977);
    Model m = linear_model(6, 6, rng);
    RgbImage img = interior_image(rng, 6, 6);
    const int label = predict_class(m, img);

    AttackConfig attack;
    attack.kind = AttackKind::Fgsm;
    StrengthSchedule sched;
    sched.initial = 0.02;
    sched.step = 0.002;
    sched.failure_boost = 0.02;
    sched.max_attempts = 300;

    ShapeConfig shape;
    GaussianMask mask = make_mask(6, 6, default_sigma(6, 6));
    SearchResult got = search_minimal(m, img, label, attack, shape, mask, sched, false);
    ScanOutcome want = grid_scan(m, img, label, attack, sched);

    REQUIRE(got.success == want.success);
    if (want.success) {
      CHECK(got.strength_at_best == want.strength);
      CHECK(got.best_l2 == want.l2);
      ++checked;
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("log strengths are strictly monotone after the first success") {
  Rng rng(301);
  Model m = linear_model(6, 6, rng);
  RgbImage img = interior_image(rng, 6, 6);
  const int label = predict_class(m, img);

  AttackConfig attack;
  attack.kind = AttackKind::Fgsm;
  StrengthSchedule sched;
  sched.initial = 0.01;
  sched.step = 0.001;
  sched.failure_boost = 0.03;
  sched.max_attempts = 200;
  ShapeConfig shape;
  GaussianMask mask = make_mask(6, 6, 3.0);

  SearchResult r = search_minimal(m, img, label, attack, shape, mask, sched, false);
  REQUIRE(r.success);
  std::size_t first = 0;
  while (first < r.log.size() && !r.log[first].success) ++first;
  for (std::size_t i = first + 1; i < r.log.size(); ++i)
    CHECK(r.log[i].strength < r.log[i - 1].strength);
  // Pre-success the climb is strictly upward too.
  for (std::size_t i = 1; i <= first && i < r.log.size(); ++i)
    CHECK(r.log[i].strength > r.log[i - 1].strength);
  CHECK(r.best_l2 == l2_distance(r.best_image, img));
  CHECK(is_successful(m, r.best_image, label));
}

TEST_CASE("success at the initial strength ends within two extra attempts") {
  Rng rng(302);
  Model m = linear_model(5, 5, rng);
  RgbImage img = interior_image(rng, 5, 5);
  const int label = predict_class(m, img);

  // Find a strength that already misclassifies, then hand it to the search
  // as the initial value with a floor directly below it.
  AttackConfig attack;
  attack.kind = AttackKind::Fgsm;
  double eps = 0.02;
  for (; eps < 2.0; eps += 0.02) {
    NoiseField n = generate_noise(m, img, label, attack, eps);
    if (is_successful(m, clip_unit(add_noise(img, n)), label)) break;
  }
  REQUIRE(eps < 2.0);

  StrengthSchedule sched;
  sched.initial = eps;
  sched.step = 0.02;
  sched.min_strength = eps - 0.01;  // one step down underflows
  sched.max_attempts = 50;
  ShapeConfig shape;
  GaussianMask mask = make_mask(5, 5, 2.0);
  SearchResult r = search_minimal(m, img, label, attack, shape, mask, sched, false);
  REQUIRE(r.success);
  CHECK(r.log[0].success);
  CHECK(r.attempts <= 2);
  CHECK(r.strength_at_best >= sched.min_strength);
}

TEST_CASE("search rejects a misclassified clean image") {
  Rng rng(303);
  Model m = linear_model(5, 5, rng);
  RgbImage img = interior_image(rng, 5, 5);
  const int wrong = 1 - predict_class(m, img);

  AttackConfig attack;
  attack.kind = AttackKind::Fgsm;
  StrengthSchedule sched = StrengthSchedule::defaults_for(AttackKind::Fgsm);
  ShapeConfig shape;
  GaussianMask mask = make_mask(5, 5, 2.0);
  CHECK_THROWS_AS(search_minimal(m, img, wrong, attack, shape, mask, sched, false), UsageError);
}

TEST_CASE("schedule validation") {
  Rng rng(304);
  Model m = linear_model(5, 5, rng);
  RgbImage img = interior_image(rng, 5, 5);
  const int label = predict_class(m, img);
  AttackConfig attack;
  ShapeConfig shape;
  GaussianMask mask = make_mask(5, 5, 2.0);

  StrengthSchedule bad;
  bad.initial = 0.1;
  bad.step = 0.0;
  CHECK_THROWS_AS(search_minimal(m, img, label, attack, shape, mask, bad, false), UsageError);
  bad.step = 0.01;
  bad.max_attempts = 0;
  CHECK_THROWS_AS(search_minimal(m, img, label, attack, shape, mask, bad, false), UsageError);
}

TEST_CASE("an exhausted budget reports failure") {
  Rng rng(305);
  Model m = linear_model(5, 5, rng);
  // Widen the margin so tiny epsilons cannot flip the prediction.
  for (float& v : m.weights[1]) v *= 0.01f;
  RgbImage img = interior_image(rng, 5, 5);
  const int label = predict_class(m, img);

  AttackConfig attack;
  attack.kind = AttackKind::Fgsm;
  StrengthSchedule sched;
  sched.initial = 1e-7;
  sched.step = 1e-7;
  sched.failure_boost = 1e-7;
  sched.max_attempts = 4;
  ShapeConfig shape;
  GaussianMask mask = make_mask(5, 5, 2.0);
  SearchResult r = search_minimal(m, img, label, attack, shape, mask, sched, false);
  CHECK_FALSE(r.success);
  CHECK(r.attempts == 4);
  CHECK(r.log.size() == 4);
  for (const AttemptRecord& rec : r.log) CHECK_FALSE(rec.success);
}

TEST_CASE("cw strength climbs upward through the iteration grid") {
  Rng rng(306);
  Model m = linear_model(6, 6, rng);
  RgbImage img = interior_image(rng, 6, 6);
  const int label = predict_class(m, img);

  AttackConfig attack;
  attack.kind = AttackKind::CwL2;
  attack.cw.c = 4.0;
  attack.cw.kappa = 0.5;
  attack.cw.step_size = 0.1;
  StrengthSchedule sched;
  sched.initial = 10.0;
  sched.step = 10.0;
  sched.max_attempts = 4;
  ShapeConfig shape;
  GaussianMask mask = make_mask(6, 6, 3.0);
  SearchResult r = search_minimal(m, img, label, attack, shape, mask, sched, false);
  REQUIRE(r.success);
  for (std::size_t i = 1; i < r.log.size(); ++i)
    CHECK(r.log[i].strength > r.log[i - 1].strength);
  CHECK(r.attempts == 4);  // cw never fails after a success, so the budget ends it
}

TEST_CASE("fallback picks the lower-l2 side and ties keep the shaped result") {
  Rng rng(307);
  Model m = linear_model(6, 6, rng);
  RgbImage img = interior_image(rng, 6, 6);
  const int label = predict_class(m, img);

  AttackConfig attack;
  attack.kind = AttackKind::Fgsm;
  StrengthSchedule sched;
  sched.initial = 0.02;
  sched.step = 0.002;
  sched.failure_boost = 0.02;
  sched.max_attempts = 300;
  ShapeConfig shape;
  shape.alpha = 0.6;
  GaussianMask mask = make_mask(6, 6, default_sigma(6, 6));

  SearchResult shaped = search_minimal(m, img, label, attack, shape, mask, sched, true);
  SearchResult baseline = search_minimal(m, img, label, attack, shape, mask, sched, false);
  SearchResult combined = search_with_fallback(m, img, label, attack, shape, mask, sched);

  REQUIRE(shaped.success);
  REQUIRE(baseline.success);
  if (baseline.best_l2 < shaped.best_l2) {
    CHECK(combined.fallback_used);
    CHECK(combined.best_l2 == baseline.best_l2);
  } else {
    CHECK_FALSE(combined.fallback_used);
    CHECK(combined.best_l2 == shaped.best_l2);
  }
  CHECK(combined.best_l2 == std::min(shaped.best_l2, baseline.best_l2));
}

TEST_CASE("fallback covers a shaped-only failure") {
  Rng rng(308);
  Model m = linear_model(6, 6, rng);
  RgbImage img = interior_image(rng, 6, 6);
  const int label = predict_class(m, img);

  // Censor the schedule so the shaped search (which needs more strength to
  // push the same signal through the mask) runs out of budget.
  AttackConfig attack;
  attack.kind = AttackKind::Fgsm;
  StrengthSchedule sched;
  sched.initial = 0.001;
  sched.step = 0.0005;
  sched.failure_boost = 0.0005;
  sched.max_attempts = 500;
  ShapeConfig shape;
  shape.alpha = 0.0;
  GaussianMask tight = make_mask(6, 6, 0.4);  // near-zero off center

  SearchResult shaped = search_minimal(m, img, label, attack, shape, tight, sched, true);
  SearchResult baseline = search_minimal(m, img, label, attack, shape, tight, sched, false);
  SearchResult combined = search_with_fallback(m, img, label, attack, shape, tight, sched);

  if (!shaped.success && baseline.success) {
    CHECK(combined.success);
    CHECK(combined.fallback_used);
    CHECK(combined.best_l2 == baseline.best_l2);
  } else {
    // Seeds keeping both alive still must agree with the min rule.
    CHECK(combined.success == (shaped.success || baseline.success));
  }
}

TEST_CASE("fallback reports the shaped failure when both sides fail") {
  Rng rng(309);
  Model m = linear_model(5, 5, rng);
  for (float& v : m.weights[1]) v *= 0.01f;
  RgbImage img = interior_image(rng, 5, 5);
  const int label = predict_class(m, img);

  AttackConfig attack;
  attack.kind = AttackKind::Fgsm;
  StrengthSchedule sched;
  sched.initial = 1e-7;
  sched.step = 1e-7;
  sched.failure_boost = 1e-7;
  sched.max_attempts = 3;
  ShapeConfig shape;
  GaussianMask mask = make_mask(5, 5, 2.0);
  SearchResult r = search_with_fallback(m, img, label, attack, shape, mask, sched);
  CHECK_FALSE(r.success);
  CHECK_FALSE(r.fallback_used);
}

TEST_CASE("degenerate gradients propagate out of the search") {
  Rng rng(310);
  Model m = linear_model(5, 5, rng);
  for (float& v : m.weights[1]) v = 0.0f;  // all logits zero: class 0 everywhere
  RgbImage img = interior_image(rng, 5, 5);

  AttackConfig attack;
  attack.kind = AttackKind::Mim;
  StrengthSchedule sched = StrengthSchedule::defaults_for(AttackKind::Mim);
  ShapeConfig shape;
  GaussianMask mask = make_mask(5, 5, 2.0);
  CHECK_THROWS_AS(search_minimal(m, img, 0, attack, shape, mask, sched, false),
                  DegenerateGradientError);
}

}  // TEST_SUITE
