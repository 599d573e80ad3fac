#ifndef ADVSHAPE_ATTACKS_HPP
#define ADVSHAPE_ATTACKS_HPP

#include <string>

#include "advshape/image.hpp"
#include "advshape/model.hpp"

namespace advshape {

enum class AttackKind { Fgsm, Mim, CwL2 };

/// Short stable names used in reports and filenames: fgsm, mim, cw.
std::string attack_name(AttackKind kind);
AttackKind attack_from_name(const std::string& name);

struct FgsmConfig {
  double epsilon = 10.0 / 255.0;
};

struct MimConfig {
  double epsilon = 0.018;
  int iterations = 15;
  double decay = 0.75;
};

struct CwConfig {
  double c = 5.0;
  double kappa = 2.0;
  int max_iterations = 20;
  double step_size = 0.05;
};

/// One attack selection plus the parameters of all three, so a strength
/// schedule can override the strength knob without touching the rest.
struct AttackConfig {
  AttackKind kind = AttackKind::Fgsm;
  FgsmConfig fgsm;
  MimConfig mim;
  CwConfig cw;
};

/// Single signed-gradient step: N = epsilon * sign(grad J(I, y)), ascending
/// the true-label loss. No clipping inside the attack.
NoiseField fgsm_noise(const Model& m, const RgbImage& img, int label, const FgsmConfig& cfg);

/// Momentum iterative method. g_{t+1} = mu*g_t + grad/||grad||_1, step length
/// beta = epsilon/T along g/||g||_2, iterates clipped to [0,1] before the next
/// gradient. Returns A_T - I. Throws DegenerateGradientError on a zero
/// gradient iterate.
NoiseField mim_noise(const Model& m, const RgbImage& img, int label, const MimConfig& cfg);

/// Carlini-Wagner L2 in tanh space: minimize ||A - I||_2^2 + c * f(A) with
/// f(A) = max(Z_y - max_{i != y} Z_i, -kappa) by plain gradient descent.
/// Returns the best-objective iterate's A - I. Throws NumericError if the
/// objective becomes non-finite.
NoiseField cw_l2_noise(const Model& m, const RgbImage& img, int label, const CwConfig& cfg);

/// Dispatch on cfg.kind with the schedule-controlled strength knob applied:
/// epsilon for FGSM/MIM, iteration count (rounded) for C&W.
NoiseField generate_noise(const Model& m, const RgbImage& img, int label, const AttackConfig& cfg,
                          double strength);

}  // namespace advshape

#endif  // ADVSHAPE_ATTACKS_HPP
