#pragma once

#include "shapetask/autodiff.hpp"
#include "shapetask/tensor.hpp"

namespace shapetask {

// Which loss terms a training arm optimizes. Segmentation is always on.
struct LossSwitches {
  bool seg = true;
  bool dist = false;
  bool contour = false;
};

// Per-term loss values for one forward pass. total is seg + contour + dist
// in that order, with disabled terms contributing exactly 0.
struct LossBreakdown {
  double seg = 0.0;
  double contour = 0.0;
  double dist = 0.0;
  double total = 0.0;
};

// Same structure on the tape, for backward(). Disabled terms have no node.
struct LossVars {
  ad::Var seg;
  ad::Var contour;
  ad::Var dist;
  ad::Var total;
  LossBreakdown values;
};

inline constexpr double kLogClampFloor = 1e-7;
inline constexpr double kDiceEpsilon = 1e-7;

// Throws unless t is L×H×W with per-pixel class sums 1 ± 1e-6 and entries in
// [0,1].
void validate_probability_map(const Tensor& t);
// Throws unless t is L×H×W binary with exactly one 1 per pixel.
void validate_one_hot(const Tensor& t);

// -(1/N) Σ_x Σ_l g_l(x) log p_l(x) with p clamped to >= 1e-7 before the log;
// N is the pixel count.
ad::Var cross_entropy(ad::Tape& tape, ad::Var probs, ad::Var target);

// Per-class (2 Σ p g + ε) / (Σ p² + Σ g² + ε), ε = 1e-7, averaged over
// classes. Both supports empty yields 1 for that class.
ad::Var soft_dice(ad::Tape& tape, ad::Var probs, ad::Var target);

// cross_entropy - soft_dice over num_classes classes; -1 at a perfect
// prediction.
ad::Var seg_loss(ad::Tape& tape, ad::Var probs, ad::Var target, int num_classes);

// seg_loss restricted to the 2-class contour problem.
ad::Var contour_loss(ad::Tape& tape, ad::Var probs, ad::Var target);

// Mean squared error between a 1×H×W prediction and its distance target.
ad::Var dist_loss(ad::Tape& tape, ad::Var pred, ad::Var target);

// Sums the enabled terms with unit weights. Disabled terms are reported as 0.
// Throws if seg is disabled: every arm trains segmentation.
LossVars total_loss(ad::Tape& tape, ad::Var seg, ad::Var contour, ad::Var dist,
                    const LossSwitches& switches);

// Plain-value variant for reporting already-computed terms.
LossBreakdown total_loss(double seg, double contour, double dist, const LossSwitches& switches);

}  // namespace shapetask
