#include "shapetask/losses.hpp"

#include <cmath>
#include <string>

namespace shapetask {

namespace {

void require_map_3d(const Tensor& t, const char* what) {
  if (t.rank() != 3)
    throw InvalidShapeError(std::string(what) + ": expected L×H×W, got " + t.shape_string());
}

}  // namespace

void validate_probability_map(const Tensor& t) {
  require_map_3d(t, "probability map");
  const int l = t.extent(0);
  const std::int64_t plane = static_cast<std::int64_t>(t.extent(1)) * t.extent(2);
  for (std::int64_t p = 0; p < plane; ++p) {
    double total = 0.0;
    for (int c = 0; c < l; ++c) {
      const double v = t[c * plane + p];
      if (v < 0.0 || v > 1.0)
        throw InvalidArgumentError("probability map entry outside [0,1]");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-6)
      throw InvalidArgumentError("probability map pixel does not sum to 1");
  }
}

void validate_one_hot(const Tensor& t) {
  require_map_3d(t, "one-hot target");
  const int l = t.extent(0);
  const std::int64_t plane = static_cast<std::int64_t>(t.extent(1)) * t.extent(2);
  for (std::int64_t p = 0; p < plane; ++p) {
    int ones = 0;
    for (int c = 0; c < l; ++c) {
      const double v = t[c * plane + p];
      if (v != 0.0 && v != 1.0) throw InvalidArgumentError("one-hot target entry not binary");
      ones += v == 1.0;
    }
    if (ones != 1) throw InvalidArgumentError("one-hot target pixel without exactly one class");
  }
}

ad::Var cross_entropy(ad::Tape& tape, ad::Var probs, ad::Var target) {
  const Tensor& p = tape.value(probs);
  const Tensor& g = tape.value(target);
  require_map_3d(p, "cross_entropy");
  if (!p.same_shape(g))
    throw InvalidShapeError("cross_entropy: shape mismatch " + p.shape_string() + " vs " +
                            g.shape_string());
  const double pixels = static_cast<double>(p.extent(1)) * p.extent(2);
  ad::Var picked = tape.mul(target, tape.log_clamped(probs, kLogClampFloor));
  return tape.scale(tape.sum(picked), -1.0 / pixels);
}

ad::Var soft_dice(ad::Tape& tape, ad::Var probs, ad::Var target) {
  const Tensor& p = tape.value(probs);
  const Tensor& g = tape.value(target);
  require_map_3d(p, "soft_dice");
  if (!p.same_shape(g))
    throw InvalidShapeError("soft_dice: shape mismatch " + p.shape_string() + " vs " +
                            g.shape_string());
  ad::Var overlap = tape.sum_spatial(tape.mul(probs, target));
  ad::Var p_sq = tape.sum_spatial(tape.mul(probs, probs));
  ad::Var g_sq = tape.sum_spatial(tape.mul(target, target));
  ad::Var numer = tape.add_scalar(tape.scale(overlap, 2.0), kDiceEpsilon);
  ad::Var denom = tape.add_scalar(tape.add(p_sq, g_sq), kDiceEpsilon);
  return tape.mean(tape.div(numer, denom));
}

ad::Var seg_loss(ad::Tape& tape, ad::Var probs, ad::Var target, int num_classes) {
  const Tensor& p = tape.value(probs);
  if (p.rank() != 3 || p.extent(0) != num_classes)
    throw InvalidArgumentError("seg_loss: expected " + std::to_string(num_classes) +
                               " classes, got " + p.shape_string());
  return tape.sub(cross_entropy(tape, probs, target), soft_dice(tape, probs, target));
}

ad::Var contour_loss(ad::Tape& tape, ad::Var probs, ad::Var target) {
  return seg_loss(tape, probs, target, 2);
}

ad::Var dist_loss(ad::Tape& tape, ad::Var pred, ad::Var target) {
  const Tensor& p = tape.value(pred);
  const Tensor& g = tape.value(target);
  if (p.rank() != 3 || p.extent(0) != 1)
    throw InvalidShapeError("dist_loss: expected 1×H×W prediction, got " + p.shape_string());
  if (!p.same_shape(g))
    throw InvalidShapeError("dist_loss: shape mismatch " + p.shape_string() + " vs " +
                            g.shape_string());
  ad::Var diff = tape.sub(pred, target);
  return tape.mean(tape.mul(diff, diff));
}

LossVars total_loss(ad::Tape& tape, ad::Var seg, ad::Var contour, ad::Var dist,
                    const LossSwitches& switches) {
  if (!switches.seg)
    throw InvalidArgumentError("total_loss: every arm trains segmentation");

  LossVars out;
  out.seg = seg;
  out.values.seg = tape.value(seg)[0];
  ad::Var total = seg;
  if (switches.contour) {
    out.contour = contour;
    out.values.contour = tape.value(contour)[0];
    total = tape.add(total, contour);
  }
  if (switches.dist) {
    out.dist = dist;
    out.values.dist = tape.value(dist)[0];
    total = tape.add(total, dist);
  }
  out.total = total;
  out.values.total = out.values.seg + out.values.contour + out.values.dist;
  return out;
}

LossBreakdown total_loss(double seg, double contour, double dist, const LossSwitches& switches) {
  if (!switches.seg)
    throw InvalidArgumentError("total_loss: every arm trains segmentation");
  LossBreakdown out;
  out.seg = seg;
  out.contour = switches.contour ? contour : 0.0;
  out.dist = switches.dist ? dist : 0.0;
  out.total = out.seg + out.contour + out.dist;
  return out;
}

}  // namespace shapetask
