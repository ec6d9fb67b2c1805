#pragma once

#include <cstdint>
#include <vector>

#include "shapetask/grid.hpp"
#include "shapetask/tensor.hpp"

namespace shapetask {

// One organ class: a rotated filled ellipse with a size budget (pixel count)
// and an intensity band the class mean is drawn from.
struct OrganSpec {
  int size_min = 40;
  int size_max = 80;
  double intensity_min = 0.5;
  double intensity_max = 0.6;

  void validate() const {
    if (size_min < 1 || size_max < size_min)
      throw InvalidArgumentError("organ spec: need 1 <= size_min <= size_max");
    if (intensity_min < 0.0 || intensity_max > 1.0 || intensity_max < intensity_min)
      throw InvalidArgumentError("organ spec: intensity range must be inside [0,1]");
  }
};

struct PhantomConfig {
  int height = 64;
  int width = 64;
  double background_intensity = 0.15;
  double noise_std = 0.05;
  int placement_retries = 200;
  std::vector<OrganSpec> organs;  // classes 1..organs.size()

  int num_classes() const { return static_cast<int>(organs.size()) + 1; }

  void validate() const {
    if (height < 1 || width < 1) throw InvalidArgumentError("phantom: extents must be positive");
    if (background_intensity < 0.0 || background_intensity > 1.0)
      throw InvalidArgumentError("phantom: background intensity must be inside [0,1]");
    if (noise_std < 0.0) throw InvalidArgumentError("phantom: noise_std must be nonnegative");
    if (placement_retries < 1) throw InvalidArgumentError("phantom: placement_retries must be >= 1");
    if (organs.empty()) throw InvalidArgumentError("phantom: need at least one organ class");
    for (const auto& o : organs) o.validate();
  }
};

// Defaults used across the project: 4 organ classes of decreasing size with
// well-separated intensity bands on a 64×64 canvas.
PhantomConfig default_phantom_config();

struct Phantom {
  Tensor image;    // 1×H×W, values in [0,1]
  LabelMap labels;
  std::vector<int> omitted_organs;  // classes that failed placement
};

// Fully determined by (seed, config). Organs are placed without overlap by
// rejection sampling; an organ that cannot be placed within
// placement_retries is omitted and flagged, not an error.
Phantom generate(std::uint64_t seed, const PhantomConfig& config);

// Per organ, a seeded choice of morphological dilation or erosion with
// 4-connected radius round(severity × equivalent radius). Dilation only
// claims background pixels; severity 0 is the identity.
LabelMap corrupt_labels(const LabelMap& labels, double severity, std::uint64_t seed);

}  // namespace shapetask
