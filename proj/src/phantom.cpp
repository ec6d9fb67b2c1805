#include "shapetask/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "shapetask/rng.hpp"

namespace shapetask {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Ellipse {
  double cy, cx;      // center, pixel coordinates
  double a, b;        // semi-axes
  double cos_t, sin_t;

  bool contains(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double u = (dx * cos_t + dy * sin_t) / a;
    const double v = (-dx * sin_t + dy * cos_t) / b;
    return u * u + v * v <= 1.0;
  }
};

std::vector<std::pair<int, int>> rasterize(const Ellipse& e, int height, int width) {
  const double reach = std::max(e.a, e.b);
  const int r0 = std::max(0, static_cast<int>(std::floor(e.cy - reach)));
  const int r1 = std::min(height - 1, static_cast<int>(std::ceil(e.cy + reach)));
  const int c0 = std::max(0, static_cast<int>(std::floor(e.cx - reach)));
  const int c1 = std::min(width - 1, static_cast<int>(std::ceil(e.cx + reach)));
  std::vector<std::pair<int, int>> pixels;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (e.contains(r, c)) pixels.emplace_back(r, c);
  return pixels;
}

// One 4-connected dilation step: claims background pixels next to the mask.
void dilate_step(Grid<std::uint8_t>& mask, const Grid<int>& labels) {
  static constexpr int dr[4] = {-1, 1, 0, 0};
  static constexpr int dc[4] = {0, 0, -1, 1};
  Grid<std::uint8_t> prev = mask;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (prev.at(r, c) || labels.at(r, c) != 0) continue;
      for (int k = 0; k < 4; ++k) {
        const int nr = r + dr[k], nc = c + dc[k];
        if (prev.in_bounds(nr, nc) && prev.at(nr, nc)) {
          mask.at(r, c) = 1;
          break;
        }
      }
    }
  }
}

// One 4-connected erosion step: drops mask pixels with a non-mask 4-neighbor
// (the image border counts as outside).
void erode_step(Grid<std::uint8_t>& mask) {
  static constexpr int dr[4] = {-1, 1, 0, 0};
  static constexpr int dc[4] = {0, 0, -1, 1};
  Grid<std::uint8_t> prev = mask;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!prev.at(r, c)) continue;
      for (int k = 0; k < 4; ++k) {
        const int nr = r + dr[k], nc = c + dc[k];
        if (!prev.in_bounds(nr, nc) || !prev.at(nr, nc)) {
          mask.at(r, c) = 0;
          break;
        }
      }
    }
  }
}

}  // namespace

PhantomConfig default_phantom_config() {
  PhantomConfig config;
  config.organs = {
      OrganSpec{300, 500, 0.40, 0.50},  // large
      OrganSpec{150, 250, 0.55, 0.65},  // medium
      OrganSpec{40, 80, 0.70, 0.80},    // small
      OrganSpec{12, 30, 0.85, 0.95},    // tiny
  };
  return config;
}

Phantom generate(std::uint64_t seed, const PhantomConfig& config) {
  config.validate();
  Rng rng(seed);

  Phantom out;
  out.labels = LabelMap(config.height, config.width, config.num_classes());

  for (int organ = 1; organ < config.num_classes(); ++organ) {
    const OrganSpec& spec = config.organs[organ - 1];
    bool placed = false;
    for (int attempt = 0; attempt < config.placement_retries && !placed; ++attempt) {
      const double area = rng.uniform(spec.size_min, spec.size_max);
      const double aspect = rng.uniform(0.45, 1.0);
      Ellipse e;
      e.a = std::sqrt(area * aspect / kPi);
      e.b = std::sqrt(area / (aspect * kPi));
      const double theta = rng.uniform(0.0, kPi);
      e.cos_t = std::cos(theta);
      e.sin_t = std::sin(theta);
      e.cy = rng.uniform(0.0, config.height);
      e.cx = rng.uniform(0.0, config.width);

      const auto pixels = rasterize(e, config.height, config.width);
      if (static_cast<int>(pixels.size()) < spec.size_min ||
          static_cast<int>(pixels.size()) > spec.size_max)
        continue;
      bool overlaps = false;
      for (const auto& [r, c] : pixels)
        if (out.labels.at(r, c) != 0) {
          overlaps = true;
          break;
        }
      if (overlaps) continue;
      for (const auto& [r, c] : pixels) out.labels.at(r, c) = organ;
      placed = true;
    }
    if (!placed) out.omitted_organs.push_back(organ);
  }

  // Class mean intensities for this sample, then per-pixel noise.
  std::vector<double> mean_intensity(config.num_classes());
  mean_intensity[0] = config.background_intensity;
  for (int organ = 1; organ < config.num_classes(); ++organ) {
    const OrganSpec& spec = config.organs[organ - 1];
    mean_intensity[organ] = rng.uniform(spec.intensity_min, spec.intensity_max);
  }

  out.image = Tensor({1, config.height, config.width});
  for (int r = 0; r < config.height; ++r) {
    for (int c = 0; c < config.width; ++c) {
      double v = mean_intensity[out.labels.at(r, c)];
      if (config.noise_std > 0.0) v += rng.normal(0.0, config.noise_std);
      out.image.at(0, r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

LabelMap corrupt_labels(const LabelMap& labels, double severity, std::uint64_t seed) {
  labels.validate();
  if (severity < 0.0 || severity > 1.0)
    throw InvalidArgumentError("corrupt_labels: severity must be in [0,1]");

  Rng rng(seed);
  LabelMap out = labels;
  for (int organ = 1; organ < labels.num_classes; ++organ) {
    // One draw per organ regardless of severity, so streams align across
    // severity levels for the same seed.
    const bool dilate = rng.coin();

    int area = 0;
    Grid<std::uint8_t> mask(labels.height(), labels.width(), 0);
    for (int r = 0; r < labels.height(); ++r)
      for (int c = 0; c < labels.width(); ++c)
        if (out.at(r, c) == organ) {
          mask.at(r, c) = 1;
          ++area;
        }
    if (area == 0) continue;

    const double equivalent_radius = std::sqrt(area / kPi);
    const int radius = static_cast<int>(std::lround(severity * equivalent_radius));
    if (radius == 0) continue;

    if (dilate) {
      for (int step = 0; step < radius; ++step) dilate_step(mask, out.labels);
      for (int r = 0; r < labels.height(); ++r)
        for (int c = 0; c < labels.width(); ++c)
          if (mask.at(r, c)) out.at(r, c) = organ;
    } else {
      for (int step = 0; step < radius; ++step) erode_step(mask);
      for (int r = 0; r < labels.height(); ++r)
        for (int c = 0; c < labels.width(); ++c)
          if (out.at(r, c) == organ && !mask.at(r, c)) out.at(r, c) = 0;
    }
  }
  return out;
}

}  // namespace shapetask
