#include "shapetask/shape_targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace shapetask {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance transform (lower envelope of parabolas).
// f[i] is the source cost at cell i; writes min_j (i-j)^2 + f[j] into out.
void dt1d(const std::vector<double>& f, std::vector<double>& out,
          std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  v.resize(n);
  z.resize(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) /
               (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double d = double(q) - v[k];
    out[q] = d * d + f[v[k]];
  }
}

}  // namespace

Grid<double> edt(const Grid<std::uint8_t>& mask) {
  if (mask.empty()) throw InvalidArgumentError("edt: empty mask");

  // Pad with a background ring so border foreground stays finite.
  const int ph = mask.height() + 2;
  const int pw = mask.width() + 2;
  Grid<double> sq(ph, pw, 0.0);
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c)
      sq.at(r + 1, c + 1) = mask.at(r, c) ? kInf : 0.0;

  std::vector<double> f(std::max(ph, pw)), d(std::max(ph, pw));
  std::vector<int> v;
  std::vector<double> z;

  // Columns, then rows; squared distances stay exact integers in doubles.
  for (int c = 0; c < pw; ++c) {
    f.resize(ph);
    d.resize(ph);
    for (int r = 0; r < ph; ++r) f[r] = sq.at(r, c);
    dt1d(f, d, v, z);
    for (int r = 0; r < ph; ++r) sq.at(r, c) = d[r];
  }
  for (int r = 0; r < ph; ++r) {
    f.resize(pw);
    d.resize(pw);
    for (int c = 0; c < pw; ++c) f[c] = sq.at(r, c);
    dt1d(f, d, v, z);
    for (int c = 0; c < pw; ++c) sq.at(r, c) = d[c];
  }

  Grid<double> out(mask.height(), mask.width(), 0.0);
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c)
      out.at(r, c) = mask.at(r, c) ? std::sqrt(sq.at(r + 1, c + 1)) : 0.0;
  return out;
}

DistanceMap organ_distance_map(const LabelMap& labels, int organ) {
  labels.validate();
  if (organ <= 0 || organ >= labels.num_classes)
    throw InvalidArgumentError("organ_distance_map: organ id outside [1, num_classes)");

  Grid<std::uint8_t> mask(labels.height(), labels.width(), 0);
  bool present = false;
  for (int r = 0; r < labels.height(); ++r)
    for (int c = 0; c < labels.width(); ++c)
      if (labels.at(r, c) == organ) {
        mask.at(r, c) = 1;
        present = true;
      }

  DistanceMap out(labels.height(), labels.width(), 0.0);
  if (!present) return out;

  Grid<double> dist = edt(mask);
  double max_dist = 0.0;
  for (double d : dist.data()) max_dist = std::max(max_dist, d);
  for (int r = 0; r < labels.height(); ++r)
    for (int c = 0; c < labels.width(); ++c)
      if (mask.at(r, c)) out.at(r, c) = dist.at(r, c) / max_dist;
  return out;
}

DistanceMap composite_distance_map(const LabelMap& labels) {
  labels.validate();
  DistanceMap out(labels.height(), labels.width(), 0.0);
  for (int organ = 1; organ < labels.num_classes; ++organ) {
    DistanceMap part = organ_distance_map(labels, organ);
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] += part.data()[i];
  }
  return out;
}

ContourMap contour_map(const LabelMap& labels) {
  labels.validate();
  const int h = labels.height(), w = labels.width();
  ContourMap out(h, w, 0);
  static constexpr int dr[4] = {-1, 1, 0, 0};
  static constexpr int dc[4] = {0, 0, -1, 1};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int lab = labels.at(r, c);
      if (lab == 0) continue;
      for (int k = 0; k < 4; ++k) {
        const int nr = r + dr[k], nc = c + dc[k];
        // The virtual outside ring never matches an organ label.
        const bool differs = !labels.labels.in_bounds(nr, nc) || labels.at(nr, nc) != lab;
        if (differs) {
          out.at(r, c) = 1;
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace shapetask
