#pragma once

#include <cstdint>

#include "shapetask/grid.hpp"

namespace shapetask {

/// Exact Euclidean distance transform of a binary mask (pixel-center metric).
/// Foreground pixels (nonzero) get the distance to the nearest background
/// pixel; background pixels map to 0. The grid is treated as surrounded by a
/// one-pixel virtual background ring, so border foreground is at distance 1.
Grid<double> edt(const Grid<std::uint8_t>& mask);

/// Normalized distance transform of one organ: edt of its binary mask divided
/// by the maximum over the organ support. Zero off-support; all-zero if the
/// organ is absent from the map.
DistanceMap organ_distance_map(const LabelMap& labels, int organ);

/// Pixelwise sum of organ_distance_map over all organ ids. Supports are
/// disjoint, so values stay in [0,1].
DistanceMap composite_distance_map(const LabelMap& labels);

/// Binary organ-boundary map: a pixel is contour iff its label is nonzero and
/// at least one 4-neighbor (or the virtual outside ring) carries a different
/// label.
ContourMap contour_map(const LabelMap& labels);

}  // namespace shapetask
