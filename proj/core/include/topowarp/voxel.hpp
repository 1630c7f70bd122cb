#pragma once

#include "topowarp/point_cloud.hpp"

namespace topowarp {

// Uniform grid downsampling: every occupied cell of side `bin_size` is
// replaced by the centroid of the points that fall in it (cell membership
// by floor(p / bin_size)). Output is ordered by cell key, and per-cell
// sums are accumulated in a sorted order, so the result is bit-identical
// under any permutation of the input.
// Throws std::invalid_argument on empty input or bin_size <= 0.
std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& points, double bin_size);

}  // namespace topowarp
