#pragma once

#include <initializer_list>
#include <vector>

#include "fairhash/random.hpp"
#include "fairhash/types.hpp"

namespace testing {

using namespace fairhash;

inline Dataset line(std::initializer_list<double> xs, std::initializer_list<GroupId> labels, int k = 0) {
  PointMatrix p(static_cast<Index>(xs.size()), 1);
  Index i = 0;
  for (double x : xs) p(i++, 0) = x;
  return Dataset::make(std::move(p), std::vector<GroupId>(labels), {}, k);
}

inline Dataset plane(std::initializer_list<std::pair<double, double>> pts, std::initializer_list<GroupId> labels) {
  PointMatrix p(static_cast<Index>(pts.size()), 2);
  Index i = 0;
  for (auto [x, y] : pts) {
    p(i, 0) = x;
    p(i, 1) = y;
    ++i;
  }
  return Dataset::make(std::move(p), std::vector<GroupId>(labels));
}

// Six points 1..6 on a line, the first three in group 0.
inline Dataset six_points() { return line({1, 2, 3, 4, 5, 6}, {0, 0, 0, 1, 1, 1}); }

// Points on a line in the given group order, at x = 1, 2, ...
inline Dataset sequence(const std::vector<GroupId>& labels, int k = 0) {
  PointMatrix p(static_cast<Index>(labels.size()), 1);
  for (Index i = 0; i < p.rows(); ++i) p(i, 0) = static_cast<double>(i + 1);
  return Dataset::make(std::move(p), labels, {}, k);
}

inline Dataset random_plane(Rng& rng, Index n, int k) {
  PointMatrix p(n, 2);
  std::vector<GroupId> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    p(i, 0) = rng.uniform();
    p(i, 1) = rng.uniform();
    labels[static_cast<std::size_t>(i)] = static_cast<GroupId>(i < k ? i : static_cast<Index>(rng.below(static_cast<std::uint64_t>(k))));
  }
  return Dataset::make(std::move(p), std::move(labels), {}, k);
}

// Labels with exactly `per_group[g]` members of group g, shuffled.
inline std::vector<GroupId> shuffled_labels(Rng& rng, const std::vector<Index>& per_group) {
  std::vector<GroupId> labels;
  for (std::size_t g = 0; g < per_group.size(); ++g) labels.insert(labels.end(), static_cast<std::size_t>(per_group[g]), static_cast<GroupId>(g));
  rng.shuffle(std::span<GroupId>(labels));
  return labels;
}

inline HashmapModel manual_model(std::vector<double> boundaries, std::vector<BucketId> bins, int m, Index dim = 1) {
  HashmapModel model;
  model.vector = ProjectionVector::axis(dim, 0);
  model.boundaries = std::move(boundaries);
  model.bin_buckets = std::move(bins);
  model.m = m;
  model.validate();
  return model;
}

}  // namespace testing
