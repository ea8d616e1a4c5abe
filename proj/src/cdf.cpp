#include "fairhash/cdf.hpp"

#include <string>

#include "fairhash/core.hpp"
#include "fairhash/error.hpp"

namespace fairhash {

std::vector<Index> equi_depth_splits(const Ordering& ordering, int m) {
  const Index n = ordering.size();
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (n < m) {
    throw InvalidArgument("need at least m points: n=" + std::to_string(n) + ", m=" + std::to_string(m));
  }
  const auto& s = ordering.scores;
  const auto distinct_at = [&](Index p) { return s[static_cast<std::size_t>(p - 1)] < s[static_cast<std::size_t>(p)]; };

  const std::vector<Index> sizes = equi_depth_sizes(n, m);
  std::vector<Index> splits;
  splits.reserve(static_cast<std::size_t>(m - 1));
  Index edge = 0;
  Index prev = 0;
  for (int j = 0; j + 1 < m; ++j) {
    edge += sizes[static_cast<std::size_t>(j)];
    // Leave room for the buckets still to come.
    const Index last_allowed = n - (m - 1 - j) + 1;
    Index p = std::max(edge, prev + 1);
    while (p < last_allowed && !distinct_at(p)) ++p;
    if (p >= last_allowed || !distinct_at(p)) {
      p = std::min(edge, last_allowed - 1);
      while (p > prev && !distinct_at(p)) --p;
      if (p <= prev) throw PreconditionError("too many tied scores to form " + std::to_string(m) + " buckets");
    }
    splits.push_back(p);
    prev = p;
  }
  return splits;
}

HashmapModel build_cdf(const Dataset& dataset, const ProjectionVector& vector, int m) {
  if (vector.dim() != dataset.dim()) throw InvalidArgument("projection vector dimension mismatch");
  const Ordering ordering = project_ordering(dataset, vector);
  const std::vector<Index> splits = equi_depth_splits(ordering, m);
  return model_from_splits(ordering, splits, m, vector, "cdf");
}

}  // namespace fairhash
