#include "fairhash/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fairhash/error.hpp"

namespace fairhash {

Eigen::VectorXd project_scores(const PointMatrix& points, const Eigen::VectorXd& w) {
  if (points.cols() != w.size()) {
    throw InvalidArgument("dimension mismatch: points have " + std::to_string(points.cols()) +
                          " coordinates, vector has " + std::to_string(w.size()));
  }
  const Index n = points.rows();
  const Index d = points.cols();
  Eigen::VectorXd scores(n);
  for (Index i = 0; i < n; ++i) scores[i] = project_point(points.row(i).data(), w.data(), d);
  return scores;
}

Ordering project_ordering(const PointMatrix& points, const Eigen::VectorXd& w) {
  const Eigen::VectorXd scores = project_scores(points, w);
  Ordering ord;
  ord.permutation.resize(static_cast<std::size_t>(scores.size()));
  std::iota(ord.permutation.begin(), ord.permutation.end(), Index{0});
  std::sort(ord.permutation.begin(), ord.permutation.end(), [&](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return a < b;
  });
  ord.scores.resize(ord.permutation.size());
  for (std::size_t p = 0; p < ord.permutation.size(); ++p) ord.scores[p] = scores[ord.permutation[p]];
  return ord;
}

Ordering project_ordering(const Dataset& dataset, const ProjectionVector& vector) {
  return project_ordering(dataset.points, vector.components());
}

double split_value(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

BucketId bin_of_score(std::span<const double> boundaries, double score) {
  return static_cast<BucketId>(std::lower_bound(boundaries.begin(), boundaries.end(), score) -
                               boundaries.begin());
}

BucketId query(const HashmapModel& model, std::span<const double> point) {
  const Index d = model.vector.dim();
  if (static_cast<Index>(point.size()) != d) {
    throw InvalidArgument("query point has " + std::to_string(point.size()) + " coordinates, model expects " +
                          std::to_string(d));
  }
  for (double x : point) {
    if (!std::isfinite(x)) throw InvalidArgument("query point has a non-finite coordinate");
  }
  const double score = project_point(point.data(), model.vector.components().data(), d);
  return model.bin_buckets[static_cast<std::size_t>(bin_of_score(model.boundaries, score))];
}

BucketId query_raw(const HashmapModel& model, std::span<const double> raw_point) {
  if (!model.scaling) return query(model, raw_point);
  const Eigen::Map<const Eigen::VectorXd> raw(raw_point.data(), static_cast<Index>(raw_point.size()));
  if (raw.size() != model.scaling->min.size()) throw InvalidArgument("query point dimension mismatch");
  const Eigen::VectorXd scaled = model.scaling->apply(raw);
  return query(model, std::span<const double>(scaled.data(), static_cast<std::size_t>(scaled.size())));
}

BucketHistogram histogram(const Dataset& dataset, const HashmapModel& model) {
  const Eigen::VectorXd scores = project_scores(dataset.points, model.vector.components());
  CountMatrix counts = CountMatrix::Zero(dataset.num_groups(), model.m);
  for (Index i = 0; i < dataset.size(); ++i) {
    const BucketId b = model.bin_buckets[static_cast<std::size_t>(bin_of_score(model.boundaries, scores[i]))];
    ++counts(dataset.labels[static_cast<std::size_t>(i)], b);
  }
  return BucketHistogram::from_counts(std::move(counts));
}

double pairwise_fairness(const CountMatrix& counts, int group, Index group_size) {
  // Integer sum of squares, one rounding at the end.
  const Index sq = counts.row(group).squaredNorm();
  return static_cast<double>(sq) / (static_cast<double>(group_size) * static_cast<double>(group_size));
}

MetricsReport compute_metrics(const BucketHistogram& hist, Index boundary_count) {
  const int k = hist.k();
  const int m = hist.m();
  if (m < 1 || hist.n <= 0) throw InvalidArgument("histogram must be non-empty");
  for (int i = 0; i < k; ++i) {
    if (hist.group_totals[i] == 0) throw InvalidArgument("group " + std::to_string(i) + " has no members");
  }
  const double n = static_cast<double>(hist.n);
  const Eigen::ArrayXd share = hist.bucket_totals.cast<double>().array() / n;

  MetricsReport r;
  r.collision_probability = share.square().sum();
  r.single_fairness.resize(k);
  r.pairwise_fairness.resize(k);
  for (int i = 0; i < k; ++i) {
    const Eigen::ArrayXd frac =
        hist.counts.row(i).cast<double>().transpose().array() / static_cast<double>(hist.group_totals[i]);
    r.single_fairness[i] = (frac * share).sum();
    r.pairwise_fairness[i] = frac.square().sum();
  }
  // m * Pr_i - 1 = (m * sum_j alpha_ij^2 - |g_i|^2) / |g_i|^2, exact in the
  // numerator so balanced histograms give exactly 0.
  r.unfairness = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    const Index s = hist.group_totals[i];
    const Index num = m * hist.counts.row(i).squaredNorm() - s * s;
    r.unfairness = std::max(r.unfairness, static_cast<double>(num) / (static_cast<double>(s) * static_cast<double>(s)));
  }
  if (m > 1) {
    r.memory_factor = static_cast<double>(boundary_count) / (m - 1);
  } else {
    r.memory_factor = boundary_count == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  r.cut_count = boundary_count;
  return r;
}

std::vector<Index> equi_depth_sizes(Index n, int m) {
  if (m < 1) throw InvalidArgument("m must be at least 1");
  std::vector<Index> sizes(static_cast<std::size_t>(m), n / m);
  for (Index j = 0; j < n % m; ++j) ++sizes[static_cast<std::size_t>(j)];
  return sizes;
}

std::vector<GroupId> labels_by_position(const Dataset& dataset, const Ordering& ordering) {
  std::vector<GroupId> out(ordering.permutation.size());
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p] = dataset.labels[static_cast<std::size_t>(ordering.permutation[p])];
  }
  return out;
}

HashmapModel model_from_positions(const Ordering& ordering, std::vector<BucketId> bucket_of_position, int m,
                                  const ProjectionVector& vector, std::string algorithm) {
  const std::size_t n = ordering.permutation.size();
  if (bucket_of_position.size() != n) throw InvalidArgument("bucket assignment length mismatch");
  HashmapModel model;
  model.vector = vector;
  model.m = m;
  model.info.algorithm = std::move(algorithm);

  Index relabeled = 0;
  for (std::size_t a = 0; a < n;) {
    std::size_t b = a + 1;
    while (b < n && ordering.scores[b] == ordering.scores[a]) ++b;
    if (b - a > 1) {
      std::vector<Index> tally(static_cast<std::size_t>(m), 0);
      for (std::size_t p = a; p < b; ++p) ++tally[static_cast<std::size_t>(bucket_of_position[p])];
      // Majority, ties toward the bucket seen first in the run.
      BucketId best = bucket_of_position[a];
      for (std::size_t p = a; p < b; ++p) {
        const BucketId c = bucket_of_position[p];
        if (tally[static_cast<std::size_t>(c)] > tally[static_cast<std::size_t>(best)]) best = c;
      }
      for (std::size_t p = a; p < b; ++p) {
        if (bucket_of_position[p] != best) {
          bucket_of_position[p] = best;
          ++relabeled;
        }
      }
    }
    a = b;
  }
  if (relabeled > 0) {
    model.info.warnings.push_back(std::to_string(relabeled) +
                                  " point(s) with tied scores moved to their run's majority bucket");
  }

  if (n > 0) model.bin_buckets.push_back(bucket_of_position[0]);
  for (std::size_t p = 0; p + 1 < n; ++p) {
    if (bucket_of_position[p] != bucket_of_position[p + 1]) {
      model.boundaries.push_back(split_value(ordering.scores[p], ordering.scores[p + 1]));
      model.bin_buckets.push_back(bucket_of_position[p + 1]);
    }
  }
  try {
    model.validate();
  } catch (const IntegrityError& e) {
    throw PreconditionError(std::string("cannot realize bucket assignment: ") + e.what());
  }
  return model;
}

HashmapModel model_from_splits(const Ordering& ordering, std::span<const Index> splits, int m,
                               const ProjectionVector& vector, std::string algorithm) {
  if (static_cast<Index>(splits.size()) != m - 1) throw InvalidArgument("need exactly m-1 split positions");
  HashmapModel model;
  model.vector = vector;
  model.m = m;
  model.info.algorithm = std::move(algorithm);
  model.bin_buckets.resize(static_cast<std::size_t>(m));
  std::iota(model.bin_buckets.begin(), model.bin_buckets.end(), 0);
  Index prev = 0;
  for (Index s : splits) {
    if (s <= prev || s >= ordering.size()) throw InvalidArgument("split positions must be increasing and inside (0, n)");
    const double lo = ordering.scores[static_cast<std::size_t>(s - 1)];
    const double hi = ordering.scores[static_cast<std::size_t>(s)];
    if (!(lo < hi)) throw PreconditionError("split at position " + std::to_string(s) + " separates equal scores");
    model.boundaries.push_back(split_value(lo, hi));
    prev = s;
  }
  return model;
}

}  // namespace fairhash
