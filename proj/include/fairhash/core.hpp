#pragma once

#include <span>
#include <vector>

#include "fairhash/types.hpp"

namespace fairhash {

// <p, w> summed in coordinate order. Every score in the library goes through
// this function so build-time and query-time projections agree bitwise.
inline double project_point(const double* p, const double* w, Index d) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) s += p[k] * w[k];
  return s;
}

// Scores of every dataset row under `w`, in dataset order.
Eigen::VectorXd project_scores(const PointMatrix& points, const Eigen::VectorXd& w);

Ordering project_ordering(const Dataset& dataset, const ProjectionVector& vector);
Ordering project_ordering(const PointMatrix& points, const Eigen::VectorXd& w);

// Threshold strictly between two adjacent distinct scores: lo <= t < hi.
double split_value(double lo, double hi);

BucketId bin_of_score(std::span<const double> boundaries, double score);

BucketId query(const HashmapModel& model, std::span<const double> point);

template <typename Derived>
BucketId query(const HashmapModel& model, const Eigen::MatrixBase<Derived>& point) {
  const Eigen::VectorXd p = point.template cast<double>().reshaped();
  return query(model, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

// Same as `query`, but applies the model's feature scaling first.
BucketId query_raw(const HashmapModel& model, std::span<const double> raw_point);

BucketHistogram histogram(const Dataset& dataset, const HashmapModel& model);

MetricsReport compute_metrics(const BucketHistogram& hist, Index boundary_count);

// Per-group pairwise collision probability sum_j (alpha_ij / |g_i|)^2.
double pairwise_fairness(const CountMatrix& counts, int group, Index group_size);

// Bucket sizes for n points over m buckets; the first n mod m buckets get one extra.
std::vector<Index> equi_depth_sizes(Index n, int m);

// Group label at every ordering position.
std::vector<GroupId> labels_by_position(const Dataset& dataset, const Ordering& ordering);

// Builds a model from a position -> bucket assignment. Adjacent positions
// with equal bucket ids share a bin. A run of equal scores carrying several
// bucket ids is relabeled to its majority bucket so every cut falls between
// distinct scores; such relabels are reported in info.warnings.
HashmapModel model_from_positions(const Ordering& ordering, std::vector<BucketId> bucket_of_position,
                                  int m, const ProjectionVector& vector, std::string algorithm);

// Model with one contiguous bin per bucket; `splits` are the m-1 positions
// at which buckets 1..m-1 start.
HashmapModel model_from_splits(const Ordering& ordering, std::span<const Index> splits, int m,
                               const ProjectionVector& vector, std::string algorithm);

}  // namespace fairhash
