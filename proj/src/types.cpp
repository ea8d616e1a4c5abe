#include "fairhash/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairhash/error.hpp"

namespace fairhash {

Dataset Dataset::make(PointMatrix points, std::vector<GroupId> labels, std::vector<std::string> names,
                      int num_groups) {
  if (labels.empty()) throw InvalidArgument("dataset must contain at least one point");
  if (points.rows() != static_cast<Index>(labels.size())) {
    throw InvalidArgument("point count " + std::to_string(points.rows()) + " != label count " +
                          std::to_string(labels.size()));
  }
  if (points.cols() < 1) throw InvalidArgument("points must have at least one coordinate");
  if (!points.allFinite()) throw InvalidArgument("all point coordinates must be finite");

  const GroupId max_label = *std::max_element(labels.begin(), labels.end());
  if (*std::min_element(labels.begin(), labels.end()) < 0) throw InvalidArgument("negative group id");
  const int k = std::max({num_groups, max_label + 1, static_cast<int>(names.size())});

  Dataset ds;
  ds.points = std::move(points);
  ds.labels = std::move(labels);
  ds.group_sizes.assign(static_cast<std::size_t>(k), 0);
  for (GroupId g : ds.labels) ++ds.group_sizes[static_cast<std::size_t>(g)];
  ds.group_names = std::move(names);
  ds.group_names.resize(static_cast<std::size_t>(k));
  for (int g = 0; g < k; ++g) {
    if (ds.group_names[static_cast<std::size_t>(g)].empty()) {
      ds.group_names[static_cast<std::size_t>(g)] = "g" + std::to_string(g);
    }
  }
  return ds;
}

ProjectionVector::ProjectionVector(Eigen::VectorXd components, VectorSource source)
    : w_(std::move(components)), source_(source) {
  if (w_.size() < 1) throw InvalidArgument("projection vector must be non-empty");
  if (!w_.allFinite()) throw InvalidArgument("projection vector must be finite");
  const double norm = w_.norm();
  if (norm == 0.0) throw InvalidArgument("projection vector must be non-zero");
  if (std::abs(norm - 1.0) > 1e-12) w_ /= norm;
}

ProjectionVector ProjectionVector::axis(Index dim, Index k) {
  if (k < 0 || k >= dim) throw InvalidArgument("axis index out of range");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  w[k] = 1.0;
  return ProjectionVector(std::move(w), AxisSource{k});
}

ProjectionVector ProjectionVector::from_angle(double theta, VectorSource source) {
  Eigen::VectorXd w(2);
  w << std::cos(theta), std::sin(theta);
  return ProjectionVector(std::move(w), source);
}

Eigen::VectorXd FeatureScaling::apply(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
  Eigen::VectorXd out(raw.size());
  for (Index k = 0; k < raw.size(); ++k) {
    const double range = max[k] - min[k];
    out[k] = range > 0.0 ? (raw[k] - min[k]) / range : 0.0;
  }
  return out;
}

void HashmapModel::validate() const {
  if (m < 1) throw IntegrityError("bucket count must be positive");
  if (bin_buckets.size() != boundaries.size() + 1) {
    throw IntegrityError("bin_buckets must have exactly one more entry than boundaries");
  }
  for (std::size_t i = 1; i < boundaries.size(); ++i) {
    if (!(boundaries[i - 1] < boundaries[i])) throw IntegrityError("boundaries must be strictly increasing");
  }
  for (double b : boundaries) {
    if (!std::isfinite(b)) throw IntegrityError("boundaries must be finite");
  }
  std::vector<bool> seen(static_cast<std::size_t>(m), false);
  for (BucketId b : bin_buckets) {
    if (b < 0 || b >= m) throw IntegrityError("bucket id out of range");
    seen[static_cast<std::size_t>(b)] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw IntegrityError("every bucket must own at least one bin");
  }
  if (scaling && (scaling->min.size() != vector.dim() || scaling->max.size() != vector.dim())) {
    throw IntegrityError("feature scaling dimension mismatch");
  }
}

BucketHistogram BucketHistogram::from_counts(CountMatrix counts) {
  if ((counts.array() < 0).any()) throw InvalidArgument("histogram counts must be non-negative");
  BucketHistogram h;
  h.bucket_totals = counts.colwise().sum().transpose();
  h.group_totals = counts.rowwise().sum();
  h.n = counts.sum();
  h.counts = std::move(counts);
  return h;
}

}  // namespace fairhash
