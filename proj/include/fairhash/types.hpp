#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace fairhash {

using Index = std::int64_t;
using GroupId = int;
using BucketId = int;

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CountMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>;
using CountVector = Eigen::Matrix<Index, Eigen::Dynamic, 1>;

// A labeled point set. Row i of `points` is point i; `labels[i]` its group.
// Group ids are dense in [0, k); `group_sizes[g]` counts label g.
struct Dataset {
  PointMatrix points;
  std::vector<GroupId> labels;
  std::vector<Index> group_sizes;
  std::vector<std::string> group_names;

  Index size() const { return static_cast<Index>(labels.size()); }
  Index dim() const { return points.cols(); }
  int num_groups() const { return static_cast<int>(group_sizes.size()); }
  auto point(Index i) const { return points.row(i); }

  // Validates shape and finiteness, derives group_sizes. `num_groups` may
  // exceed the largest label + 1 (a group with no members in this sample).
  static Dataset make(PointMatrix points, std::vector<GroupId> labels,
                      std::vector<std::string> names = {}, int num_groups = 0);
};

struct AxisSource {
  Index axis = 0;
};
struct SampledSource {
  std::uint64_t seed = 0;
  Index index = 0;
};
struct EventSource {
  Index point_a = -1;
  Index point_b = -1;
};
struct ExplicitSource {};

using VectorSource = std::variant<AxisSource, SampledSource, EventSource, ExplicitSource>;

// Unit-norm projection direction w; f_w(p) = <p, w>.
class ProjectionVector {
 public:
  ProjectionVector() = default;
  explicit ProjectionVector(Eigen::VectorXd components, VectorSource source = ExplicitSource{});

  static ProjectionVector axis(Index dim, Index k = 0);
  static ProjectionVector from_angle(double theta, VectorSource source = ExplicitSource{});

  const Eigen::VectorXd& components() const { return w_; }
  const VectorSource& source() const { return source_; }
  Index dim() const { return w_.size(); }

  friend bool operator==(const ProjectionVector& a, const ProjectionVector& b) {
    return a.w_ == b.w_;
  }

 private:
  Eigen::VectorXd w_;
  VectorSource source_ = ExplicitSource{};
};

// Points sorted by projection score; ties by ascending dataset index.
struct Ordering {
  std::vector<Index> permutation;  // position -> dataset index
  std::vector<double> scores;      // score at each position

  Index size() const { return static_cast<Index>(permutation.size()); }
};

// Min-max scaling applied to raw feature rows before projection.
struct FeatureScaling {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& raw) const;
};

struct ModelInfo {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<std::string> warnings;
};

// A built fair hashmap. Bin i covers scores in (boundaries[i-1], boundaries[i]]
// and maps to bucket bin_buckets[i].
struct HashmapModel {
  ProjectionVector vector;
  std::vector<double> boundaries;
  std::vector<BucketId> bin_buckets;
  int m = 1;
  ModelInfo info;
  std::optional<FeatureScaling> scaling;

  Index boundary_count() const { return static_cast<Index>(boundaries.size()); }
  Index bin_count() const { return static_cast<Index>(bin_buckets.size()); }

  // Throws IntegrityError when an invariant is violated.
  void validate() const;
};

// alpha[i][j]: members of group i in bucket j.
struct BucketHistogram {
  CountMatrix counts;  // k x m
  CountVector bucket_totals;
  CountVector group_totals;
  Index n = 0;

  int m() const { return static_cast<int>(counts.cols()); }
  int k() const { return static_cast<int>(counts.rows()); }

  static BucketHistogram from_counts(CountMatrix counts);
};

struct MetricsReport {
  double collision_probability = 0.0;
  Eigen::VectorXd single_fairness;
  Eigen::VectorXd pairwise_fairness;
  double unfairness = 0.0;
  double memory_factor = 0.0;
  Index cut_count = 0;
};

}  // namespace fairhash
