#include "fairhash/cut.hpp"

#include <set>
#include <stdexcept>
#include <string>

#include "fairhash/core.hpp"
#include "fairhash/error.hpp"

namespace fairhash {

std::vector<Index> cut_positions_of(std::span<const BucketId> bucket_of_position) {
  std::vector<Index> cuts;
  for (std::size_t p = 0; p + 1 < bucket_of_position.size(); ++p) {
    if (bucket_of_position[p] != bucket_of_position[p + 1]) cuts.push_back(static_cast<Index>(p));
  }
  return cuts;
}

std::vector<BucketId> sweep_and_cut_assignment(std::span<const GroupId> labels, std::span<const Index> group_sizes,
                                               int m) {
  if (m < 1) throw InvalidArgument("m must be at least 1");
  std::vector<Index> seen(group_sizes.size(), 0);
  std::vector<BucketId> bucket(labels.size());
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const auto g = static_cast<std::size_t>(labels[p]);
    // The c-th member (1-based) of group g goes to floor((c-1) m / |g|).
    bucket[p] = static_cast<BucketId>((seen[g]++ * m) / group_sizes[g]);
  }
  return bucket;
}

std::vector<BucketId> necklace_2g_assignment(std::span<const GroupId> labels, std::span<const Index> group_sizes,
                                             int m) {
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (group_sizes.size() != 2) {
    throw UnsupportedGroupCount("necklace_2g handles exactly two groups, got " + std::to_string(group_sizes.size()) +
                                "; use sweep_cut for k > 2");
  }
  const Index n = static_cast<Index>(labels.size());
  if (n % m != 0 || group_sizes[0] % m != 0) {
    throw InvalidArgument("necklace_2g needs m to divide n and both group sizes (n=" + std::to_string(n) +
                          ", |g1|=" + std::to_string(group_sizes[0]) + ", m=" + std::to_string(m) +
                          "); use sweep_cut instead");
  }
  const Index window = n / m;
  const Index target = group_sizes[0] / m;
  std::vector<BucketId> bucket(static_cast<std::size_t>(n), -1);
  if (m == 1) {
    std::fill(bucket.begin(), bucket.end(), 0);
    return bucket;
  }

  const auto is_g1 = [&](Index p) -> Index { return labels[static_cast<std::size_t>(p)] == 0 ? 1 : 0; };
  std::vector<Index> next(static_cast<std::size_t>(n));
  std::vector<Index> prev(static_cast<std::size_t>(n));
  for (Index p = 0; p < n; ++p) {
    next[static_cast<std::size_t>(p)] = (p + 1) % n;
    prev[static_cast<std::size_t>(p)] = (p + n - 1) % n;
  }
  const auto nx = [&](Index p) { return next[static_cast<std::size_t>(p)]; };
  const auto pv = [&](Index p) { return prev[static_cast<std::size_t>(p)]; };

  // count[p]: group-1 members in the circular window of `window` alive
  // positions starting at p. `good` holds starts whose count hits the target.
  std::vector<Index> count(static_cast<std::size_t>(n), 0);
  std::set<Index> good;
  const auto set_count = [&](Index p, Index c) {
    count[static_cast<std::size_t>(p)] = c;
    if (c == target) {
      good.insert(p);
    } else {
      good.erase(p);
    }
  };
  // Recomputes counts for `len` consecutive starts beginning at `start`.
  const auto refresh = [&](Index start, Index len) {
    Index c = 0;
    Index end = start;
    for (Index t = 0; t < window; ++t) {
      c += is_g1(end);
      if (t + 1 < window) end = nx(end);
    }
    Index s = start;
    for (Index t = 0; t < len; ++t) {
      set_count(s, c);
      c -= is_g1(s);
      end = nx(end);
      c += is_g1(end);
      s = nx(s);
    }
  };
  refresh(0, n);

  Index alive = n;
  for (BucketId b = 0; b < m; ++b) {
    if (alive == window) {
      for (Index p = 0; p < n; ++p) {
        if (bucket[static_cast<std::size_t>(p)] < 0) bucket[static_cast<std::size_t>(p)] = b;
      }
      break;
    }
    if (good.empty()) throw std::logic_error("no balanced window left; group sizes inconsistent with labels");
    const Index j = *good.begin();
    Index last = j;
    Index members = 0;
    for (Index t = 0; t < window; ++t) {
      if (t > 0) last = nx(last);
      bucket[static_cast<std::size_t>(last)] = b;
      members += is_g1(last);
      good.erase(last);
    }
    if (members != target) throw std::logic_error("extracted window violates the balance invariant");

    const Index before = pv(j);
    const Index after = nx(last);
    next[static_cast<std::size_t>(before)] = after;
    prev[static_cast<std::size_t>(after)] = before;
    alive -= window;

    // Only the window - 1 starts preceding the gap saw their windows change.
    Index first = before;
    for (Index t = 1; t < window - 1; ++t) first = pv(first);
    refresh(first, window - 1);
  }
  return bucket;
}

namespace {

CutPlan make_plan(Ordering ordering, std::vector<BucketId> buckets) {
  CutPlan plan;
  plan.cut_positions = cut_positions_of(buckets);
  plan.bucket_of_position = std::move(buckets);
  plan.ordering = std::move(ordering);
  return plan;
}

void require_matching_dim(const Dataset& dataset, const ProjectionVector& vector) {
  if (vector.dim() != dataset.dim()) throw InvalidArgument("projection vector dimension mismatch");
}

}  // namespace

CutPlan plan_sweep_and_cut(const Dataset& dataset, const ProjectionVector& vector, int m) {
  require_matching_dim(dataset, vector);
  if (m < 1) throw InvalidArgument("m must be at least 1");
  Ordering ordering = project_ordering(dataset, vector);
  const auto labels = labels_by_position(dataset, ordering);
  return make_plan(std::move(ordering), sweep_and_cut_assignment(labels, dataset.group_sizes, m));
}

CutPlan plan_necklace_2g(const Dataset& dataset, const ProjectionVector& vector, int m) {
  require_matching_dim(dataset, vector);
  if (dataset.num_groups() != 2) {
    throw UnsupportedGroupCount("necklace_2g handles exactly two groups, got " + std::to_string(dataset.num_groups()) +
                                "; use sweep_cut for k > 2");
  }
  Ordering ordering = project_ordering(dataset, vector);
  const auto labels = labels_by_position(dataset, ordering);
  return make_plan(std::move(ordering), necklace_2g_assignment(labels, dataset.group_sizes, m));
}

HashmapModel sweep_and_cut(const Dataset& dataset, const ProjectionVector& vector, int m) {
  CutPlan plan = plan_sweep_and_cut(dataset, vector, m);
  std::vector<std::string> warnings;
  for (int g = 0; g < dataset.num_groups(); ++g) {
    const Index size = dataset.group_sizes[static_cast<std::size_t>(g)];
    if (size < m) {
      warnings.push_back("group " + dataset.group_names[static_cast<std::size_t>(g)] + " has " +
                         std::to_string(size) + " < m members; some buckets receive none of it");
    }
  }
  HashmapModel model =
      model_from_positions(plan.ordering, std::move(plan.bucket_of_position), m, vector, "sweep_cut");
  model.info.warnings.insert(model.info.warnings.begin(), warnings.begin(), warnings.end());
  return model;
}

HashmapModel necklace_2g(const Dataset& dataset, const ProjectionVector& vector, int m) {
  CutPlan plan = plan_necklace_2g(dataset, vector, m);
  return model_from_positions(plan.ordering, std::move(plan.bucket_of_position), m, vector, "necklace_2g");
}

double expected_bins_bound(Index n, Index r, int m) {
  if (n <= 0 || r < 0 || r > n) throw InvalidArgument("need 0 <= r <= n and n > 0");
  const double nn = static_cast<double>(n);
  const double rr = static_cast<double>(r);
  return 2.0 * (rr * (nn - rr) / nn + m);
}

}  // namespace fairhash
