#include "fairhash/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <thread>

#include "fairhash/core.hpp"
#include "fairhash/error.hpp"
#include "fairhash/indexed_heap.hpp"
#include "fairhash/random.hpp"
#include "fairhash/ranking.hpp"

namespace fairhash {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTol = 1e-12;

double deviation(Index count, Index total, int m) {
  if (total == 0) return 0.0;
  return std::abs(static_cast<double>(count) * m / static_cast<double>(total) - 1.0);
}

BucketHistogram counts_for_splits(std::span<const GroupId> labels, std::span<const Index> splits, int k, int m) {
  CountMatrix counts = CountMatrix::Zero(k, m);
  int bucket = 0;
  for (std::size_t p = 0; p < labels.size(); ++p) {
    while (bucket < m - 1 && static_cast<Index>(p) >= splits[static_cast<std::size_t>(bucket)]) ++bucket;
    ++counts(labels[p], bucket);
  }
  return BucketHistogram::from_counts(std::move(counts));
}

}  // namespace

void LocalSearchConfig::validate(int m) const {
  if (max_iterations < 0) throw InvalidArgument("max_iterations must be non-negative");
  if (!(0.0 <= single_fairness_min && single_fairness_min <= single_fairness_max && single_fairness_max <= 1.0)) {
    throw InvalidArgument("need 0 <= f- <= f+ <= 1");
  }
  if (!(1.0 / m - kTol <= collision_max && collision_max <= 1.0)) throw InvalidArgument("need 1/m <= c+ <= 1");
}

double bucket_discrepancy(std::span<const Index> counts, std::span<const Index> group_totals, int m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) worst = std::max(worst, deviation(counts[i], group_totals[i], m));
  return worst;
}

double histogram_discrepancy(const BucketHistogram& hist) {
  double worst = 0.0;
  for (int i = 0; i < hist.k(); ++i) {
    for (int j = 0; j < hist.m(); ++j) {
      worst = std::max(worst, deviation(hist.counts(i, j), hist.group_totals[i], hist.m()));
    }
  }
  return worst;
}

DiscrepancyPartition dp_min_discrepancy(const Ordering& ordering, std::span<const GroupId> labels,
                                        std::span<const Index> group_totals, int m) {
  const Index n = static_cast<Index>(labels.size());
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (n < m) throw InvalidArgument("need n >= m for a partition into non-empty buckets");
  if (ordering.size() != n) throw InvalidArgument("ordering and labels differ in length");
  const int k = static_cast<int>(group_totals.size());
  const bool check_ties = !ordering.scores.empty();
  const auto allowed = [&](Index x) {
    return x == 0 || !check_ties ||
           ordering.scores[static_cast<std::size_t>(x - 1)] < ordering.scores[static_cast<std::size_t>(x)];
  };

  const std::size_t width = static_cast<std::size_t>(n + 1);
  const auto at = [width](int j, Index i) { return static_cast<std::size_t>(j) * width + static_cast<std::size_t>(i); };
  std::vector<double> disc(static_cast<std::size_t>(m + 1) * width, kInf);
  std::vector<double> spread(disc.size(), kInf);
  std::vector<Index> arg(disc.size(), -1);
  disc[at(0, 0)] = 0.0;
  spread[at(0, 0)] = 0.0;
  const double ideal = static_cast<double>(n) / m;

  std::vector<double> empty_dev(static_cast<std::size_t>(k));
  for (int g = 0; g < k; ++g) empty_dev[static_cast<std::size_t>(g)] = group_totals[static_cast<std::size_t>(g)] > 0 ? 1.0 : 0.0;
  std::vector<Index> count(static_cast<std::size_t>(k));

  for (Index i = 1; i <= n; ++i) {
    // Window [x, i-1] grows leftward; the heap tracks per-group deviation.
    IndexedMaxHeap<double> heap(empty_dev);
    std::fill(count.begin(), count.end(), 0);
    for (Index x = i - 1; x >= 0; --x) {
      const auto g = static_cast<std::size_t>(labels[static_cast<std::size_t>(x)]);
      ++count[g];
      heap.update(g, deviation(count[g], group_totals[g], m));
      if (!allowed(x)) continue;
      const double window = heap.top_priority();
      const double dev = std::abs(static_cast<double>(i - x) - ideal);
      const int jmax = static_cast<int>(std::min<Index>(m, x + 1));
      for (int j = 1; j <= jmax; ++j) {
        const double prev = disc[at(j - 1, x)];
        if (prev == kInf) continue;
        const double v = std::max(prev, window);
        const double s = spread[at(j - 1, x)] + dev;
        double& cur = disc[at(j, i)];
        if (v < cur - kTol || (std::abs(v - cur) <= kTol && s < spread[at(j, i)] - kTol)) {
          cur = v;
          spread[at(j, i)] = s;
          arg[at(j, i)] = x;
        }
      }
    }
  }
  if (disc[at(m, n)] == kInf) {
    throw PreconditionError("tied scores leave no partition into " + std::to_string(m) + " buckets");
  }

  DiscrepancyPartition out;
  out.ordering = ordering;
  out.split_positions.assign(static_cast<std::size_t>(m - 1), 0);
  Index i = n;
  for (int j = m; j >= 1; --j) {
    const Index x = arg[at(j, i)];
    if (j > 1) out.split_positions[static_cast<std::size_t>(j - 2)] = x;
    i = x;
  }
  out.per_bucket_counts = counts_for_splits(labels, out.split_positions, k, m);
  out.discrepancy = histogram_discrepancy(out.per_bucket_counts);
  return out;
}

namespace {

DiscrepancyPartition partition_along(const Dataset& dataset, const ProjectionVector& vector, int m) {
  const Ordering ordering = project_ordering(dataset, vector);
  const auto labels = labels_by_position(dataset, ordering);
  return dp_min_discrepancy(ordering, labels, dataset.group_sizes, m);
}

DiscrepancySearchResult finish_search(const Dataset& dataset, const ProjectionVector& best, int m, Index examined,
                                      std::string algorithm) {
  DiscrepancySearchResult result;
  result.vector = best;
  result.partition = partition_along(dataset, best, m);
  result.model = model_from_splits(result.partition.ordering, result.partition.split_positions, m, best,
                                   std::move(algorithm));
  result.vectors_examined = examined;
  return result;
}

}  // namespace

DiscrepancySearchResult exact_discrepancy_search(const Dataset& dataset, int m, DiscrepancySearchMode mode,
                                                 int jobs) {
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (dataset.size() < m) throw InvalidArgument("need n >= m");

  if (const auto* sampled = std::get_if<SampledVectors>(&mode)) {
    const auto vectors = sample_directions(dataset.dim(), sampled->num_vectors, sampled->seed);
    std::vector<double> disc(vectors.size(), kInf);
    const auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t s = begin; s < vectors.size(); s += stride) {
        try {
          disc[s] = partition_along(dataset, vectors[s], m).discrepancy;
        } catch (const PreconditionError&) {
          disc[s] = kInf;
        }
      }
    };
    const std::size_t workers = static_cast<std::size_t>(std::clamp<Index>(jobs, 1, sampled->num_vectors));
    if (workers == 1) {
      work(0, 1);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
    }
    const auto best = static_cast<std::size_t>(std::min_element(disc.begin(), disc.end()) - disc.begin());
    if (disc[best] == kInf) throw PreconditionError("no sampled direction admits a partition");
    auto result = finish_search(dataset, vectors[best], m, sampled->num_vectors, "dp_discrepancy");
    result.model.info.seed = sampled->seed;
    return result;
  }

  if (dataset.dim() != 2) {
    throw UnsupportedDimension("exact arrangement search needs d == 2; use sampled vectors for d = " +
                               std::to_string(dataset.dim()));
  }
  OrderingSweep sweep(dataset.points);
  double best = kInf;
  ProjectionVector best_vector = sweep.cell_vector();
  Index examined = 0;
  Ordering ordering;
  std::vector<GroupId> labels(static_cast<std::size_t>(dataset.size()));
  const auto evaluate = [&] {
    ++examined;
    const ProjectionVector v = sweep.cell_vector();
    const auto& perm = sweep.permutation();
    ordering.permutation = perm;
    ordering.scores.resize(perm.size());
    for (std::size_t p = 0; p < perm.size(); ++p) {
      ordering.scores[p] = project_point(dataset.points.row(perm[p]).data(), v.components().data(), 2);
      labels[p] = dataset.labels[static_cast<std::size_t>(perm[p])];
    }
    double d;
    try {
      d = dp_min_discrepancy(ordering, labels, dataset.group_sizes, m).discrepancy;
    } catch (const PreconditionError&) {
      return;
    }
    if (d < best - kTol) {
      best = d;
      best_vector = v;
    }
  };
  evaluate();
  OrderingSweep::Step step;
  while (sweep.advance(step)) evaluate();
  if (best == kInf) throw PreconditionError("no direction admits a partition");
  return finish_search(dataset, best_vector, m, examined, "dp_discrepancy");
}

std::vector<double> discrepancy_grid(Index n, double delta, int m) {
  if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
  std::vector<double> grid{0.0};
  const double top = std::max(1.0, static_cast<double>(m - 1));
  for (double v = 1.0 / static_cast<double>(n); v < 1.0; v *= 1.0 + delta) grid.push_back(v);
  grid.push_back(1.0);
  for (double v = 1.0 + delta; v < top; v *= 1.0 + delta) grid.push_back(v);
  if (grid.back() < top) grid.push_back(top);
  return grid;
}

namespace {

// Contiguous partition of a sample ordering whose every bucket keeps each
// group's count inside [lo_i, hi_i].
class BandFeasibility {
 public:
  BandFeasibility(int k, int m) : k_(k), m_(m) {}

  void set_band(std::span<const Index> sample_sizes, double level) {
    lo_.assign(static_cast<std::size_t>(k_), 0);
    hi_.assign(static_cast<std::size_t>(k_), 0);
    for (int g = 0; g < k_; ++g) {
      const double quota = static_cast<double>(sample_sizes[static_cast<std::size_t>(g)]) / m_;
      lo_[static_cast<std::size_t>(g)] = std::max<Index>(0, static_cast<Index>(std::ceil((1.0 - level) * quota - 1e-9)));
      hi_[static_cast<std::size_t>(g)] = static_cast<Index>(std::floor((1.0 + level) * quota + 1e-9));
    }
  }

  // `labels[p]` is the group at position p; `can_split[p]` says whether a
  // bucket may start at p. Returns the m-1 split positions on success.
  std::optional<std::vector<Index>> solve(std::span<const GroupId> labels, std::span<const char> can_split) {
    const Index n = static_cast<Index>(labels.size());
    if (n < m_) return std::nullopt;
    const std::size_t w = static_cast<std::size_t>(n + 1);
    prefix_.assign(static_cast<std::size_t>(k_) * w, 0);
    for (Index p = 0; p < n; ++p) {
      for (int g = 0; g < k_; ++g) {
        prefix_[static_cast<std::size_t>(g) * w + static_cast<std::size_t>(p + 1)] =
            prefix_[static_cast<std::size_t>(g) * w + static_cast<std::size_t>(p)] + (labels[static_cast<std::size_t>(p)] == g);
      }
    }
    // Valid previous-prefix lengths t for a bucket ending at i form [tlo, thi].
    tlo_.assign(w, 0);
    thi_.assign(w, -1);
    std::vector<Index> a(static_cast<std::size_t>(k_), 0);
    std::vector<Index> b(static_cast<std::size_t>(k_), -1);
    for (Index i = 1; i <= n; ++i) {
      Index lo = 0;
      Index hi = i - 1;
      for (int g = 0; g < k_; ++g) {
        const Index* P = prefix_.data() + static_cast<std::size_t>(g) * w;
        auto& ag = a[static_cast<std::size_t>(g)];
        auto& bg = b[static_cast<std::size_t>(g)];
        while (ag < i && P[ag] < P[i] - hi_[static_cast<std::size_t>(g)]) ++ag;
        while (bg + 1 <= i && P[bg + 1] <= P[i] - lo_[static_cast<std::size_t>(g)]) ++bg;
        lo = std::max(lo, ag);
        hi = std::min(hi, bg);
      }
      tlo_[static_cast<std::size_t>(i)] = lo;
      thi_[static_cast<std::size_t>(i)] = hi;
    }
    reach_.assign(static_cast<std::size_t>(m_ + 1) * w, 0);
    reach_[0] = 1;
    std::vector<Index> sums(w + 1);
    for (int j = 1; j <= m_; ++j) {
      const char* prev = reach_.data() + static_cast<std::size_t>(j - 1) * w;
      char* cur = reach_.data() + static_cast<std::size_t>(j) * w;
      sums[0] = 0;
      for (std::size_t t = 0; t < w; ++t) {
        const bool ok = prev[t] && (t == 0 || can_split[t]);
        sums[t + 1] = sums[t] + (ok ? 1 : 0);
      }
      for (Index i = 1; i <= n; ++i) {
        const Index lo = tlo_[static_cast<std::size_t>(i)];
        const Index hi = thi_[static_cast<std::size_t>(i)];
        cur[i] = lo <= hi && sums[static_cast<std::size_t>(hi + 1)] > sums[static_cast<std::size_t>(lo)];
      }
    }
    if (!reach_[static_cast<std::size_t>(m_) * w + static_cast<std::size_t>(n)]) return std::nullopt;

    std::vector<Index> splits(static_cast<std::size_t>(m_ - 1));
    Index i = n;
    for (int j = m_; j >= 1; --j) {
      const char* prev = reach_.data() + static_cast<std::size_t>(j - 1) * w;
      Index found = -1;
      for (Index t = thi_[static_cast<std::size_t>(i)]; t >= tlo_[static_cast<std::size_t>(i)]; --t) {
        if (prev[t] && (t == 0 || can_split[static_cast<std::size_t>(t)])) {
          found = t;
          break;
        }
      }
      if (j > 1) splits[static_cast<std::size_t>(j - 2)] = found;
      i = found;
    }
    return splits;
  }

 private:
  int k_;
  int m_;
  std::vector<Index> lo_;
  std::vector<Index> hi_;
  std::vector<Index> prefix_;
  std::vector<Index> tlo_;
  std::vector<Index> thi_;
  std::vector<char> reach_;
};

struct Sample {
  PointMatrix points;
  std::vector<GroupId> labels;
  std::vector<Index> coord_class;  // equal for identical coordinates
  std::vector<Index> sizes;
};

struct Candidate {
  ProjectionVector vector;
  std::vector<double> boundaries;
};

}  // namespace

RandomizedResult randomized_discrepancy(const Dataset& dataset, int m, const RandomizedOptions& options) {
  if (!(options.gamma > 0.0 && options.gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (!(options.delta > 0.0 && options.delta < 1.0 + 1e-12)) throw InvalidArgument("delta must lie in (0, 1]");
  if (!(options.sample_constant > 0.0)) throw InvalidArgument("sample constant must be positive");
  if (m < 1) throw InvalidArgument("m must be at least 1");
  const Index n = dataset.size();
  if (n < m) throw InvalidArgument("need n >= m");
  const int k = dataset.num_groups();
  const Index d = dataset.dim();

  RandomizedResult result;
  Rng rng(options.seed);

  // Per-group samples with replacement; groups smaller than the requested
  // size are taken whole.
  const double want = std::ceil(options.sample_constant * (m / options.gamma) * (m / options.gamma) *
                                std::log(static_cast<double>(std::max<Index>(n, 2))));
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(k));
  for (Index i = 0; i < n; ++i) members[static_cast<std::size_t>(dataset.labels[static_cast<std::size_t>(i)])].push_back(i);
  std::vector<Index> chosen;
  Sample sample;
  sample.sizes.assign(static_cast<std::size_t>(k), 0);
  for (int g = 0; g < k; ++g) {
    const auto& mem = members[static_cast<std::size_t>(g)];
    if (mem.empty()) continue;
    if (want >= static_cast<double>(mem.size())) {
      result.clamped = true;
      chosen.insert(chosen.end(), mem.begin(), mem.end());
      sample.sizes[static_cast<std::size_t>(g)] = static_cast<Index>(mem.size());
    } else {
      const auto s = static_cast<Index>(want);
      for (Index t = 0; t < s; ++t) chosen.push_back(mem[static_cast<std::size_t>(rng.below(mem.size()))]);
      sample.sizes[static_cast<std::size_t>(g)] = s;
    }
  }
  result.sample_sizes = sample.sizes;
  if (result.clamped) result.notes.push_back("sample size clamped to full group for at least one group");

  const Index ns = static_cast<Index>(chosen.size());
  sample.points.resize(ns, d);
  sample.labels.resize(static_cast<std::size_t>(ns));
  for (Index t = 0; t < ns; ++t) {
    sample.points.row(t) = dataset.points.row(chosen[static_cast<std::size_t>(t)]);
    sample.labels[static_cast<std::size_t>(t)] = dataset.labels[static_cast<std::size_t>(chosen[static_cast<std::size_t>(t)])];
  }
  {
    std::map<std::vector<double>, Index> classes;
    sample.coord_class.resize(static_cast<std::size_t>(ns));
    for (Index t = 0; t < ns; ++t) {
      std::vector<double> key(sample.points.row(t).data(), sample.points.row(t).data() + d);
      const auto [it, inserted] = classes.emplace(std::move(key), static_cast<Index>(classes.size()));
      sample.coord_class[static_cast<std::size_t>(t)] = it->second;
    }
  }

  const auto finish = [&](const ProjectionVector& v, const std::vector<double>& boundaries, double level) {
    const Ordering ordering = project_ordering(dataset, v);
    std::vector<Index> splits;
    for (double b : boundaries) {
      splits.push_back(static_cast<Index>(std::upper_bound(ordering.scores.begin(), ordering.scores.end(), b) -
                                          ordering.scores.begin()));
    }
    const auto labels = labels_by_position(dataset, ordering);
    result.vector = v;
    result.partition.ordering = ordering;
    result.partition.split_positions = splits;
    result.partition.per_bucket_counts = counts_for_splits(labels, splits, k, m);
    result.partition.discrepancy = histogram_discrepancy(result.partition.per_bucket_counts);
    result.model = model_from_splits(ordering, splits, m, v, "randomized_discrepancy");
    result.model.info.seed = options.seed;
    result.grid_value = level;
  };

  if (m == 1) {
    finish(ProjectionVector::axis(d, 0), {}, 0.0);
    return result;
  }

  BandFeasibility solver(k, m);
  std::vector<GroupId> pos_labels(static_cast<std::size_t>(ns));
  std::vector<char> can_split(static_cast<std::size_t>(ns + 1), 1);

  // Checks one ordering of the sample; fills `out` on success.
  const auto try_order = [&](const std::vector<Index>& perm, const ProjectionVector& v,
                             std::optional<Candidate>& out) -> bool {
    for (std::size_t p = 0; p < perm.size(); ++p) {
      pos_labels[p] = sample.labels[static_cast<std::size_t>(perm[p])];
      can_split[p] = p == 0 || sample.coord_class[static_cast<std::size_t>(perm[p - 1])] !=
                                   sample.coord_class[static_cast<std::size_t>(perm[p])];
    }
    const auto splits = solver.solve(pos_labels, can_split);
    if (!splits) return false;
    Candidate c{v, {}};
    for (Index s : *splits) {
      const double lo = project_point(sample.points.row(perm[static_cast<std::size_t>(s - 1)]).data(),
                                      v.components().data(), d);
      const double hi =
          project_point(sample.points.row(perm[static_cast<std::size_t>(s)]).data(), v.components().data(), d);
      if (!(lo < hi)) return false;
      c.boundaries.push_back(split_value(lo, hi));
    }
    out = std::move(c);
    return true;
  };

  std::shared_ptr<const std::vector<detail::RawEvent>> events;
  std::vector<ProjectionVector> directions;
  if (d == 2) {
    events = std::make_shared<const std::vector<detail::RawEvent>>(detail::sorted_raw_events(sample.points));
  } else if (d == 1) {
    directions.push_back(ProjectionVector::axis(1, 0));
  } else {
    directions = sample_directions(d, options.fallback_vectors, options.seed ^ 0x9e3779b97f4a7c15ULL);
    result.notes.push_back("d > 2: sampled directions stand in for the sample arrangement");
  }

  const auto feasible = [&](double level) -> std::optional<Candidate> {
    solver.set_band(sample.sizes, level + options.gamma / 2);
    std::optional<Candidate> found;
    if (d == 2) {
      OrderingSweep sweep(sample.points, events);
      if (try_order(sweep.permutation(), sweep.cell_vector(), found)) return found;
      OrderingSweep::Step step;
      while (sweep.advance(step)) {
        if (step.adjacent_swap) {
          const auto& perm = sweep.permutation();
          // Same-group swap: label sequence unchanged, same answer as before.
          if (sample.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(step.position)])] ==
              sample.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(step.position + 1)])]) {
            continue;
          }
        }
        if (try_order(sweep.permutation(), sweep.cell_vector(), found)) return found;
      }
      return std::nullopt;
    }
    for (const auto& v : directions) {
      const Ordering ord = project_ordering(sample.points, v.components());
      if (try_order(ord.permutation, v, found)) return found;
    }
    return std::nullopt;
  };

  const auto grid = discrepancy_grid(n, options.delta, m);
  std::optional<Candidate> best;
  double best_level = 0.0;
  std::ptrdiff_t lo = 0;
  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(grid.size()) - 1;
  while (lo <= hi) {
    const std::ptrdiff_t mid = lo + (hi - lo) / 2;
    if (auto c = feasible(grid[static_cast<std::size_t>(mid)])) {
      best = std::move(c);
      best_level = grid[static_cast<std::size_t>(mid)];
      hi = mid - 1;
    } else {
      lo = mid + 1;
    }
  }
  if (!best) throw PreconditionError("sample has too few distinct points to form " + std::to_string(m) + " buckets");
  finish(best->vector, best->boundaries, best_level);
  return result;
}

LocalSearchResult local_search(const Dataset& dataset, const HashmapModel& model, const LocalSearchConfig& config) {
  const int m = model.m;
  config.validate(m);
  if (model.bin_count() != m) throw InvalidArgument("local search needs one contiguous bin per bucket");
  for (int j = 0; j < m; ++j) {
    if (model.bin_buckets[static_cast<std::size_t>(j)] != j) {
      throw InvalidArgument("local search needs buckets laid out in bin order");
    }
  }
  const Ordering ordering = project_ordering(dataset, model.vector);
  const auto labels = labels_by_position(dataset, ordering);
  const Index n = ordering.size();
  const int k = dataset.num_groups();

  std::vector<Index> splits;
  for (double b : model.boundaries) {
    splits.push_back(static_cast<Index>(std::upper_bound(ordering.scores.begin(), ordering.scores.end(), b) -
                                        ordering.scores.begin()));
  }
  BucketHistogram hist = counts_for_splits(labels, splits, k, m);
  CountMatrix alpha = hist.counts;
  CountVector size = hist.bucket_totals;
  const CountVector& total = hist.group_totals;

  // Exact integer aggregates: sum_j n_j^2 and, per group, sum_j alpha_ij n_j.
  Index sq = 0;
  for (int j = 0; j < m; ++j) sq += size[j] * size[j];
  std::vector<Index> cross(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) cross[static_cast<std::size_t>(i)] += alpha(i, j) * size[j];
  }
  std::vector<double> pr(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    if (total[i] > 0) pr[static_cast<std::size_t>(i)] = pairwise_fairness(alpha, i, total[i]);
  }
  const double nn = static_cast<double>(n);
  const auto epsilon_of = [&](const std::vector<double>& p) { return m * *std::max_element(p.begin(), p.end()) - 1.0; };

  LocalSearchResult out;
  double eps = epsilon_of(pr);
  out.epsilon_trace.push_back(eps);

  struct Move {
    int boundary;
    int dir;  // -1 left, +1 right
    double eps;
  };

  for (Index iter = 0; iter < config.max_iterations; ++iter) {
    std::optional<Move> best;
    for (int j = 0; j + 1 < m; ++j) {
      const Index s = splits[static_cast<std::size_t>(j)];
      const Index lower = j == 0 ? 0 : splits[static_cast<std::size_t>(j - 1)];
      const Index upper = j + 2 == m ? n : splits[static_cast<std::size_t>(j + 1)];
      for (int dir : {-1, +1}) {
        const Index ns = s + dir;
        if (ns <= lower || ns >= upper) continue;
        if (!(ordering.scores[static_cast<std::size_t>(ns - 1)] < ordering.scores[static_cast<std::size_t>(ns)])) continue;
        // Point crossing the boundary and its source/target buckets.
        const Index p = dir < 0 ? s - 1 : s;
        const int from = dir < 0 ? j : j + 1;
        const int to = dir < 0 ? j + 1 : j;
        const GroupId g = labels[static_cast<std::size_t>(p)];

        const Index nf = size[from] - 1;
        const Index nt = size[to] + 1;
        const Index sq2 = sq - size[from] * size[from] - size[to] * size[to] + nf * nf + nt * nt;
        const double cp = static_cast<double>(sq2) / (nn * nn);
        if (cp > config.collision_max + kTol) continue;

        bool valid = true;
        for (int i = 0; i < k && valid; ++i) {
          if (total[i] == 0) continue;
          const Index af = alpha(i, from) - (i == g ? 1 : 0);
          const Index at = alpha(i, to) + (i == g ? 1 : 0);
          const Index c2 = cross[static_cast<std::size_t>(i)] - alpha(i, from) * size[from] - alpha(i, to) * size[to] +
                           af * nf + at * nt;
          const double sp = static_cast<double>(c2) / (static_cast<double>(total[i]) * nn);
          valid = sp >= config.single_fairness_min - kTol && sp <= config.single_fairness_max + kTol;
        }
        if (!valid) continue;

        const double s_g = static_cast<double>(total[g]);
        const double a = static_cast<double>(alpha(g, from));
        const double b = static_cast<double>(alpha(g, to));
        double worst = (pr[static_cast<std::size_t>(g)] - (a * a + b * b) / (s_g * s_g) +
                        ((a - 1) * (a - 1) + (b + 1) * (b + 1)) / (s_g * s_g));
        for (int i = 0; i < k; ++i) {
          if (i != g) worst = std::max(worst, pr[static_cast<std::size_t>(i)]);
        }
        const double cand = m * worst - 1.0;
        if (!best || cand < best->eps - kTol) best = Move{j, dir, cand};
      }
    }
    if (!best || !(best->eps < eps - kTol)) break;

    const int j = best->boundary;
    const Index s = splits[static_cast<std::size_t>(j)];
    const Index p = best->dir < 0 ? s - 1 : s;
    const int from = best->dir < 0 ? j : j + 1;
    const int to = best->dir < 0 ? j + 1 : j;
    const GroupId g = labels[static_cast<std::size_t>(p)];
    for (int i = 0; i < k; ++i) {
      cross[static_cast<std::size_t>(i)] -= alpha(i, from) * size[from] + alpha(i, to) * size[to];
    }
    sq -= size[from] * size[from] + size[to] * size[to];
    --alpha(g, from);
    ++alpha(g, to);
    --size[from];
    ++size[to];
    sq += size[from] * size[from] + size[to] * size[to];
    for (int i = 0; i < k; ++i) {
      cross[static_cast<std::size_t>(i)] += alpha(i, from) * size[from] + alpha(i, to) * size[to];
    }
    pr[static_cast<std::size_t>(g)] = pairwise_fairness(alpha, g, total[g]);
    splits[static_cast<std::size_t>(j)] = s + best->dir;
    eps = epsilon_of(pr);
    out.epsilon_trace.push_back(eps);
    ++out.iterations;
  }

  out.model = model_from_splits(ordering, splits, m, model.vector, model.info.algorithm);
  out.model.info = model.info;
  out.model.scaling = model.scaling;
  if (out.iterations > 0) out.model.info.algorithm += "+local_search";
  return out;
}

HashmapModel local_search_refine(const Dataset& dataset, const HashmapModel& model, const LocalSearchConfig& config) {
  return local_search(dataset, model, config).model;
}

}  // namespace fairhash
