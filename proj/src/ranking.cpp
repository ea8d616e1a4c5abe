#include "fairhash/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "fairhash/cdf.hpp"
#include "fairhash/core.hpp"
#include "fairhash/error.hpp"
#include "fairhash/indexed_heap.hpp"
#include "fairhash/random.hpp"

namespace fairhash {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAngleTolerance = 1e-12;

void require_planar(Index dim) {
  if (dim != 2) {
    throw UnsupportedDimension("exact arrangement sweep needs d == 2, got d = " + std::to_string(dim));
  }
}

double swap_angle(double dx, double dy) {
  if (dy < 0.0 || (dy == 0.0 && dx < 0.0)) {
    dx = -dx;
    dy = -dy;
  }
  const double theta = std::atan2(dy, dx);  // [0, pi)
  double w = theta < kPi / 2 ? theta + kPi / 2 : theta - kPi / 2;
  if (w >= kPi) w -= kPi;
  if (w < 0.0) w = 0.0;
  return w;
}

}  // namespace

namespace detail {

std::vector<RawEvent> sorted_raw_events(const PointMatrix& points) {
  require_planar(points.cols());
  const Index n = points.rows();
  std::vector<RawEvent> events;
  events.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) {
      const double dx = points(b, 0) - points(a, 0);
      const double dy = points(b, 1) - points(a, 1);
      if (dx == 0.0 && dy == 0.0) continue;
      events.push_back({swap_angle(dx, dy), a, b});
    }
  }
  std::sort(events.begin(), events.end(), [](const RawEvent& x, const RawEvent& y) {
    if (x.angle != y.angle) return x.angle < y.angle;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  // Near-equal angles form one group carrying the group's first angle,
  // ordered by (a, b).
  for (std::size_t s = 0; s < events.size();) {
    std::size_t e = s + 1;
    while (e < events.size() && events[e].angle - events[e - 1].angle <= kAngleTolerance) ++e;
    if (e - s > 1) {
      const double angle = events[s].angle;
      for (std::size_t t = s; t < e; ++t) events[t].angle = angle;
      std::sort(events.begin() + static_cast<std::ptrdiff_t>(s), events.begin() + static_cast<std::ptrdiff_t>(e),
                [](const RawEvent& x, const RawEvent& y) { return x.a != y.a ? x.a < y.a : x.b < y.b; });
    }
    s = e;
  }
  return events;
}

}  // namespace detail

std::vector<SwapEvent> enumerate_swap_events(const Dataset& dataset) {
  require_planar(dataset.dim());
  if (dataset.size() < 2) throw InvalidArgument("need at least two points");
  const auto raw = detail::sorted_raw_events(dataset.points);
  std::vector<SwapEvent> out;
  out.reserve(raw.size());
  for (const auto& e : raw) {
    out.push_back({e.a, e.b, ProjectionVector::from_angle(e.angle, EventSource{e.a, e.b}), e.angle});
  }
  return out;
}

OrderingSweep::OrderingSweep(const PointMatrix& points)
    : OrderingSweep(points, std::make_shared<const std::vector<detail::RawEvent>>(detail::sorted_raw_events(points))) {}

OrderingSweep::OrderingSweep(const PointMatrix& points, std::shared_ptr<const std::vector<detail::RawEvent>> events)
    : points_(points), events_(std::move(events)) {
  const auto& ev = *events_;
  const Index n = points.rows();
  perm_.resize(static_cast<std::size_t>(n));
  pos_.resize(static_cast<std::size_t>(n));
  std::iota(perm_.begin(), perm_.end(), Index{0});
  if (ev.empty()) {
    cell_angle_ = 0.0;
  } else {
    // Just below the first event, inside the cell that wraps around pi.
    const double first = ev.front().angle;
    const double wrap_gap = first - (ev.back().angle - kPi);
    cell_angle_ = first - std::min(kPi / 2e6, wrap_gap / 2);
  }
  resort(0, n - 1, cell_angle_);
}

ProjectionVector OrderingSweep::cell_vector() const {
  if (last_a_ < 0) return ProjectionVector::from_angle(cell_angle_);
  return ProjectionVector::from_angle(cell_angle_, EventSource{last_a_, last_b_});
}

double OrderingSweep::angle_after_group(std::size_t group_end) const {
  const auto& ev = *events_;
  const double here = ev[group_end - 1].angle;
  const double next = group_end < ev.size() ? ev[group_end].angle : kPi;
  return here + (next - here) / 2;
}

void OrderingSweep::resort(Index lo, Index hi, double theta) {
  const double w[2] = {std::cos(theta), std::sin(theta)};
  auto first = perm_.begin() + lo;
  auto last = perm_.begin() + hi + 1;
  std::vector<std::pair<double, Index>> keyed;
  keyed.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (auto it = first; it != last; ++it) keyed.emplace_back(project_point(points_.row(*it).data(), w, 2), *it);
  std::sort(keyed.begin(), keyed.end());
  for (std::size_t t = 0; t < keyed.size(); ++t) {
    const Index p = lo + static_cast<Index>(t);
    perm_[static_cast<std::size_t>(p)] = keyed[t].second;
    pos_[static_cast<std::size_t>(keyed[t].second)] = p;
  }
}

bool OrderingSweep::advance(Step& step) {
  const auto& ev = *events_;
  if (next_ >= ev.size()) return false;
  std::size_t end = next_ + 1;
  while (end < ev.size() && ev[end].angle == ev[next_].angle) ++end;
  const double theta = angle_after_group(end);

  const auto& first = ev[next_];
  const Index pa = pos_[static_cast<std::size_t>(first.a)];
  const Index pb = pos_[static_cast<std::size_t>(first.b)];
  if (end - next_ == 1 && std::abs(pa - pb) == 1) {
    const Index p = std::min(pa, pb);
    std::swap(perm_[static_cast<std::size_t>(p)], perm_[static_cast<std::size_t>(p + 1)]);
    pos_[static_cast<std::size_t>(perm_[static_cast<std::size_t>(p)])] = p;
    pos_[static_cast<std::size_t>(perm_[static_cast<std::size_t>(p + 1)])] = p + 1;
    step = Step{true, p, p, p + 1};
  } else {
    Index lo = static_cast<Index>(perm_.size());
    Index hi = -1;
    for (std::size_t t = next_; t < end; ++t) {
      for (Index pt : {ev[t].a, ev[t].b}) {
        lo = std::min(lo, pos_[static_cast<std::size_t>(pt)]);
        hi = std::max(hi, pos_[static_cast<std::size_t>(pt)]);
      }
    }
    resort(lo, hi, theta);
    step = Step{false, lo, lo, hi};
  }
  last_a_ = ev[end - 1].a;
  last_b_ = ev[end - 1].b;
  cell_angle_ = theta;
  next_ = end;
  return true;
}

namespace {

// alpha_{i,j} and Pr_i for an equi-depth partition of the current ordering.
struct EquiDepthState {
  std::vector<BucketId> bucket_of_pos;
  CountMatrix alpha;
  std::vector<double> group_size;
  std::vector<double> pr;

  // `mirrored` puts the larger buckets last: the equi-depth partition of
  // the reversed ordering, i.e. of direction -w.
  EquiDepthState(Index n, int m, int k, bool mirrored)
      : alpha(CountMatrix::Zero(k, m)), group_size(k, 0.0), pr(k, 0.0) {
    auto sizes = equi_depth_sizes(n, m);
    if (mirrored) std::reverse(sizes.begin(), sizes.end());
    bucket_of_pos.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < m; ++j) bucket_of_pos.insert(bucket_of_pos.end(), static_cast<std::size_t>(sizes[j]), j);
  }

  void recompute(const std::vector<Index>& perm, const std::vector<GroupId>& labels) {
    alpha.setZero();
    for (std::size_t p = 0; p < perm.size(); ++p) {
      ++alpha(labels[static_cast<std::size_t>(perm[p])], bucket_of_pos[p]);
    }
    for (int i = 0; i < alpha.rows(); ++i) {
      group_size[i] = static_cast<double>(alpha.row(i).sum());
      pr[i] = group_size[i] > 0 ? pairwise_fairness(alpha, i, alpha.row(i).sum()) : 0.0;
    }
  }

  // Pr_g after moving one member of group g from bucket `from` to `to`.
  double moved(int g, int from, int to) const {
    const double s = group_size[g];
    const double a = static_cast<double>(alpha(g, from));
    const double b = static_cast<double>(alpha(g, to));
    return pr[g] - (a / s) * (a / s) - (b / s) * (b / s) + ((a - 1) / s) * ((a - 1) / s) +
           ((b + 1) / s) * ((b + 1) / s);
  }
};

IndexedMaxHeap<double> make_heap(const std::vector<double>& pr) { return IndexedMaxHeap<double>(pr); }

}  // namespace

RankingSearchResult exact_search_2d(const Dataset& dataset, int m, ExactSearchOptions options) {
  require_planar(dataset.dim());
  const Index n = dataset.size();
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (n < m) throw InvalidArgument("need n >= m");
  const int k = dataset.num_groups();
  for (Index s : dataset.group_sizes) {
    if (s < 1) throw InvalidArgument("every group needs at least one member");
  }

  OrderingSweep sweep(dataset.points);
  // w and -w give mirrored orderings; they only differ when m does not divide n.
  const bool both = n % m != 0;
  std::vector<EquiDepthState> states;
  std::vector<IndexedMaxHeap<double>> heaps;
  for (bool mirrored : {false, true}) {
    if (mirrored && !both) break;
    states.emplace_back(n, m, k, mirrored);
    states.back().recompute(sweep.permutation(), dataset.labels);
    heaps.push_back(make_heap(states.back().pr));
  }

  double best = std::numeric_limits<double>::infinity();
  ProjectionVector best_vector;
  const auto consider = [&] {
    for (std::size_t s = 0; s < states.size(); ++s) {
      const double eps = m * heaps[s].top_priority() - 1.0;
      if (eps < best - 1e-12) {
        best = eps;
        const ProjectionVector v = sweep.cell_vector();
        best_vector = s == 0 ? v : ProjectionVector(-v.components(), v.source());
      }
    }
  };
  consider();
  Index examined = 1;
  Index since_verify = 0;

  OrderingSweep::Step step;
  while (sweep.advance(step)) {
    ++examined;
    const auto& perm = sweep.permutation();
    for (std::size_t s = 0; s < states.size(); ++s) {
      EquiDepthState& state = states[s];
      if (step.adjacent_swap) {
        const Index p = step.position;
        const int j = state.bucket_of_pos[static_cast<std::size_t>(p)];
        const int j1 = state.bucket_of_pos[static_cast<std::size_t>(p + 1)];
        // After the swap, perm[p+1] left bucket j and perm[p] left bucket j+1.
        const GroupId gi = dataset.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(p + 1)])];
        const GroupId gl = dataset.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(p)])];
        if (j != j1 && gi != gl) {
          state.pr[gi] = state.moved(gi, j, j1);
          --state.alpha(gi, j);
          ++state.alpha(gi, j1);
          state.pr[gl] = state.moved(gl, j1, j);
          --state.alpha(gl, j1);
          ++state.alpha(gl, j);
          heaps[s].update(static_cast<std::size_t>(gi), state.pr[gi]);
          heaps[s].update(static_cast<std::size_t>(gl), state.pr[gl]);
        }
      } else {
        state.recompute(perm, dataset.labels);
        heaps[s] = make_heap(state.pr);
      }
    }

    if (options.verify_every > 0 && ++since_verify >= options.verify_every) {
      since_verify = 0;
      for (std::size_t s = 0; s < states.size(); ++s) {
        EquiDepthState check(n, m, k, s == 1);
        check.recompute(perm, dataset.labels);
        for (int i = 0; i < k; ++i) {
          if (std::abs(check.pr[i] - states[s].pr[i]) > 1e-9 || check.alpha.row(i) != states[s].alpha.row(i)) {
            throw std::logic_error("incremental pairwise fairness diverged from recomputation");
          }
        }
      }
    }
    consider();
  }

  RankingSearchResult result;
  result.best_vector = best_vector;
  result.best_epsilon = std::max(best, 0.0);
  result.model = build_cdf(dataset, best_vector, m);
  result.model.info.algorithm = "ranking_exact2d";
  result.vectors_examined = examined;
  return result;
}

std::vector<ProjectionVector> sample_directions(Index dim, Index count, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("num_vectors must be at least 1");
  if (dim < 1) throw InvalidArgument("dimension must be positive");
  std::vector<ProjectionVector> out;
  out.reserve(static_cast<std::size_t>(count));
  out.push_back(ProjectionVector::axis(dim, 0));
  Rng rng(seed);
  for (Index s = 1; s < count; ++s) {
    Eigen::VectorXd w(dim);
    do {
      for (Index c = 0; c < dim; ++c) w[c] = rng.normal();
    } while (w.norm() == 0.0);
    // Keep w in the half-space whose last coordinate is non-negative; w and
    // -w induce mirrored orderings.
    for (Index c = dim - 1; c >= 0; --c) {
      if (w[c] != 0.0) {
        if (w[c] < 0.0) w = -w;
        break;
      }
    }
    out.emplace_back(std::move(w), SampledSource{seed, s});
  }
  return out;
}

double equi_depth_unfairness(const Dataset& dataset, const ProjectionVector& vector, int m) {
  const Ordering ordering = project_ordering(dataset, vector);
  const auto splits = equi_depth_splits(ordering, m);
  CountMatrix alpha = CountMatrix::Zero(dataset.num_groups(), m);
  int bucket = 0;
  for (Index p = 0; p < ordering.size(); ++p) {
    while (bucket < m - 1 && p >= splits[static_cast<std::size_t>(bucket)]) ++bucket;
    ++alpha(dataset.labels[static_cast<std::size_t>(ordering.permutation[static_cast<std::size_t>(p)])], bucket);
  }
  double worst = 0.0;
  for (int i = 0; i < dataset.num_groups(); ++i) {
    if (dataset.group_sizes[i] == 0) continue;
    worst = std::max(worst, pairwise_fairness(alpha, i, dataset.group_sizes[i]));
  }
  return std::max(m * worst - 1.0, 0.0);
}

RankingSearchResult sampled_search(const Dataset& dataset, int m, Index num_vectors, std::uint64_t seed, int jobs) {
  if (num_vectors < 1) throw InvalidArgument("num_vectors must be at least 1");
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (dataset.size() < m) throw InvalidArgument("need n >= m");
  const auto vectors = sample_directions(dataset.dim(), num_vectors, seed);
  std::vector<double> eps(vectors.size());

  const auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t s = begin; s < vectors.size(); s += stride) eps[s] = equi_depth_unfairness(dataset, vectors[s], m);
  };
  const std::size_t workers = static_cast<std::size_t>(std::clamp<Index>(jobs, 1, num_vectors));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
  }

  const std::size_t best = static_cast<std::size_t>(std::min_element(eps.begin(), eps.end()) - eps.begin());
  RankingSearchResult result;
  result.best_vector = vectors[best];
  result.best_epsilon = eps[best];
  result.model = build_cdf(dataset, vectors[best], m);
  result.model.info.algorithm = "ranking_sampled";
  result.model.info.seed = seed;
  result.vectors_examined = num_vectors;
  return result;
}

}  // namespace fairhash
