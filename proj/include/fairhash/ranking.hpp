#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fairhash/types.hpp"

namespace fairhash {

// Direction at which two points exchange rank.
struct SwapEvent {
  Index point_a = 0;
  Index point_b = 0;
  ProjectionVector vector;
  double angle = 0.0;  // in [0, pi)
};

struct RankingSearchResult {
  ProjectionVector best_vector;
  double best_epsilon = 0.0;
  HashmapModel model;
  Index vectors_examined = 0;
};

// All rank-swap directions of a planar point set, sorted by (angle, a, b).
// Identical points never swap and produce no event.
std::vector<SwapEvent> enumerate_swap_events(const Dataset& dataset);

namespace detail {

struct RawEvent {
  double angle;
  Index a;
  Index b;
};

std::vector<RawEvent> sorted_raw_events(const PointMatrix& points);

}  // namespace detail

// Walks every combinatorially distinct ordering of a planar point set by
// rotating w through [0, pi). Each call to advance() moves to the next cell
// of the arrangement.
class OrderingSweep {
 public:
  struct Step {
    // One adjacent exchange at positions (position, position + 1) when true;
    // otherwise positions [lo, hi] were re-sorted in bulk.
    bool adjacent_swap = false;
    Index position = 0;
    Index lo = 0;
    Index hi = 0;
  };

  explicit OrderingSweep(const PointMatrix& points);
  // Reuses events already produced by detail::sorted_raw_events(points).
  OrderingSweep(const PointMatrix& points, std::shared_ptr<const std::vector<detail::RawEvent>> events);

  const std::vector<Index>& permutation() const { return perm_; }
  Index position_of(Index point) const { return pos_[static_cast<std::size_t>(point)]; }
  double cell_angle() const { return cell_angle_; }
  ProjectionVector cell_vector() const;
  Index event_count() const { return static_cast<Index>(events_->size()); }
  Index events_processed() const { return next_; }

  // Returns false once every event has been consumed.
  bool advance(Step& step);

 private:
  double angle_after_group(std::size_t group_end) const;
  void resort(Index lo, Index hi, double theta);

  const PointMatrix& points_;
  std::shared_ptr<const std::vector<detail::RawEvent>> events_;
  std::vector<Index> perm_;
  std::vector<Index> pos_;
  std::size_t next_ = 0;
  double cell_angle_ = 0.0;
  Index last_a_ = -1;
  Index last_b_ = -1;
};

struct ExactSearchOptions {
  // Recompute every Pr_i from scratch after this many events and throw
  // std::logic_error on disagreement. 0 disables the check.
  Index verify_every = 0;
};

// Exact minimum-unfairness (eps, 1)-hashmap over all planar projections.
RankingSearchResult exact_search_2d(const Dataset& dataset, int m, ExactSearchOptions options = {});

// Unit directions drawn from the sphere, sign-normalized to a half-space.
// Sample 0 is always e_1.
std::vector<ProjectionVector> sample_directions(Index dim, Index count, std::uint64_t seed);

// Equi-depth unfairness of the ordering induced by `vector`.
double equi_depth_unfairness(const Dataset& dataset, const ProjectionVector& vector, int m);

RankingSearchResult sampled_search(const Dataset& dataset, int m, Index num_vectors, std::uint64_t seed,
                                   int jobs = 1);

}  // namespace fairhash
