// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
//
//   acceptance                  run every criterion
//   acceptance 3 7              run selected criteria
//   acceptance --write-golden   regenerate tests/golden (then commit it)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairhash/bench.hpp"
#include "fairhash/cdf.hpp"
#include "fairhash/core.hpp"
#include "fairhash/cut.hpp"
#include "fairhash/discrepancy.hpp"
#include "fairhash/io.hpp"
#include "fairhash/ranking.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace fairhash;
using namespace testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

double eps_of(const Dataset& ds, const HashmapModel& model) {
  return compute_metrics(histogram(ds, model), model.boundary_count()).unfairness;
}

// Random 2D points with the given group sizes, labels shuffled.
Dataset sized_plane(Rng& rng, const std::vector<Index>& sizes) {
  const auto labels = shuffled_labels(rng, sizes);
  PointMatrix p(static_cast<Index>(labels.size()), 2);
  for (Index i = 0; i < p.rows(); ++i) {
    p(i, 0) = rng.uniform();
    p(i, 1) = rng.uniform();
  }
  return Dataset::make(std::move(p), labels, {}, static_cast<int>(sizes.size()));
}

// 1. Cut-based constructions are exactly zero-unfair.
void zero_unfair(Outcome& o) {
  const auto t0 = Clock::now();
  Rng rng(1001);
  int necklaces = 0;
  const ProjectionVector axis = ProjectionVector::axis(2);
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + t % 3;
    const int m = 1 + static_cast<int>(rng.below(20));
    std::vector<Index> sizes;
    for (int g = 0; g < k; ++g) {
      const Index cap = 5000 / (k * m);
      sizes.push_back(m * (1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(cap)))));
    }
    const Dataset ds = sized_plane(rng, sizes);
    const HashmapModel sc = sweep_and_cut(ds, axis, m);
    o.require(eps_of(ds, sc) == 0.0, "sweep_and_cut instance " + std::to_string(t));
    if (k == 2) {
      ++necklaces;
      const HashmapModel nk = necklace_2g(ds, axis, m);
      o.require(eps_of(ds, nk) == 0.0, "necklace instance " + std::to_string(t));
      o.require(nk.boundary_count() <= 2 * (m - 1), "necklace boundary budget, instance " + std::to_string(t));
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "runtime");
  o.detail << "200 instances (" << necklaces << " necklace), " << secs << " s";
}

// 2. CDF baseline invariants.
void cdf_invariants(Outcome& o) {
  Rng rng(1002);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    const int m = 1 + static_cast<int>(rng.below(16));
    const int k = 1 + static_cast<int>(rng.below(4));
    const Index n = std::max<Index>(k, m * (1 + static_cast<Index>(rng.below(60))));
    if (n % m != 0) continue;
    const Dataset ds = random_plane(rng, n, k);
    const HashmapModel model = build_cdf(ds, ProjectionVector(Eigen::Vector2d(rng.normal(), rng.normal())), m);
    const MetricsReport r = compute_metrics(histogram(ds, model), model.boundary_count());
    o.require(std::abs(r.collision_probability - 1.0 / m) <= 1e-12, "Cp, instance " + std::to_string(t));
    for (Index i = 0; i < r.single_fairness.size(); ++i) {
      o.require(std::abs(r.single_fairness[i] - 1.0 / m) <= 1e-12, "Sp, instance " + std::to_string(t));
    }
    ++checked;
  }
  const Dataset six = six_points();
  const double e = eps_of(six, build_cdf(six, ProjectionVector::axis(1), 2));
  o.require(e == 1.0, "six-point fixture");
  o.detail << checked << " instances with m | n; six-point eps = " << e;
}

// 3. Exact planar search against enumeration of all orderings.
void ranking_oracle(Outcome& o) {
  const auto t0 = Clock::now();
  Rng rng(1003);
  double worst = 0.0;
  for (int t = 0; t < 60; ++t) {
    const Index n = 4 + static_cast<Index>(rng.below(9));
    const int k = 2 + static_cast<int>(rng.below(3));
    const int m = 2 + static_cast<int>(rng.below(std::min<std::uint64_t>(4, static_cast<std::uint64_t>(n - 1))));
    const Dataset ds = random_plane(rng, n, k);
    const double got = exact_search_2d(ds, m).best_epsilon;
    const double want = oracle::min_ranking_eps(ds, m);
    worst = std::max(worst, std::abs(got - want));
    o.require(std::abs(got - want) <= 1e-9, "instance " + std::to_string(t));
  }
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, "runtime");
  o.detail << "60 instances, max |diff| = " << worst << ", " << secs << " s";
}

// 4. exact <= sampled <= cdf, and sampling more vectors helps on average.
void dominance(Outcome& o) {
  Rng rng(1004);
  for (int t = 0; t < 10; ++t) {
    const Index n = 20 + static_cast<Index>(rng.below(41));
    const int k = 2 + t % 2;
    const int m = 2 + static_cast<int>(rng.below(4));
    const Dataset ds = random_plane(rng, n, k);
    const double exact = exact_search_2d(ds, m).best_epsilon;
    const double cdf = eps_of(ds, build_cdf(ds, ProjectionVector::axis(2), m));
    double mean100 = 0.0;
    double mean1000 = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const double s100 = sampled_search(ds, m, 100, seed).best_epsilon;
      const double s1000 = sampled_search(ds, m, 1000, seed).best_epsilon;
      const std::string tag = "instance " + std::to_string(t) + " seed " + std::to_string(seed);
      o.require(exact <= s100 + 1e-12 && exact <= s1000 + 1e-12, "exact <= sampled, " + tag);
      o.require(s100 <= cdf + 1e-12 && s1000 <= cdf + 1e-12, "sampled <= cdf, " + tag);
      mean100 += s100 / 20;
      mean1000 += s1000 / 20;
    }
    o.require(mean1000 <= mean100 + 1e-12, "mean over seeds, instance " + std::to_string(t));
    if (t == 0) {
      o.detail << "e.g. exact " << exact << " <= mean sampled(1000) " << mean1000 << " <= mean sampled(100) "
               << mean100 << " <= cdf " << cdf << "; ";
    }
  }
  o.detail << "10 instances x 20 seeds";
}

// 5. DP against exhaustive split enumeration, plus the bound chain.
void dp_oracle(Outcome& o) {
  Rng rng(1005);
  int count = 0;
  for (int t = 0; t < 150; ++t) {
    const Index n = 2 + static_cast<Index>(rng.below(13));
    const int m = 1 + static_cast<int>(std::min<Index>(n - 1, static_cast<Index>(rng.below(4))));
    const int k = 1 + static_cast<int>(std::min<Index>(n - 1, static_cast<Index>(rng.below(3))));
    std::vector<GroupId> labels;
    for (Index i = 0; i < n; ++i) {
      labels.push_back(static_cast<GroupId>(i < k ? i : static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)))));
    }
    rng.shuffle(std::span<GroupId>(labels));
    const Dataset ds = sequence(labels, k);
    const Ordering ord = project_ordering(ds, ProjectionVector::axis(1));
    const auto part = dp_min_discrepancy(ord, labels_by_position(ds, ord), ds.group_sizes, m);
    const double want =
        oracle::min_split_discrepancy(std::vector<int>(labels.begin(), labels.end()), ds.group_sizes, m);
    const std::string tag = "instance " + std::to_string(t);
    o.require(std::abs(part.discrepancy - want) <= 1e-12, "DP value, " + tag);
    const MetricsReport r = compute_metrics(part.per_bucket_counts, m - 1);
    const double g = part.discrepancy;
    o.require(r.collision_probability <= (1 + g) / m + 1e-12, "Cp bound, " + tag);
    for (Index i = 0; i < r.pairwise_fairness.size(); ++i) {
      o.require(r.pairwise_fairness[i] <= (1 + g) / m + 1e-12, "Pr bound, " + tag);
      o.require(r.single_fairness[i] >= (1 - g) / m - 1e-12, "Sp lower bound, " + tag);
      o.require(r.single_fairness[i] <= (1 + g) / m + 1e-12, "Sp upper bound, " + tag);
    }
    ++count;
  }
  o.detail << count << " instances (n <= 14, m <= 4)";
}

// 6. Local search.
void local_search_checks(Outcome& o) {
  Rng rng(1006);
  Index moves = 0;
  for (int t = 0; t < 50; ++t) {
    const Dataset ds = random_plane(rng, 60, 2 + t % 3);
    const int m = 2 + t % 4;
    const HashmapModel model = build_cdf(ds, ProjectionVector::axis(2), m);
    const auto r = local_search(ds, model, LocalSearchConfig{});
    moves += r.iterations;
    for (std::size_t i = 1; i < r.epsilon_trace.size(); ++i) {
      o.require(r.epsilon_trace[i] < r.epsilon_trace[i - 1], "strict decrease, instance " + std::to_string(t));
    }
    LocalSearchConfig tight;
    tight.collision_max = 1.0 / m;
    const auto same = local_search(ds, model, tight);
    o.require(same.model.boundaries == model.boundaries && same.model.bin_buckets == model.bin_buckets,
              "c+ = 1/m leaves the model unchanged, instance " + std::to_string(t));
  }
  const Dataset six = six_points();
  LocalSearchConfig one_step;
  one_step.max_iterations = 1;
  const auto r = local_search(six, build_cdf(six, ProjectionVector::axis(1), 2), one_step);
  const double after = r.epsilon_trace.back();
  o.require(after < 1.0, "six-point CDF model: eps after one iteration is " + std::to_string(after) +
                             " (both single-boundary moves give Pr = {5/9, 1} or {1, 5/9}, max stays 1)");
  o.detail << moves << " strictly improving moves over 50 instances";
}

// 7. Monte Carlo expected-bins bound.
void expected_bins(Outcome& o) {
  Rng rng(1007);
  const Index n = 1000;
  const int m = 10;
  for (Index r : {100, 250, 500}) {
    double total = 0.0;
    for (int t = 0; t < 500; ++t) {
      const auto labels = shuffled_labels(rng, {r, n - r});
      const auto buckets = sweep_and_cut_assignment(labels, std::vector<Index>{r, n - r}, m);
      total += static_cast<double>(cut_positions_of(buckets).size() + 1);
    }
    const double mean = total / 500;
    const double bound = 2.0 * (static_cast<double>(r) * static_cast<double>(n - r) / static_cast<double>(n) + m);
    o.require(mean <= bound, "r = " + std::to_string(r));
    o.detail << "r=" << r << ": mean " << mean << " <= " << bound << "; ";
  }
}

// 8. Randomized discrepancy against the DP optimum.
void randomized(Outcome& o) {
  // Two groups alternating along x: the x ordering splits perfectly.
  Rng rng(1008);
  const Index n = 4000;
  PointMatrix p(n, 2);
  std::vector<GroupId> labels;
  for (Index i = 0; i < n; ++i) {
    p(i, 0) = (static_cast<double>(i) + 0.5 * rng.uniform()) / static_cast<double>(n);
    p(i, 1) = rng.uniform();
    labels.push_back(static_cast<GroupId>(i % 2));
  }
  const Dataset ds = Dataset::make(std::move(p), std::move(labels));
  const int m = 2;
  const Ordering ord = project_ordering(ds, ProjectionVector::axis(2));
  // Discrepancy is non-negative, so a zero on any ordering is the optimum.
  const double eps_d = dp_min_discrepancy(ord, labels_by_position(ds, ord), ds.group_sizes, m).discrepancy;
  o.require(eps_d == 0.0, "fixture optimum");
  RandomizedOptions opt;
  opt.gamma = 0.5;
  opt.delta = 1.0;
  const double threshold = (1 + opt.delta) * eps_d + opt.gamma;
  int good = 0;
  bool clamped = false;
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    opt.seed = seed;
    const auto r = randomized_discrepancy(ds, m, opt);
    clamped = clamped || r.clamped;
    worst = std::max(worst, r.partition.discrepancy);
    good += r.partition.discrepancy <= threshold;
  }
  o.require(!clamped, "sample must not cover whole groups");
  o.require(good >= 90, "success count");
  o.detail << good << "/100 runs within " << threshold << " (eps_D = " << eps_d << ", worst " << worst << "), "
           << seconds_since(t0) << " s";
}

double best_build_seconds(const std::function<void()>& f, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

// 9. Complexity smoke tests.
void complexity(Outcome& o) {
  const int m = 100;
  const ProjectionVector axis = ProjectionVector::axis(2);
  std::vector<double> ns{1e4, 1e5, 1e6};
  for (const char* which : {"sweep_and_cut", "necklace_2g"}) {
    std::vector<double> secs;
    for (double nd : ns) {
      const Dataset ds = generate_synthetic(static_cast<Index>(nd), 2, {}, 2, Distribution::uniform, 9);
      const int reps = nd < 1e6 ? 5 : 2;
      secs.push_back(best_build_seconds(
          [&] {
            if (std::string(which) == "sweep_and_cut") {
              sweep_and_cut(ds, axis, m);
            } else {
              necklace_2g(ds, axis, m);
            }
          },
          reps));
    }
    const double exponent = std::log(secs[2] / secs[0]) / std::log(ns[2] / ns[0]);
    o.require(exponent <= 1.3, std::string(which) + " exponent");
    o.detail << which << " " << secs[0] << "/" << secs[1] << "/" << secs[2] << " s, exponent " << exponent << "; ";
  }
  const Dataset ds = generate_synthetic(200000, 2, {}, 2, Distribution::uniform, 10);
  const HashmapModel m100 = build_cdf(ds, axis, 100);
  const HashmapModel m1000 = build_cdf(ds, axis, 1000);
  const double q100 = measure_query_latency(m100, 200000, 7, 1);
  const double q1000 = measure_query_latency(m1000, 200000, 7, 1);
  o.require(q1000 <= 2.0 * q100, "query latency growth");
  o.detail << "query " << q100 << " ns (m=100) -> " << q1000 << " ns (m=1000)";
}

// 10. Trends on synthetic sweeps.
void trends(Outcome& o) {
  auto base = [](std::uint64_t seed) {
    ExperimentConfig c;
    c.seed = seed;
    c.num_vectors = 20;
    c.latency_probes = 1000;
    c.latency_batches = 1;
    return c;
  };
  // Ratio sweep: equal-size groups, the minority is down-sampled. The
  // experiment algorithms are the baseline, ranking and the two cut-based
  // constructions.
  const std::vector<Algorithm> algos{Algorithm::cdf, Algorithm::ranking_sampled, Algorithm::sweep_cut,
                                     Algorithm::necklace_2g};
  const Dataset mix = generate_synthetic(2000, 2, {}, 2, Distribution::gaussian_mixture, 11);
  for (Algorithm a : algos) {
    ExperimentConfig c = base(1);
    c.algorithm = a;
    c.m = 10;
    c.sweep_axis = SweepAxis::ratio;
    c.sweep_values = {0.25, 0.5, 0.75, 1.0};
    const auto rows = run_experiment(c, mix);
    const std::string name(algorithm_name(a));
    std::vector<double> e;
    for (const auto& r : rows) {
      o.require(r.error.empty(), name + " ratio sweep error: " + r.error);
      e.push_back(r.epsilon);
    }
    o.require(std::is_sorted(e.rbegin(), e.rend()), name + ": eps does not fall as the ratio approaches 1");
    if (a == Algorithm::sweep_cut || a == Algorithm::necklace_2g) {
      for (double v : e) o.require(v == 0.0, name + " pinned at 0 over ratio");
    }
    o.detail << name << " ratio eps";
    for (double v : e) o.detail << " " << v;
    o.detail << "; ";
  }
  // m sweep.
  const Dataset big = generate_synthetic(20000, 2, {}, 2, Distribution::gaussian_mixture, 12);
  for (Algorithm a : algos) {
    ExperimentConfig c = base(2);
    c.algorithm = a;
    c.sweep_axis = SweepAxis::m;
    c.sweep_values = {100, 250, 500, 1000};
    const auto rows = run_experiment(c, big);
    const std::string name(algorithm_name(a));
    std::vector<double> e;
    for (const auto& r : rows) e.push_back(r.epsilon);
    if (a == Algorithm::sweep_cut || a == Algorithm::necklace_2g) {
      for (double v : e) o.require(v == 0.0, name + " pinned at 0 over m");
    } else {
      o.require(std::is_sorted(e.begin(), e.end()), name + ": eps does not grow with m");
    }
    o.detail << name << " m eps";
    for (double v : e) o.detail << " " << v;
    o.detail << "; ";
  }
  // Holdout on a balanced 50K mixture.
  const Dataset holdout = generate_synthetic(50000, 2, {}, 2, Distribution::gaussian_mixture, 13);
  ExperimentConfig c = base(3);
  c.m = 100;
  c.algorithm = Algorithm::necklace_2g;
  const auto neck = holdout_eval(holdout, 0.8, c, 3);
  c.algorithm = Algorithm::cdf;
  const auto cdf = holdout_eval(holdout, 0.8, c, 3);
  o.require(neck.test.unfairness < cdf.test.unfairness, "holdout direction");
  o.detail << "holdout test eps necklace " << neck.test.unfairness << " < cdf " << cdf.test.unfairness;
}

// Golden models: one per construction, on small deterministic data.
std::vector<std::pair<std::string, HashmapModel>> golden_models() {
  std::vector<std::pair<std::string, HashmapModel>> out;
  const Dataset two = generate_synthetic(400, 2, {}, 2, Distribution::gaussian_mixture, 21);
  const Dataset three = generate_synthetic(600, 3, {}, 3, Distribution::uniform, 22);
  const Dataset small = generate_synthetic(60, 2, {}, 2, Distribution::group_separated, 23);
  out.emplace_back("cdf", build_cdf(two, ProjectionVector::axis(2), 16));
  out.emplace_back("sweep_cut", sweep_and_cut(three, ProjectionVector::axis(3), 5));
  out.emplace_back("necklace_2g", necklace_2g(two, ProjectionVector::axis(2), 8));
  out.emplace_back("ranking_exact2d", exact_search_2d(small, 4).model);
  out.emplace_back("ranking_sampled", sampled_search(three, 6, 50, 5).model);
  out.emplace_back("dp_discrepancy", exact_discrepancy_search(small, 3, ExactArrangement{}).model);
  HashmapModel scaled = build_cdf(two, ProjectionVector(Eigen::Vector2d(0.6, 0.8)), 7);
  FeatureScaling s;
  s.min = Eigen::Vector2d(-3.5, 10.0);
  s.max = Eigen::Vector2d(2.25, 250.0);
  scaled.scaling = s;
  scaled.info.seed = 42;
  scaled.info.config_hash = "0123456789abcdef";
  out.emplace_back("cdf_scaled", scaled);
  HashmapModel single;
  single.vector = ProjectionVector::axis(4, 2);
  single.bin_buckets = {0};
  single.m = 1;
  out.emplace_back("single_bucket", single);
  return out;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

int write_golden() {
  const fs::path dir = FAIRHASH_GOLDEN_DIR;
  fs::create_directories(dir);
  nlohmann::json prints = nlohmann::json::object();
  for (const auto& [name, model] : golden_models()) {
    save_model(model, dir / (name + ".fhm.json"));
    prints[name] = hex(query_fingerprint(model, 2024));
  }
  std::ofstream(dir / "fingerprints.json") << prints.dump(2) << '\n';
  std::cout << "wrote " << prints.size() << " golden models to " << dir << '\n';
  return 0;
}

// 11. Golden files: byte-stable round trips and recorded query fingerprints.
void serialization(Outcome& o) {
  const fs::path dir = FAIRHASH_GOLDEN_DIR;
  std::ifstream pf(dir / "fingerprints.json");
  o.require(static_cast<bool>(pf), "missing fingerprints.json");
  if (!pf) return;
  const auto prints = nlohmann::json::parse(pf);
  int files = 0;
  for (const auto& [name, value] : prints.items()) {
    const fs::path path = dir / (name + ".fhm.json");
    const std::string bytes = read_bytes(path);
    HashmapModel model;
    try {
      model = load_model(path);
    } catch (const std::exception& e) {
      o.require(false, name + ": " + e.what());
      continue;
    }
    const fs::path tmp = fs::temp_directory_path() / ("fairhash_golden_" + name + ".fhm.json");
    save_model(model, tmp);
    o.require(read_bytes(tmp) == bytes, name + ": re-serialized bytes differ");
    fs::remove(tmp);
    o.require(hex(query_fingerprint(model, 2024)) == value.get<std::string>(), name + ": fingerprint");
    ++files;
  }
  o.require(files >= 8, "expected 8 golden models");
  o.detail << files << " golden models, 1000-probe fingerprints";
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--write-golden") return write_golden();
    only.insert(std::stoi(a));
  }
  const std::vector<std::pair<const char*, void (*)(Outcome&)>> criteria{
      {"zero-unfair cut constructions", zero_unfair},
      {"CDF baseline invariants", cdf_invariants},
      {"exact ranking vs enumeration", ranking_oracle},
      {"exact <= sampled <= cdf dominance", dominance},
      {"DP vs split enumeration and bound chain", dp_oracle},
      {"local search", local_search_checks},
      {"expected-bins bound", expected_bins},
      {"randomized discrepancy", randomized},
      {"complexity smoke tests", complexity},
      {"sweep trends and holdout", trends},
      {"serialization golden files", serialization},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << ": " << o.detail.str()
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
