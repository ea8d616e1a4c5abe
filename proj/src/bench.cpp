#include "fairhash/bench.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "fairhash/cdf.hpp"
#include "fairhash/core.hpp"
#include "fairhash/cut.hpp"
#include "fairhash/error.hpp"
#include "fairhash/io.hpp"
#include "fairhash/random.hpp"
#include "fairhash/ranking.hpp"

#ifndef FAIRHASH_GIT_DESCRIBE
#define FAIRHASH_GIT_DESCRIBE "unknown"
#endif

namespace fairhash {

using nlohmann::json;

namespace {

constexpr std::pair<Algorithm, std::string_view> kAlgorithms[] = {
    {Algorithm::cdf, "cdf"},
    {Algorithm::ranking_exact2d, "ranking_exact2d"},
    {Algorithm::ranking_sampled, "ranking_sampled"},
    {Algorithm::sweep_cut, "sweep_cut"},
    {Algorithm::necklace_2g, "necklace_2g"},
    {Algorithm::dp_discrepancy, "dp_discrepancy"},
    {Algorithm::randomized_discrepancy, "randomized_discrepancy"},
};

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

// Above this size the planar DP switches to sampled directions: the exact
// arrangement has O(n^2) cells, each costing an O(n^2 m) DP.
constexpr Index kExactDiscrepancyLimit = 200;

}  // namespace

std::string_view algorithm_name(Algorithm a) {
  for (const auto& [alg, name] : kAlgorithms) {
    if (alg == a) return name;
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  const std::string key = squash(name);
  for (const auto& [alg, canonical] : kAlgorithms) {
    if (squash(canonical) == key) return alg;
  }
  if (key == "dp") return Algorithm::dp_discrepancy;
  if (key == "randomized") return Algorithm::randomized_discrepancy;
  if (key == "necklace") return Algorithm::necklace_2g;
  if (key == "ranking") return Algorithm::ranking_sampled;
  throw InvalidArgument("unknown algorithm '" + std::string(name) +
                        "' (expected cdf, ranking_exact2d, ranking_sampled, sweep_cut, necklace_2g, dp_discrepancy "
                        "or randomized_discrepancy)");
}

std::string_view sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::none:
      return "none";
    case SweepAxis::n:
      return "n";
    case SweepAxis::m:
      return "m";
    case SweepAxis::ratio:
      return "ratio";
    case SweepAxis::vectors:
      return "vectors";
  }
  return "none";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::none, SweepAxis::n, SweepAxis::m, SweepAxis::ratio, SweepAxis::vectors}) {
    if (sweep_axis_name(a) == name) return a;
  }
  throw InvalidArgument("unknown sweep axis '" + std::string(name) + "' (expected n, m, ratio or vectors)");
}

void ExperimentConfig::validate() const {
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (num_vectors < 1) throw InvalidArgument("num_vectors must be at least 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0, 1]");
  if (jobs < 1) throw InvalidArgument("jobs must be at least 1");
  if (latency_probes < 1 || latency_batches < 1) throw InvalidArgument("latency probes and batches must be positive");
  if (local_search) local_search->validate(m);
  if (sweep_axis != SweepAxis::none) {
    if (sweep_values.empty()) throw InvalidArgument("sweep_values must be non-empty");
    if (!std::is_sorted(sweep_values.begin(), sweep_values.end())) {
      throw InvalidArgument("sweep_values must be sorted");
    }
    for (double v : sweep_values) {
      if (!(v > 0.0)) throw InvalidArgument("sweep values must be positive");
      if (sweep_axis == SweepAxis::ratio && v > 1.0) throw InvalidArgument("ratio sweep values must lie in (0, 1]");
      if ((sweep_axis == SweepAxis::m || sweep_axis == SweepAxis::vectors) && v != std::floor(v)) {
        throw InvalidArgument("m and vectors sweep values must be integers");
      }
    }
  }
}

json ExperimentConfig::to_json() const {
  json j{{"algorithm", std::string(algorithm_name(algorithm))},
         {"m", m},
         {"num_vectors", num_vectors},
         {"seed", seed},
         {"gamma", gamma},
         {"delta", delta},
         {"sweep_axis", std::string(sweep_axis_name(sweep_axis))},
         {"sweep_values", sweep_values}};
  if (local_search) {
    j["local_search"] = {{"max_iterations", local_search->max_iterations},
                         {"single_fairness_min", local_search->single_fairness_min},
                         {"single_fairness_max", local_search->single_fairness_max},
                         {"collision_max", local_search->collision_max}};
  }
  return j;
}

void ExperimentConfig::update_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  try {
    if (j.contains("algorithm")) algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    if (j.contains("m")) m = j.at("m").get<int>();
    if (j.contains("num_vectors")) num_vectors = j.at("num_vectors").get<Index>();
    if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("gamma")) gamma = j.at("gamma").get<double>();
    if (j.contains("delta")) delta = j.at("delta").get<double>();
    if (j.contains("sweep_axis")) sweep_axis = parse_sweep_axis(j.at("sweep_axis").get<std::string>());
    if (j.contains("sweep_values")) sweep_values = j.at("sweep_values").get<std::vector<double>>();
    if (j.contains("jobs")) jobs = j.at("jobs").get<int>();
    if (j.contains("local_search") && !j.at("local_search").is_null()) {
      const json& ls = j.at("local_search");
      LocalSearchConfig c;
      c.max_iterations = ls.value("max_iterations", c.max_iterations);
      c.single_fairness_min = ls.value("single_fairness_min", c.single_fairness_min);
      c.single_fairness_max = ls.value("single_fairness_max", c.single_fairness_max);
      c.collision_max = ls.value("collision_max", c.collision_max);
      local_search = c;
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad config field: ") + e.what());
  }
}

std::string ExperimentConfig::hash() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string build_version() { return FAIRHASH_GIT_DESCRIBE; }

HashmapModel build_model(const Dataset& dataset, const ExperimentConfig& config) {
  config.validate();
  const int m = config.m;
  const ProjectionVector e1 = ProjectionVector::axis(dataset.dim(), 0);
  HashmapModel model;
  switch (config.algorithm) {
    case Algorithm::cdf:
      model = build_cdf(dataset, e1, m);
      break;
    case Algorithm::ranking_exact2d:
      model = exact_search_2d(dataset, m).model;
      break;
    case Algorithm::ranking_sampled:
      model = sampled_search(dataset, m, config.num_vectors, config.seed, config.jobs).model;
      break;
    case Algorithm::sweep_cut:
      model = sweep_and_cut(dataset, e1, m);
      break;
    case Algorithm::necklace_2g:
      model = necklace_2g(dataset, e1, m);
      break;
    case Algorithm::dp_discrepancy: {
      if (dataset.dim() == 2 && dataset.size() <= kExactDiscrepancyLimit) {
        model = exact_discrepancy_search(dataset, m, ExactArrangement{}, config.jobs).model;
      } else {
        model = exact_discrepancy_search(dataset, m, SampledVectors{config.num_vectors, config.seed}, config.jobs).model;
        if (dataset.dim() == 2) {
          model.info.warnings.push_back("n > " + std::to_string(kExactDiscrepancyLimit) +
                                        ": searched sampled directions instead of the full arrangement");
        }
      }
      break;
    }
    case Algorithm::randomized_discrepancy: {
      RandomizedOptions opt;
      opt.gamma = config.gamma;
      opt.delta = config.delta;
      opt.seed = config.seed;
      opt.fallback_vectors = config.num_vectors;
      auto r = randomized_discrepancy(dataset, m, opt);
      model = std::move(r.model);
      model.info.warnings.insert(model.info.warnings.end(), r.notes.begin(), r.notes.end());
      break;
    }
  }
  if (config.local_search) {
    const bool contiguous = model.bin_count() == m && std::is_sorted(model.bin_buckets.begin(), model.bin_buckets.end());
    if (contiguous) {
      model = local_search(dataset, model, *config.local_search).model;
    } else {
      model.info.warnings.push_back("local search skipped: model has more than one bin per bucket");
    }
  }
  model.info.seed = config.seed;
  model.info.config_hash = config.hash();
  return model;
}

double measure_query_latency(const HashmapModel& model, Index probes, int batches, std::uint64_t seed) {
  const Index d = model.vector.dim();
  Rng rng(seed);
  std::vector<double> pts(static_cast<std::size_t>(probes * d));
  for (auto& x : pts) x = rng.uniform();
  std::vector<double> times;
  volatile long sink = 0;
  for (int b = 0; b < batches; ++b) {
    long acc = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (Index t = 0; t < probes; ++t) {
      acc += query(model, std::span<const double>(pts.data() + t * d, static_cast<std::size_t>(d)));
    }
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + acc;
    times.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(probes));
  }
  std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
  return times[times.size() / 2];
}

void apply_sweep_value(SweepAxis axis, double value, ExperimentConfig& config, Dataset& dataset) {
  switch (axis) {
    case SweepAxis::none:
      break;
    case SweepAxis::n: {
      const double fraction = value <= 1.0 ? value : value / static_cast<double>(dataset.size());
      if (fraction > 1.0) throw InvalidArgument("sweep n value exceeds dataset size");
      dataset = subsample(dataset, fraction, config.seed);
      break;
    }
    case SweepAxis::m:
      config.m = static_cast<int>(value);
      break;
    case SweepAxis::ratio:
      dataset = resample_to_ratio(dataset, value, config.seed);
      break;
    case SweepAxis::vectors:
      config.num_vectors = static_cast<Index>(value);
      break;
  }
}

MetricsReport metrics_over_present_groups(const BucketHistogram& hist, Index boundary_count) {
  std::vector<Index> present;
  for (int i = 0; i < hist.k(); ++i) {
    if (hist.group_totals[i] > 0) present.push_back(i);
  }
  if (static_cast<int>(present.size()) == hist.k()) return compute_metrics(hist, boundary_count);
  CountMatrix counts(static_cast<Index>(present.size()), hist.m());
  for (std::size_t r = 0; r < present.size(); ++r) counts.row(static_cast<Index>(r)) = hist.counts.row(present[r]);
  return compute_metrics(BucketHistogram::from_counts(std::move(counts)), boundary_count);
}

std::vector<ReportRow> run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
  config.validate();
  const std::vector<double> values =
      config.sweep_axis == SweepAxis::none ? std::vector<double>{0.0} : config.sweep_values;
  std::vector<ReportRow> rows(values.size());
  const std::string version = build_version();

  const auto run_one = [&](std::size_t idx) {
    ReportRow& row = rows[idx];
    row.sweep_axis = sweep_axis_name(config.sweep_axis);
    row.sweep_value = values[idx];
    row.algorithm = algorithm_name(config.algorithm);
    row.seed = config.seed;
    row.git_describe = version;
    row.config_hash = config.hash();
    ExperimentConfig cfg = config;
    cfg.sweep_axis = SweepAxis::none;
    cfg.sweep_values.clear();
    try {
      Dataset ds = dataset;
      apply_sweep_value(config.sweep_axis, values[idx], cfg, ds);
      row.n = ds.size();
      row.k = ds.num_groups();
      row.m = cfg.m;
      const auto t0 = std::chrono::steady_clock::now();
      const HashmapModel model = build_model(ds, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      row.build_seconds = std::chrono::duration<double>(t1 - t0).count();
      const MetricsReport r = metrics_over_present_groups(histogram(ds, model), model.boundary_count());
      row.epsilon = r.unfairness;
      row.cut_count = r.cut_count;
      row.memory_factor = r.memory_factor;
      row.query_ns = measure_query_latency(model, config.latency_probes, config.latency_batches, config.seed);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), values.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < values.size(); ++i) run_one(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < values.size(); i += workers) run_one(i);
      });
    }
  }
  return rows;
}

const std::vector<std::string> kReportColumns = {
    "sweep_axis", "sweep_value",   "algorithm", "n",    "k",            "m",           "epsilon",    "cut_count",
    "memory_factor", "build_seconds", "query_ns", "seed", "git_describe", "config_hash", "error"};

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string report_row_csv(const ReportRow& r) {
  const std::vector<std::string> cells = {
      csv_escape(r.sweep_axis), num(r.sweep_value),   csv_escape(r.algorithm), std::to_string(r.n),
      std::to_string(r.k),      std::to_string(r.m),  num(r.epsilon),          std::to_string(r.cut_count),
      num(r.memory_factor),     num(r.build_seconds), num(r.query_ns),         std::to_string(r.seed),
      csv_escape(r.git_describe), csv_escape(r.config_hash), csv_escape(r.error)};
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line.push_back(',');
    line += cells[i];
  }
  return line;
}

json report_row_json(const ReportRow& r) {
  json j{{"sweep_axis", r.sweep_axis},
         {"sweep_value", r.sweep_value},
         {"algorithm", r.algorithm},
         {"n", r.n},
         {"k", r.k},
         {"m", r.m},
         {"epsilon", r.epsilon},
         {"cut_count", r.cut_count},
         {"memory_factor", r.memory_factor},
         {"build_seconds", r.build_seconds},
         {"query_ns", r.query_ns},
         {"seed", r.seed},
         {"git_describe", r.git_describe},
         {"config_hash", r.config_hash},
         {"error", r.error}};
  if (!std::isfinite(r.memory_factor)) j["memory_factor"] = nullptr;
  return j;
}

void write_csv_report(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < kReportColumns.size(); ++i) out << (i ? "," : "") << kReportColumns[i];
  out << '\n';
  for (const auto& r : rows) out << report_row_csv(r) << '\n';
  if (!out.flush()) throw DataError("write failed for " + path.string());
}

void write_jsonl_report(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : rows) out << report_row_json(r).dump() << '\n';
  if (!out.flush()) throw DataError("write failed for " + path.string());
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double split, std::uint64_t seed) {
  if (!(split > 0.0 && split < 1.0)) throw InvalidArgument("split must lie in (0, 1)");
  const int k = dataset.num_groups();
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(k));
  for (Index i = 0; i < dataset.size(); ++i) {
    members[static_cast<std::size_t>(dataset.labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  Rng rng(seed);
  std::vector<Index> train;
  std::vector<Index> test;
  for (auto& mem : members) {
    rng.shuffle(std::span<Index>(mem));
    const auto cut = static_cast<std::size_t>(std::llround(split * static_cast<double>(mem.size())));
    train.insert(train.end(), mem.begin(), mem.begin() + static_cast<std::ptrdiff_t>(cut));
    test.insert(test.end(), mem.begin() + static_cast<std::ptrdiff_t>(cut), mem.end());
  }
  if (train.empty() || test.empty()) throw InvalidArgument("split leaves one side empty");
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {select_rows(dataset, train), select_rows(dataset, test)};
}

HoldoutReport holdout_eval(const Dataset& dataset, double split, const ExperimentConfig& config, std::uint64_t seed) {
  auto [train, test] = stratified_split(dataset, split, seed);
  HoldoutReport out;
  out.train_size = train.size();
  out.test_size = test.size();
  for (int g = 0; g < dataset.num_groups(); ++g) {
    const auto& name = dataset.group_names[static_cast<std::size_t>(g)];
    const Index tr = train.group_sizes[static_cast<std::size_t>(g)];
    const Index te = test.group_sizes[static_cast<std::size_t>(g)];
    if (tr == 0 && te > 0) out.flags.push_back("group " + name + " appears in the test side but not in training");
    if (te == 0 && tr > 0) out.flags.push_back("group " + name + " has no test members");
  }
  out.model = build_model(train, config);
  out.train = metrics_over_present_groups(histogram(train, out.model), out.model.boundary_count());
  out.test = metrics_over_present_groups(histogram(test, out.model), out.model.boundary_count());
  return out;
}

}  // namespace fairhash
