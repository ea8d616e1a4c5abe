#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fairhash/discrepancy.hpp"
#include "fairhash/types.hpp"

namespace fairhash {

enum class Algorithm {
  cdf,
  ranking_exact2d,
  ranking_sampled,
  sweep_cut,
  necklace_2g,
  dp_discrepancy,
  randomized_discrepancy,
};

std::string_view algorithm_name(Algorithm a);

// Accepts canonical names plus spellings without separators or with dashes
// ("necklace2g", "sweep-cut", "dp").
Algorithm parse_algorithm(std::string_view name);

enum class SweepAxis { none, n, m, ratio, vectors };

std::string_view sweep_axis_name(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view name);

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::cdf;
  int m = 100;
  Index num_vectors = 100;
  std::uint64_t seed = 0;
  double gamma = 0.5;
  double delta = 1.0;
  std::optional<LocalSearchConfig> local_search;
  // n: fraction of rows (<= 1) or absolute row count; m: bucket count;
  // ratio: minority / majority target; vectors: sampled directions.
  SweepAxis sweep_axis = SweepAxis::none;
  std::vector<double> sweep_values;
  int jobs = 1;
  Index latency_probes = 100000;
  int latency_batches = 5;

  void validate() const;
  nlohmann::json to_json() const;
  // Fields absent from `j` keep their current values.
  void update_from_json(const nlohmann::json& j);
  // FNV-1a of the canonical JSON dump, as 16 hex digits.
  std::string hash() const;
};

// Builds the configured model (plus local search when configured) with the
// config's m and vector count.
HashmapModel build_model(const Dataset& dataset, const ExperimentConfig& config);

struct ReportRow {
  std::string sweep_axis;
  double sweep_value = 0.0;
  std::string algorithm;
  Index n = 0;
  int k = 0;
  int m = 0;
  double epsilon = 0.0;
  Index cut_count = 0;
  double memory_factor = 0.0;
  double build_seconds = 0.0;
  double query_ns = 0.0;  // median over batches, per probe
  std::uint64_t seed = 0;
  std::string git_describe;
  std::string config_hash;
  std::string error;  // non-empty for failed runs
};

std::string build_version();

// Median per-query latency in nanoseconds over `batches` timed batches.
double measure_query_latency(const HashmapModel& model, Index probes, int batches, std::uint64_t seed);

// One row per sweep value (a single row when there is no sweep axis), in
// sweep order. Failures become rows with `error` set.
std::vector<ReportRow> run_experiment(const ExperimentConfig& config, const Dataset& dataset);

// Applies one sweep value to (config, dataset).
void apply_sweep_value(SweepAxis axis, double value, ExperimentConfig& config, Dataset& dataset);

extern const std::vector<std::string> kReportColumns;

void write_csv_report(const std::vector<ReportRow>& rows, const std::filesystem::path& path);
void write_jsonl_report(const std::vector<ReportRow>& rows, const std::filesystem::path& path);
std::string report_row_csv(const ReportRow& row);
nlohmann::json report_row_json(const ReportRow& row);

struct HoldoutReport {
  MetricsReport train;
  MetricsReport test;
  Index train_size = 0;
  Index test_size = 0;
  // Groups present in the test side but missing from training, and the
  // reverse; such groups are left out of the corresponding metrics.
  std::vector<std::string> flags;
  HashmapModel model;
};

// Per-group seeded shuffle; the first round(split * |g|) members train.
std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double split, std::uint64_t seed);

HoldoutReport holdout_eval(const Dataset& dataset, double split, const ExperimentConfig& config, std::uint64_t seed);

// Metrics over groups that have at least one member in `hist`.
MetricsReport metrics_over_present_groups(const BucketHistogram& hist, Index boundary_count);

}  // namespace fairhash
