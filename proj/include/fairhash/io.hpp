#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fairhash/types.hpp"

namespace fairhash {

// A column named in the header, or a zero-based position.
using ColumnRef = std::variant<std::string, Index>;

struct IngestSpec {
  std::filesystem::path path;
  std::vector<ColumnRef> feature_columns;
  ColumnRef group_column = Index{0};
  char delimiter = ',';
  bool normalize = true;
  double subsample_fraction = 1.0;
  std::optional<double> minority_ratio_target;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IngestResult {
  Dataset dataset;
  std::vector<std::string> feature_names;
  FeatureScaling scaling;
  std::vector<bool> constant_columns;
  std::vector<std::string> warnings;
};

// One parsed record with the 1-based line it started on.
struct CsvRecord {
  std::vector<std::string> fields;
  long line = 0;
};

// Reads delimited text: quoted fields may contain the delimiter, line
// breaks and doubled quotes. Blank lines are skipped.
class CsvReader {
 public:
  CsvReader(std::istream& in, char delimiter = ',') : in_(in), delim_(delimiter) {}
  bool next(CsvRecord& record);

 private:
  std::istream& in_;
  char delim_;
  long line_ = 0;
};

// Index of `ref` in `header`; throws SchemaError when it cannot be resolved.
std::size_t resolve_column(const std::vector<std::string>& header, const ColumnRef& ref);

// Parses a whole cell as a finite double; throws ParseError naming `line`.
double parse_number(const std::string& cell, long line, const std::string& column);

IngestResult ingest_csv(const IngestSpec& spec);

// Rows with a new group assignment and their original order kept.
Dataset select_rows(const Dataset& dataset, const std::vector<Index>& rows);

// Seeded down-sampling so the smallest group is `target` times the largest.
// Groups above |min| / target are trimmed; if the minority is already too
// large relative to the majority, the minority is trimmed instead.
Dataset resample_to_ratio(const Dataset& dataset, double target, std::uint64_t seed);

// Seeded uniform subset of round(fraction * n) rows (at least one).
Dataset subsample(const Dataset& dataset, double fraction, std::uint64_t seed);

enum class Distribution { uniform, gaussian_mixture, group_separated };

Distribution parse_distribution(const std::string& name);

// Group 0 has weight 1 and group i weight minority_ratios[i-1]; an empty list
// means equal groups. Points of group g are generated as a block.
Dataset generate_synthetic(Index n, int k, const std::vector<double>& minority_ratios, Index d,
                           Distribution distribution, std::uint64_t seed);

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const HashmapModel& model);
HashmapModel model_from_json(const std::string& text);

void save_model(const HashmapModel& model, const std::filesystem::path& path);
HashmapModel load_model(const std::filesystem::path& path);

// FNV-1a over the bucket ids of `probes` seeded points drawn uniformly from
// [lo, hi]^d.
std::uint64_t query_fingerprint(const HashmapModel& model, std::uint64_t seed, Index probes = 1000,
                                double lo = -0.25, double hi = 1.25);

}  // namespace fairhash
