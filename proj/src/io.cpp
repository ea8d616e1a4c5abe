#include "fairhash/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fairhash/core.hpp"
#include "fairhash/error.hpp"
#include "fairhash/random.hpp"

namespace fairhash {

using nlohmann::json;

void IngestSpec::validate() const {
  if (feature_columns.empty()) throw InvalidArgument("at least one feature column is required");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw InvalidArgument("subsample fraction must lie in (0, 1]");
  }
  if (minority_ratio_target && !(*minority_ratio_target > 0.0 && *minority_ratio_target <= 1.0)) {
    throw InvalidArgument("minority ratio target must lie in (0, 1]");
  }
  for (const auto& f : feature_columns) {
    if (f == group_column) throw InvalidArgument("group column cannot also be a feature column");
  }
}

bool CsvReader::next(CsvRecord& record) {
  record.fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool quoted_field = false;
  int c;
  record.line = line_ + 1;
  while ((c = in_.get()) != EOF) {
    const char ch = static_cast<char>(c);
    any = true;
    if (in_quotes) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.empty() && !quoted_field) {
      in_quotes = true;
      quoted_field = true;
    } else if (ch == delim_) {
      record.fields.push_back(std::move(field));
      field.clear();
      quoted_field = false;
    } else if (ch == '\r') {
      // tolerated before '\n'
    } else if (ch == '\n') {
      ++line_;
      if (record.fields.empty() && field.empty() && !quoted_field) {
        record.line = line_ + 1;
        any = false;
        continue;
      }
      record.fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", record.line);
  if (!any || (record.fields.empty() && field.empty() && !quoted_field)) return false;
  ++line_;
  record.fields.push_back(std::move(field));
  return true;
}

std::size_t resolve_column(const std::vector<std::string>& header, const ColumnRef& ref) {
  if (const auto* name = std::get_if<std::string>(&ref)) {
    const auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw SchemaError("column '" + *name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  }
  const Index pos = std::get<Index>(ref);
  if (pos < 0 || pos >= static_cast<Index>(header.size())) {
    throw SchemaError("column index " + std::to_string(pos) + " out of range (" + std::to_string(header.size()) +
                      " columns)");
  }
  return static_cast<std::size_t>(pos);
}

double parse_number(const std::string& cell, long line, const std::string& column) {
  std::size_t a = 0;
  std::size_t b = cell.size();
  while (a < b && std::isspace(static_cast<unsigned char>(cell[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(cell[b - 1]))) --b;
  const char* first = cell.data() + a;
  const char* last = cell.data() + b;
  if (first != last && *first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (first == last || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("row " + std::to_string(line) + ": column '" + column + "' is not a finite number: '" + cell +
                         "'",
                     line);
  }
  return v;
}

Dataset select_rows(const Dataset& dataset, const std::vector<Index>& rows) {
  PointMatrix pts(static_cast<Index>(rows.size()), dataset.dim());
  std::vector<GroupId> labels(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    pts.row(static_cast<Index>(r)) = dataset.points.row(rows[r]);
    labels[r] = dataset.labels[static_cast<std::size_t>(rows[r])];
  }
  return Dataset::make(std::move(pts), std::move(labels), dataset.group_names, dataset.num_groups());
}

Dataset subsample(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("subsample fraction must lie in (0, 1]");
  if (fraction == 1.0) return dataset;
  const Index keep = std::max<Index>(1, std::llround(fraction * static_cast<double>(dataset.size())));
  std::vector<Index> rows(static_cast<std::size_t>(dataset.size()));
  std::iota(rows.begin(), rows.end(), Index{0});
  Rng rng(seed);
  rng.shuffle(std::span<Index>(rows));
  rows.resize(static_cast<std::size_t>(keep));
  std::sort(rows.begin(), rows.end());
  return select_rows(dataset, rows);
}

Dataset resample_to_ratio(const Dataset& dataset, double target, std::uint64_t seed) {
  if (!(target > 0.0 && target <= 1.0)) throw InvalidArgument("ratio target must lie in (0, 1]");
  const int k = dataset.num_groups();
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(k));
  for (Index i = 0; i < dataset.size(); ++i) members[static_cast<std::size_t>(dataset.labels[static_cast<std::size_t>(i)])].push_back(i);
  Index smallest = std::numeric_limits<Index>::max();
  Index largest = 0;
  int minority = -1;
  for (int g = 0; g < k; ++g) {
    const auto s = static_cast<Index>(members[static_cast<std::size_t>(g)].size());
    if (s == 0) continue;
    if (s < smallest) {
      smallest = s;
      minority = g;
    }
    largest = std::max(largest, s);
  }
  if (minority < 0) return dataset;

  std::vector<Index> cap(static_cast<std::size_t>(k));
  const double current = static_cast<double>(smallest) / static_cast<double>(largest);
  if (current <= target) {
    const Index limit = std::max<Index>(smallest, std::llround(static_cast<double>(smallest) / target));
    for (int g = 0; g < k; ++g) cap[static_cast<std::size_t>(g)] = std::min<Index>(limit, members[static_cast<std::size_t>(g)].size());
  } else {
    for (int g = 0; g < k; ++g) cap[static_cast<std::size_t>(g)] = static_cast<Index>(members[static_cast<std::size_t>(g)].size());
    cap[static_cast<std::size_t>(minority)] = std::max<Index>(1, std::llround(target * static_cast<double>(largest)));
  }

  Rng rng(seed);
  std::vector<Index> rows;
  for (int g = 0; g < k; ++g) {
    auto& mem = members[static_cast<std::size_t>(g)];
    if (static_cast<Index>(mem.size()) > cap[static_cast<std::size_t>(g)]) {
      rng.shuffle(std::span<Index>(mem));
      mem.resize(static_cast<std::size_t>(cap[static_cast<std::size_t>(g)]));
    }
    rows.insert(rows.end(), mem.begin(), mem.end());
  }
  std::sort(rows.begin(), rows.end());
  return select_rows(dataset, rows);
}

IngestResult ingest_csv(const IngestSpec& spec) {
  spec.validate();
  std::ifstream in(spec.path, std::ios::binary);
  if (!in) throw DataError("cannot open " + spec.path.string());
  CsvReader reader(in, spec.delimiter);
  CsvRecord header;
  if (!reader.next(header)) throw SchemaError(spec.path.string() + " is empty");

  std::vector<std::size_t> feature_idx;
  IngestResult out;
  for (const auto& f : spec.feature_columns) {
    feature_idx.push_back(resolve_column(header.fields, f));
    out.feature_names.push_back(header.fields[feature_idx.back()]);
  }
  const std::size_t group_idx = resolve_column(header.fields, spec.group_column);
  if (std::find(feature_idx.begin(), feature_idx.end(), group_idx) != feature_idx.end()) {
    throw SchemaError("group column cannot also be a feature column");
  }

  const Index d = static_cast<Index>(feature_idx.size());
  std::vector<double> values;
  std::vector<std::string> raw_groups;
  CsvRecord rec;
  while (reader.next(rec)) {
    if (rec.fields.size() != header.fields.size()) {
      throw ParseError("row " + std::to_string(rec.line) + ": expected " + std::to_string(header.fields.size()) +
                           " fields, got " + std::to_string(rec.fields.size()),
                       rec.line);
    }
    for (std::size_t c = 0; c < feature_idx.size(); ++c) {
      values.push_back(parse_number(rec.fields[feature_idx[c]], rec.line, out.feature_names[c]));
    }
    raw_groups.push_back(rec.fields[group_idx]);
  }
  if (raw_groups.empty()) throw SchemaError(spec.path.string() + " has no data rows");

  std::map<std::string, GroupId> ids;
  for (const auto& g : raw_groups) ids.emplace(g, 0);
  std::vector<std::string> names;
  for (auto& [name, id] : ids) {
    id = static_cast<GroupId>(names.size());
    names.push_back(name);
  }
  std::vector<GroupId> labels;
  labels.reserve(raw_groups.size());
  for (const auto& g : raw_groups) labels.push_back(ids.at(g));
  if (names.size() == 1) out.warnings.push_back("only one distinct group value; fairness is degenerate");

  const Index n = static_cast<Index>(raw_groups.size());
  PointMatrix points = Eigen::Map<PointMatrix>(values.data(), n, d);
  Dataset ds = Dataset::make(std::move(points), std::move(labels), names);
  if (spec.subsample_fraction < 1.0) ds = subsample(ds, spec.subsample_fraction, spec.seed);
  if (spec.minority_ratio_target) ds = resample_to_ratio(ds, *spec.minority_ratio_target, spec.seed ^ 0x5bd1e995ULL);

  out.scaling.min = ds.points.colwise().minCoeff().transpose();
  out.scaling.max = ds.points.colwise().maxCoeff().transpose();
  out.constant_columns.assign(static_cast<std::size_t>(d), false);
  for (Index c = 0; c < d; ++c) {
    if (out.scaling.min[c] == out.scaling.max[c]) {
      out.constant_columns[static_cast<std::size_t>(c)] = true;
      out.warnings.push_back("feature '" + out.feature_names[static_cast<std::size_t>(c)] +
                             "' is constant; normalized to 0");
    }
  }
  if (spec.normalize) {
    for (Index i = 0; i < ds.size(); ++i) ds.points.row(i) = out.scaling.apply(ds.points.row(i).transpose()).transpose();
  }
  out.dataset = std::move(ds);
  return out;
}

Distribution parse_distribution(const std::string& name) {
  if (name == "uniform") return Distribution::uniform;
  if (name == "gaussian_mixture" || name == "gaussian") return Distribution::gaussian_mixture;
  if (name == "group_separated" || name == "separated") return Distribution::group_separated;
  throw InvalidArgument("unknown distribution '" + name + "'");
}

Dataset generate_synthetic(Index n, int k, const std::vector<double>& minority_ratios, Index d,
                           Distribution distribution, std::uint64_t seed) {
  if (k < 1 || n < k) throw InvalidArgument("need n >= k >= 1");
  if (d < 1) throw InvalidArgument("dimension must be positive");
  if (!minority_ratios.empty() && static_cast<int>(minority_ratios.size()) != k - 1) {
    throw InvalidArgument("need k - 1 minority ratios");
  }
  std::vector<double> weight(static_cast<std::size_t>(k), 1.0);
  for (std::size_t i = 0; i < minority_ratios.size(); ++i) {
    if (!(minority_ratios[i] > 0.0)) throw InvalidArgument("minority ratios must be positive");
    weight[i + 1] = minority_ratios[i];
  }
  // Largest remainder, every group non-empty.
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  std::vector<Index> sizes(static_cast<std::size_t>(k), 1);
  const Index spare = n - k;
  std::vector<std::pair<double, int>> remainder;
  Index used = 0;
  for (int g = 0; g < k; ++g) {
    const double exact = static_cast<double>(spare) * weight[static_cast<std::size_t>(g)] / total;
    const auto whole = static_cast<Index>(std::floor(exact));
    sizes[static_cast<std::size_t>(g)] += whole;
    used += whole;
    remainder.emplace_back(-(exact - static_cast<double>(whole)), g);
  }
  std::sort(remainder.begin(), remainder.end());
  for (Index r = 0; r < spare - used; ++r) ++sizes[static_cast<std::size_t>(remainder[static_cast<std::size_t>(r)].second)];

  Rng rng(seed);
  PointMatrix pts(n, d);
  std::vector<GroupId> labels(static_cast<std::size_t>(n));
  Index row = 0;
  for (int g = 0; g < k; ++g) {
    const double shift = 0.1 * (g - (k - 1) / 2.0);
    for (Index t = 0; t < sizes[static_cast<std::size_t>(g)]; ++t, ++row) {
      labels[static_cast<std::size_t>(row)] = g;
      for (Index c = 0; c < d; ++c) {
        switch (distribution) {
          case Distribution::uniform:
            pts(row, c) = rng.uniform();
            break;
          case Distribution::gaussian_mixture:
            pts(row, c) = 0.5 + shift + 0.15 * rng.normal();
            break;
          case Distribution::group_separated:
            pts(row, c) = c == 0 ? (g + 0.9 * rng.uniform()) / k : rng.uniform();
            break;
        }
      }
    }
  }
  return Dataset::make(std::move(pts), std::move(labels), {}, k);
}

namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw IntegrityError(std::string("model file lacks '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

std::string model_to_json(const HashmapModel& model) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["m"] = model.m;
  j["dim"] = model.vector.dim();
  j["vector"] = std::vector<double>(model.vector.components().begin(), model.vector.components().end());
  j["boundaries"] = model.boundaries;
  j["bin_buckets"] = model.bin_buckets;
  j["provenance"] = {{"algorithm", model.info.algorithm},
                     {"seed", model.info.seed},
                     {"config_hash", model.info.config_hash}};
  if (!model.info.warnings.empty()) j["provenance"]["warnings"] = model.info.warnings;
  if (model.scaling) {
    j["feature_scaling"] = {
        {"min", std::vector<double>(model.scaling->min.begin(), model.scaling->min.end())},
        {"max", std::vector<double>(model.scaling->max.begin(), model.scaling->max.end())}};
  }
  return j.dump(2) + "\n";
}

HashmapModel model_from_json(const std::string& text) {
  HashmapModel model;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw IntegrityError("model file must hold a JSON object");
    const int version = field<int>(j, "format_version");
    if (version != kModelFormatVersion) {
      throw IntegrityError("unsupported model format version " + std::to_string(version) + " (expected " +
                           std::to_string(kModelFormatVersion) + ")");
    }
    model.m = field<int>(j, "m");
    const auto dim = field<Index>(j, "dim");
    const auto w = field<std::vector<double>>(j, "vector");
    if (static_cast<Index>(w.size()) != dim) throw IntegrityError("vector length does not match dim");
    model.vector = ProjectionVector(Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Index>(w.size())));
    model.boundaries = field<std::vector<double>>(j, "boundaries");
    model.bin_buckets = field<std::vector<BucketId>>(j, "bin_buckets");
    if (j.contains("provenance")) {
      const json& p = j.at("provenance");
      model.info.algorithm = p.value("algorithm", std::string{});
      model.info.seed = p.value("seed", std::uint64_t{0});
      model.info.config_hash = p.value("config_hash", std::string{});
      model.info.warnings = p.value("warnings", std::vector<std::string>{});
    }
    if (j.contains("feature_scaling")) {
      const auto lo = field<std::vector<double>>(j.at("feature_scaling"), "min");
      const auto hi = field<std::vector<double>>(j.at("feature_scaling"), "max");
      FeatureScaling s;
      s.min = Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Index>(lo.size()));
      s.max = Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Index>(hi.size()));
      model.scaling = std::move(s);
    }
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw IntegrityError(std::string("malformed model file: ") + e.what());
  }
  model.validate();
  return model;
}

void save_model(const HashmapModel& model, const std::filesystem::path& path) {
  model.validate();
  const std::string text = model_to_json(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw DataError("write failed for " + path.string());
}

HashmapModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

std::uint64_t query_fingerprint(const HashmapModel& model, std::uint64_t seed, Index probes, double lo, double hi) {
  Rng rng(seed);
  const Index d = model.vector.dim();
  std::vector<double> p(static_cast<std::size_t>(d));
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Index t = 0; t < probes; ++t) {
    for (auto& x : p) x = rng.uniform(lo, hi);
    auto b = static_cast<std::uint32_t>(query(model, p));
    for (int byte = 0; byte < 4; ++byte) {
      h ^= (b >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace fairhash
