#include "fairhash/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairhash/bench.hpp"
#include "fairhash/core.hpp"
#include "fairhash/error.hpp"
#include "fairhash/io.hpp"

namespace fairhash {

using nlohmann::json;

namespace {

// Argument problems found after CLI11 accepted the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

ColumnRef column_ref(const std::string& s) {
  if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) return static_cast<Index>(std::stoll(s));
  return s;
}

struct DataOptions {
  std::string in;
  std::string group;
  std::string features;
  std::string delimiter = ",";
  double subsample = 1.0;
  double ratio = 0.0;  // 0 = keep as ingested
  // Synthetic source, used when `in` is empty.
  Index synthetic_n = 0;
  int synthetic_k = 2;
  std::string synthetic_ratios;
  Index synthetic_d = 2;
  std::string synthetic_distribution = "uniform";

  void attach(CLI::App* app) {
    app->add_option("--in", in, "Input CSV with a header row");
    app->add_option("--group", group, "Group column (name or 0-based index)");
    app->add_option("--features", features, "Comma-separated feature columns");
    app->add_option("--delimiter", delimiter, "Field delimiter")->capture_default_str();
    app->add_option("--subsample", subsample, "Fraction of rows kept, in (0, 1]")->capture_default_str();
    app->add_option("--ratio", ratio, "Target minority / majority ratio, in (0, 1]");
    app->add_option("--synthetic_n", synthetic_n, "Generate this many points instead of reading --in");
    app->add_option("--synthetic_k", synthetic_k, "Synthetic group count")->capture_default_str();
    app->add_option("--synthetic_ratios", synthetic_ratios, "Comma-separated size ratios of groups 1..k-1");
    app->add_option("--synthetic_d", synthetic_d, "Synthetic dimension")->capture_default_str();
    app->add_option("--synthetic_distribution", synthetic_distribution,
                    "uniform, gaussian_mixture or group_separated")
        ->capture_default_str();
  }
};

struct LoadedData {
  Dataset dataset;
  std::optional<FeatureScaling> scaling;
};

LoadedData load_data(const DataOptions& o, std::uint64_t seed, std::ostream& err) {
  if (o.delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
  if (!(o.subsample > 0.0 && o.subsample <= 1.0)) throw UsageError("--subsample must lie in (0, 1]");
  if (o.ratio < 0.0 || o.ratio > 1.0) throw UsageError("--ratio must lie in (0, 1]");
  LoadedData out;
  if (o.in.empty()) {
    if (o.synthetic_n <= 0) throw UsageError("give --in or --synthetic_n");
    std::vector<double> ratios;
    for (const auto& r : split_list(o.synthetic_ratios)) ratios.push_back(std::stod(r));
    Distribution dist;
    try {
      dist = parse_distribution(o.synthetic_distribution);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    try {
      out.dataset = generate_synthetic(o.synthetic_n, o.synthetic_k, ratios, o.synthetic_d, dist, seed);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    if (o.subsample < 1.0) out.dataset = subsample(out.dataset, o.subsample, seed);
    if (o.ratio > 0.0) out.dataset = resample_to_ratio(out.dataset, o.ratio, seed ^ 0x5bd1e995ULL);
    return out;
  }
  if (o.group.empty()) throw UsageError("--group is required with --in");
  if (o.features.empty()) throw UsageError("--features is required with --in");
  IngestSpec spec;
  spec.path = o.in;
  for (const auto& f : split_list(o.features)) spec.feature_columns.push_back(column_ref(f));
  spec.group_column = column_ref(o.group);
  spec.delimiter = o.delimiter[0];
  spec.subsample_fraction = o.subsample;
  if (o.ratio > 0.0) spec.minority_ratio_target = o.ratio;
  spec.seed = seed;
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  IngestResult r = ingest_csv(spec);
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  out.dataset = std::move(r.dataset);
  out.scaling = std::move(r.scaling);
  return out;
}

struct ConfigOptions {
  std::string algorithm = "cdf";
  int m = 100;
  Index num_vectors = 100;
  std::optional<std::uint64_t> seed;
  double gamma = 0.5;
  double delta = 1.0;
  bool local_search = false;
  LocalSearchConfig ls;
  std::string sweep_axis = "none";
  std::string sweep_values;
  int jobs = 1;
  std::string config_path;

  void attach(CLI::App* app) {
    app->add_option("--algorithm,--algo", algorithm, "Construction algorithm")->capture_default_str();
    app->add_option("--m", m, "Number of buckets")->capture_default_str();
    app->add_option("--num_vectors", num_vectors, "Sampled directions")->capture_default_str();
    app->add_option("--seed", seed, "Seed (falls back to FAIRHASH_SEED, then 0)");
    app->add_option("--gamma", gamma, "Discrepancy slack")->capture_default_str();
    app->add_option("--delta", delta, "Grid ratio")->capture_default_str();
    app->add_flag("--local_search", local_search, "Refine contiguous models by local search");
    app->add_option("--max_iterations", ls.max_iterations, "Local search iterations")->capture_default_str();
    app->add_option("--single_fairness_min", ls.single_fairness_min)->capture_default_str();
    app->add_option("--single_fairness_max", ls.single_fairness_max)->capture_default_str();
    app->add_option("--collision_max", ls.collision_max)->capture_default_str();
    app->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
    app->add_option("--config", config_path, "JSON file with the same field names");
  }

  void attach_sweep(CLI::App* app) {
    app->add_option("--sweep_axis", sweep_axis, "n, m, ratio or vectors")->capture_default_str();
    app->add_option("--sweep_values", sweep_values, "Comma-separated sorted values");
  }

  ExperimentConfig resolve(const CLI::App* app) const {
    ExperimentConfig c;
    if (const char* env = std::getenv("FAIRHASH_SEED"); env && *env) {
      try {
        c.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw UsageError(std::string("FAIRHASH_SEED is not an unsigned integer: ") + env);
      }
    }
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw UsageError("cannot open config " + config_path);
      try {
        c.update_from_json(json::parse(f));
      } catch (const json::exception& e) {
        throw UsageError("config " + config_path + " is not valid JSON: " + e.what());
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
    }
    // Flags given on the command line override the config file.
    const auto given = [&](const char* name) { return app->count(name) > 0; };
    try {
      if (given("--algorithm") || config_path.empty()) c.algorithm = parse_algorithm(algorithm);
      if (given("--m") || config_path.empty()) c.m = m;
      if (given("--num_vectors") || config_path.empty()) c.num_vectors = num_vectors;
      if (seed) c.seed = *seed;
      if (given("--gamma") || config_path.empty()) c.gamma = gamma;
      if (given("--delta") || config_path.empty()) c.delta = delta;
      if (given("--jobs") || config_path.empty()) c.jobs = jobs;
      if (local_search) c.local_search = ls;
      if (app->get_option_no_throw("--sweep_axis") != nullptr) {
        if (given("--sweep_axis") || config_path.empty()) c.sweep_axis = parse_sweep_axis(sweep_axis);
        if (given("--sweep_values") || config_path.empty()) {
          c.sweep_values.clear();
          for (const auto& v : split_list(sweep_values)) c.sweep_values.push_back(std::stod(v));
        }
      }
      c.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("bad numeric value: ") + e.what());
    }
    return c;
  }
};

// Library argument errors raised while building mean the data does not meet
// the algorithm's requirements.
template <typename F>
auto as_precondition(F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw PreconditionError(e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

int cmd_build(const CLI::App* app, const DataOptions& data, const ConfigOptions& cfg, const std::string& out_path,
              std::ostream& out, std::ostream& err) {
  const ExperimentConfig config = cfg.resolve(app);
  LoadedData loaded = load_data(data, config.seed, err);
  const auto t0 = std::chrono::steady_clock::now();
  HashmapModel model = as_precondition([&] { return build_model(loaded.dataset, config); });
  const auto t1 = std::chrono::steady_clock::now();
  model.scaling = loaded.scaling;
  for (const auto& w : model.info.warnings) err << "warning: " << w << '\n';
  const MetricsReport r = metrics_over_present_groups(histogram(loaded.dataset, model), model.boundary_count());
  if (!out_path.empty()) save_model(model, out_path);
  out << "algorithm=" << model.info.algorithm << " n=" << loaded.dataset.size() << " k=" << loaded.dataset.num_groups()
      << " m=" << model.m << " epsilon=" << fmt(r.unfairness) << " cuts=" << r.cut_count
      << " alpha=" << fmt(r.memory_factor) << " build_seconds=" << fmt(std::chrono::duration<double>(t1 - t0).count())
      << " config_hash=" << model.info.config_hash << '\n';
  return kExitOk;
}

int cmd_query(const std::string& model_path, const std::string& in_path, const std::string& features,
              const std::string& delimiter, std::istream& in, std::ostream& out) {
  if (delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
  const HashmapModel model = load_model(model_path);
  std::ifstream file;
  std::istream* src = &in;
  if (in_path != "-") {
    file.open(in_path, std::ios::binary);
    if (!file) throw DataError("cannot open " + in_path);
    src = &file;
  }
  CsvReader reader(*src, delimiter[0]);
  CsvRecord header;
  if (!reader.next(header)) return kExitOk;
  std::vector<std::size_t> cols;
  if (features.empty()) {
    for (std::size_t c = 0; c < header.fields.size(); ++c) cols.push_back(c);
  } else {
    for (const auto& f : split_list(features)) cols.push_back(resolve_column(header.fields, column_ref(f)));
  }
  if (static_cast<Index>(cols.size()) != model.vector.dim()) {
    throw SchemaError("probe rows have " + std::to_string(cols.size()) + " feature columns, model expects " +
                      std::to_string(model.vector.dim()));
  }
  std::vector<double> p(cols.size());
  CsvRecord rec;
  while (reader.next(rec)) {
    if (rec.fields.size() != header.fields.size()) {
      throw ParseError("row " + std::to_string(rec.line) + ": expected " + std::to_string(header.fields.size()) +
                           " fields, got " + std::to_string(rec.fields.size()),
                       rec.line);
    }
    for (std::size_t c = 0; c < cols.size(); ++c) p[c] = parse_number(rec.fields[cols[c]], rec.line, header.fields[cols[c]]);
    out << query_raw(model, p) << '\n';
  }
  return kExitOk;
}

json metrics_json(const MetricsReport& r) {
  json j{{"epsilon", r.unfairness},
         {"collision_probability", r.collision_probability},
         {"single_fairness", std::vector<double>(r.single_fairness.begin(), r.single_fairness.end())},
         {"pairwise_fairness", std::vector<double>(r.pairwise_fairness.begin(), r.pairwise_fairness.end())},
         {"cut_count", r.cut_count}};
  j["memory_factor"] = std::isfinite(r.memory_factor) ? json(r.memory_factor) : json(nullptr);
  return j;
}

int cmd_evaluate(const std::string& model_path, const DataOptions& data, std::ostream& out, std::ostream& err) {
  const HashmapModel model = load_model(model_path);
  DataOptions raw = data;
  LoadedData loaded = load_data(raw, 0, err);
  Dataset& ds = loaded.dataset;
  if (model.scaling && loaded.scaling) {
    // Re-project the raw rows with the model's own scaling.
    for (Index i = 0; i < ds.size(); ++i) {
      const Eigen::VectorXd rawrow = loaded.scaling->min.array() +
                                     ds.points.row(i).transpose().array() *
                                         (loaded.scaling->max - loaded.scaling->min).array();
      ds.points.row(i) = model.scaling->apply(rawrow).transpose();
    }
  }
  if (ds.dim() != model.vector.dim()) throw SchemaError("dataset dimension does not match the model");
  const MetricsReport r = metrics_over_present_groups(histogram(ds, model), model.boundary_count());
  json j = metrics_json(r);
  j["n"] = ds.size();
  j["m"] = model.m;
  j["groups"] = ds.group_names;
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_bench(const CLI::App* app, const DataOptions& data, const ConfigOptions& cfg, const std::string& prefix,
              std::ostream& out, std::ostream& err) {
  const ExperimentConfig config = cfg.resolve(app);
  if (prefix.empty()) throw UsageError("--out is required");
  LoadedData loaded = load_data(data, config.seed, err);
  const auto rows = run_experiment(config, loaded.dataset);
  std::size_t failures = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      ++failures;
      err << "[" << r.sweep_axis << "=" << r.sweep_value << "] error: " << r.error << '\n';
    } else {
      err << "[" << r.sweep_axis << "=" << r.sweep_value << "] n=" << r.n << " m=" << r.m
          << " epsilon=" << fmt(r.epsilon) << " cuts=" << r.cut_count << " build_seconds=" << fmt(r.build_seconds)
          << " query_ns=" << fmt(r.query_ns) << '\n';
    }
  }
  write_csv_report(rows, prefix + ".csv");
  write_jsonl_report(rows, prefix + ".jsonl");
  out << prefix << ".csv\n" << prefix << ".jsonl\n";
  return failures == rows.size() ? kExitPrecondition : kExitOk;
}

int cmd_holdout(const CLI::App* app, const DataOptions& data, const ConfigOptions& cfg, double split,
                std::ostream& out, std::ostream& err) {
  const ExperimentConfig config = cfg.resolve(app);
  if (!(split > 0.0 && split < 1.0)) throw UsageError("--split must lie in (0, 1)");
  LoadedData loaded = load_data(data, config.seed, err);
  const HoldoutReport r = as_precondition([&] { return holdout_eval(loaded.dataset, split, config, config.seed); });
  for (const auto& f : r.flags) err << "warning: " << f << '\n';
  json j{{"algorithm", std::string(algorithm_name(config.algorithm))},
         {"train_size", r.train_size},
         {"test_size", r.test_size},
         {"train", metrics_json(r.train)},
         {"test", metrics_json(r.test)},
         {"flags", r.flags}};
  out << j.dump() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fair hashing: build, query and evaluate group-fair hashmaps", "fairhash"};
  app.require_subcommand(1);

  DataOptions data;
  ConfigOptions cfg;
  std::string out_path;
  std::string model_path;
  std::string probe_path = "-";
  std::string probe_features;
  std::string probe_delimiter = ",";
  double split = 0.8;

  CLI::App* build = app.add_subcommand("build", "Build a hashmap and write it as .fhm.json");
  data.attach(build);
  cfg.attach(build);
  build->add_option("--out", out_path, "Model file to write");

  CLI::App* query_cmd = app.add_subcommand("query", "Print one bucket id per probe row");
  query_cmd->add_option("--model", model_path, "Model file")->required();
  query_cmd->add_option("--in", probe_path, "Probe CSV with header, or - for stdin")->capture_default_str();
  query_cmd->add_option("--features", probe_features, "Feature columns (default: all)");
  query_cmd->add_option("--delimiter", probe_delimiter)->capture_default_str();

  CLI::App* evaluate = app.add_subcommand("evaluate", "Fairness metrics of a model on a dataset");
  evaluate->add_option("--model", model_path, "Model file")->required();
  DataOptions eval_data;
  eval_data.attach(evaluate);

  // Experiment defaults follow the usual sweep setup: 20% subsample and a
  // 1:4 minority ratio unless overridden.
  DataOptions bench_data;
  bench_data.subsample = 0.2;
  bench_data.ratio = 0.25;
  ConfigOptions bench_cfg;
  CLI::App* bench = app.add_subcommand("bench", "Run a parameter sweep and write CSV and JSONL reports");
  bench_data.attach(bench);
  bench_cfg.attach(bench);
  bench_cfg.attach_sweep(bench);
  bench->add_option("--out", out_path, "Report path prefix (writes <prefix>.csv and <prefix>.jsonl)");

  DataOptions holdout_data;
  ConfigOptions holdout_cfg;
  CLI::App* holdout = app.add_subcommand("holdout", "Train/test evaluation of one configuration");
  holdout_data.attach(holdout);
  holdout_cfg.attach(holdout);
  holdout->add_option("--split", split, "Training fraction")->capture_default_str();

  std::vector<std::string> argv_store{"fairhash"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (build->parsed()) return cmd_build(build, data, cfg, out_path, out, err);
    if (query_cmd->parsed()) return cmd_query(model_path, probe_path, probe_features, probe_delimiter, in, out);
    if (evaluate->parsed()) return cmd_evaluate(model_path, eval_data, out, err);
    if (bench->parsed()) return cmd_bench(bench, bench_data, bench_cfg, out_path, out, err);
    if (holdout->parsed()) return cmd_holdout(holdout, holdout_data, holdout_cfg, split, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace fairhash
