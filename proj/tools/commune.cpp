// commune: O-D commute flows -> embeddings -> communities -> income report.
//
// Exit codes: 0 success, 1 computation or input-data error, 2 usage error.
// Failures print one JSON object on stderr.

#include "commune/error.hpp"
#include "commune/kernels.hpp"
#include "commune/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <climits>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace commune;

namespace {

// Bad flags or parameter values, reported with exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

int report_error(const std::string& kind, const std::string& message, int code,
                 std::optional<std::size_t> line = std::nullopt) {
  nlohmann::ordered_json err;
  err["error"] = kind;
  err["message"] = message;
  if (line) err["line"] = *line;
  err["exit_code"] = code;
  std::cerr << err.dump() << '\n';
  return code;
}

CityConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  CityConfig cfg;
  try {
    cfg = parse_city_config(in);
  } catch (const InputError& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  // relative data paths are taken relative to the config file
  const fs::path base = path.parent_path();
  for (std::string* p : {&cfg.od_path, &cfg.income_path, &cfg.geojson_path})
    if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  return cfg;
}

// Flags shared by the subcommands that take tuning parameters. Values are
// only applied when the flag was given, so they override a --config file.
struct Overrides {
  std::string method;
  int dim = 0, k = 0, epochs = 0, restarts = 0, bins = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  std::string city;
  CLI::Option *o_method = nullptr, *o_dim = nullptr, *o_k = nullptr, *o_epochs = nullptr, *o_restarts = nullptr,
              *o_bins = nullptr, *o_lr = nullptr, *o_seed = nullptr, *o_city = nullptr;

  void apply(CityConfig& cfg) const {
    if (o_method && *o_method) {
      try {
        cfg.method = parse_embed_method(method);
      } catch (const InputError& e) {
        throw UsageError(e.what());
      }
    }
    if (o_dim && *o_dim) cfg.embed_dim = dim;
    if (o_k && *o_k) cfg.k = k;
    if (o_epochs && *o_epochs) cfg.epochs = epochs;
    if (o_restarts && *o_restarts) cfg.restarts = restarts;
    if (o_bins && *o_bins) cfg.bins = bins;
    if (o_lr && *o_lr) cfg.learning_rate = lr;
    if (o_seed && *o_seed) cfg.seed = seed;
    if (o_city && *o_city) cfg.city_name = city;
    try {
      cfg.validate();
    } catch (const InputError& e) {
      throw UsageError(e.what());
    }
  }
};

const auto kMethods = CLI::IsMember({"gnn", "vnn", "le", "rw", "svd"});

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  kernels::apply_thread_cap_from_env();

  CLI::App app{"Commute-flow community detection"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  Overrides ov;
  std::optional<std::string> truth, geojson, incomes, resume;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config; flags override its values")->check(CLI::ExistingFile);
  };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", out_dir, "output directory"); };
  auto add_seed = [&](CLI::App* sub) { ov.o_seed = sub->add_option("--seed", ov.seed, "RNG seed"); };

  // synth
  auto* synth = app.add_subcommand("synth", "write a planted-partition O-D instance");
  PlantedSpec spec;
  std::string centers;
  synth->add_option("--n", spec.n, "nodes")->check(CLI::Range(std::int64_t{1}, std::int64_t{1} << 40));
  synth->add_option("--k", spec.k, "planted blocks")->check(CLI::Range(1, INT_MAX));
  synth->add_option("--p-in", spec.p_in, "edge probability within blocks")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--p-out", spec.p_out, "edge probability between blocks")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--w-in", spec.w_in, "mean weight within blocks");
  synth->add_option("--w-out", spec.w_out, "mean weight between blocks");
  synth->add_option("--income-centers", centers, "comma-separated USD center per block");
  synth->add_option("--seed", spec.seed, "RNG seed");
  add_out(synth);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "aggregate an O-D file to tracts");
  std::string od_path;
  IngestOptions io;
  ingest->add_option("--od", od_path, "O-D CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--incomes", incomes, "tract income CSV")->check(CLI::ExistingFile);
  ingest->add_option("--geoid-length", io.geoid_length, "characters of the tract GEOID")
      ->check(CLI::Range(1, INT_MAX));
  ingest->add_option("--origin-column", io.columns.origin);
  ingest->add_option("--dest-column", io.columns.dest);
  ingest->add_option("--flow-column", io.columns.flow);
  add_out(ingest);

  // embed
  auto* embed = app.add_subcommand("embed", "embed a tract graph");
  std::string graph_path;
  embed->add_option("--graph", graph_path, "graph.csv from ingest")->required()->check(CLI::ExistingFile);
  ov.o_method = embed->add_option("--method", ov.method, "gnn, vnn, le, rw or svd")->check(kMethods);
  ov.o_dim = embed->add_option("--dim", ov.dim, "embedding dimension")->check(CLI::Range(2, INT_MAX));
  ov.o_epochs = embed->add_option("--epochs", ov.epochs, "training epochs")->check(CLI::Range(1, INT_MAX));
  ov.o_lr = embed->add_option("--lr", ov.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  embed->add_option("--resume", resume, "checkpoint to re-emit embeddings from")->check(CLI::ExistingFile);
  add_seed(embed);
  add_config(embed);
  add_out(embed);

  // cluster
  auto* cluster = app.add_subcommand("cluster", "k-means on an embeddings file");
  std::string embeddings_path;
  cluster->add_option("--embeddings", embeddings_path, "embeddings.csv")->required()->check(CLI::ExistingFile);
  auto* o_cluster_k = cluster->add_option("--k", ov.k, "communities")->check(CLI::Range(2, INT_MAX));
  auto* o_cluster_restarts =
      cluster->add_option("--restarts", ov.restarts, "k-means restarts")->check(CLI::Range(1, INT_MAX));
  auto* o_cluster_seed = cluster->add_option("--seed", ov.seed, "RNG seed");
  add_config(cluster);
  add_out(cluster);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "modularity and income divergence report");
  std::string assignments_path;
  evaluate->add_option("--graph", graph_path, "graph.csv")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--assignments", assignments_path, "assignments.csv")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--incomes", incomes, "incomes.csv")->check(CLI::ExistingFile);
  evaluate->add_option("--truth", truth, "ground-truth assignments for NMI")->check(CLI::ExistingFile);
  evaluate->add_option("--geojson", geojson, "tract polygons to tag")->check(CLI::ExistingFile);
  auto* o_eval_method = evaluate->add_option("--method", ov.method, "method label for the report");
  auto* o_eval_city = evaluate->add_option("--city", ov.city, "city label for the report");
  auto* o_eval_bins = evaluate->add_option("--bins", ov.bins, "income histogram bins")->check(CLI::Range(2, INT_MAX));
  auto* o_eval_seed = evaluate->add_option("--seed", ov.seed, "seed recorded in the report");
  add_config(evaluate);
  add_out(evaluate);

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "ingest, embed, cluster and evaluate one or more cities");
  std::string cities;
  bool comparator = false, do_resume = false;
  auto* o_pipe_config = pipeline->add_option("--config", config_path, "city config")->check(CLI::ExistingFile);
  auto* o_cities = pipeline->add_option("--cities", cities, "comma-separated city configs, run in parallel");
  o_pipe_config->excludes(o_cities);
  auto* o_pipe_method = pipeline->add_option("--method", ov.method, "gnn, vnn, le, rw or svd")->check(kMethods);
  auto* o_pipe_dim = pipeline->add_option("--dim", ov.dim, "embedding dimension")->check(CLI::Range(2, INT_MAX));
  auto* o_pipe_k = pipeline->add_option("--k", ov.k, "communities")->check(CLI::Range(2, INT_MAX));
  auto* o_pipe_epochs = pipeline->add_option("--epochs", ov.epochs, "training epochs")->check(CLI::Range(1, INT_MAX));
  auto* o_pipe_lr = pipeline->add_option("--lr", ov.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  auto* o_pipe_restarts =
      pipeline->add_option("--restarts", ov.restarts, "k-means restarts")->check(CLI::Range(1, INT_MAX));
  auto* o_pipe_bins = pipeline->add_option("--bins", ov.bins, "income histogram bins")->check(CLI::Range(2, INT_MAX));
  auto* o_pipe_seed = pipeline->add_option("--seed", ov.seed, "RNG seed");
  pipeline->add_option("--truth", truth, "ground-truth assignments for NMI")->check(CLI::ExistingFile);
  pipeline->add_flag("--comparator", comparator, "also run the modularity optimizer");
  pipeline->add_flag("--resume", do_resume, "reuse embeddings if the inputs are unchanged");
  add_out(pipeline);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 2);
  }

  try {
    const fs::path out(out_dir);
    const auto base_config = [&]() {
      return config_path.empty() ? CityConfig{} : load_config(config_path);
    };

    if (*synth) {
      spec.income_centers.clear();
      for (const auto& c : split_commas(centers)) {
        try {
          spec.income_centers.push_back(std::stod(c));
        } catch (const std::exception&) {
          throw UsageError("invalid income center '" + c + "'");
        }
      }
      try {
        spec.validate();
      } catch (const InputError& e) {
        throw UsageError(e.what());
      }
      cmd_synth(spec, out);
    } else if (*ingest) {
      cmd_ingest(od_path, incomes ? std::optional<fs::path>(*incomes) : std::nullopt, out, io);
    } else if (*embed) {
      CityConfig cfg = base_config();
      ov.apply(cfg);
      EmbedOptions eo;
      eo.method = cfg.method;
      eo.dim = cfg.embed_dim;
      eo.train.epochs = cfg.epochs;
      eo.train.learning_rate = cfg.learning_rate;
      eo.train.seed = cfg.seed;
      if (resume) eo.resume = *resume;
      cmd_embed(graph_path, out, eo);
    } else if (*cluster) {
      CityConfig cfg = base_config();
      Overrides co;
      co.k = ov.k, co.restarts = ov.restarts, co.seed = ov.seed;
      co.o_k = o_cluster_k, co.o_restarts = o_cluster_restarts, co.o_seed = o_cluster_seed;
      co.apply(cfg);
      cmd_cluster(embeddings_path, out, ClusterOptions{cfg.k, cfg.restarts, cfg.seed});
    } else if (*evaluate) {
      CityConfig cfg = base_config();
      Overrides eo_ov;
      eo_ov.bins = ov.bins, eo_ov.seed = ov.seed, eo_ov.city = ov.city;
      eo_ov.o_bins = o_eval_bins, eo_ov.o_seed = o_eval_seed, eo_ov.o_city = o_eval_city;
      eo_ov.apply(cfg);
      EvaluateOptions eo;
      eo.city = cfg.city_name;
      eo.method = *o_eval_method ? ov.method : to_string(cfg.method);
      eo.bins = cfg.bins;
      eo.seed = cfg.seed;
      if (truth) eo.truth = *truth;
      if (geojson) eo.geojson = *geojson;
      const RunReport r =
          cmd_evaluate(graph_path, assignments_path, incomes ? std::optional<fs::path>(*incomes) : std::nullopt,
                       out, eo);
      std::cout << report_to_json(r);
    } else if (*pipeline) {
      Overrides po = ov;
      po.o_method = o_pipe_method, po.o_dim = o_pipe_dim, po.o_k = o_pipe_k, po.o_epochs = o_pipe_epochs;
      po.o_lr = o_pipe_lr, po.o_restarts = o_pipe_restarts, po.o_bins = o_pipe_bins, po.o_seed = o_pipe_seed;
      po.o_city = nullptr;
      if (!cities.empty()) {
        std::vector<CityConfig> configs;
        for (const auto& path : split_commas(cities)) {
          CityConfig cfg = load_config(path);
          po.apply(cfg);
          if (comparator) cfg.run_comparator = true;
          configs.push_back(std::move(cfg));
        }
        if (truth || do_resume) throw UsageError("--truth and --resume apply to a single --config run");
        for (const auto& r : cmd_pipeline_many(configs, out)) std::cout << results_csv_row(r);
      } else {
        if (config_path.empty()) throw UsageError("pipeline needs --config or --cities");
        CityConfig cfg = load_config(config_path);
        po.apply(cfg);
        if (comparator) cfg.run_comparator = true;
        PipelineOptions opts;
        opts.config_path = config_path;
        if (truth) opts.truth = *truth;
        opts.resume = do_resume;
        std::cout << report_to_json(cmd_pipeline(cfg, out, opts));
      }
    }
  } catch (const UsageError& e) {
    return report_error("usage", e.what(), 2);
  } catch (const ParseError& e) {
    return report_error("parse", e.what(), 1, e.line());
  } catch (const TrainingError& e) {
    return report_error("training", e.what(), 1);
  } catch (const InputError& e) {
    return report_error("input", e.what(), 1);
  } catch (const ComputeError& e) {
    return report_error("compute", e.what(), 1);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
