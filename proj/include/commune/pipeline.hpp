#pragma once

// File-level commands behind the `commune` CLI. Each reads its inputs from
// disk, writes deterministic outputs into an output directory and throws
// InputError / ComputeError on failure.

#include "commune/cluster.hpp"
#include "commune/embed.hpp"
#include "commune/evaluate.hpp"
#include "commune/ingest.hpp"
#include "commune/synth.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace commune {

namespace fs = std::filesystem;

// Loads a tract-level graph file written by cmd_ingest (ids kept verbatim).
CommuteGraph load_graph(const fs::path& graph_csv);
IncomeTable load_incomes(const fs::path& income_csv);

void write_embeddings_csv(const fs::path& path, const std::vector<std::string>& node_ids, const EmbeddingMatrix& x);
std::pair<std::vector<std::string>, EmbeddingMatrix> read_embeddings_csv(const fs::path& path);

void write_assignments_csv(const fs::path& path, const std::vector<std::string>& node_ids, const Partition& p);
// Partition aligned to `node_ids`; every id must be assigned.
Partition read_assignments_csv(const fs::path& path, const std::vector<std::string>& node_ids);

// Adds a `community` property to every feature whose GEOID matches a node.
std::string inject_communities(const std::string& geojson, const std::vector<std::string>& node_ids,
                               const Partition& p);

std::string sha256_file(const fs::path& path);

struct IngestOptions {
  int geoid_length = kTractGeoidLength;
  ODColumns columns;
};

// graph.csv (aggregated tract flows), incomes.csv, graph_stats.json
void cmd_ingest(const fs::path& od_path, const std::optional<fs::path>& income_path, const fs::path& out_dir,
                const IngestOptions& options = {});

struct EmbedOptions {
  EmbedMethod method = EmbedMethod::Gnn;
  int dim = 16;
  TrainConfig train;
  std::optional<fs::path> resume;  // checkpoint to re-emit from instead of training
};

// embeddings.csv and checkpoint.json (plus losses.csv for learned methods)
EmbeddingMatrix cmd_embed(const fs::path& graph_path, const fs::path& out_dir, const EmbedOptions& options);

struct ClusterOptions {
  int k = 3;
  int restarts = 10;
  std::uint64_t seed = 0;
};

// assignments.csv
Partition cmd_cluster(const fs::path& embeddings_path, const fs::path& out_dir, const ClusterOptions& options);

struct EvaluateOptions {
  std::string city = "city";
  std::string method = "gnn";
  int bins = 20;
  std::uint64_t seed = 0;
  std::optional<fs::path> truth;    // ground-truth assignments for NMI
  std::optional<fs::path> geojson;  // tract polygons to tag with communities
};

// report.json, appends a row to results.csv, optional communities.geojson
RunReport cmd_evaluate(const fs::path& graph_path, const fs::path& assignments_path,
                       const std::optional<fs::path>& income_path, const fs::path& out_dir,
                       const EvaluateOptions& options);

struct PipelineOptions {
  std::optional<fs::path> config_path;  // recorded in the manifest
  std::optional<fs::path> truth;
  bool resume = false;  // reuse embeddings when the manifest's input hashes match
};

// ingest -> embed -> cluster -> evaluate, plus the modularity comparator when
// cfg.run_comparator is set. Writes manifest.json alongside the outputs.
RunReport cmd_pipeline(const CityConfig& cfg, const fs::path& out_dir, const PipelineOptions& options = {});

// Independent cities in parallel, each under out_root/<city_name>; the
// combined results.csv lists them in input order.
std::vector<RunReport> cmd_pipeline_many(const std::vector<CityConfig>& cities, const fs::path& out_root);

// od.csv, labels.csv and (with income centers) incomes.csv
PlantedInstance cmd_synth(const PlantedSpec& spec, const fs::path& out_dir);

}  // namespace commune
