#include "commune/pipeline.hpp"

#include "commune/communities.hpp"
#include "commune/csv.hpp"
#include "commune/error.hpp"
#include "commune/pse.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace commune {

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::out | mode);
  if (!out) throw ComputeError("cannot write " + path.string());
  return out;
}

std::string read_text(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void append_result(const fs::path& results, const RunReport& r) {
  const bool fresh = !fs::exists(results) || fs::file_size(results) == 0;
  auto out = open_out(results, std::ios::app);
  if (fresh) out << results_csv_header();
  out << results_csv_row(r);
}

}  // namespace

CommuteGraph load_graph(const fs::path& graph_csv) {
  auto in = open_in(graph_csv);
  return build_graph(parse_od_csv(in, 0));
}

IncomeTable load_incomes(const fs::path& income_csv) {
  auto in = open_in(income_csv);
  return parse_income_csv(in);
}

void write_embeddings_csv(const fs::path& path, const std::vector<std::string>& node_ids, const EmbeddingMatrix& x) {
  if (static_cast<Eigen::Index>(node_ids.size()) != x.n()) throw InputError("embeddings do not match node ids");
  auto out = open_out(path);
  out << "geoid";
  for (Eigen::Index c = 0; c < x.d(); ++c) out << ",e" << c;
  out << '\n';
  for (Eigen::Index i = 0; i < x.n(); ++i) {
    out << node_ids[i];
    for (Eigen::Index c = 0; c < x.d(); ++c) out << ',' << csv::format_number(x.values(i, c));
    out << '\n';
  }
}

std::pair<std::vector<std::string>, EmbeddingMatrix> read_embeddings_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  if (!csv::next_line(in, line, line_no)) throw ParseError(1, "embeddings file is empty");
  const auto header = csv::split_line(line);
  if (header.size() < 2 || header[0] != "geoid") throw ParseError(line_no, "expected header geoid,e0,...");
  const std::size_t d = header.size() - 1;
  std::vector<std::string> ids;
  std::vector<double> data;
  while (csv::next_line(in, line, line_no)) {
    const auto fields = csv::split_line(line);
    if (fields.size() != d + 1) throw ParseError(line_no, "expected " + std::to_string(d + 1) + " fields");
    ids.push_back(fields[0]);
    for (std::size_t c = 1; c <= d; ++c) {
      const auto v = csv::parse_number(fields[c]);
      if (!v || !std::isfinite(*v)) throw ParseError(line_no, "non-numeric embedding value '" + fields[c] + "'");
      data.push_back(*v);
    }
  }
  if (ids.empty()) throw ParseError(line_no, "embeddings file has no rows");
  EmbeddingMatrix x;
  x.values = Eigen::Map<const Matrix>(data.data(), static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(d));
  return {std::move(ids), std::move(x)};
}

void write_assignments_csv(const fs::path& path, const std::vector<std::string>& node_ids, const Partition& p) {
  if (node_ids.size() != p.n()) throw InputError("assignments do not match node ids");
  auto out = open_out(path);
  out << "geoid,community\n";
  for (std::size_t i = 0; i < p.n(); ++i) out << node_ids[i] << ',' << p.labels[i] << '\n';
}

Partition read_assignments_csv(const fs::path& path, const std::vector<std::string>& node_ids) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  if (!csv::next_line(in, line, line_no)) throw ParseError(1, "assignments file is empty");
  const auto header = csv::split_line(line);
  const int gc = csv::column_index(header, "geoid");
  const int cc = csv::column_index(header, "community");
  if (gc < 0 || cc < 0) throw ParseError(line_no, "expected columns geoid,community");
  std::map<std::string, int> by_id;
  while (csv::next_line(in, line, line_no)) {
    const auto fields = csv::split_line(line);
    if (fields.size() < header.size()) throw ParseError(line_no, "too few fields");
    const auto v = csv::parse_number(fields[cc]);
    if (!v || *v < 0 || *v != std::floor(*v)) throw ParseError(line_no, "invalid community '" + fields[cc] + "'");
    by_id[fields[gc]] = static_cast<int>(*v);
  }
  std::vector<int> raw;
  raw.reserve(node_ids.size());
  for (const auto& id : node_ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw InputError("assignments file has no community for " + id);
    raw.push_back(it->second);
  }
  return Partition::from_labels(raw);
}

std::string inject_communities(const std::string& geojson, const std::vector<std::string>& node_ids,
                               const Partition& p) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(geojson);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("geojson: ") + e.what());
  }
  if (!doc.contains("features") || !doc["features"].is_array()) throw InputError("geojson: no features array");
  std::map<std::string, int> label;
  for (std::size_t i = 0; i < node_ids.size(); ++i) label[node_ids[i]] = p.labels[i];
  for (auto& feature : doc["features"]) {
    auto& props = feature["properties"];
    if (!props.is_object()) props = nlohmann::ordered_json::object();
    props["community"] = nullptr;
    for (const char* key : {"GEOID", "geoid", "GEOID10", "GEOID20"}) {
      if (!props.contains(key)) continue;
      const auto& v = props[key];
      const std::string id = v.is_string() ? v.get<std::string>() : v.dump();
      const auto it = label.find(id);
      if (it != label.end()) props["community"] = it->second;
      break;
    }
  }
  return doc.dump() + "\n";
}

std::string sha256_file(const fs::path& path) {
  const std::string data = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw ComputeError("sha256 failed for " + path.string());
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

void cmd_ingest(const fs::path& od_path, const std::optional<fs::path>& income_path, const fs::path& out_dir,
                const IngestOptions& options) {
  std::vector<ODRecord> records;
  {
    auto in = open_in(od_path);
    records = parse_od_csv(in, options.geoid_length, options.columns);
  }
  const CommuteGraph g = build_graph(records);
  {
    auto out = open_out(out_dir / "graph.csv");
    write_od_csv(out, records);
  }
  if (income_path) {
    const IncomeTable incomes = load_incomes(*income_path);
    auto out = open_out(out_dir / "incomes.csv");
    write_income_csv(out, incomes);
  }
  const GraphStats stats = graph_stats(g);
  nlohmann::ordered_json doc;
  doc["nodes"] = stats.nodes;
  doc["nonzero_edges"] = stats.nonzero_edges;
  doc["avg_edge_weight"] = stats.avg_edge_weight;
  doc["total_directed_flow"] = g.total_directed_flow;
  auto out = open_out(out_dir / "graph_stats.json");
  out << doc.dump(2) << '\n';
}

EmbeddingMatrix cmd_embed(const fs::path& graph_path, const fs::path& out_dir, const EmbedOptions& options) {
  const CommuteGraph g = load_graph(graph_path);
  options.train.validate();
  if (options.dim < 2) throw InputError("embedding dimension must be >= 2");

  Checkpoint ckpt;
  ckpt.method = to_string(options.method);
  ckpt.config = options.train;
  ckpt.node_ids = g.node_ids;
  std::vector<double> losses;
  EmbeddingMatrix x;

  if (options.resume) {
    auto in = open_in(*options.resume);
    const Checkpoint saved = read_checkpoint(in);
    if (saved.node_ids != g.node_ids) throw InputError("checkpoint was written for a different graph");
    if (saved.method != ckpt.method) throw InputError("checkpoint method is " + saved.method);
    ckpt = saved;
    if (options.method == EmbedMethod::Gnn) {
      x.values = gnn_forward(GnnParams::from_tensors(saved.tensors), normalize_adjacency(g)).h2;
    } else if (options.method == EmbedMethod::Vnn) {
      x.values = VnnParams::from_tensors(saved.tensors).e;
    } else {
      const auto it = saved.tensors.find("embedding");
      if (it == saved.tensors.end()) throw InputError("checkpoint has no embedding tensor");
      x.values = it->second;
    }
    x.method = ckpt.method;
  } else {
    switch (options.method) {
      case EmbedMethod::Gnn: {
        GnnTrainResult r = train_gnn(g, options.dim, options.train);
        x = std::move(r.embedding);
        ckpt.tensors = r.params.to_tensors();
        losses = std::move(r.losses);
        break;
      }
      case EmbedMethod::Vnn: {
        VnnTrainResult r = train_vnn(g, options.dim, options.train);
        x = std::move(r.embedding);
        ckpt.tensors = r.params.to_tensors();
        losses = std::move(r.losses);
        break;
      }
      case EmbedMethod::Le: x = laplacian_eigen_encoding(g, options.dim).embedding; break;
      case EmbedMethod::Rw: x = random_walk_encoding(g, options.dim); break;
      case EmbedMethod::Svd: x = svd_encoding(g, options.dim).embedding; break;
    }
    if (options.method != EmbedMethod::Gnn && options.method != EmbedMethod::Vnn) ckpt.tensors["embedding"] = x.values;
    ckpt.final_loss = losses.empty() ? 0.0 : losses.back();
  }
  if (!x.all_finite()) throw ComputeError("embedding has non-finite entries");

  write_embeddings_csv(out_dir / "embeddings.csv", g.node_ids, x);
  {
    auto out = open_out(out_dir / "checkpoint.json");
    write_checkpoint(out, ckpt);
  }
  if (!losses.empty()) {
    auto out = open_out(out_dir / "losses.csv");
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < losses.size(); ++e) out << e + 1 << ',' << csv::format_number(losses[e]) << '\n';
  }
  return x;
}

Partition cmd_cluster(const fs::path& embeddings_path, const fs::path& out_dir, const ClusterOptions& options) {
  if (options.k < 2) throw InputError("k must be >= 2");
  const auto [ids, x] = read_embeddings_csv(embeddings_path);
  KMeansOptions ko;
  ko.restarts = options.restarts;
  ko.seed = options.seed;
  const KMeansResult r = kmeans(x, options.k, ko);
  write_assignments_csv(out_dir / "assignments.csv", ids, r.partition);
  return r.partition;
}

RunReport cmd_evaluate(const fs::path& graph_path, const fs::path& assignments_path,
                       const std::optional<fs::path>& income_path, const fs::path& out_dir,
                       const EvaluateOptions& options) {
  const CommuteGraph g = load_graph(graph_path);
  const Partition p = read_assignments_csv(assignments_path, g.node_ids);
  const IncomeTable incomes = income_path ? load_incomes(*income_path) : IncomeTable{};
  RunReport r = build_report(options.city, options.method, g, p, incomes, options.bins, options.seed);
  if (options.truth) r.nmi = nmi(p, read_assignments_csv(*options.truth, g.node_ids));
  {
    auto out = open_out(out_dir / "report.json");
    out << report_to_json(r);
  }
  append_result(out_dir / "results.csv", r);
  if (options.geojson) {
    auto out = open_out(out_dir / "communities.geojson");
    out << inject_communities(read_text(*options.geojson), g.node_ids, p);
  }
  return r;
}

RunReport cmd_pipeline(const CityConfig& cfg, const fs::path& out_dir, const PipelineOptions& options) {
  cfg.validate();
  if (cfg.od_path.empty()) throw InputError("config has no od_path");
  fs::create_directories(out_dir);

  std::vector<fs::path> inputs{cfg.od_path};
  if (!cfg.income_path.empty()) inputs.emplace_back(cfg.income_path);
  if (!cfg.geojson_path.empty()) inputs.emplace_back(cfg.geojson_path);
  if (options.config_path) inputs.push_back(*options.config_path);
  if (options.truth) inputs.push_back(*options.truth);
  std::vector<std::string> hashes;
  for (const auto& p : inputs) hashes.push_back(sha256_file(p));

  const fs::path manifest_path = out_dir / "manifest.json";
  bool reuse = false;
  if (options.resume && fs::exists(manifest_path)) {
    const auto saved = nlohmann::json::parse(read_text(manifest_path));
    const auto& recorded = saved.at("inputs");
    if (recorded.size() != inputs.size()) throw ComputeError("manifest lists different inputs; cannot resume");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (recorded[i].at("sha256").get<std::string>() != hashes[i])
        throw ComputeError("input changed since the last run: " + inputs[i].string());
    }
    reuse = fs::exists(out_dir / "embeddings.csv");
  }

  nlohmann::ordered_json manifest;
  manifest["config"] = options.config_path ? options.config_path->string() : std::string();
  manifest["out_dir"] = out_dir.string();
  manifest["started_at"] = utc_now();
  manifest["inputs"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i)
    manifest["inputs"].push_back({{"path", inputs[i].string()}, {"sha256", hashes[i]}});

  IngestOptions io;
  io.geoid_length = cfg.geoid_length;
  io.columns = cfg.columns;
  const std::optional<fs::path> income =
      cfg.income_path.empty() ? std::nullopt : std::optional<fs::path>(cfg.income_path);
  cmd_ingest(cfg.od_path, income, out_dir, io);
  const fs::path graph_csv = out_dir / "graph.csv";
  const std::optional<fs::path> clean_income =
      income ? std::optional<fs::path>(out_dir / "incomes.csv") : std::nullopt;

  if (!reuse) {
    EmbedOptions eo;
    eo.method = cfg.method;
    eo.dim = cfg.embed_dim;
    eo.train.epochs = cfg.epochs;
    eo.train.learning_rate = cfg.learning_rate;
    eo.train.seed = cfg.seed;
    cmd_embed(graph_csv, out_dir, eo);
  }

  ClusterOptions co;
  co.k = cfg.k;
  co.restarts = cfg.restarts;
  co.seed = cfg.seed;
  cmd_cluster(out_dir / "embeddings.csv", out_dir, co);

  fs::remove(out_dir / "results.csv");
  EvaluateOptions eo;
  eo.city = cfg.city_name;
  eo.method = to_string(cfg.method);
  eo.bins = cfg.bins;
  eo.seed = cfg.seed;
  eo.truth = options.truth;
  if (!cfg.geojson_path.empty()) eo.geojson = cfg.geojson_path;
  const RunReport report = cmd_evaluate(graph_csv, out_dir / "assignments.csv", clean_income, out_dir, eo);

  if (cfg.run_comparator) {
    const CommuteGraph g = load_graph(graph_csv);
    OptimizerOptions oo;
    oo.max_k = cfg.k;
    const Partition p = optimize_modularity(g, oo);
    const fs::path cmp_dir = out_dir / "comparator";
    write_assignments_csv(cmp_dir / "assignments.csv", g.node_ids, p);
    const IncomeTable incomes = clean_income ? load_incomes(*clean_income) : IncomeTable{};
    RunReport r = build_report(cfg.city_name, "combo", g, p, incomes, cfg.bins, cfg.seed);
    if (options.truth) r.nmi = nmi(p, read_assignments_csv(*options.truth, g.node_ids));
    auto out = open_out(cmp_dir / "report.json");
    out << report_to_json(r);
    append_result(out_dir / "results.csv", r);
  }

  manifest["finished_at"] = utc_now();
  auto out = open_out(manifest_path);
  out << manifest.dump(2) << '\n';
  return report;
}

std::vector<RunReport> cmd_pipeline_many(const std::vector<CityConfig>& cities, const fs::path& out_root) {
  std::map<std::string, int> seen;
  for (const auto& c : cities)
    if (seen[c.city_name]++ > 0) throw InputError("duplicate city name " + c.city_name);

  const int count = static_cast<int>(cities.size());
  std::vector<RunReport> reports(count);
  std::vector<std::string> errors(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < count; ++i) {
    try {
      reports[i] = cmd_pipeline(cities[i], out_root / cities[i].city_name);
    } catch (const std::exception& e) {
      errors[i] = cities[i].city_name + ": " + e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw ComputeError(e);

  auto out = open_out(out_root / "results.csv");
  out << results_csv_header();
  for (int i = 0; i < count; ++i) {
    const std::string rows = read_text(out_root / cities[i].city_name / "results.csv");
    out << rows.substr(rows.find('\n') + 1);
  }
  return reports;
}

PlantedInstance cmd_synth(const PlantedSpec& spec, const fs::path& out_dir) {
  PlantedInstance inst = generate(spec);
  {
    auto out = open_out(out_dir / "od.csv");
    write_od_csv(out, inst.records);
  }
  write_assignments_csv(out_dir / "labels.csv", inst.graph.node_ids, inst.truth);
  if (!inst.incomes.values.empty()) {
    auto out = open_out(out_dir / "incomes.csv");
    write_income_csv(out, inst.incomes);
  }
  return inst;
}

}  // namespace commune
