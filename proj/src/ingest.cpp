#include "commune/ingest.hpp"

#include "commune/csv.hpp"
#include "commune/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <set>

namespace commune {

namespace {

std::vector<std::string> read_header(std::istream& in, std::size_t& line_no, const char* what) {
  std::string line;
  if (!csv::next_line(in, line, line_no)) return {};
  auto header = csv::split_line(line);
  if (header.empty()) throw ParseError(line_no, std::string(what) + ": empty header");
  return header;
}

int require_column(const std::vector<std::string>& header, const std::string& name, std::size_t line_no) {
  const int idx = csv::column_index(header, name);
  if (idx < 0) throw ParseError(line_no, "missing column '" + name + "'");
  return idx;
}

bool is_missing_token(const std::string& s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower.empty() || lower == "na" || lower == "n/a" || lower == "null" || lower == "nan" || lower == "-";
}

}  // namespace

std::vector<ODRecord> parse_od_csv(std::istream& in, int geoid_length, const ODColumns& columns) {
  if (geoid_length < 0) throw InputError("geoid length must be non-negative");
  std::size_t line_no = 0;
  const auto header = read_header(in, line_no, "O-D file");
  if (header.empty()) throw ParseError(1, "O-D file has no header");
  const int oc = require_column(header, columns.origin, line_no);
  const int dc = require_column(header, columns.dest, line_no);
  const int fc = require_column(header, columns.flow, line_no);
  const auto width = static_cast<std::size_t>(std::max({oc, dc, fc})) + 1;

  std::map<std::pair<std::string, std::string>, double> agg;
  std::string line;
  while (csv::next_line(in, line, line_no)) {
    const auto fields = csv::split_line(line);
    if (fields.size() < width)
      throw ParseError(line_no, "expected at least " + std::to_string(width) + " fields, got " +
                                    std::to_string(fields.size()));
    const std::string& o = fields[oc];
    const std::string& d = fields[dc];
    if (o.empty() || d.empty()) throw ParseError(line_no, "empty geoid");
    if (o.size() < static_cast<std::size_t>(geoid_length) || d.size() < static_cast<std::size_t>(geoid_length))
      throw ParseError(line_no, "geoid shorter than " + std::to_string(geoid_length) + " characters");
    const auto flow = csv::parse_number(fields[fc]);
    if (!flow || !std::isfinite(*flow)) throw ParseError(line_no, "non-numeric flow '" + fields[fc] + "'");
    if (*flow < 0.0) throw ParseError(line_no, "negative flow '" + fields[fc] + "'");
    if (geoid_length == 0)
      agg[{o, d}] += *flow;
    else
      agg[{o.substr(0, geoid_length), d.substr(0, geoid_length)}] += *flow;
  }

  std::vector<ODRecord> out;
  out.reserve(agg.size());
  for (const auto& [key, flow] : agg) out.push_back({key.first, key.second, flow});
  return out;
}

void write_od_csv(std::ostream& out, const std::vector<ODRecord>& records, const ODColumns& columns) {
  out << columns.origin << ',' << columns.dest << ',' << columns.flow << '\n';
  for (const auto& r : records) out << r.origin << ',' << r.dest << ',' << csv::format_number(r.flow) << '\n';
}

std::optional<double> IncomeTable::lookup(const std::string& geoid) const {
  const auto it = values.find(geoid);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

std::size_t IncomeTable::present_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](const auto& kv) { return kv.second.has_value(); }));
}

IncomeTable parse_income_csv(std::istream& in) {
  IncomeTable table;
  std::size_t line_no = 0;
  const auto header = read_header(in, line_no, "income file");
  if (header.empty()) {
    std::clog << "warning: income file is empty; no incomes loaded\n";
    return table;
  }
  const int gc = require_column(header, "geoid", line_no);
  const int ic = require_column(header, "median_household_income", line_no);
  const auto width = static_cast<std::size_t>(std::max(gc, ic)) + 1;

  std::string line;
  while (csv::next_line(in, line, line_no)) {
    const auto fields = csv::split_line(line);
    if (fields.size() < width) throw ParseError(line_no, "too few fields");
    const std::string& geoid = fields[gc];
    if (geoid.empty()) throw ParseError(line_no, "empty geoid");
    const std::string& raw = fields[ic];
    std::optional<double> income;
    if (!is_missing_token(raw)) {
      const auto v = csv::parse_number(raw);
      if (!v || std::isnan(*v)) throw ParseError(line_no, "non-numeric income '" + raw + "'");
      // negative census null codes (-666666666 etc.) and zero mark missing
      if (std::isfinite(*v) && *v > 0.0) income = *v;
    }
    if (table.values.contains(geoid)) throw ParseError(line_no, "duplicate geoid " + geoid);
    table.values.emplace(geoid, income);
  }
  if (table.values.empty()) std::clog << "warning: income file has no data rows\n";
  return table;
}

void write_income_csv(std::ostream& out, const IncomeTable& table) {
  out << "geoid,median_household_income\n";
  for (const auto& [geoid, income] : table.values)
    out << geoid << ',' << (income ? csv::format_number(*income) : std::string()) << '\n';
}

std::vector<std::string> build_tract_index(const std::vector<ODRecord>& records) {
  std::set<std::string> ids;
  for (const auto& r : records) {
    ids.insert(r.origin);
    ids.insert(r.dest);
  }
  return {ids.begin(), ids.end()};
}

std::vector<std::optional<double>> align_incomes(const CommuteGraph& g, const IncomeTable& table) {
  std::vector<std::optional<double>> out;
  out.reserve(g.node_ids.size());
  for (const auto& id : g.node_ids) out.push_back(table.lookup(id));
  return out;
}

std::string to_string(EmbedMethod m) {
  switch (m) {
    case EmbedMethod::Gnn: return "gnn";
    case EmbedMethod::Vnn: return "vnn";
    case EmbedMethod::Le: return "le";
    case EmbedMethod::Rw: return "rw";
    case EmbedMethod::Svd: return "svd";
  }
  return "unknown";
}

EmbedMethod parse_embed_method(const std::string& name) {
  for (EmbedMethod m : {EmbedMethod::Gnn, EmbedMethod::Vnn, EmbedMethod::Le, EmbedMethod::Rw, EmbedMethod::Svd})
    if (to_string(m) == name) return m;
  throw InputError("unknown embedding method '" + name + "' (expected gnn, vnn, le, rw or svd)");
}

void CityConfig::validate() const {
  if (k < 2) throw InputError("k must be >= 2");
  if (embed_dim < 2) throw InputError("embed_dim must be >= 2");
  if (epochs < 1) throw InputError("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InputError("learning_rate must be > 0");
  if (restarts < 1) throw InputError("restarts must be >= 1");
  if (bins < 2) throw InputError("bins must be >= 2");
  if (geoid_length < 1) throw InputError("geoid_length must be >= 1");
}

CityConfig parse_city_config(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("config: expected a JSON object");

  CityConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "city_name") cfg.city_name = value.get<std::string>();
      else if (key == "k") cfg.k = value.get<int>();
      else if (key == "embed_dim") cfg.embed_dim = value.get<int>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "learning_rate") cfg.learning_rate = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "method") cfg.method = parse_embed_method(value.get<std::string>());
      else if (key == "restarts") cfg.restarts = value.get<int>();
      else if (key == "bins") cfg.bins = value.get<int>();
      else if (key == "geoid_length") cfg.geoid_length = value.get<int>();
      else if (key == "origin_column") cfg.columns.origin = value.get<std::string>();
      else if (key == "dest_column") cfg.columns.dest = value.get<std::string>();
      else if (key == "flow_column") cfg.columns.flow = value.get<std::string>();
      else if (key == "od_path") cfg.od_path = value.get<std::string>();
      else if (key == "income_path") cfg.income_path = value.get<std::string>();
      else if (key == "geojson_path") cfg.geojson_path = value.get<std::string>();
      else if (key == "run_comparator") cfg.run_comparator = value.get<bool>();
      else throw InputError("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace commune
