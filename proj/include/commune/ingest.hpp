#pragma once

#include "commune/graph.hpp"

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace commune {

// Tract-level O-D record (tract ids after block aggregation).
using ODRecord = FlowRecord;

struct ODColumns {
  std::string origin = "h_geocode";
  std::string dest = "w_geocode";
  std::string flow = "S000";
};

inline constexpr int kTractGeoidLength = 11;

// Parses an O-D CSV, truncating block geocodes to their first `geoid_length`
// characters and summing rows that land on the same (origin, dest) pair.
// geoid_length 0 keeps ids verbatim. Output is sorted by (origin, dest).
std::vector<ODRecord> parse_od_csv(std::istream& in, int geoid_length = kTractGeoidLength,
                                   const ODColumns& columns = {});

// Writes records in the format parse_od_csv reads; numbers round-trip exactly.
void write_od_csv(std::ostream& out, const std::vector<ODRecord>& records,
                  const ODColumns& columns = {});

// Median household income per tract. A present key with an empty value marks
// a tract whose income is missing (census sentinel, blank, non-positive).
struct IncomeTable {
  std::map<std::string, std::optional<double>> values;

  std::optional<double> lookup(const std::string& geoid) const;
  std::size_t present_count() const;
};

IncomeTable parse_income_csv(std::istream& in);
void write_income_csv(std::ostream& out, const IncomeTable& table);

// Sorted, de-duplicated union of origin and destination ids.
std::vector<std::string> build_tract_index(const std::vector<ODRecord>& records);

// Income per graph node (aligned with node_ids).
std::vector<std::optional<double>> align_incomes(const CommuteGraph& g, const IncomeTable& table);

enum class EmbedMethod { Gnn, Vnn, Le, Rw, Svd };

std::string to_string(EmbedMethod m);
EmbedMethod parse_embed_method(const std::string& name);

struct CityConfig {
  std::string city_name = "city";
  int k = 3;
  int embed_dim = 16;
  int epochs = 500;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  EmbedMethod method = EmbedMethod::Gnn;
  int restarts = 10;
  int bins = 20;
  int geoid_length = kTractGeoidLength;
  ODColumns columns;
  std::string od_path;
  std::string income_path;
  std::string geojson_path;
  bool run_comparator = false;

  // Throws InputError when an invariant (k >= 2, d >= 2, epochs >= 1, ...) fails.
  void validate() const;
};

// Reads a JSON config document; unknown keys are rejected.
CityConfig parse_city_config(std::istream& in);

}  // namespace commune
