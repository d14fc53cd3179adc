#include "commune/graph.hpp"

#include "commune/error.hpp"
#include "commune/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

namespace commune {

double Csr::at(std::int64_t i, std::int64_t j) const {
  const auto first = col.begin() + row_ptr[i];
  const auto last = col.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return val[it - col.begin()];
}

double Csr::row_sum(std::int64_t i) const {
  double s = 0.0;
  for (std::int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += val[p];
  return s;
}

Matrix Csr::dense() const {
  Matrix m = Matrix::Zero(n, n);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) m(i, col[p]) = val[p];
  return m;
}

Csr Csr::transpose() const {
  Csr t;
  t.n = n;
  t.row_ptr.assign(n + 1, 0);
  for (std::int64_t c : col) ++t.row_ptr[c + 1];
  std::partial_sum(t.row_ptr.begin(), t.row_ptr.end(), t.row_ptr.begin());
  t.col.resize(col.size());
  t.val.resize(val.size());
  std::vector<std::int64_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  // rows visited in ascending order keep each transposed row sorted
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      const std::int64_t dst = next[col[p]]++;
      t.col[dst] = i;
      t.val[dst] = val[p];
    }
  }
  return t;
}

std::vector<double> CommuteGraph::degrees() const {
  std::vector<double> k(n());
  for (std::int64_t i = 0; i < n(); ++i) k[i] = weights.row_sum(i);
  return k;
}

std::int64_t CommuteGraph::index_of(const std::string& id) const {
  const auto it = std::lower_bound(node_ids.begin(), node_ids.end(), id);
  if (it == node_ids.end() || *it != id) return -1;
  return it - node_ids.begin();
}

CommuteGraph build_graph(const std::vector<FlowRecord>& records) {
  if (records.empty()) throw InputError("empty graph: no flow records");

  for (std::size_t r = 0; r < records.size(); ++r) {
    const FlowRecord& rec = records[r];
    const std::string context =
        "record " + std::to_string(r + 1) + " (" + rec.origin + " -> " + rec.dest + ")";
    if (rec.origin.empty() || rec.dest.empty()) throw InputError(context + ": empty tract id");
    if (!std::isfinite(rec.flow)) throw InputError(context + ": non-finite flow");
    if (rec.flow < 0.0)
      throw InputError(context + ": negative flow " + std::to_string(rec.flow));
  }

  CommuteGraph g;
  g.node_ids = build_tract_index(records);
  const auto n = g.n();

  std::map<std::pair<std::int64_t, std::int64_t>, double> directed;
  for (const FlowRecord& rec : records)
    directed[{g.index_of(rec.origin), g.index_of(rec.dest)}] += rec.flow;

  for (const auto& [pair, f] : directed) {
    g.total_directed_flow += f;
    if (f > 0.0) ++g.directed_nonzero_count;
  }

  // Unordered pair i < j -> averaged weight.
  std::map<std::pair<std::int64_t, std::int64_t>, double> undirected;
  for (const auto& [pair, f] : directed) {
    const auto [i, j] = pair;
    if (i == j) continue;
    const auto key = std::minmax(i, j);
    if (undirected.contains(key)) continue;
    const auto fwd = directed.find(key);
    const auto bwd = directed.find({key.second, key.first});
    const double a = fwd == directed.end() ? 0.0 : fwd->second;
    const double b = bwd == directed.end() ? 0.0 : bwd->second;
    undirected[key] = (a + b) / 2.0;
  }

  std::vector<std::vector<std::pair<std::int64_t, double>>> adj(n);
  for (const auto& [pair, w] : undirected) {
    if (w <= 0.0) continue;
    adj[pair.first].emplace_back(pair.second, w);
    adj[pair.second].emplace_back(pair.first, w);
  }

  Csr& csr = g.weights;
  csr.n = n;
  csr.row_ptr.assign(1, 0);
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    for (const auto& [j, w] : row) {
      csr.col.push_back(j);
      csr.val.push_back(w);
    }
    csr.row_ptr.push_back(static_cast<std::int64_t>(csr.col.size()));
  }
  return g;
}

GraphStats graph_stats(const CommuteGraph& g) {
  if (g.n() == 0) throw InputError("graph_stats: empty graph");
  const double n = static_cast<double>(g.n());
  return {g.n(), g.directed_nonzero_count, g.total_directed_flow / (n * n)};
}

PropagationMatrix normalize_adjacency(const CommuteGraph& g) {
  if (g.n() == 0) throw InputError("normalize_adjacency: empty graph");
  const Csr& w = g.weights;
  Csr p;
  p.n = w.n;
  p.row_ptr.assign(1, 0);
  for (std::int64_t i = 0; i < w.n; ++i) {
    std::vector<std::pair<std::int64_t, double>> row;
    row.reserve(w.row_ptr[i + 1] - w.row_ptr[i] + 1);
    for (std::int64_t q = w.row_ptr[i]; q < w.row_ptr[i + 1]; ++q) row.emplace_back(w.col[q], w.val[q]);
    row.emplace_back(i, 1.0);
    std::sort(row.begin(), row.end());
    double total = 0.0;
    for (const auto& e : row) total += e.second;
    for (const auto& [j, v] : row) {
      p.col.push_back(j);
      p.val.push_back(v / total);
    }
    p.row_ptr.push_back(static_cast<std::int64_t>(p.col.size()));
  }
  PropagationMatrix out;
  out.rows_transposed = p.transpose();
  out.rows = std::move(p);
  return out;
}

Matrix log_transform(const CommuteGraph& g) {
  const Csr& w = g.weights;
  Matrix t = Matrix::Zero(w.n, w.n);
  for (std::int64_t i = 0; i < w.n; ++i)
    for (std::int64_t p = w.row_ptr[i]; p < w.row_ptr[i + 1]; ++p) t(i, w.col[p]) = std::log1p(w.val[p]);
  return t;
}

std::vector<std::vector<std::int64_t>> connected_components(const CommuteGraph& g) {
  const Csr& w = g.weights;
  std::vector<int> seen(w.n, 0);
  std::vector<std::vector<std::int64_t>> comps;
  for (std::int64_t s = 0; s < w.n; ++s) {
    if (seen[s]) continue;
    std::vector<std::int64_t> comp{s};
    seen[s] = 1;
    for (std::size_t head = 0; head < comp.size(); ++head) {
      const std::int64_t u = comp[head];
      for (std::int64_t p = w.row_ptr[u]; p < w.row_ptr[u + 1]; ++p) {
        const std::int64_t v = w.col[p];
        if (!seen[v]) {
          seen[v] = 1;
          comp.push_back(v);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

CommuteGraph induced_subgraph(const CommuteGraph& g, const std::vector<std::int64_t>& nodes) {
  std::vector<std::int64_t> local(g.n(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<std::int64_t>(i);
  CommuteGraph sub;
  sub.weights.n = static_cast<std::int64_t>(nodes.size());
  sub.weights.row_ptr.assign(1, 0);
  for (std::int64_t u : nodes) {
    sub.node_ids.push_back(g.node_ids[u]);
    for (std::int64_t p = g.weights.row_ptr[u]; p < g.weights.row_ptr[u + 1]; ++p) {
      const std::int64_t v = local[g.weights.col[p]];
      if (v < 0) continue;
      sub.weights.col.push_back(v);
      sub.weights.val.push_back(g.weights.val[p]);
    }
    sub.weights.row_ptr.push_back(static_cast<std::int64_t>(sub.weights.col.size()));
  }
  return sub;
}

}  // namespace commune
