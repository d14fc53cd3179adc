#include "commune/communities.hpp"

#include "commune/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace commune {

double modularity(const CommuteGraph& g, const Partition& p) {
  if (static_cast<std::int64_t>(p.n()) != g.n()) throw InputError("modularity: partition does not cover the graph");
  const Csr& w = g.weights;
  std::vector<double> internal(p.k, 0.0);
  std::vector<double> total(p.k, 0.0);
  double two_m = 0.0;
  // internal and total accumulate in the same order, so a single community
  // yields internal == total == two_m bit for bit and Q == 0 exactly
  for (std::int64_t i = 0; i < w.n; ++i) {
    const int ci = p.labels[i];
    for (std::int64_t q = w.row_ptr[i]; q < w.row_ptr[i + 1]; ++q) {
      two_m += w.val[q];
      total[ci] += w.val[q];
      if (p.labels[w.col[q]] == ci) internal[ci] += w.val[q];
    }
  }
  if (!(two_m > 0.0)) throw InputError("modularity: graph has zero total weight");
  double q = 0.0;
  for (int c = 0; c < p.k; ++c) {
    const double frac = total[c] / two_m;
    q += internal[c] / two_m - frac * frac;
  }
  return q;
}

namespace {

constexpr int kNew = -1;

struct MoveSet {
  double gain = -std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> flips;  // nodes that change side
  bool valid = false;
};

class ComboSearch {
 public:
  ComboSearch(const CommuteGraph& g, const OptimizerOptions& options)
      : w_(g.weights), options_(options), degree_(g.degrees()), labels_(g.n(), 0) {
    for (double k : degree_) two_m_ += k;
    if (!(two_m_ > 0.0)) throw InputError("optimize_modularity: graph has zero total weight");
    members_.push_back({});
    for (std::int64_t v = 0; v < g.n(); ++v) members_[0].push_back(v);
    community_degree_.push_back(two_m_);
  }

  Partition run() {
    for (int round = 0; round < options_.max_rounds; ++round) {
      double best_gain = options_.min_gain;
      int best_s = -1;
      int best_t = kNew;
      const std::vector<int> live = live_communities();
      const bool may_grow = !options_.max_k || static_cast<int>(live.size()) < *options_.max_k;
      for (int s : live) {
        // destinations in ascending id order, the fresh community last
        for (int t : live) {
          if (t == s) continue;
          const MoveSet& m = cached(s, t);
          if (m.gain > best_gain) {
            best_gain = m.gain;
            best_s = s;
            best_t = t;
          }
        }
        if (may_grow && members_[s].size() > 1) {
          const MoveSet& m = cached(s, kNew);
          if (m.gain > best_gain) {
            best_gain = m.gain;
            best_s = s;
            best_t = kNew;
          }
        }
      }
      if (best_s < 0) break;
      apply(best_s, best_t);
    }
    return Partition::from_labels(labels_).canonical();
  }

 private:
  std::vector<int> live_communities() const {
    std::vector<int> out;
    for (int c = 0; c < static_cast<int>(members_.size()); ++c)
      if (!members_[c].empty()) out.push_back(c);
    return out;
  }

  const MoveSet& cached(int s, int t) {
    auto& slot = cache_[{s, t}];
    if (!slot.valid) {
      slot = evaluate(s, t);
      slot.valid = true;
    }
    return slot;
  }

  void invalidate(int c) {
    for (auto& [key, m] : cache_)
      if (key.first == c || key.second == c) m.valid = false;
  }

  // Kernighan-Lin sweep over the union of s and t, plus the full merge.
  MoveSet evaluate(int s, int t) const {
    std::vector<std::int64_t> nodes = members_[s];
    if (t != kNew) nodes.insert(nodes.end(), members_[t].begin(), members_[t].end());
    std::sort(nodes.begin(), nodes.end());
    const std::size_t n = nodes.size();

    std::vector<std::int64_t> local(labels_.size(), -1);
    for (std::size_t i = 0; i < n; ++i) local[nodes[i]] = static_cast<std::int64_t>(i);
    std::vector<std::uint8_t> side(n);  // 0 in s, 1 in t
    for (std::size_t i = 0; i < n; ++i) side[i] = labels_[nodes[i]] == s ? 0 : 1;

    // weight from each node to the s and t sides
    std::vector<double> to_side[2] = {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    double between = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t v = nodes[i];
      for (std::int64_t q = w_.row_ptr[v]; q < w_.row_ptr[v + 1]; ++q) {
        const std::int64_t j = local[w_.col[q]];
        if (j < 0) continue;
        adj[i].emplace_back(j, w_.val[q]);
        to_side[side[j]][i] += w_.val[q];
        if (side[i] == 0 && side[j] == 1) between += w_.val[q];
      }
    }
    double kside[2] = {community_degree_[s], t == kNew ? 0.0 : community_degree_[t]};

    MoveSet best;
    best.valid = true;
    if (t != kNew) {
      best.gain = 2.0 * between / two_m_ - 2.0 * kside[0] * kside[1] / (two_m_ * two_m_);
      best.flips = members_[s];
    }

    std::vector<char> locked(n, 0);
    std::vector<std::int64_t> sequence;
    double cumulative = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
      double step_gain = -std::numeric_limits<double>::infinity();
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (locked[i]) continue;
        const int from = side[i];
        const int to = 1 - from;
        const double k = degree_[nodes[i]];
        const double gain = 2.0 * (to_side[to][i] - to_side[from][i]) / two_m_ -
                            2.0 * k * (kside[to] - kside[from] + k) / (two_m_ * two_m_);
        if (gain > step_gain) {
          step_gain = gain;
          pick = i;
        }
      }
      const int from = side[pick];
      const int to = 1 - from;
      locked[pick] = 1;
      side[pick] = static_cast<char>(to);
      kside[from] -= degree_[nodes[pick]];
      kside[to] += degree_[nodes[pick]];
      for (const auto& [j, wij] : adj[pick]) {
        to_side[from][j] -= wij;
        to_side[to][j] += wij;
      }
      cumulative += step_gain;
      sequence.push_back(nodes[pick]);
      if (cumulative > best.gain) {
        best.gain = cumulative;
        best.flips = sequence;
      }
    }
    return best;
  }

  void apply(int s, int t) {
    const MoveSet m = cached(s, t);
    int target = t;
    if (t == kNew) {
      target = static_cast<int>(members_.size());
      members_.push_back({});
      community_degree_.push_back(0.0);
    }
    for (std::int64_t v : m.flips) {
      const int from = labels_[v];
      const int to = from == s ? target : s;
      labels_[v] = to;
      community_degree_[from] -= degree_[v];
      community_degree_[to] += degree_[v];
    }
    for (int c : {s, target}) {
      members_[c].clear();
    }
    for (std::int64_t v = 0; v < static_cast<std::int64_t>(labels_.size()); ++v)
      if (labels_[v] == s || labels_[v] == target) members_[labels_[v]].push_back(v);
    // recompute exactly to stop drift in the running sums
    for (int c : {s, target}) {
      double k = 0.0;
      for (std::int64_t v : members_[c]) k += degree_[v];
      community_degree_[c] = k;
    }
    invalidate(s);
    invalidate(target);
  }

  const Csr& w_;
  OptimizerOptions options_;
  std::vector<double> degree_;
  std::vector<int> labels_;
  std::vector<std::vector<std::int64_t>> members_;
  std::vector<double> community_degree_;
  double two_m_ = 0.0;
  std::map<std::pair<int, int>, MoveSet> cache_;
};

}  // namespace

Partition optimize_modularity(const CommuteGraph& g, const OptimizerOptions& options) {
  if (g.n() == 0) throw InputError("optimize_modularity: empty graph");
  if (options.max_k && *options.max_k < 1) throw InputError("optimize_modularity: max_k must be >= 1");
  return ComboSearch(g, options).run();
}

double best_single_move_gain(const CommuteGraph& g, const Partition& p) {
  const auto deg = g.degrees();
  double two_m = 0.0;
  for (double k : deg) two_m += k;
  if (!(two_m > 0.0)) throw InputError("best_single_move_gain: graph has zero total weight");
  std::vector<double> kc(p.k, 0.0);
  for (std::int64_t v = 0; v < g.n(); ++v) kc[p.labels[v]] += deg[v];

  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> to(p.k + 1);
  const Csr& w = g.weights;
  for (std::int64_t v = 0; v < g.n(); ++v) {
    std::fill(to.begin(), to.end(), 0.0);
    for (std::int64_t q = w.row_ptr[v]; q < w.row_ptr[v + 1]; ++q) to[p.labels[w.col[q]]] += w.val[q];
    const int a = p.labels[v];
    const double k = deg[v];
    // destination p.k is a fresh empty community
    for (int b = 0; b <= p.k; ++b) {
      if (b == a) continue;
      const double kb = b < p.k ? kc[b] : 0.0;
      const double gain = 2.0 * (to[b] - to[a]) / two_m - 2.0 * k * (kb - kc[a] + k) / (two_m * two_m);
      best = std::max(best, gain);
    }
  }
  return best;
}

std::pair<Partition, double> brute_force_best_partition(const CommuteGraph& g) {
  const auto n = static_cast<std::size_t>(g.n());
  if (n == 0) throw InputError("brute force: empty graph");
  if (n > 10) throw InputError("brute force: refusing n = " + std::to_string(n) + " > 10");

  // restricted growth strings enumerate each set partition exactly once
  std::vector<int> rgs(n, 0);
  std::vector<int> prefix_max(n, 0);
  Partition best;
  double best_q = -std::numeric_limits<double>::infinity();
  while (true) {
    const Partition p = Partition::from_labels(rgs);
    const double q = modularity(g, p);
    if (q > best_q) {
      best_q = q;
      best = p;
    }
    std::size_t i = n;
    while (i-- > 1) {
      if (rgs[i] <= prefix_max[i - 1]) break;
    }
    if (i == 0 || i >= n) break;
    ++rgs[i];
    prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      rgs[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }
  return {best, best_q};
}

double nmi(const Partition& a, const Partition& b) {
  if (a.n() != b.n()) throw InputError("nmi: partitions differ in size");
  const double n = static_cast<double>(a.n());
  if (a.n() == 0) return 1.0;
  std::map<std::pair<int, int>, double> joint;
  std::vector<double> pa(a.k, 0.0);
  std::vector<double> pb(b.k, 0.0);
  for (std::size_t i = 0; i < a.n(); ++i) {
    joint[{a.labels[i], b.labels[i]}] += 1.0;
    pa[a.labels[i]] += 1.0;
    pb[b.labels[i]] += 1.0;
  }
  auto entropy = [n](const std::vector<double>& counts) {
    double h = 0.0;
    for (double c : counts)
      if (c > 0.0) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(pa);
  const double hb = entropy(pb);
  if (ha + hb <= 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) mi += (c / n) * std::log(c * n / (pa[key.first] * pb[key.second]));
  return std::clamp(2.0 * mi / (ha + hb), 0.0, 1.0);
}

}  // namespace commune
