#include "commune/synth.hpp"

#include "commune/error.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

namespace commune {

void PlantedSpec::validate() const {
  if (k < 1) throw InputError("planted spec: k must be >= 1");
  if (n < k) throw InputError("planted spec: n must be >= k");
  if (n > 999'999'999) throw InputError("planted spec: n too large for synthetic geoids");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(p_in) || !prob(p_out)) throw InputError("planted spec: probabilities must lie in [0, 1]");
  if (!(w_in > 0.0) || !(w_out > 0.0)) throw InputError("planted spec: mean weights must be > 0");
  if (!income_centers.empty()) {
    if (static_cast<int>(income_centers.size()) != k)
      throw InputError("planted spec: need one income center per block");
    for (double c : income_centers)
      if (!(c > 0.0)) throw InputError("planted spec: income centers must be > 0");
  }
}

std::string synthetic_geoid(std::int64_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "99%09lld", static_cast<long long>(i));
  return buf;
}

PlantedInstance generate(const PlantedSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  PlantedInstance out;

  std::vector<int> block(spec.n);
  const std::int64_t base = spec.n / spec.k;
  const std::int64_t extra = spec.n % spec.k;
  std::int64_t next = 0;
  for (int b = 0; b < spec.k; ++b) {
    const std::int64_t size = base + (b < extra ? 1 : 0);
    for (std::int64_t i = 0; i < size; ++i) block[next++] = b;
  }

  std::vector<std::string> ids(spec.n);
  for (std::int64_t i = 0; i < spec.n; ++i) {
    ids[i] = synthetic_geoid(i);
    out.records.push_back({ids[i], ids[i], 0.0});
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> w_in(1.0 / spec.w_in);
  std::exponential_distribution<double> w_out(1.0 / spec.w_out);
  for (std::int64_t i = 0; i < spec.n; ++i) {
    for (std::int64_t j = i + 1; j < spec.n; ++j) {
      const bool same = block[i] == block[j];
      if (unit(rng) >= (same ? spec.p_in : spec.p_out)) continue;
      double w = same ? w_in(rng) : w_out(rng);
      if (w <= 0.0) w = std::numeric_limits<double>::min();
      out.records.push_back({ids[i], ids[j], w});
      out.records.push_back({ids[j], ids[i], w});
    }
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const ODRecord& a, const ODRecord& b) { return std::tie(a.origin, a.dest) < std::tie(b.origin, b.dest); });

  out.graph = build_graph(out.records);
  out.truth = Partition::from_labels(block);

  if (!spec.income_centers.empty()) {
    std::normal_distribution<double> noise(0.0, 0.1);
    for (std::int64_t i = 0; i < spec.n; ++i) {
      const double income = spec.income_centers[block[i]] * (1.0 + noise(rng));
      out.incomes.values[ids[i]] = std::max(income, 1.0);
    }
  }
  return out;
}

}  // namespace commune
