#include "genus_tsp/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace gts {

double FiniteMetric::min_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) best = std::min(best, at(i, j));
  return best;
}

double FiniteMetric::max_distance() const {
  double best = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) best = std::max(best, at(i, j));
  return best;
}

nlohmann::json FiniteMetric::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < n; ++j) row.push_back(at(i, j));
    rows.push_back(row);
  }
  return {{"n", n}, {"d", rows}, {"labels", labels}};
}

FiniteMetric FiniteMetric::from_json(const nlohmann::json& j) {
  FiniteMetric m;
  m.n = j.at("n").get<int>();
  m.d.assign(static_cast<size_t>(m.n) * m.n, 0.0);
  const auto& rows = j.at("d");
  for (int i = 0; i < m.n; ++i)
    for (int k = 0; k < m.n; ++k) m.at(i, k) = rows.at(i).at(k).get<double>();
  if (j.contains("labels"))
    m.labels = j.at("labels").get<std::vector<std::string>>();
  return m;
}

void validate(const FiniteMetric& m) {
  if (m.n < 1) throw InvalidMetricError("metric needs n >= 1");
  if (m.d.size() != static_cast<size_t>(m.n) * m.n)
    throw InvalidMetricError("distance matrix size mismatch");
  for (int i = 0; i < m.n; ++i) {
    if (m.at(i, i) != 0.0) throw InvalidMetricError("nonzero diagonal");
    for (int j = 0; j < m.n; ++j) {
      if (m.at(i, j) != m.at(j, i))
        throw InvalidMetricError("asymmetric distance matrix");
      if (i != j && m.at(i, j) <= 0.0)
        throw InvalidMetricError("nonpositive off-diagonal distance");
    }
  }
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j)
      for (int k = 0; k < m.n; ++k)
        if (m.at(i, j) > m.at(i, k) + m.at(k, j) + 1e-9)
          throw InvalidMetricError("triangle inequality violated");
}

FiniteMetric uniform_metric(int n, double c) {
  FiniteMetric m;
  m.n = n;
  m.d.assign(static_cast<size_t>(n) * n, c);
  for (int i = 0; i < n; ++i) m.at(i, i) = 0.0;
  return m;
}

FiniteMetric euclidean_point_metric(const std::vector<Vec2>& pts) {
  FiniteMetric m;
  m.n = static_cast<int>(pts.size());
  m.d.assign(pts.size() * pts.size(), 0.0);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) m.at(i, j) = dist(pts[i], pts[j]);
  return m;
}

double aspect_ratio(const FiniteMetric& m) {
  return m.max_distance() / m.min_distance();
}

FiniteMetric floor_transform(const FiniteMetric& m, double C,
                             FloorTransformReport* report) {
  if (C <= 1.0) throw InvalidMetricError("floor_transform needs C > 1");
  FloorTransformReport rep;
  rep.c0 = 10.0 * C;
  rep.cbar = 1.0 / rep.c0;
  double maxd = m.max_distance();
  rep.threshold = rep.cbar / m.n * maxd;
  rep.raised_to = rep.cbar / (m.n + 1) * maxd;
  FiniteMetric out = m;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) {
      if (i == j) continue;
      if (out.at(i, j) <= rep.threshold) {
        out.at(i, j) = rep.raised_to;
        ++rep.raised_count;
      }
    }
  validate(out);
  if (report) *report = rep;
  return out;
}

namespace {
// Exact minimum set cover by branch and bound over 64-bit masks.
int min_cover(const std::vector<uint64_t>& sets, uint64_t target, int best) {
  if (target == 0) return 0;
  if (best <= 0) return 1 << 20;
  // Pick an uncovered element and branch on the sets containing it.
  int el = __builtin_ctzll(target);
  int out = 1 << 20;
  for (const uint64_t s : sets) {
    if (!(s >> el & 1)) continue;
    int sub = min_cover(sets, target & ~s, std::min(best, out) - 1);
    out = std::min(out, 1 + sub);
  }
  return out;
}
}  // namespace

int doubling_constant(const FiniteMetric& m) {
  if (m.n > 64) throw InvalidMetricError("doubling_constant guarded to n <= 64");
  int worst = 1;
  std::vector<double> radii;
  for (int i = 0; i < m.n; ++i)
    for (int j = i + 1; j < m.n; ++j) radii.push_back(m.at(i, j));
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  for (int x = 0; x < m.n; ++x) {
    for (double r : radii) {
      uint64_t ball2 = 0;
      for (int y = 0; y < m.n; ++y)
        if (m.at(x, y) <= 2.0 * r) ball2 |= 1ull << y;
      std::vector<uint64_t> covers;
      for (int c = 0; c < m.n; ++c) {
        uint64_t s = 0;
        for (int y = 0; y < m.n; ++y)
          if (m.at(c, y) <= r) s |= 1ull << y;
        covers.push_back(s & ball2);
      }
      worst = std::max(worst, min_cover(covers, ball2, m.n));
    }
  }
  return worst;
}

}  // namespace gts
