#include "riverweb/dual_network.hpp"

#include <cmath>
#include <cstdlib>

namespace riverweb {
namespace {

void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("kernel probability must satisfy 0 < p < 1");
}

int orientation(Point2 a, Point2 b, Point2 c) {
  // Coordinates stay far below 2^31 in practice, so the products fit in 64 bits.
  const std::int64_t v = (b.x2 - a.x2) * (c.t - a.t) - (b.t - a.t) * (c.x2 - a.x2);
  return (v > 0) - (v < 0);
}

bool within_box(Point2 a, Point2 b, Point2 c) {
  return std::min(a.x2, b.x2) <= c.x2 && c.x2 <= std::max(a.x2, b.x2) && std::min(a.t, b.t) <= c.t &&
         c.t <= std::max(a.t, b.t);
}

template <typename DiffPmf>
double kernel_with(const KernelQuery& q, DiffPmf diff) {
  check_probability(q.p);
  const double spread = diff(q.v2, q.p);
  if (!q.state_is_integer) return spread;
  return (1.0 - q.p) * spread + 0.5 * q.p * geometric_pmf(q.v2, q.p) + 0.5 * q.p * geometric_pmf(-q.v2, q.p);
}

}  // namespace

double geometric_pmf(std::int64_t g, double p) {
  check_probability(p);
  if (g < 1) return 0.0;
  return p * std::pow(1.0 - p, static_cast<double>(g - 1));
}

double geometric_difference_pmf(std::int64_t m, double p) {
  check_probability(p);
  return p * std::pow(1.0 - p, static_cast<double>(std::llabs(m))) / (2.0 - p);
}

double geometric_difference_pmf_series(std::int64_t m, double p) {
  check_probability(p);
  // P(G1 - G2 = m) = sum_{g2 >= max(1, 1 - m)} P(G1 = m + g2) P(G2 = g2)
  double sum = 0.0;
  for (std::int64_t g2 = std::max<std::int64_t>(1, 1 - m);; ++g2) {
    const double term = geometric_pmf(m + g2, p) * geometric_pmf(g2, p);
    sum += term;
    if (term < 1e-16 * std::max(sum, 1e-300) || term == 0.0) break;
  }
  return sum;
}

double kernel(const KernelQuery& q) {
  return kernel_with(q, [](std::int64_t m, double p) { return geometric_difference_pmf(m, p); });
}

double kernel_series(const KernelQuery& q) {
  return kernel_with(q, [](std::int64_t m, double p) { return geometric_difference_pmf_series(m, p); });
}

bool encloses(const Cluster& cluster, const std::vector<DualSite>& left_dual,
              const std::vector<DualSite>& right_dual) {
  const auto rows = static_cast<std::size_t>(cluster.length);
  if (left_dual.size() < rows || right_dual.size() < rows)
    throw LengthMismatch("dual paths shorter than the cluster length");
  for (std::size_t k = 0; k < rows; ++k) {
    const ClusterRow& r = cluster.rows[k];
    if (!(left_dual[k].x2 < 2 * r.left && 2 * r.right < right_dual[k].x2)) return false;
  }
  return true;
}

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && within_box(a, b, c)) return true;
  if (o2 == 0 && within_box(a, b, d)) return true;
  if (o3 == 0 && within_box(c, d, a)) return true;
  return o4 == 0 && within_box(c, d, b);
}

template DualNeighbours dual_neighbours<FieldConfig>(const FieldConfig&, Site);
template DualSite dual_step<FieldConfig>(const FieldConfig&, DualSite);
template std::vector<DualSite> dual_path<FieldConfig>(const FieldConfig&, DualSite, std::int64_t);

}  // namespace riverweb
