#include "riverweb/scaling_obs.hpp"

#include <string>

namespace riverweb {

double gamma0(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("gamma0 requires 0 < p < 1, got " + std::to_string(p));
  const double q = 2.0 - p;
  return std::sqrt((1.0 - p) * (2.0 - 2.0 * p + p * p) / (p * p * q * q));
}

ScaledProcess::ScaledProcess(std::int64_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  if (n_ < 1) throw DomainError("scaled process needs n >= 1");
  if (values_.empty()) values_.push_back(0.0);
}

double ScaledProcess::at(std::int64_t k) const {
  if (k < 0) throw DomainError("negative breakpoint index");
  const auto last = static_cast<std::int64_t>(values_.size()) - 1;
  return values_[static_cast<std::size_t>(std::min(k, last))];
}

double ScaledProcess::operator()(double s) const {
  if (!(s >= 0.0)) throw DomainError("scaled process evaluated at negative time");
  const double pos = s * static_cast<double>(n_);
  const double nearest = std::round(pos);
  // Breakpoints are exact even when s = k/n is not representable.
  if (std::abs(pos - nearest) <= 1e-12 * std::max(1.0, pos)) return at(static_cast<std::int64_t>(nearest));
  const auto k = static_cast<std::int64_t>(std::floor(pos));
  const auto last = static_cast<std::int64_t>(values_.size()) - 1;
  if (k >= last) return values_.back();
  const double frac = pos - static_cast<double>(k);
  const double a = values_[static_cast<std::size_t>(k)];
  const double b = values_[static_cast<std::size_t>(k + 1)];
  return a + frac * (b - a);
}

double ScaledProcess::sup_abs(double s_max) const {
  double best = std::abs((*this)(s_max));
  const auto kmax = static_cast<std::int64_t>(std::floor(s_max * static_cast<double>(n_) + 1e-9));
  const auto last = static_cast<std::int64_t>(values_.size()) - 1;
  for (std::int64_t k = 0; k <= std::min(kmax, last); ++k)
    best = std::max(best, std::abs(values_[static_cast<std::size_t>(k)]));
  return best;
}

namespace {

template <typename Getter>
ScaledProcess cluster_scaled(const Cluster& cluster, std::int64_t n, double p, Getter get) {
  const double scale = gamma0(p) * std::sqrt(static_cast<double>(n));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(cluster.length) + 1);
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(cluster.rows.size()); ++k)
    values.push_back(static_cast<double>(get(cluster, k)) / scale);
  values.push_back(0.0);  // generation L is empty
  return ScaledProcess(n, std::move(values));
}

}  // namespace

ScaledProcess width_process(const Cluster& cluster, std::int64_t n, double p) {
  return cluster_scaled(cluster, n, p, [](const Cluster& c, std::int64_t k) { return c.width(k); });
}

ScaledProcess cluster_process(const Cluster& cluster, std::int64_t n, double p) {
  return cluster_scaled(cluster, n, p, [](const Cluster& c, std::int64_t k) { return c.count(k); });
}

ScaledProcess dual_width_process(const std::vector<DualSite>& left, const std::vector<DualSite>& right,
                                 std::int64_t n, double p) {
  if (left.size() != right.size()) throw LengthMismatch("dual paths of different lengths");
  const double scale = 2.0 * gamma0(p) * std::sqrt(static_cast<double>(n));
  std::vector<double> values;
  values.reserve(left.size());
  for (std::size_t k = 0; k < left.size(); ++k)
    values.push_back(static_cast<double>(right[k].x2 - left[k].x2) / scale);
  return ScaledProcess(n, std::move(values));
}

std::int64_t xi_n(const FieldConfig& cfg, std::int64_t n) {
  return xi_count(cfg, n, std::sqrt(static_cast<double>(n)) * gamma0(cfg.p()));
}

}  // namespace riverweb
