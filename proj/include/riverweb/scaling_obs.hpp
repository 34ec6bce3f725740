#pragma once

// Diffusive scaling layer: gamma0(p), the piecewise-linear width, cluster and
// dual-width processes, and the path-counting functional xi_n.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "riverweb/dual_network.hpp"
#include "riverweb/errors.hpp"
#include "riverweb/forward_network.hpp"
#include "riverweb/lattice_field.hpp"

namespace riverweb {

/// Standard deviation of one forward step:
/// gamma0^2 = (1-p)(2 - 2p + p^2) / (p^2 (2-p)^2).
double gamma0(double p);

/// Piecewise-linear function on [0, inf) with breakpoints k/n, linear
/// between them and constant after the last one.
class ScaledProcess {
 public:
  ScaledProcess(std::int64_t n, std::vector<double> values);

  std::int64_t n() const noexcept { return n_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Value at breakpoint k/n (the last value for k past the end).
  double at(std::int64_t k) const;

  double operator()(double s) const;

  /// sup over s in [0, s_max] of |value|; attained at a breakpoint or at s_max.
  double sup_abs(double s_max) const;

 private:
  std::int64_t n_;
  std::vector<double> values_;
};

/// D_n: values[k] = D_k / (gamma0 sqrt(n)), with D_k = 0 for k >= L.
ScaledProcess width_process(const Cluster& cluster, std::int64_t n, double p);

/// K_n: values[k] = #C_k / (gamma0 sqrt(n)).
ScaledProcess cluster_process(const Cluster& cluster, std::int64_t n, double p);

/// D-hat_n: values[k] = (right[k] - left[k]) / (gamma0 sqrt(n)) in true units.
ScaledProcess dual_width_process(const std::vector<DualSite>& left, const std::vector<DualSite>& right,
                                 std::int64_t n, double p);

/// Number of distinct landing sites h^n(x, 0) in [0, window] over all open
/// sites (x, 0). Open sites are scanned over a window that is widened until the
/// outermost paths land strictly outside [0, window] on their own side; by
/// monotonicity of h no site farther out can land inside.
template <Field F>
std::int64_t xi_count(const F& field, std::int64_t n, double window) {
  if (n < 1) throw DomainError("xi_n requires n >= 1");
  const auto upper = static_cast<std::int64_t>(std::floor(window));
  std::int64_t margin = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(window)));
  const std::int64_t cap = field.search_cap();
  std::vector<std::int64_t> positions;
  for (;;) {
    positions.clear();
    for (std::int64_t x = -margin; x <= upper + margin; ++x)
      if (field.open(Site{x, 0})) positions.push_back(x);
    if (!positions.empty()) {
      for (std::int64_t row = 0; row < n; ++row) {
        for (auto& x : positions) x = step_unchecked(field, Site{x, row}).x;
        positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
      }
      if (positions.front() < 0 && positions.back() > upper) break;
    }
    if (margin > cap) throw SearchCapExceeded(cap);
    margin *= 2;
  }
  return std::count_if(positions.begin(), positions.end(),
                       [upper](std::int64_t x) { return x >= 0 && x <= upper; });
}

/// xi_n on the hashed field: window = sqrt(n) gamma0(p).
std::int64_t xi_n(const FieldConfig& cfg, std::int64_t n);

}  // namespace riverweb
