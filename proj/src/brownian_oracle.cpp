#include "riverweb/brownian_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "riverweb/numeric.hpp"
#include "riverweb/parallel.hpp"

namespace riverweb {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::int64_t kBlock = 1024;

void require_even_length(std::int64_t m) {
  if (m < 2 || m % 2 != 0) throw DomainError("excursion length must be even and >= 2");
}

}  // namespace

WalkPath::WalkPath(std::vector<std::int8_t> steps) : steps_(std::move(steps)) {
  for (auto s : steps_)
    if (s != 1 && s != -1) throw DomainError("walk steps must be +1 or -1");
}

std::vector<std::int64_t> WalkPath::heights() const {
  std::vector<std::int64_t> h(steps_.size() + 1, 0);
  for (std::size_t k = 0; k < steps_.size(); ++k) h[k + 1] = h[k] + steps_[k];
  return h;
}

std::int64_t WalkPath::endpoint() const {
  std::int64_t s = 0;
  for (auto d : steps_) s += d;
  return s;
}

std::int64_t WalkPath::max_height() const {
  std::int64_t s = 0;
  std::int64_t best = 0;
  for (auto d : steps_) best = std::max(best, s += d);
  return best;
}

std::int64_t WalkPath::min_height() const {
  std::int64_t s = 0;
  std::int64_t best = 0;
  for (auto d : steps_) best = std::min(best, s += d);
  return best;
}

std::int64_t WalkPath::height_sum() const {
  std::int64_t s = 0;
  std::int64_t sum = 0;
  for (auto d : steps_) sum += (s += d);
  return sum;
}

ScaledProcess WalkPath::interpolated(std::int64_t scale) const {
  const double root = std::sqrt(static_cast<double>(scale));
  std::vector<double> values;
  values.reserve(steps_.size() + 1);
  for (auto h : heights()) values.push_back(static_cast<double>(h) / root);
  return ScaledProcess(scale, std::move(values));
}

WalkPath sample_meander(std::int64_t m, Rng& rng) {
  if (m < 1) throw DomainError("meander length must be >= 1");
  std::vector<std::int8_t> steps(static_cast<std::size_t>(m));
  for (;;) {
    std::int64_t s = 0;
    std::int64_t k = 0;
    for (; k < m; ++k) {
      const int d = rng.sign();
      s += d;
      if (s <= 0) break;
      steps[static_cast<std::size_t>(k)] = static_cast<std::int8_t>(d);
    }
    if (k == m) return WalkPath(std::move(steps));
  }
}

WalkPath sample_excursion(std::int64_t m, Rng& rng) {
  require_even_length(m);
  // Uniform arrangement of n ups and n + 1 downs, n = m/2 - 1.
  const std::int64_t n = m / 2 - 1;
  const std::int64_t len = 2 * n + 1;
  std::vector<std::int8_t> seq(static_cast<std::size_t>(len));
  std::int64_t ups = n;
  for (std::int64_t i = 0; i < len; ++i) {
    const bool up = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(len - i))) < ups;
    seq[static_cast<std::size_t>(i)] = up ? 1 : -1;
    ups -= up ? 1 : 0;
  }
  // The rotation starting right after the first minimum of the partial sums
  // stays >= 0 until its final step; dropping that step leaves a Dyck path.
  std::int64_t s = 0;
  std::int64_t low = 0;
  std::int64_t at = 0;
  for (std::int64_t i = 0; i < len; ++i) {
    s += seq[static_cast<std::size_t>(i)];
    if (s < low) {
      low = s;
      at = i + 1;
    }
  }
  at %= len;
  std::vector<std::int8_t> steps;
  steps.reserve(static_cast<std::size_t>(m));
  steps.push_back(1);
  steps.insert(steps.end(), seq.begin() + at, seq.end());
  steps.insert(steps.end(), seq.begin(), seq.begin() + at);
  steps.pop_back();  // the rotated sequence ends on its only -1 below zero
  steps.push_back(-1);
  return WalkPath(std::move(steps));
}

WalkPath sample_excursion_rejection(std::int64_t m, Rng& rng) {
  require_even_length(m);
  if (m > 64) throw DomainError("rejection excursion sampler is limited to m <= 64");
  std::vector<std::int8_t> steps(static_cast<std::size_t>(m));
  for (;;) {
    std::int64_t s = 0;
    std::int64_t k = 0;
    for (; k < m; ++k) {
      const int d = rng.sign();
      s += d;
      steps[static_cast<std::size_t>(k)] = static_cast<std::int8_t>(d);
      if (s <= 0) break;
    }
    if (k == m - 1 && s == 0) return WalkPath(std::move(steps));
  }
}

PiecewiseLinear::PiecewiseLinear(std::vector<double> t, std::vector<double> y) : t_(std::move(t)), y_(std::move(y)) {
  if (t_.empty() || t_.size() != y_.size()) throw DomainError("piecewise-linear function needs matching knots");
  if (t_.front() != 0.0) throw DomainError("first knot must be at 0");
  for (std::size_t i = 1; i < t_.size(); ++i)
    if (!(t_[i] > t_[i - 1])) throw DomainError("knots must strictly increase");
}

PiecewiseLinear PiecewiseLinear::from_process(const ScaledProcess& f) {
  std::vector<double> t(f.values().size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k) / static_cast<double>(f.n());
  return PiecewiseLinear(std::move(t), f.values());
}

double PiecewiseLinear::operator()(double s) const {
  if (!(s >= 0.0)) throw DomainError("piecewise-linear function evaluated at negative time");
  if (s >= t_.back()) return y_.back();
  const auto it = std::upper_bound(t_.begin(), t_.end(), s);
  const auto i = static_cast<std::size_t>(it - t_.begin()) - 1;
  const double frac = (s - t_[i]) / (t_[i + 1] - t_[i]);
  return y_[i] + frac * (y_[i + 1] - y_[i]);
}

double PiecewiseLinear::integral() const {
  std::vector<double> parts;
  parts.reserve(t_.size());
  for (std::size_t i = 0; i + 1 < t_.size(); ++i) parts.push_back(0.5 * (y_[i] + y_[i + 1]) * (t_[i + 1] - t_[i]));
  return compensated_sum(parts);
}

std::optional<double> shift_point(const PiecewiseLinear& f, double tau) {
  if (!(tau > 0.0)) throw DomainError("shift horizon tau must be positive");
  const auto& t = f.knots();
  const auto& y = f.values();
  // Knot times like j/m + tau round differently from (j + m)/m; compare them
  // with a tolerance far below any knot spacing.
  const double eps = 1e-9 * std::max(1.0, f.end());
  for (std::size_t j = 0; j < t.size() && t[j] + tau <= f.end() + eps; ++j) {
    if (j + 1 >= t.size() || !(y[j + 1] > y[j])) continue;
    const double end = t[j] + tau;
    bool ok = true;
    bool end_is_knot = false;
    for (std::size_t i = j + 1; i < t.size() && t[i] <= end + eps; ++i) {
      if (!(y[i] > y[j])) {
        ok = false;
        break;
      }
      if (std::abs(t[i] - end) <= eps) end_is_knot = true;
    }
    if (ok && (end_is_knot || f(end) > y[j])) return t[j];
  }
  return std::nullopt;
}

PiecewiseLinear t_tau_plus(const PiecewiseLinear& f, double tau) {
  const auto s = shift_point(f, tau);
  if (!s) return f;
  const auto& t = f.knots();
  const auto& y = f.values();
  const auto j = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), *s) - t.begin());
  std::vector<double> nt;
  std::vector<double> ny;
  for (std::size_t i = j; i < t.size(); ++i) {
    nt.push_back(i == j ? 0.0 : t[i] - t[j]);
    ny.push_back(y[i] - y[j]);
  }
  return PiecewiseLinear(std::move(nt), std::move(ny));
}

std::optional<double> first_zero(const PiecewiseLinear& f) {
  const auto& t = f.knots();
  const auto& y = f.values();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (y[i] == 0.0) {
      if (t[i] > 0.0) return t[i];
      if (i + 1 < t.size() && y[i + 1] == 0.0) return 0.0;
      if (i + 1 == t.size()) return 0.0;  // constant zero after the only knot
      continue;
    }
    if (i + 1 < t.size() && ((y[i] > 0.0 && y[i + 1] < 0.0) || (y[i] < 0.0 && y[i + 1] > 0.0)))
      return t[i] + (t[i + 1] - t[i]) * y[i] / (y[i] - y[i + 1]);
  }
  return std::nullopt;
}

PiecewiseLinear kill_at_zero(const PiecewiseLinear& f) {
  const auto tz = first_zero(f);
  if (!tz) return f;
  const auto& t = f.knots();
  const auto& y = f.values();
  std::vector<double> nt;
  std::vector<double> ny;
  for (std::size_t i = 0; i < t.size() && t[i] < *tz; ++i) {
    nt.push_back(t[i]);
    ny.push_back(y[i]);
  }
  if (nt.empty() || nt.back() < *tz) {
    nt.push_back(*tz);
    ny.push_back(0.0);
  }
  return PiecewiseLinear(std::move(nt), std::move(ny));
}

PiecewiseLinear ShiftedWalk::process() const {
  const double root = std::sqrt(static_cast<double>(m));
  std::vector<double> t(heights.size());
  std::vector<double> y(heights.size());
  for (std::size_t i = 0; i < heights.size(); ++i) {
    t[i] = static_cast<double>(i) / static_cast<double>(m);
    y[i] = static_cast<double>(heights[i]) / root;
  }
  if (t.empty()) return PiecewiseLinear({0.0}, {0.0});
  return PiecewiseLinear(std::move(t), std::move(y));
}

namespace {

std::int64_t horizon_steps(std::int64_t m, double tau) {
  if (m < 1) throw DomainError("walk scale m must be >= 1");
  if (!(tau > 0.0)) throw DomainError("shift horizon tau must be positive");
  return static_cast<std::int64_t>(std::floor(static_cast<double>(m) * tau + 1e-9));
}

// Follows the walk after the shift point until it returns to the shift level,
// the area passes the stop, or the followed length reaches `limit`.
template <typename NextHeight>
void follow_after_shift(ShiftedWalk& w, std::int64_t base, std::int64_t limit, double area_stop, bool keep,
                        NextHeight next) {
  const double scale = std::pow(static_cast<double>(w.m), 1.5);
  const double stop_units = area_stop * scale;
  std::int64_t sum = 0;
  std::int64_t last = 0;
  if (keep) w.heights.assign(1, 0);
  for (std::int64_t i = 1; i <= limit; ++i) {
    const auto h = next(i);
    if (!h) break;
    last = *h - base;
    w.steps_followed = i;
    if (keep) w.heights.push_back(last);
    if (last == 0) {
      w.killed = true;
      break;
    }
    sum += last;
    if (static_cast<double>(sum) > stop_units) {
      w.area_exceeded = true;
      break;
    }
  }
  // Trapezoid rule on unit steps: interior heights, plus half of a truncated end.
  const bool truncated = !w.killed && !w.area_exceeded;
  w.area = (static_cast<double>(sum) - (truncated ? 0.5 * static_cast<double>(last) : 0.0)) / scale;
}

}  // namespace

std::optional<std::int64_t> walk_shift_index(std::span<const std::int64_t> heights, std::int64_t m, double tau) {
  const std::int64_t horizon = horizon_steps(m, tau);
  const std::int64_t need = std::max<std::int64_t>(horizon, 1);
  const auto n = static_cast<std::int64_t>(heights.size()) - 1;
  const double span_needed = static_cast<double>(m) * tau;
  std::vector<std::int64_t> stack;
  for (std::int64_t k = 0; k <= n; ++k) {
    while (!stack.empty() && heights[static_cast<std::size_t>(stack.back())] >= heights[static_cast<std::size_t>(k)])
      stack.pop_back();
    stack.push_back(k);
    const std::int64_t j = k - need;
    if (j >= 0 && stack.front() == j && static_cast<double>(j) + span_needed <= static_cast<double>(n) + 1e-9)
      return j;
  }
  return std::nullopt;
}

ShiftedWalk w_plus_tau_from_walk(std::span<const std::int64_t> heights, std::int64_t m, double tau) {
  const auto j = walk_shift_index(heights, m, tau);
  if (!j) throw WalkTooShort("walk has no shift point leaving m*tau steps");
  ShiftedWalk w;
  w.m = m;
  w.shift_index = *j;
  const std::int64_t base = heights[static_cast<std::size_t>(*j)];
  const std::int64_t horizon = horizon_steps(m, tau);
  w.height_at_tau = heights[static_cast<std::size_t>(*j + horizon)] - base;
  const auto n = static_cast<std::int64_t>(heights.size()) - 1;
  follow_after_shift(w, base, n - *j, std::numeric_limits<double>::infinity(), true,
                     [&](std::int64_t i) -> std::optional<std::int64_t> {
                       return heights[static_cast<std::size_t>(*j + i)];
                     });
  return w;
}

ShiftedWalk sample_w_plus_tau(double tau, std::int64_t m, Rng& rng, const ShiftedOptions& options) {
  const std::int64_t horizon = horizon_steps(m, tau);
  const std::int64_t need = std::max<std::int64_t>(horizon, 1);
  // Stream the unconditioned walk, keeping a stack of indices whose next
  // lower-or-equal point has not appeared yet. The first index that survives
  // `need` further steps is the shift point.
  std::vector<std::int64_t> heights{0};
  std::vector<std::int64_t> stack{0};
  std::int64_t j = -1;
  for (std::int64_t k = 1; j < 0; ++k) {
    if (k > options.max_search) throw WalkTooShort("no shift point within the search limit");
    const std::int64_t h = heights.back() + rng.sign();
    heights.push_back(h);
    while (!stack.empty() && heights[static_cast<std::size_t>(stack.back())] >= h) stack.pop_back();
    stack.push_back(k);
    if (k - need >= 0 && stack.front() == k - need) j = k - need;
  }
  ShiftedWalk w;
  w.m = m;
  w.shift_index = j;
  const std::int64_t base = heights[static_cast<std::size_t>(j)];
  w.height_at_tau = heights[static_cast<std::size_t>(j + horizon)] - base;
  const auto have = static_cast<std::int64_t>(heights.size()) - 1;
  std::int64_t current = heights.back();
  follow_after_shift(w, base, options.max_after, options.area_stop, options.keep_path,
                     [&](std::int64_t i) -> std::optional<std::int64_t> {
                       if (j + i <= have) return heights[static_cast<std::size_t>(j + i)];
                       current += rng.sign();
                       return current;
                     });
  w.shift_index = j;
  return w;
}

double ref_rayleigh_sf(double x) {
  if (x <= 0.0) return 1.0;
  return std::exp(-0.5 * x * x);
}

double ref_rayleigh_cdf(double x) { return 1.0 - ref_rayleigh_sf(x); }

double ref_excursion_max_cdf(double x, int terms) {
  if (!(x > 0.0)) throw DomainError("excursion maximum CDF needs x > 0");
  if (terms > 0 || x >= 1.0) {
    // 1 + 2 sum_k exp(-(2kx)^2 / 2) (1 - (2kx)^2)
    double sum = 0.0;
    for (int k = 1; terms <= 0 || k <= terms; ++k) {
      const double a = 4.0 * k * k * x * x;
      const double term = std::exp(-0.5 * a) * (1.0 - a);
      sum += term;
      if (terms <= 0 && std::abs(term) < 1e-16) break;
    }
    return 1.0 + 2.0 * sum;
  }
  // Below x = 1 the same function in its Jacobi-transformed form, which
  // converges fast where the direct series cancels:
  // sqrt(2) pi^{5/2} x^{-3} sum_k k^2 exp(-pi^2 k^2 / (2 x^2)).
  const double b = kPi * kPi / (2.0 * x * x);
  double sum = 0.0;
  for (int k = 1;; ++k) {
    const double term = static_cast<double>(k) * k * std::exp(-b * k * k);
    sum += term;
    if (term <= 1e-17 * sum || term == 0.0) break;
  }
  return std::sqrt(2.0) * std::pow(kPi, 2.5) * sum / (x * x * x);
}

double ref_excursion_max_density(double x) {
  if (!(x > 0.0)) throw DomainError("excursion maximum density needs x > 0");
  if (x >= 1.0) {
    double sum = 0.0;
    for (int k = 1;; ++k) {
      const double a = 4.0 * k * k;
      const double term = a * x * (a * x * x - 3.0) * std::exp(-0.5 * a * x * x);
      sum += term;
      if (std::abs(term) < 1e-17) break;
    }
    return 2.0 * sum;
  }
  const double b = kPi * kPi / 2.0;
  double sum = 0.0;
  for (int k = 1;; ++k) {
    const double kk = static_cast<double>(k) * k;
    const double term = kk * std::exp(-b * kk / (x * x)) * (-3.0 / std::pow(x, 4) + 2.0 * b * kk / std::pow(x, 6));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum) || term == 0.0) break;
  }
  return std::sqrt(2.0) * std::pow(kPi, 2.5) * sum;
}

double ref_excursion_area_tail_asym(double x) {
  return 6.0 * std::sqrt(6.0) / std::sqrt(kPi) * x * std::exp(-6.0 * x * x);
}

double ref_xi_mean(double t) {
  if (!(t > 0.0)) throw DomainError("xi mean needs t > 0");
  return 1.0 / std::sqrt(kPi * t);
}

std::string to_string(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::meander_area: return "meander_area";
    case FunctionalKind::meander_endpoint: return "meander_endpoint";
    case FunctionalKind::excursion_area: return "excursion_area";
    case FunctionalKind::excursion_max: return "excursion_max";
    case FunctionalKind::shifted_area: return "shifted_area";
  }
  return "unknown";
}

FunctionalKind functional_kind_from_string(const std::string& name) {
  for (auto k : {FunctionalKind::meander_area, FunctionalKind::meander_endpoint, FunctionalKind::excursion_area,
                 FunctionalKind::excursion_max, FunctionalKind::shifted_area})
    if (to_string(k) == name) return k;
  throw DomainError("unknown functional kind: " + name);
}

FunctionalSample sample_functional(FunctionalKind kind, std::int64_t m, Rng& rng) {
  const double root = std::sqrt(static_cast<double>(m));
  const double scale = root * static_cast<double>(m);
  switch (kind) {
    case FunctionalKind::meander_area: {
      const WalkPath w = sample_meander(m, rng);
      return {kind, (static_cast<double>(w.height_sum()) - 0.5 * static_cast<double>(w.endpoint())) / scale};
    }
    case FunctionalKind::meander_endpoint:
      return {kind, static_cast<double>(sample_meander(m, rng).endpoint()) / root};
    case FunctionalKind::excursion_area:
      return {kind, static_cast<double>(sample_excursion(m, rng).height_sum()) / scale};
    case FunctionalKind::excursion_max:
      return {kind, static_cast<double>(sample_excursion(m, rng).max_height()) / root};
    case FunctionalKind::shifted_area: {
      // The killed area is heavy tailed; paths still alive after 10^4 m steps
      // contribute their area so far (a lower bound).
      ShiftedOptions opt;
      opt.keep_path = false;
      opt.max_after = 10000 * m;
      return {kind, sample_w_plus_tau(1.0, m, rng, opt).area};
    }
  }
  throw DomainError("unknown functional kind");
}

std::vector<double> sample_functionals(FunctionalKind kind, std::int64_t m, std::int64_t count, std::uint64_t seed,
                                       unsigned threads) {
  if (count < 0) throw DomainError("negative sample count");
  const std::int64_t blocks = (count + kBlock - 1) / kBlock;
  std::vector<double> out(static_cast<std::size_t>(count));
  const std::string label = "functional:" + to_string(kind);
  parallel_for(blocks, threads, [&](std::int64_t b) {
    Rng rng(derive_seed(seed, label, static_cast<std::uint64_t>(b)));
    const std::int64_t end = std::min(count, (b + 1) * kBlock);
    for (std::int64_t i = b * kBlock; i < end; ++i) out[static_cast<std::size_t>(i)] = sample_functional(kind, m, rng).value;
  });
  return out;
}

double TailTable::sf(double x) const {
  if (x <= 0.0) return x < 0.0 ? 1.0 : survival.front();
  if (x >= grid.back()) return survival.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const auto i = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double frac = (x - grid[i]) / (grid[i + 1] - grid[i]);
  return survival[i] + frac * (survival[i + 1] - survival[i]);
}

double TailTable::pdf(double x) const {
  if (x < 0.0 || x > grid.back()) return 0.0;
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  if (it == grid.end()) return density.back();
  const auto i = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double frac = (x - grid[i]) / (grid[i + 1] - grid[i]);
  return density[i] + frac * (density[i + 1] - density[i]);
}

TailTable tabulate_excursion_area_dist(std::span<const double> samples, std::vector<double> grid, std::uint64_t seed,
                                       std::int64_t walk_length, FunctionalKind kind) {
  const auto n = static_cast<std::int64_t>(samples.size());
  if (n < kMinTableSamples)
    throw InsufficientSamples("tail table needs at least " + std::to_string(kMinTableSamples) + " samples, got " +
                              std::to_string(n));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() < 0.0) throw DomainError("tail table samples must be nonnegative");
  if (grid.empty()) {
    const std::size_t points = 2001;
    grid.resize(points);
    for (std::size_t i = 0; i < points; ++i)
      grid[i] = sorted.back() * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  if (grid.front() != 0.0) throw DomainError("tail table grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError("tail table grid must strictly increase");

  TailTable table;
  table.kind = kind;
  table.seed = seed;
  table.n_samples = n;
  table.walk_length = walk_length;
  table.mean = compensated_sum(sorted) / static_cast<double>(n);

  std::vector<double> dev(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) dev[i] = (sorted[i] - table.mean) * (sorted[i] - table.mean);
  const double sd = std::sqrt(compensated_sum(dev) / static_cast<double>(n - 1));
  const double iqr = sorted[static_cast<std::size_t>(3 * n / 4)] - sorted[static_cast<std::size_t>(n / 4)];
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  table.bandwidth = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

  table.grid = std::move(grid);
  table.survival.resize(table.grid.size());
  table.density.resize(table.grid.size());
  const double h = table.bandwidth;
  const double norm = 1.0 / (static_cast<double>(n) * h * std::sqrt(2.0 * kPi));
  for (std::size_t i = 0; i < table.grid.size(); ++i) {
    const double x = table.grid[i];
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), x);
    table.survival[i] = static_cast<double>(above) / static_cast<double>(n);
    double sum = 0.0;
    if (h > 0.0) {
      auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - 8.0 * h);
      auto hi = std::upper_bound(sorted.begin(), sorted.end(), x + 8.0 * h);
      for (auto it = lo; it != hi; ++it) {
        const double z = (x - *it) / h;
        sum += std::exp(-0.5 * z * z);
      }
    }
    table.density[i] = sum * norm;
  }
  return table;
}

void save_table(const TailTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write tail table " + path.string());
  out.precision(17);
  out << "# riverweb tail table v1\n";
  out << "# kind=" << to_string(table.kind) << "\n";
  out << "# seed=" << table.seed << "\n";
  out << "# samples=" << table.n_samples << "\n";
  out << "# walk_length=" << table.walk_length << "\n";
  out << "# bandwidth=" << table.bandwidth << "\n";
  out << "# mean=" << table.mean << "\n";
  out << "x,survival,density\n";
  for (std::size_t i = 0; i < table.grid.size(); ++i)
    out << table.grid[i] << ',' << table.survival[i] << ',' << table.density[i] << '\n';
  if (!out) throw Error("failed writing tail table " + path.string());
}

TailTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TableMissing("tail table not found: " + path.string());
  TailTable table;
  std::string line;
  bool versioned = false;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line == "# riverweb tail table v1") {
        versioned = true;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "kind") table.kind = functional_kind_from_string(value);
      else if (key == "seed") table.seed = std::stoull(value);
      else if (key == "samples") table.n_samples = std::stoll(value);
      else if (key == "walk_length") table.walk_length = std::stoll(value);
      else if (key == "bandwidth") table.bandwidth = std::stod(value);
      else if (key == "mean") table.mean = std::stod(value);
      continue;
    }
    if (!header) {
      if (line != "x,survival,density") throw TableMissing("malformed tail table header in " + path.string());
      header = true;
      continue;
    }
    std::istringstream row(line);
    double x = 0, s = 0, d = 0;
    char c1 = 0, c2 = 0;
    if (!(row >> x >> c1 >> s >> c2 >> d) || c1 != ',' || c2 != ',')
      throw TableMissing("malformed tail table row in " + path.string());
    table.grid.push_back(x);
    table.survival.push_back(s);
    table.density.push_back(d);
  }
  if (!versioned || !header || table.grid.size() < 2) throw TableMissing("incomplete tail table " + path.string());
  return table;
}

TailTable cached_table(FunctionalKind kind, std::int64_t m, std::int64_t samples, std::uint64_t seed,
                       const std::filesystem::path& path, unsigned threads) {
  if (std::filesystem::exists(path)) {
    try {
      TailTable t = load_table(path);
      if (t.kind == kind && t.seed == seed && t.n_samples == samples && t.walk_length == m) return t;
    } catch (const TableMissing&) {
    }
  }
  const auto values = sample_functionals(kind, m, samples, seed, threads);
  TailTable t = tabulate_excursion_area_dist(values, {}, seed, m, kind);
  save_table(t, path);
  // Reload so a fresh table and a cached one are bit-identical.
  return load_table(path);
}

double tail_integral(const TailTable& table, double u, double a, double t_lo) {
  if (!(u > 0.0)) throw DomainError("tail integral needs u > 0");
  if (!(a > 0.0)) throw DomainError("tail integral needs a positive exponent");
  if (t_lo < 0.0) throw DomainError("negative lower limit");
  const auto& x = table.grid;
  const auto& s = table.survival;
  if (x.size() < 2 || s.back() != 0.0) throw DomainError("tail table grid must cover the whole sample range");
  // On each grid cell the interpolated tail is alpha + beta * x with x = u t^{-a},
  // so the integral has a closed form.
  const double b = 0.5 + a;
  auto t_of = [&](double xv) { return std::pow(u / xv, 1.0 / a); };
  auto piece = [&](double alpha, double beta, double ta, double tb) {
    // int_ta^tb t^{-3/2} (alpha + beta u t^{-a}) dt, tb may be infinite
    const double ia = 1.0 / std::sqrt(ta);
    const double ib = std::isinf(tb) ? 0.0 : 1.0 / std::sqrt(tb);
    const double ja = std::pow(ta, -b);
    const double jb = std::isinf(tb) ? 0.0 : std::pow(tb, -b);
    return alpha * 2.0 * (ia - ib) + beta * u * (ja - jb) / b;
  };
  std::vector<double> parts;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (s[i] == 0.0) break;
    const double beta = (s[i + 1] - s[i]) / (x[i + 1] - x[i]);
    const double alpha = s[i] - beta * x[i];
    // x in [x_i, x_{i+1}] <=> t in [t(x_{i+1}), t(x_i)]
    double ta = t_of(x[i + 1]);
    double tb = (i == 0) ? std::numeric_limits<double>::infinity() : t_of(x[i]);
    ta = std::max(ta, t_lo);
    if (!(tb > ta)) continue;
    parts.push_back(piece(alpha, beta, ta, tb));
  }
  return compensated_sum(parts);
}

double max_series_tail_integral(double u, double t_lo) {
  if (!(u > 0.0)) throw DomainError("tail integral needs u > 0");
  if (t_lo < 0.0) throw DomainError("negative lower limit");
  // Above x = 12 the tail is below 1e-120; below x = 0.05 the CDF underflows.
  const double t_small = std::max(t_lo, (u / 12.0) * (u / 12.0));
  const double t_big = (u / 0.05) * (u / 0.05);
  if (t_small >= t_big) return 2.0 / std::sqrt(t_small);
  auto integrand = [u](double s) {
    const double t = std::exp(s);
    const double x = u / std::sqrt(t);
    return std::exp(-0.5 * s) * (1.0 - ref_excursion_max_cdf(x));
  };
  double err = 0.0;
  const double body = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, std::log(t_small), std::log(t_big), 20, 1e-12, &err);
  return body + 2.0 / std::sqrt(t_big);
}

double hack_limit_integral(double u, HackKind kind, double p, const TailTable* table) {
  if (!(u > 0.0)) throw DomainError("hack_limit_integral needs u > 0");
  const double pref = 1.0 / (2.0 * std::sqrt(kPi) * gamma0(p));
  if (kind == HackKind::area) {
    if (table == nullptr) throw TableMissing("area kind needs a tabulated excursion-area tail");
    if (table->kind != FunctionalKind::excursion_area) throw TableMissing("table is not an excursion-area table");
    return pref * tail_integral(*table, u, 1.5);
  }
  if (table != nullptr) {
    if (table->kind != FunctionalKind::excursion_max) throw TableMissing("table is not an excursion-max table");
    return pref * tail_integral(*table, u, 0.5);
  }
  return pref * max_series_tail_integral(u);
}

ShiftedAreaCheck shifted_area_law_check(double tau, double lambda, const TailTable& area_table, std::int64_t samples,
                                        std::int64_t m, std::uint64_t seed, unsigned threads) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  if (samples < 1) throw DomainError("need at least one sample");
  ShiftedAreaCheck out;
  out.samples = samples;
  out.rhs = 0.5 * std::sqrt(tau) * tail_integral(area_table, lambda, 1.5, tau);

  const std::int64_t blocks = (samples + kBlock - 1) / kBlock;
  struct Counts {
    std::int64_t exceed = 0;
    std::int64_t undecided = 0;
  };
  ShiftedOptions opt;
  opt.area_stop = lambda;
  opt.keep_path = false;
  const auto counts = parallel_map<Counts>(blocks, threads, [&](std::int64_t b) {
    Rng rng(derive_seed(seed, "shifted-area", static_cast<std::uint64_t>(b)));
    Counts c;
    const std::int64_t end = std::min(samples, (b + 1) * kBlock);
    for (std::int64_t i = b * kBlock; i < end; ++i) {
      const ShiftedWalk w = sample_w_plus_tau(tau, m, rng, opt);
      if (w.area_exceeded) ++c.exceed;
      else if (!w.killed) ++c.undecided;
    }
    return c;
  });
  std::int64_t exceed = 0;
  for (const auto& c : counts) {
    exceed += c.exceed;
    out.undecided += c.undecided;
  }
  out.lhs = static_cast<double>(exceed) / static_cast<double>(samples);
  out.lhs_stderr = std::sqrt(out.lhs * (1.0 - out.lhs) / static_cast<double>(samples));
  return out;
}

std::int64_t first_return_time(Rng& rng, std::int64_t limit) {
  std::int64_t s = 0;
  for (std::int64_t t = 1; t <= limit; ++t) {
    s += rng.sign();
    if (s == 0) return t;
  }
  return 0;
}

KaighEstimate kaigh_constants(std::int64_t m, std::int64_t walks, std::uint64_t seed, unsigned threads) {
  if (m < 10) throw DomainError("Kaigh estimate needs m >= 10");
  if (walks < 1) throw DomainError("need at least one walk");
  KaighEstimate est;
  est.m = m;
  est.walks = walks;
  est.half_window = m / 10;
  const std::int64_t w = est.half_window;
  const std::int64_t block = 1 << 16;
  const std::int64_t blocks = (walks + block - 1) / block;
  struct Counts {
    std::int64_t survived = 0;
    std::int64_t in_window = 0;
  };
  const auto counts = parallel_map<Counts>(blocks, threads, [&](std::int64_t b) {
    Rng rng(derive_seed(seed, "kaigh", static_cast<std::uint64_t>(b)));
    Counts c;
    const std::int64_t end = std::min(walks, (b + 1) * block);
    for (std::int64_t i = b * block; i < end; ++i) {
      const std::int64_t t0 = first_return_time(rng, m + w);
      if (t0 == 0 || t0 > m) ++c.survived;
      if (t0 > m - w && t0 <= m + w) ++c.in_window;
    }
    return c;
  });
  for (const auto& c : counts) {
    est.survived += c.survived;
    est.in_window += c.in_window;
  }
  const double md = static_cast<double>(m);
  est.sqrt_m_survival = std::sqrt(md) * static_cast<double>(est.survived) / static_cast<double>(walks);
  // The window holds w even and w odd times, so this averages over parity.
  est.scaled_density = md * std::sqrt(md) * static_cast<double>(est.in_window) /
                       (static_cast<double>(walks) * 2.0 * static_cast<double>(w));
  return est;
}

}  // namespace riverweb
