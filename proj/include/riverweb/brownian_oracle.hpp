#pragma once

// Reference constructions of the Brownian limit objects from conditioned
// simple random walks, closed-form reference laws, and the tail integrals
// that turn excursion-area/maximum laws into cluster-size tail targets.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riverweb/errors.hpp"
#include "riverweb/rng.hpp"
#include "riverweb/scaling_obs.hpp"

namespace riverweb {

/// Simple random walk path S_0 = 0, S_{k+1} = S_k + steps[k].
class WalkPath {
 public:
  WalkPath() = default;
  explicit WalkPath(std::vector<std::int8_t> steps);

  const std::vector<std::int8_t>& steps() const noexcept { return steps_; }
  std::int64_t length() const noexcept { return static_cast<std::int64_t>(steps_.size()); }
  std::vector<std::int64_t> heights() const;
  std::int64_t endpoint() const;
  std::int64_t max_height() const;
  std::int64_t min_height() const;
  /// Sum of S_k over k = 0..m, the area under the linear interpolation when S_0 = S_m = 0.
  std::int64_t height_sum() const;

  /// Y(t) = S_k/sqrt(scale) + (scale t - k)(S_{k+1} - S_k)/sqrt(scale), breakpoints k/scale.
  ScaledProcess interpolated(std::int64_t scale) const;

 private:
  std::vector<std::int8_t> steps_;
};

/// Walk of length m conditioned on S_k > 0 for 1 <= k <= m, by rejection.
/// Strict positivity puts the endpoint lattice symmetric about the limit
/// density; the weak version (S_k >= 0) biases S_m/sqrt(m) low by 1/sqrt(m).
WalkPath sample_meander(std::int64_t m, Rng& rng);

/// Excursion of even length m: S_0 = S_m = 0 and S_k > 0 in between, uniform
/// over such paths. Built from a uniformly ordered sequence of m/2 - 1 up and
/// m/2 down steps rotated to start after its first minimum (cycle lemma).
WalkPath sample_excursion(std::int64_t m, Rng& rng);

/// Same law as sample_excursion by rejection on the first return time; m <= 64.
WalkPath sample_excursion_rejection(std::int64_t m, Rng& rng);

/// Continuous piecewise-linear function on [0, inf): linear between knots,
/// constant after the last knot. Knots start at 0 and strictly increase.
class PiecewiseLinear {
 public:
  PiecewiseLinear(std::vector<double> t, std::vector<double> y);
  static PiecewiseLinear from_process(const ScaledProcess& f);

  const std::vector<double>& knots() const noexcept { return t_; }
  const std::vector<double>& values() const noexcept { return y_; }
  double end() const noexcept { return t_.back(); }
  double operator()(double s) const;
  /// Integral over [0, end()].
  double integral() const;

 private:
  std::vector<double> t_;
  std::vector<double> y_;
};

/// S^{tau+}: the first knot t with f(t + s) > f(t) for all 0 < s <= tau
/// (the infimum of such t is always a knot). Only knots with t + tau <= end()
/// are candidates; nullopt when none qualifies.
std::optional<double> shift_point(const PiecewiseLinear& f, double tau);

/// T^{tau+}: f(S + s) - f(S) with S = shift_point(f, tau), or f itself when
/// there is no shift point.
PiecewiseLinear t_tau_plus(const PiecewiseLinear& f, double tau);

/// t_f = inf{s > 0 : f(s) = 0}.
std::optional<double> first_zero(const PiecewiseLinear& f);

/// H(f): f on [0, t_f], zero afterwards.
PiecewiseLinear kill_at_zero(const PiecewiseLinear& f);

struct ShiftedOptions {
  /// Stop once the area of the killed path exceeds this (the path is then truncated).
  double area_stop = std::numeric_limits<double>::infinity();
  /// Longest unconditioned walk searched for the shift point.
  std::int64_t max_search = std::int64_t{1} << 30;
  /// Longest walk followed after the shift point.
  std::int64_t max_after = std::int64_t{1} << 30;
  bool keep_path = true;
};

/// One sample of H(T^{tau+}(Y_m)) from an unconditioned walk.
struct ShiftedWalk {
  std::int64_t shift_index = 0;             // S^{tau+} in walk steps
  std::vector<std::int64_t> heights;        // S_{shift+i} - S_shift while kept
  std::int64_t steps_followed = 0;          // steps after the shift that were generated
  bool killed = false;                      // returned to level 0 within the followed steps
  bool area_exceeded = false;               // area passed options.area_stop
  std::int64_t height_at_tau = 0;           // S_{shift + floor(m tau)} - S_shift
  double area = 0.0;                        // area of the killed path (up to the stop)
  std::int64_t m = 1;

  PiecewiseLinear process() const;
};

/// Shift point of a finished walk by the next-lower-or-equal scan: knot j
/// qualifies when the first k > j with S_k <= S_j is beyond j + floor(m tau).
std::optional<std::int64_t> walk_shift_index(std::span<const std::int64_t> heights, std::int64_t m, double tau);

ShiftedWalk sample_w_plus_tau(double tau, std::int64_t m, Rng& rng, const ShiftedOptions& options = {});

/// Discrete H(T^{tau+}(walk)) on an explicit walk, the integer route used by
/// sample_w_plus_tau. Throws WalkTooShort when the walk has no shift point.
ShiftedWalk w_plus_tau_from_walk(std::span<const std::int64_t> heights, std::int64_t m, double tau);

// Reference laws.
double ref_rayleigh_sf(double x);
double ref_rayleigh_cdf(double x);
/// P(M+_0 <= x). terms = 0 picks enough terms for a tail below 1e-12.
double ref_excursion_max_cdf(double x, int terms = 0);
/// Density of M+_0 by term-wise differentiation.
double ref_excursion_max_density(double x);
/// (6 sqrt 6 / sqrt pi) x exp(-6 x^2).
double ref_excursion_area_tail_asym(double x);
/// 1 / sqrt(pi t).
double ref_xi_mean(double t);

enum class FunctionalKind { meander_area, meander_endpoint, excursion_area, excursion_max, shifted_area };

std::string to_string(FunctionalKind kind);
FunctionalKind functional_kind_from_string(const std::string& name);

struct FunctionalSample {
  FunctionalKind kind;
  double value;
};

/// One draw of the functional from a walk of length m (diffusive scaling by m).
/// For shifted_area, tau = 1.
FunctionalSample sample_functional(FunctionalKind kind, std::int64_t m, Rng& rng);

/// count draws split into fixed blocks with derived streams, so the result does
/// not depend on the worker count.
std::vector<double> sample_functionals(FunctionalKind kind, std::int64_t m, std::int64_t count, std::uint64_t seed,
                                       unsigned threads = 0);

/// Tabulated tail and kernel density of a nonnegative functional.
struct TailTable {
  FunctionalKind kind = FunctionalKind::excursion_area;
  std::uint64_t seed = 0;
  std::int64_t n_samples = 0;
  std::int64_t walk_length = 0;
  double bandwidth = 0.0;
  double mean = 0.0;
  std::vector<double> grid;      // increasing, grid[0] = 0
  std::vector<double> survival;  // P(X > grid[i]), nonincreasing
  std::vector<double> density;   // Gaussian kernel density at grid[i]

  double sf(double x) const;
  double pdf(double x) const;
};

inline constexpr std::int64_t kMinTableSamples = 100000;

/// Builds the table from samples; grid defaults to 2001 points on [0, max sample].
TailTable tabulate_excursion_area_dist(std::span<const double> samples, std::vector<double> grid = {},
                                       std::uint64_t seed = 0, std::int64_t walk_length = 0,
                                       FunctionalKind kind = FunctionalKind::excursion_area);

void save_table(const TailTable& table, const std::filesystem::path& path);
TailTable load_table(const std::filesystem::path& path);

/// Loads the table at `path` if its header matches (kind, seed, samples,
/// walk length); otherwise samples, tabulates and writes it.
TailTable cached_table(FunctionalKind kind, std::int64_t m, std::int64_t samples, std::uint64_t seed,
                       const std::filesystem::path& path, unsigned threads = 0);

enum class HackKind { area, max };

/// int_{t_lo}^inf t^{-3/2} sf(u t^{-a}) dt for a tail function given by a
/// table (a = 3/2 for area, 1/2 for max).
double tail_integral(const TailTable& table, double u, double a, double t_lo = 0.0);
/// Same integral with the exact M+_0 series as the tail function (a = 1/2).
double max_series_tail_integral(double u, double t_lo = 0.0);

/// (1 / (2 sqrt(pi) gamma0)) int_0^inf t^{-3/2} F-bar(u t^{-a}) dt. The area
/// kind needs a table; the max kind uses the series unless a table is given.
double hack_limit_integral(double u, HackKind kind, double p, const TailTable* table = nullptr);

struct ShiftedAreaCheck {
  double lhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs = 0.0;
  std::int64_t samples = 0;
  std::int64_t undecided = 0;
};

/// Both sides of P(int W^{+,tau} > lambda) = (sqrt(tau)/2) int_tau^inf t^{-3/2} F-bar(lambda t^{-3/2}) dt.
ShiftedAreaCheck shifted_area_law_check(double tau, double lambda, const TailTable& area_table,
                                        std::int64_t samples, std::int64_t m, std::uint64_t seed,
                                        unsigned threads = 0);

/// First return time to 0 of a walk from 0, or 0 when it exceeds limit.
std::int64_t first_return_time(Rng& rng, std::int64_t limit);

struct KaighEstimate {
  std::int64_t m = 0;
  std::int64_t walks = 0;
  std::int64_t survived = 0;   // t0 > m
  std::int64_t in_window = 0;  // t0 in (m - w, m + w]
  std::int64_t half_window = 0;
  double sqrt_m_survival = 0.0;  // sqrt(m) P(t0 > m), limit sqrt(2/pi)
  double scaled_density = 0.0;   // m^{3/2} P(t0 = m) averaged over both parities, limit 1/sqrt(2 pi)
};

KaighEstimate kaigh_constants(std::int64_t m, std::int64_t walks, std::uint64_t seed, unsigned threads = 0);

}  // namespace riverweb
