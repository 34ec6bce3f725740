#pragma once

// Monte Carlo estimation layer: tail estimates with Wilson intervals, log-log
// regression, goodness-of-fit statistics, and the cluster experiment drivers.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "riverweb/errors.hpp"

namespace riverweb {

inline constexpr double kZ95 = 1.959963984540054;

/// Wilson score interval for k successes out of n.
std::pair<double, double> wilson_interval(std::int64_t k, std::int64_t n, double z = kZ95);

/// Tail probability estimate. Censored samples are those whose exceedance
/// could not be decided; p_hat counts only decided exceedances, and ci_hi is
/// the Wilson upper bound of (n_exceed + n_censored) / n_samples so the
/// interval covers every possible resolution of the censored samples.
struct TailEstimate {
  double threshold = 0.0;
  std::int64_t n_samples = 0;
  std::int64_t n_exceed = 0;
  std::int64_t n_below = 0;
  std::int64_t n_censored = 0;
  double p_hat = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

TailEstimate make_tail_estimate(double threshold, std::int64_t exceed, std::int64_t below, std::int64_t censored);

/// Least squares of log y on log x.
struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r2 = 0.0;
  std::int64_t n_points = 0;
  double min_L = 0.0;
};

inline constexpr std::int64_t kMinRegressionPoints = 10;

/// Throws InsufficientSamples below kMinRegressionPoints pairs and DomainError
/// for nonpositive values.
RegressionFit fit_loglog(std::span<const double> x, std::span<const double> y, double min_L = 0.0);

enum class GofKind { ks, chi_square };

struct GofResult {
  double statistic = 0.0;
  GofKind kind = GofKind::ks;
  std::int64_t n = 0;
  double p_value = 1.0;  // asymptotic Kolmogorov or chi-square upper tail
  std::int64_t dof = 0;  // chi-square only
};

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_sf(double lambda);

/// sup_x |F_n(x) - cdf(x)|.
GofResult ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Pearson statistic of observed counts against cell probabilities summing to 1.
GofResult chi_square(std::span<const std::int64_t> counts, std::span<const double> probs);

/// Pearson test that the rows of a contingency table share one distribution.
GofResult chi_square_homogeneity(const std::vector<std::vector<std::int64_t>>& table);

/// Median by nth_element on a copy.
double median(std::span<const double> xs);

// ---------------------------------------------------------------------------
// Cluster replicas.

struct ClusterRunConfig {
  double p = 0.5;
  std::uint64_t seed = 0;
  std::int64_t replicas = 0;
  std::int64_t cap_length = 0;
  std::int64_t cap_total = std::numeric_limits<std::int64_t>::max();
  /// Observation generation for the width, count and coupling statistics; 0 skips them.
  std::int64_t n = 0;
  std::string label = "cluster";
  unsigned threads = 0;
};

/// One replica: the cluster of (0, 0) in a fresh field seeded by
/// derive_seed(seed, label, replica).
struct ClusterRecord {
  std::int64_t replica = 0;
  std::uint64_t seed = 0;
  std::int64_t L = 0;  // generations explored; the true L when not censored
  bool censored = false;
  bool total_capped = false;
  bool reached_n = false;      // generation n was explored and is nonempty (so L > n)
  std::int64_t total = 0;
  std::int64_t dmax = 0;
  std::int64_t width_n = 0;    // D_n
  std::int64_t count_n = 0;    // #C_n
  double coupling_sup = 0.0;   // sup_{s in [0,1]} |p D_n(s) - K_n(s)|, survivors only
};

std::vector<ClusterRecord> run_clusters(const ClusterRunConfig& cfg);

struct SurvivalResult {
  TailEstimate estimate;
  double target = 0.0;  // 1 / (gamma0 sqrt(pi))
  double sqrt_n_p_hat = 0.0;
  std::vector<ClusterRecord> records;
};

/// P(L(0,0) > n); needs at least 1000 replicas.
SurvivalResult estimate_survival(double p, std::int64_t n, std::int64_t replicas, std::uint64_t seed,
                                 std::int64_t cap_length, unsigned threads = 0);
SurvivalResult survival_from_records(double p, std::int64_t n, std::vector<ClusterRecord> records,
                                     std::int64_t cap_length);

struct WidthLawResult {
  GofResult gof;
  std::int64_t survivors = 0;
  std::vector<double> values;  // D_n(1) / sqrt(2) per survivor
};

/// KS distance of D_n(1)/sqrt(2) among survivors against the Rayleigh law.
WidthLawResult width_law_from_records(double p, std::int64_t n, const std::vector<ClusterRecord>& records);
WidthLawResult conditional_width_law(double p, std::int64_t n, std::int64_t replicas, std::uint64_t seed,
                                     std::int64_t cap_length, unsigned threads = 0);

struct CouplingResult {
  std::int64_t survivors = 0;
  double median_sup = 0.0;
  double mean_sup = 0.0;
  std::vector<double> sups;
};

CouplingResult coupling_from_records(const std::vector<ClusterRecord>& records, std::int64_t n);
CouplingResult width_cluster_coupling(double p, std::int64_t n, std::int64_t replicas, std::uint64_t seed,
                                      std::int64_t cap_length, unsigned threads = 0);

struct ScaledTail {
  TailEstimate estimate;
  double scaled = 0.0;      // sqrt(n) p_hat
  double scaled_lo = 0.0;
  double scaled_hi = 0.0;
  double target = 0.0;
};

/// sqrt(n) P(#C_n > sqrt(n) gamma0 u), target (1/(gamma0 sqrt(pi))) exp(-u^2 / (4 p^2)).
ScaledTail gen_count_tail_from_records(double p, std::int64_t n, double u, const std::vector<ClusterRecord>& records,
                                       std::int64_t cap_length);
ScaledTail generation_count_tail(double p, std::int64_t n, double u, std::int64_t replicas, std::uint64_t seed,
                                 std::int64_t cap_length, unsigned threads = 0);

/// sqrt(n) P(#C > (lambda n)^{3/2}); target filled in by the caller.
ScaledTail total_area_tail(double p, std::int64_t n, double lambda, std::int64_t replicas, std::uint64_t seed,
                           std::int64_t cap_length, unsigned threads = 0);

struct TailTable;

/// Limit of sqrt(n) P(#C > (lambda n)^{3/2}): hack_limit_integral at
/// lambda^{3/2} / (sqrt(2) gamma0 p), the cluster area being
/// p sqrt(2) gamma0 n^{3/2} times an excursion-area-like integral.
double total_area_tail_target(double p, double lambda, const TailTable& area_table);

/// lambda > 0 at which total_area_tail_target equals target (bracketed root).
double lambda_for_area_target(double p, double target, const TailTable& area_table);

struct ExponentFit {
  RegressionFit fit;
  double exponent = 0.0;
  double exponent_stderr = 0.0;
  std::int64_t excluded_censored = 0;
};

/// Regresses log #C on log L over uncensored clusters with L >= min_L; the
/// Hack exponent (L ~ #C^h) is 1 / slope.
ExponentFit hack_exponent(const std::vector<ClusterRecord>& records, double min_L);
/// Regresses log D_max on log L over uncensored clusters with L >= min_L and
/// D_max > 0; the exponent (D_max ~ L^e) is the slope.
ExponentFit dmax_exponent(const std::vector<ClusterRecord>& records, double min_L);

struct XiResult {
  std::int64_t n = 0;
  std::int64_t replicas = 0;
  double window = 0.0;  // sqrt(n) gamma0
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<std::int64_t> counts;
  /// E xi_n / (floor(window) + 1), an estimate of P(L > n).
  double survival = 0.0;
  double survival_stderr = 0.0;
};

XiResult xi_estimate(double p, std::int64_t n, std::int64_t replicas, std::uint64_t seed, unsigned threads = 0);

struct IdentityCheck {
  double direct = 0.0;
  double direct_stderr = 0.0;
  double via_xi = 0.0;
  double via_xi_stderr = 0.0;
  double z = 0.0;  // |direct - via_xi| / joint standard error
};

IdentityCheck counting_identity(const SurvivalResult& survival, const XiResult& xi);

}  // namespace riverweb
