#include "riverweb/stats_harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/tools/roots.hpp>

#include "riverweb/brownian_oracle.hpp"
#include "riverweb/forward_network.hpp"
#include "riverweb/lattice_field.hpp"
#include "riverweb/numeric.hpp"
#include "riverweb/parallel.hpp"
#include "riverweb/rng.hpp"
#include "riverweb/scaling_obs.hpp"

namespace riverweb {

std::pair<double, double> wilson_interval(std::int64_t k, std::int64_t n, double z) {
  if (n <= 0) return {0.0, 1.0};
  if (k < 0 || k > n) throw DomainError("Wilson interval needs 0 <= k <= n");
  const double nd = static_cast<double>(n);
  const double ph = static_cast<double>(k) / nd;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nd;
  const double center = (ph + z2 / (2.0 * nd)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nd + z2 / (4.0 * nd * nd)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

TailEstimate make_tail_estimate(double threshold, std::int64_t exceed, std::int64_t below, std::int64_t censored) {
  if (exceed < 0 || below < 0 || censored < 0) throw DomainError("negative tail counts");
  TailEstimate e;
  e.threshold = threshold;
  e.n_exceed = exceed;
  e.n_below = below;
  e.n_censored = censored;
  e.n_samples = exceed + below + censored;
  if (e.n_samples == 0) {
    e.ci_hi = 1.0;
    return e;
  }
  const double n = static_cast<double>(e.n_samples);
  e.p_hat = static_cast<double>(exceed) / n;
  e.std_error = std::sqrt(e.p_hat * (1.0 - e.p_hat) / n);
  e.ci_lo = wilson_interval(exceed, e.n_samples).first;
  e.ci_hi = wilson_interval(exceed + censored, e.n_samples).second;
  return e;
}

RegressionFit fit_loglog(std::span<const double> x, std::span<const double> y, double min_L) {
  if (x.size() != y.size()) throw LengthMismatch("regression inputs differ in length");
  const auto n = static_cast<std::int64_t>(x.size());
  if (n < kMinRegressionPoints)
    throw InsufficientSamples("regression needs at least " + std::to_string(kMinRegressionPoints) + " points, got " +
                              std::to_string(n));
  std::vector<double> lx(x.size());
  std::vector<double> ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("log-log regression needs positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double nd = static_cast<double>(n);
  const double mx = compensated_sum(lx) / nd;
  const double my = compensated_sum(ly) / nd;
  std::vector<double> sxx(x.size()), sxy(x.size()), syy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = lx[i] - mx;
    const double dy = ly[i] - my;
    sxx[i] = dx * dx;
    sxy[i] = dx * dy;
    syy[i] = dy * dy;
  }
  const double Sxx = compensated_sum(sxx);
  const double Sxy = compensated_sum(sxy);
  const double Syy = compensated_sum(syy);
  if (!(Sxx > 0.0)) throw DomainError("regression needs at least two distinct x values");
  RegressionFit fit;
  fit.n_points = n;
  fit.min_L = min_L;
  fit.slope = Sxy / Sxx;
  fit.intercept = my - fit.slope * mx;
  const double sse = std::max(0.0, Syy - fit.slope * Sxy);
  fit.slope_stderr = n > 2 ? std::sqrt(sse / (nd - 2.0) / Sxx) : 0.0;
  fit.r2 = Syy > 0.0 ? (Sxy * Sxy) / (Sxx * Syy) : 1.0;
  return fit;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.0) {
    // Jacobi form, fast for small lambda: 1 - sqrt(2 pi)/lambda sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))
    double sum = 0.0;
    for (int k = 1; k < 100; ++k) {
      const double a = (2.0 * k - 1.0) * pi / lambda;
      const double term = std::exp(-a * a / 8.0);
      sum += term;
      if (term < 1e-17) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

GofResult ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InsufficientSamples("KS distance of an empty sample");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  GofResult r;
  r.kind = GofKind::ks;
  r.statistic = d;
  r.n = static_cast<std::int64_t>(xs.size());
  const double rn = std::sqrt(n);
  r.p_value = kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
  return r;
}

namespace {

double chi2_upper(double stat, std::int64_t dof) {
  if (dof < 1) return 1.0;
  boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

GofResult chi_square(std::span<const std::int64_t> counts, std::span<const double> probs) {
  if (counts.size() != probs.size()) throw LengthMismatch("counts and probabilities differ in length");
  if (counts.size() < 2) throw DomainError("chi-square needs at least two cells");
  double total_p = 0.0;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!(probs[i] > 0.0)) throw DomainError("chi-square cell probabilities must be positive");
    if (counts[i] < 0) throw DomainError("negative count");
    total_p += probs[i];
    total += counts[i];
  }
  if (std::abs(total_p - 1.0) > 1e-9) throw DomainError("chi-square cell probabilities must sum to 1");
  if (total == 0) throw InsufficientSamples("chi-square with no observations");
  std::vector<double> terms(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = static_cast<double>(total) * probs[i];
    const double diff = static_cast<double>(counts[i]) - e;
    terms[i] = diff * diff / e;
  }
  GofResult r;
  r.kind = GofKind::chi_square;
  r.statistic = compensated_sum(terms);
  r.n = total;
  r.dof = static_cast<std::int64_t>(counts.size()) - 1;
  r.p_value = chi2_upper(r.statistic, r.dof);
  return r;
}

GofResult chi_square_homogeneity(const std::vector<std::vector<std::int64_t>>& table) {
  if (table.size() < 2) throw DomainError("homogeneity test needs at least two rows");
  const std::size_t cols = table.front().size();
  for (const auto& row : table)
    if (row.size() != cols) throw LengthMismatch("contingency rows differ in length");
  std::vector<std::int64_t> col_total(cols, 0);
  std::vector<std::int64_t> row_total(table.size(), 0);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      col_total[j] += table[i][j];
      row_total[i] += table[i][j];
      total += table[i][j];
    }
  if (total == 0) throw InsufficientSamples("empty contingency table");
  std::vector<double> terms;
  std::int64_t used_cols = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    if (col_total[j] == 0) continue;
    ++used_cols;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double e = static_cast<double>(row_total[i]) * static_cast<double>(col_total[j]) / static_cast<double>(total);
      if (e == 0.0) continue;
      const double diff = static_cast<double>(table[i][j]) - e;
      terms.push_back(diff * diff / e);
    }
  }
  std::int64_t used_rows = 0;
  for (auto r : row_total) used_rows += r > 0 ? 1 : 0;
  GofResult r;
  r.kind = GofKind::chi_square;
  r.statistic = compensated_sum(terms);
  r.n = total;
  r.dof = (used_rows - 1) * (used_cols - 1);
  r.p_value = chi2_upper(r.statistic, r.dof);
  return r;
}

double median(std::span<const double> xs) {
  if (xs.empty()) throw InsufficientSamples("median of an empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::vector<ClusterRecord> run_clusters(const ClusterRunConfig& cfg) {
  if (cfg.replicas < 0) throw DomainError("negative replica count");
  if (cfg.cap_length < 1) throw DomainError("cluster length cap must be >= 1");
  const double scale = cfg.n > 0 ? gamma0(cfg.p) * std::sqrt(static_cast<double>(cfg.n)) : 1.0;
  return parallel_map<ClusterRecord>(cfg.replicas, cfg.threads, [&](std::int64_t i) {
    ClusterRecord rec;
    rec.replica = i;
    rec.seed = derive_seed(cfg.seed, cfg.label, static_cast<std::uint64_t>(i));
    const FieldConfig field(cfg.p, rec.seed);
    const ClusterExploration ex = explore_cluster(field, Site{0, 0}, cfg.cap_length, cfg.cap_total);
    const Cluster& c = ex.cluster;
    rec.L = c.length;
    rec.censored = ex.censored;
    rec.total_capped = ex.total_capped;
    rec.total = c.total;
    rec.dmax = c.max_width;
    if (cfg.n > 0 && static_cast<std::int64_t>(c.rows.size()) > cfg.n) {
      rec.reached_n = true;
      rec.width_n = c.width(cfg.n);
      rec.count_n = c.count(cfg.n);
      // p D_n(s) - K_n(s) is linear between breakpoints k/n, so the sup is at one of them.
      double sup = 0.0;
      for (std::int64_t k = 0; k <= cfg.n; ++k)
        sup = std::max(sup, std::abs(cfg.p * static_cast<double>(c.width(k)) - static_cast<double>(c.count(k))));
      rec.coupling_sup = sup / scale;
    }
    return rec;
  });
}

namespace {

void require_replicas(std::int64_t replicas, std::int64_t minimum) {
  if (replicas < minimum)
    throw DomainError("estimator needs at least " + std::to_string(minimum) + " replicas, got " +
                      std::to_string(replicas));
}

std::vector<ClusterRecord> observed_clusters(double p, std::int64_t n, std::int64_t replicas, std::uint64_t seed,
                                             std::int64_t cap_length, unsigned threads) {
  ClusterRunConfig cfg;
  cfg.p = p;
  cfg.seed = seed;
  cfg.replicas = replicas;
  cfg.cap_length = cap_length;
  cfg.n = n;
  cfg.threads = threads;
  return run_clusters(cfg);
}

}  // namespace

SurvivalResult survival_from_records(double p, std::int64_t n, std::vector<ClusterRecord> records,
                                     std::int64_t cap_length) {
  if (n < 1) throw DomainError("survival needs n >= 1");
  std::int64_t exceed = 0, below = 0, censored = 0;
  for (const auto& r : records) {
    if (r.censored && cap_length <= n) ++censored;
    else if (r.L > n) ++exceed;
    else ++below;
  }
  SurvivalResult out;
  out.estimate = make_tail_estimate(static_cast<double>(n), exceed, below, censored);
  out.target = 1.0 / (gamma0(p) * std::sqrt(std::numbers::pi));
  out.sqrt_n_p_hat = std::sqrt(static_cast<double>(n)) * out.estimate.p_hat;
  out.records = std::move(records);
  return out;
}

SurvivalResult estimate_survival(double p, std::int64_t n, std::int64_t replicas, std::uint64_t seed,
                                 std::int64_t cap_length, unsigned threads) {
  require_replicas(replicas, 1000);
  return survival_from_records(p, n, observed_clusters(p, n, replicas, seed, cap_length, threads), cap_length);
}

WidthLawResult width_law_from_records(double p, std::int64_t n, const std::vector<ClusterRecord>& records) {
  const double scale = gamma0(p) * std::sqrt(static_cast<double>(n)) * std::sqrt(2.0);
  WidthLawResult out;
  for (const auto& r : records)
    if (r.reached_n) out.values.push_back(static_cast<double>(r.width_n) / scale);
  out.survivors = static_cast<std::int64_t>(out.values.size());
  if (out.values.empty()) throw InsufficientSamples("no surviving clusters");
  out.gof = ks_distance(out.values, ref_rayleigh_cdf);
  return out;
}

WidthLawResult conditional_width_law(double p, std::int64_t n, std::int64_t replicas, std::uint64_t seed,
                                     std::int64_t cap_length, unsigned threads) {
  require_replicas(replicas, 1);
  return width_law_from_records(p, n, observed_clusters(p, n, replicas, seed, cap_length, threads));
}

CouplingResult coupling_from_records(const std::vector<ClusterRecord>& records, std::int64_t /*n*/) {
  CouplingResult out;
  for (const auto& r : records)
    if (r.reached_n) out.sups.push_back(r.coupling_sup);
  out.survivors = static_cast<std::int64_t>(out.sups.size());
  if (out.sups.empty()) return out;
  out.median_sup = median(out.sups);
  out.mean_sup = compensated_sum(out.sups) / static_cast<double>(out.sups.size());
  return out;
}

CouplingResult width_cluster_coupling(double p, std::int64_t n, std::int64_t replicas, std::uint64_t seed,
                                      std::int64_t cap_length, unsigned threads) {
  require_replicas(replicas, 1);
  return coupling_from_records(observed_clusters(p, n, replicas, seed, cap_length, threads), n);
}

namespace {

ScaledTail scale_tail(const TailEstimate& e, std::int64_t n, double target) {
  const double rn = std::sqrt(static_cast<double>(n));
  ScaledTail s;
  s.estimate = e;
  s.scaled = rn * e.p_hat;
  s.scaled_lo = rn * e.ci_lo;
  s.scaled_hi = rn * e.ci_hi;
  s.target = target;
  return s;
}

}  // namespace

ScaledTail gen_count_tail_from_records(double p, std::int64_t n, double u, const std::vector<ClusterRecord>& records,
                                       std::int64_t cap_length) {
  if (!(u > 0.0)) throw DomainError("generation-count tail needs u > 0");
  const double g = gamma0(p);
  const double threshold = std::sqrt(static_cast<double>(n)) * g * u;
  std::int64_t exceed = 0, below = 0, censored = 0;
  for (const auto& r : records) {
    if (r.reached_n) {
      if (static_cast<double>(r.count_n) > threshold) ++exceed;
      else ++below;
    } else if (r.censored && cap_length <= n) {
      ++censored;
    } else {
      ++below;
    }
  }
  const double target = std::exp(-u * u / (4.0 * p * p)) / (g * std::sqrt(std::numbers::pi));
  return scale_tail(make_tail_estimate(threshold, exceed, below, censored), n, target);
}

ScaledTail generation_count_tail(double p, std::int64_t n, double u, std::int64_t replicas, std::uint64_t seed,
                                 std::int64_t cap_length, unsigned threads) {
  require_replicas(replicas, 1);
  return gen_count_tail_from_records(p, n, u, observed_clusters(p, n, replicas, seed, cap_length, threads),
                                     cap_length);
}

ScaledTail total_area_tail(double p, std::int64_t n, double lambda, std::int64_t replicas, std::uint64_t seed,
                           std::int64_t cap_length, unsigned threads) {
  require_replicas(replicas, 1);
  if (!(lambda > 0.0)) throw DomainError("area tail needs lambda > 0");
  const double threshold = std::pow(lambda * static_cast<double>(n), 1.5);
  ClusterRunConfig cfg;
  cfg.p = p;
  cfg.seed = seed;
  cfg.replicas = replicas;
  cfg.cap_length = cap_length;
  cfg.cap_total = static_cast<std::int64_t>(std::floor(std::min(threshold, 9.0e18)));
  cfg.threads = threads;
  const auto records = run_clusters(cfg);
  std::int64_t exceed = 0, below = 0, censored = 0;
  for (const auto& r : records) {
    if (r.total_capped || static_cast<double>(r.total) > threshold) ++exceed;
    else if (r.censored) ++censored;
    else ++below;
  }
  return scale_tail(make_tail_estimate(threshold, exceed, below, censored), n, 0.0);
}

double total_area_tail_target(double p, double lambda, const TailTable& area_table) {
  if (!(lambda > 0.0)) throw DomainError("area tail needs lambda > 0");
  const double u = std::pow(lambda, 1.5) / (std::sqrt(2.0) * gamma0(p) * p);
  return hack_limit_integral(u, HackKind::area, p, &area_table);
}

double lambda_for_area_target(double p, double target, const TailTable& area_table) {
  if (!(target > 0.0)) throw DomainError("area tail target must be positive");
  auto f = [&](double log_lambda) { return total_area_tail_target(p, std::exp(log_lambda), area_table) - target; };
  double lo = std::log(1e-3);
  double hi = std::log(1e3);
  if (f(lo) < 0.0 || f(hi) > 0.0) throw DomainError("area tail target outside the bracketed lambda range");
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(48), iters);
  return std::exp(0.5 * (a + b));
}

namespace {

template <typename Pick>
ExponentFit exponent_fit(const std::vector<ClusterRecord>& records, double min_L, Pick pick, bool invert) {
  std::vector<double> x;
  std::vector<double> y;
  ExponentFit out;
  for (const auto& r : records) {
    if (static_cast<double>(r.L) < min_L) continue;
    if (r.censored || r.total_capped) {
      ++out.excluded_censored;
      continue;
    }
    const double v = pick(r);
    if (!(v > 0.0)) continue;
    x.push_back(static_cast<double>(r.L));
    y.push_back(v);
  }
  out.fit = fit_loglog(x, y, min_L);
  if (invert) {
    out.exponent = 1.0 / out.fit.slope;
    out.exponent_stderr = out.fit.slope_stderr / (out.fit.slope * out.fit.slope);
  } else {
    out.exponent = out.fit.slope;
    out.exponent_stderr = out.fit.slope_stderr;
  }
  return out;
}

}  // namespace

ExponentFit hack_exponent(const std::vector<ClusterRecord>& records, double min_L) {
  return exponent_fit(records, min_L, [](const ClusterRecord& r) { return static_cast<double>(r.total); }, true);
}

ExponentFit dmax_exponent(const std::vector<ClusterRecord>& records, double min_L) {
  return exponent_fit(records, min_L, [](const ClusterRecord& r) { return static_cast<double>(r.dmax); }, false);
}

XiResult xi_estimate(double p, std::int64_t n, std::int64_t replicas, std::uint64_t seed, unsigned threads) {
  require_replicas(replicas, 2);
  XiResult out;
  out.n = n;
  out.replicas = replicas;
  out.window = std::sqrt(static_cast<double>(n)) * gamma0(p);
  out.counts = parallel_map<std::int64_t>(replicas, threads, [&](std::int64_t i) {
    const FieldConfig field(p, derive_seed(seed, "xi", static_cast<std::uint64_t>(i)));
    return xi_count(field, n, out.window);
  });
  std::vector<double> v(out.counts.begin(), out.counts.end());
  const double rd = static_cast<double>(replicas);
  out.mean = compensated_sum(v) / rd;
  for (auto& x : v) x = (x - out.mean) * (x - out.mean);
  const double var = compensated_sum(v) / (rd - 1.0);
  out.std_error = std::sqrt(var / rd);
  const double sites = std::floor(out.window) + 1.0;
  out.survival = out.mean / sites;
  out.survival_stderr = out.std_error / sites;
  return out;
}

IdentityCheck counting_identity(const SurvivalResult& survival, const XiResult& xi) {
  IdentityCheck c;
  c.direct = survival.estimate.p_hat;
  c.direct_stderr = survival.estimate.std_error;
  c.via_xi = xi.survival;
  c.via_xi_stderr = xi.survival_stderr;
  const double joint = std::sqrt(c.direct_stderr * c.direct_stderr + c.via_xi_stderr * c.via_xi_stderr);
  c.z = joint > 0.0 ? std::abs(c.direct - c.via_xi) / joint : (c.direct == c.via_xi ? 0.0 : INFINITY);
  return c;
}

}  // namespace riverweb
