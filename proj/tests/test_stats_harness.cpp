#include <doctest.h>

#include <cmath>
#include <random>

#include "riverweb/brownian_oracle.hpp"
#include "riverweb/stats_harness.hpp"

using namespace riverweb;

namespace {

// O(n^2) KS: at every sample point compare the cdf with both one-sided limits
// of the empirical distribution, counted directly.
double ks_brute(const std::vector<double>& xs, const std::function<double(double)>& cdf) {
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (double x : xs) {
    std::int64_t le = 0, lt = 0;
    for (double y : xs) {
      le += y <= x;
      lt += y < x;
    }
    d = std::max({d, std::abs(static_cast<double>(le) / n - cdf(x)), std::abs(static_cast<double>(lt) / n - cdf(x))});
  }
  return d;
}

ClusterRecord rec(std::int64_t L, bool censored = false, std::int64_t total = 1, std::int64_t dmax = 0) {
  ClusterRecord r;
  r.L = L;
  r.censored = censored;
  r.total = total;
  r.dmax = dmax;
  return r;
}

}  // namespace

TEST_CASE("Wilson interval values") {
  auto [lo, hi] = wilson_interval(0, 10);
  CHECK(lo == 0.0);
  CHECK(hi == doctest::Approx(0.2775).epsilon(1e-3));
  std::tie(lo, hi) = wilson_interval(5, 10);
  CHECK(lo == doctest::Approx(0.2366).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.7634).epsilon(1e-3));
  CHECK_THROWS_AS(wilson_interval(11, 10), DomainError);
}

TEST_CASE("Wilson interval coverage") {
  std::mt19937_64 gen(3);
  for (double p : {0.02, 0.1, 0.5}) {
    std::binomial_distribution<int> b(200, p);
    int covered = 0;
    const int reps = 20000;
    for (int i = 0; i < reps; ++i) {
      const auto [lo, hi] = wilson_interval(b(gen), 200);
      covered += lo <= p && p <= hi;
    }
    CHECK(static_cast<double>(covered) / reps > 0.925);
  }
}

TEST_CASE("tail estimate with censoring") {
  const TailEstimate e = make_tail_estimate(5.0, 30, 60, 10);
  CHECK(e.n_samples == 100);
  CHECK(e.p_hat == doctest::Approx(0.3));
  CHECK(e.std_error == doctest::Approx(std::sqrt(0.21 / 100)));
  CHECK(e.ci_lo == doctest::Approx(wilson_interval(30, 100).first));
  CHECK(e.ci_hi == doctest::Approx(wilson_interval(40, 100).second));
  CHECK(e.ci_lo <= e.p_hat);
  CHECK(e.ci_hi >= 0.4);
  CHECK_THROWS_AS(make_tail_estimate(1.0, -1, 0, 0), DomainError);
}

TEST_CASE("log-log regression recovers synthetic power laws") {
  std::vector<double> x, y;
  for (int i = 1; i <= 50; ++i) {
    x.push_back(i);
    y.push_back(3.0 * std::pow(i, 0.7));
  }
  RegressionFit f = fit_loglog(x, y, 1.0);
  CHECK(f.slope == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.n_points == 50);
  CHECK(f.min_L == 1.0);

  std::mt19937_64 gen(5);
  std::normal_distribution<double> noise(0.0, 0.3);
  x.clear();
  y.clear();
  for (int i = 0; i < 5000; ++i) {
    const double xi = std::exp(std::uniform_real_distribution<double>(0.0, 6.0)(gen));
    x.push_back(xi);
    y.push_back(std::pow(xi, 1.5) * std::exp(noise(gen)));
  }
  f = fit_loglog(x, y);
  CHECK(std::abs(f.slope - 1.5) < 4.0 * f.slope_stderr);
  CHECK(f.slope_stderr == doctest::Approx(0.3 / (std::sqrt(5000.0) * 6.0 / std::sqrt(12.0))).epsilon(0.05));

  CHECK_THROWS_AS(fit_loglog(std::vector<double>(9, 2.0), std::vector<double>(9, 2.0)), InsufficientSamples);
  CHECK_THROWS_AS(fit_loglog(std::vector<double>(12, 2.0), std::vector<double>(11, 2.0)), LengthMismatch);
  std::vector<double> bad(12, 1.0);
  bad[3] = 0.0;
  CHECK_THROWS_AS(fit_loglog(bad, std::vector<double>(12, 1.0)), DomainError);
}

TEST_CASE("KS distance equals the brute-force double loop") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd(1.0, 0.4);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> xs(100);
    for (auto& x : xs) x = std::abs(nd(gen));
    if (rep % 2) for (auto& x : xs) x = std::round(4.0 * x) / 4.0;  // ties
    CHECK(ks_distance(xs, ref_rayleigh_cdf).statistic == ks_brute(xs, ref_rayleigh_cdf));
  }
}

TEST_CASE("KS statistic scale under the null and under a shift") {
  std::mt19937_64 gen(8);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = std::sqrt(-2.0 * std::log(1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(gen)));
  const GofResult null = ks_distance(xs, ref_rayleigh_cdf);
  CHECK(null.statistic < 1.6 / std::sqrt(20000.0));
  CHECK(null.p_value > 1e-3);
  for (auto& x : xs) x += 0.1;
  const GofResult shifted = ks_distance(xs, ref_rayleigh_cdf);
  CHECK(shifted.statistic > 0.04);
  CHECK(shifted.p_value < 1e-10);
  CHECK_THROWS_AS(ks_distance(std::vector<double>{}, ref_rayleigh_cdf), InsufficientSamples);
}

TEST_CASE("Kolmogorov tail values") {
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967).epsilon(1e-6));
  CHECK(kolmogorov_sf(1.358) == doctest::Approx(0.05).epsilon(2e-3));
  CHECK(kolmogorov_sf(0.0) == 1.0);
  CHECK(kolmogorov_sf(10.0) < 1e-80);
}

TEST_CASE("chi-square statistic and p-value against direct computation") {
  const std::vector<std::int64_t> counts{30, 50, 20};
  const std::vector<double> probs{0.25, 0.5, 0.25};
  const GofResult g = chi_square(counts, probs);
  const double stat = 25.0 / 25.0 + 0.0 + 25.0 / 25.0;
  CHECK(g.statistic == doctest::Approx(stat));
  CHECK(g.dof == 2);
  CHECK(g.p_value == doctest::Approx(std::exp(-stat / 2.0)).epsilon(1e-12));  // two dof: exponential tail
  CHECK_THROWS_AS(chi_square(counts, std::vector<double>{0.3, 0.3, 0.3}), DomainError);
  CHECK_THROWS_AS(chi_square(counts, std::vector<double>{0.5, 0.5}), LengthMismatch);
}

TEST_CASE("homogeneity chi-square against direct computation") {
  const std::vector<std::vector<std::int64_t>> t{{10, 20, 30}, {20, 20, 20}};
  const GofResult g = chi_square_homogeneity(t);
  double stat = 0.0;
  const double col[3] = {30, 40, 50};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      const double e = 60.0 * col[j] / 120.0;
      stat += (t[i][j] - e) * (t[i][j] - e) / e;
    }
  CHECK(g.statistic == doctest::Approx(stat));
  CHECK(g.dof == 2);
  CHECK(g.p_value == doctest::Approx(std::exp(-stat / 2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(chi_square_homogeneity({{1, 2}}), DomainError);
}

TEST_CASE("median") {
  CHECK(median(std::vector<double>{3, 1, 2}) == 2.0);
  CHECK(median(std::vector<double>{4, 1, 3, 2}) == 2.5);
}

TEST_CASE("survival counts censored replicas only when undecided") {
  std::vector<ClusterRecord> r{rec(3), rec(10), rec(12), rec(8, true), rec(8, true)};
  // Cap 8 <= n = 9: the two censored replicas are undecided.
  SurvivalResult s = survival_from_records(0.5, 9, r, 8);
  CHECK(s.estimate.n_exceed == 2);
  CHECK(s.estimate.n_below == 1);
  CHECK(s.estimate.n_censored == 2);
  CHECK(s.estimate.p_hat == doctest::Approx(0.4));
  // Cap 8 > n = 5: censored replicas certainly exceed.
  s = survival_from_records(0.5, 5, r, 8);
  CHECK(s.estimate.n_exceed == 4);
  CHECK(s.estimate.n_censored == 0);
  CHECK(s.sqrt_n_p_hat == doctest::Approx(std::sqrt(5.0) * 0.8));
  CHECK(s.target == doctest::Approx(1.0 / (gamma0(0.5) * std::sqrt(std::numbers::pi))));
  CHECK_THROWS_AS(estimate_survival(0.5, 16, 999, 1, 64), DomainError);
}

TEST_CASE("exponent fits on exact power laws exclude censored clusters") {
  std::vector<ClusterRecord> r;
  for (std::int64_t L = 1; L <= 400; ++L)
    r.push_back(rec(L, false, static_cast<std::int64_t>(std::llround(std::pow(L, 1.5) * 1000.0)),
                    static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(L)) * 1000.0))));
  r.push_back(rec(500, true, 5, 5));
  const ExponentFit h = hack_exponent(r, 32);
  CHECK(h.exponent == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(h.excluded_censored == 1);
  CHECK(h.fit.n_points == 400 - 31);
  const ExponentFit d = dmax_exponent(r, 32);
  CHECK(d.exponent == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(h.exponent_stderr >= 0.0);
}

TEST_CASE("cluster runs match direct exploration and ignore the thread count") {
  ClusterRunConfig cfg;
  cfg.p = 0.5;
  cfg.seed = 9;
  cfg.replicas = 3000;
  cfg.cap_length = 64;
  cfg.n = 16;
  cfg.threads = 1;
  const auto a = run_clusters(cfg);
  cfg.threads = 4;
  const auto b = run_clusters(cfg);
  REQUIRE(a.size() == b.size());
  const double scale = gamma0(0.5) * 4.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].L == b[i].L);
    CHECK(a[i].total == b[i].total);
    CHECK(a[i].coupling_sup == b[i].coupling_sup);
    if (i % 50 == 0) {
      const FieldConfig f(0.5, derive_seed(9, "cluster", i));
      const ClusterExploration ex = explore_cluster(f, Site{0, 0}, 64);
      CHECK(ex.cluster.length == a[i].L);
      CHECK(ex.censored == a[i].censored);
      CHECK(ex.cluster.total == a[i].total);
      CHECK(ex.cluster.max_width == a[i].dmax);
      CHECK(a[i].reached_n == (ex.cluster.length > 16));
      if (a[i].reached_n) {
        double sup = 0.0;
        for (std::int64_t k = 0; k <= 16; ++k)
          sup = std::max(sup, std::abs(0.5 * ex.cluster.width(k) - ex.cluster.count(k)) / scale);
        CHECK(a[i].coupling_sup == doctest::Approx(sup));
        CHECK(a[i].width_n == ex.cluster.width(16));
        CHECK(a[i].count_n == ex.cluster.count(16));
      }
    }
  }
}

TEST_CASE("width law, coupling and generation-count tail use survivors") {
  std::vector<ClusterRecord> r(4);
  for (auto& x : r) x.L = 3;
  r[0].reached_n = true;
  r[0].width_n = 4;
  r[0].count_n = 3;
  r[0].coupling_sup = 0.2;
  r[1].reached_n = true;
  r[1].width_n = 8;
  r[1].count_n = 9;
  r[1].coupling_sup = 0.4;
  const WidthLawResult w = width_law_from_records(0.5, 4, r);
  CHECK(w.survivors == 2);
  CHECK(w.values[0] == doctest::Approx(4.0 / (gamma0(0.5) * 2.0 * std::sqrt(2.0))));
  const CouplingResult c = coupling_from_records(r, 4);
  CHECK(c.survivors == 2);
  CHECK(c.median_sup == doctest::Approx(0.3));
  const ScaledTail t = gen_count_tail_from_records(0.5, 4, 1.0, r, 100);
  // threshold 2 gamma0 = 2.108: only count 3 and 9 exceed
  CHECK(t.estimate.n_exceed == 2);
  CHECK(t.estimate.n_below == 2);
  CHECK(t.scaled == doctest::Approx(1.0));
  CHECK(t.target == doctest::Approx(std::exp(-1.0) / (gamma0(0.5) * std::sqrt(std::numbers::pi))));
  std::vector<ClusterRecord> none(3);
  CHECK_THROWS_AS(width_law_from_records(0.5, 4, none), InsufficientSamples);
}

TEST_CASE("counting identity z-score") {
  SurvivalResult s;
  s.estimate.p_hat = 0.05;
  s.estimate.std_error = 0.003;
  XiResult x;
  x.survival = 0.046;
  x.survival_stderr = 0.004;
  const IdentityCheck c = counting_identity(s, x);
  CHECK(c.z == doctest::Approx(0.8));
}

TEST_CASE("xi estimate is thread independent and consistent with its counts") {
  const XiResult a = xi_estimate(0.5, 16, 500, 3, 1);
  const XiResult b = xi_estimate(0.5, 16, 500, 3, 3);
  CHECK(a.counts == b.counts);
  CHECK(a.mean == b.mean);
  double sum = 0;
  for (auto c : a.counts) sum += static_cast<double>(c);
  CHECK(a.mean == doctest::Approx(sum / 500.0));
  CHECK(a.survival == doctest::Approx(a.mean / (std::floor(4.0 * gamma0(0.5)) + 1.0)));
}

TEST_CASE("area-tail target and its inverse") {
  std::mt19937_64 gen(4);
  std::gamma_distribution<double> g(4.0, 0.15);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = g(gen);
  const TailTable t = tabulate_excursion_area_dist(xs);
  double prev = 1e9;
  for (double lambda : {0.5, 1.0, 4.0, 16.0}) {
    const double v = total_area_tail_target(0.5, lambda, t);
    CHECK(v < prev);
    prev = v;
  }
  const double lam = lambda_for_area_target(0.5, 0.1, t);
  CHECK(total_area_tail_target(0.5, lam, t) == doctest::Approx(0.1).epsilon(1e-9));
  CHECK_THROWS_AS(total_area_tail_target(0.5, 0.0, t), DomainError);
}
