#include <doctest.h>

#include <cmath>

#include "riverweb/dual_network.hpp"
#include "riverweb/rng.hpp"

using namespace riverweb;

namespace {

// Row 1 open at 0 and 4, row 0 open at -2, 1, 3, 6; sentinels far out on both rows.
FixtureField bracket_fixture() {
  return FixtureField({{-30, 1}, {0, 1}, {4, 1}, {30, 1}, {-30, 0}, {-2, 0}, {1, 0}, {3, 0}, {6, 0}, {30, 0}});
}

}  // namespace

TEST_CASE("kernel values") {
  CHECK(kernel({false, 1, 0.5}) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(kernel({false, 0, 0.5}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // Integer state: (1-p) p (1-p)^|v2| / (2-p) + (p/2) P(G = |v2|).
  const double p = 0.3;
  CHECK(kernel({true, 0, p}) == doctest::Approx((1 - p) * p / (2 - p)).epsilon(1e-14));
  CHECK(kernel({true, 2, p}) ==
        doctest::Approx((1 - p) * p * (1 - p) * (1 - p) / (2 - p) + 0.5 * p * p * (1 - p)).epsilon(1e-14));
  CHECK(kernel({true, -2, p}) == doctest::Approx(kernel({true, 2, p})).epsilon(1e-15));
  CHECK_THROWS_AS(kernel({false, 1, 1.0}), DomainError);
}

TEST_CASE("closed-form geometric difference matches the convolution series") {
  for (double p : {0.1, 0.3, 0.5, 0.8, 0.95})
    for (std::int64_t m = -40; m <= 40; ++m) {
      CHECK(geometric_difference_pmf(m, p) == doctest::Approx(geometric_difference_pmf_series(m, p)).epsilon(1e-12));
      for (bool integer : {false, true})
        CHECK(kernel({integer, m, p}) == doctest::Approx(kernel_series({integer, m, p})).epsilon(1e-12));
    }
}

TEST_CASE("kernel sums to one and has mean zero") {
  for (double p : {0.3, 0.5, 0.8})
    for (bool integer : {false, true}) {
      long double mass = 0, mean = 0;
      for (std::int64_t v2 = -2000; v2 <= 2000; ++v2) {
        const double k = kernel({integer, v2, p});
        mass += k;
        mean += 0.5L * v2 * k;
      }
      CHECK(std::abs(static_cast<double>(mass) - 1.0) < 1e-12);
      CHECK(std::abs(static_cast<double>(mean)) < 1e-12);
    }
}

TEST_CASE("dual neighbours and dual sites on a fixture") {
  const FixtureField f = bracket_fixture();
  const DualNeighbours nb = dual_neighbours(f, Site{0, 1});
  CHECK(nb.right == DualSite{4, 1});   // midpoint of 0 and 4
  CHECK(nb.left == DualSite{-30, 1});  // midpoint of -30 and 0
  CHECK(nb.right.on_integer());
  CHECK(is_dual_site(f, DualSite{4, 1}));
  CHECK(!is_dual_site(f, DualSite{3, 1}));
  CHECK(!is_dual_site(f, DualSite{0, 1}));  // an open site
  CHECK(is_dual_site(f, DualSite{9, 0}));   // midpoint of 3 and 6
  CHECK(!is_dual_site(f, DualSite{5, 0}));
  CHECK_THROWS_AS(dual_neighbours(f, Site{1, 1}), NotOpen);
}

TEST_CASE("dual step on a fixture matches manual iteration") {
  const FixtureField f = bracket_fixture();
  // Images of row 0: -2 -> 0, 1 -> 0, 3 -> 4, 6 -> 4. Around x = 2 the bracket is (1, 3).
  const DualBracket b = dual_bracket(f, DualSite{4, 1});
  CHECK(b.left == 1);
  CHECK(b.right == 3);
  CHECK(dual_step(f, DualSite{4, 1}) == DualSite{4, 0});
  // Around x = 17 on row 1 (between 4 and 30): 6 -> 4 lies left, 30 -> 30 right.
  CHECK(dual_step(f, DualSite{34, 1}) == DualSite{36, 0});
  const auto dp = dual_path(f, DualSite{4, 1}, 1);
  CHECK(dp.size() == 2);
  CHECK(dp.back() == DualSite{4, 0});
}

TEST_CASE("segment intersection predicate") {
  CHECK(segments_intersect({0, 0}, {4, 2}, {0, 2}, {4, 0}));   // proper crossing
  CHECK(!segments_intersect({0, 0}, {4, 2}, {2, 0}, {6, 2}));  // parallel
  CHECK(segments_intersect({0, 0}, {4, 2}, {4, 2}, {8, 0}));   // shared endpoint
  CHECK(segments_intersect({0, 0}, {4, 0}, {2, 0}, {6, 0}));   // collinear overlap
  CHECK(!segments_intersect({0, 0}, {2, 0}, {3, 0}, {6, 0}));  // collinear, disjoint
  CHECK(!segments_intersect({0, 0}, {0, 2}, {1, 0}, {1, 2}));
}

TEST_CASE("dual edges are valid and avoid forward edges on random fields") {
  for (double p : {0.3, 0.5, 0.8})
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      const FieldConfig f(p, seed);
      std::int64_t x = 0;
      while (!f.open(Site{x, 0})) ++x;
      DualSite d = dual_neighbours(f, Site{x, 0}).right;
      for (int k = 0; k < 200; ++k) {
        REQUIRE(is_dual_site(f, d));
        const DualSite next = dual_step(f, d);
        CHECK(next.t == d.t - 1);
        CHECK(dual_edge_clear(f, d, next));
        d = next;
      }
    }
}

TEST_CASE("a dual edge forced across a forward edge is flagged") {
  const FixtureField f = bracket_fixture();
  // From x = 2 on row 1 to x = -1 on row 0 crosses the edge (1,0) -> (0,1).
  CHECK(!dual_edge_clear(f, DualSite{4, 1}, DualSite{-1, 0}, 4));
  CHECK(dual_edge_clear(f, DualSite{4, 1}, DualSite{4, 0}, 4));
}

TEST_CASE("dual paths enclose the cluster") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const FieldConfig f(0.5, seed);
    std::int64_t x = 0;
    while (!f.open(Site{x, 0})) ++x;
    const Site apex{x, 0};
    const ClusterExploration ex = explore_cluster(f, apex, 200);
    const auto nb = dual_neighbours(f, apex);
    const std::int64_t len = ex.cluster.length;
    const auto left = dual_path(f, nb.left, len);
    const auto right = dual_path(f, nb.right, len);
    CHECK(encloses(ex.cluster, left, right));
    // Pulling the right path onto the cluster's right edge breaks strictness.
    auto pinched = right;
    pinched[0].x2 = 2 * ex.cluster.rows[0].right;
    CHECK(!encloses(ex.cluster, left, pinched));
  }
  const Cluster c{Site{0, 0}, {ClusterRow{0, 0, 1}}, 1, 0, 1};
  CHECK_THROWS_AS(encloses(c, {}, {}), LengthMismatch);
}
