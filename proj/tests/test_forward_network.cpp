#include <doctest.h>

#include <algorithm>

#include "riverweb/forward_network.hpp"

using namespace riverweb;

namespace {

// Every open site on row apex.t - k within `radius` whose k-th image is apex.
template <Field F>
std::vector<std::int64_t> ancestors_brute(const F& f, Site apex, std::int64_t k, std::int64_t radius) {
  std::vector<std::int64_t> out;
  if (!f.open(apex)) return out;
  for (std::int64_t y = apex.x - radius; y <= apex.x + radius; ++y) {
    Site s{y, apex.t - k};
    if (!f.open(s)) continue;
    for (std::int64_t j = 0; j < k; ++j) s = step(f, s);
    if (s == apex) out.push_back(y);
  }
  return out;
}

}  // namespace

TEST_CASE("forward step on a fixture") {
  // Row 0: open at 0, 4, 5. Row 1: open at -1, 3, 7. Tie bit of (5,0) is -1.
  const FixtureField f({{0, 0}, {4, 0}, {5, 0}, {-1, 1}, {3, 1}, {7, 1}}, {{5, 0}});
  CHECK(step(f, Site{0, 0}) == Site{-1, 1});
  CHECK(step(f, Site{4, 0}) == Site{3, 1});
  CHECK(step(f, Site{5, 0}) == Site{3, 1});  // 3 and 7 tie, bit -1 picks left
  CHECK_THROWS_AS(step(f, Site{1, 0}), NotOpen);

  const FixtureField g({{5, 0}, {3, 1}, {7, 1}});
  CHECK(step(g, Site{5, 0}) == Site{7, 1});  // default tie bit +1 picks right
}

TEST_CASE("forward path trace on a fixture") {
  const FixtureField f({{0, 0}, {2, 1}, {1, 2}, {-4, 2}, {1, 3}});
  const PathTrace tr = path(f, Site{0, 0}, 3);
  CHECK(tr.positions == std::vector<std::int64_t>{0, 2, 1, 1});
  CHECK_THROWS_AS(path(f, Site{1, 0}, 2), NotOpen);
}

TEST_CASE("forward map is monotone along a row") {
  for (double p : {0.2, 0.5, 0.8}) {
    const FieldConfig f(p, 99);
    for (std::int64_t t = 0; t < 20; ++t) {
      std::int64_t prev = std::numeric_limits<std::int64_t>::min();
      for (std::int64_t x = -300; x <= 300; ++x) {
        if (!f.open({x, t})) continue;
        const std::int64_t hx = step(f, Site{x, t}).x;
        CHECK(hx >= prev);
        prev = hx;
      }
    }
  }
}

TEST_CASE("ancestor sets match exhaustive search on random windows") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const double p = seed % 3 == 0 ? 0.3 : (seed % 3 == 1 ? 0.5 : 0.8);
    const FieldConfig f(p, seed);
    for (std::int64_t x = -10; x <= 10; ++x)
      for (std::int64_t t = 0; t <= 20; ++t) {
        const Site apex{x, t};
        if (!f.open(apex)) continue;
        for (std::int64_t k = 0; k <= 5; ++k) CHECK(ancestors(f, apex, k) == ancestors_brute(f, apex, k, 120));
      }
  }
}

TEST_CASE("preimage of a closed apex is empty") {
  const FixtureField f(std::set<std::pair<std::int64_t, std::int64_t>>{{0, 0}});
  CHECK(ancestors(f, Site{0, 1}, 1).empty());
}

TEST_CASE("cluster rows agree with the ancestor sets") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const FieldConfig f(0.5, seed);
    for (std::int64_t x = -15; x <= 15; ++x) {
      const Site apex{x, 0};
      if (!f.open(apex)) continue;
      const ClusterExploration ex = explore_cluster(f, apex, 60);
      const Cluster& c = ex.cluster;
      std::int64_t total = 0, dmax = 0;
      for (std::int64_t k = 0; k < static_cast<std::int64_t>(c.rows.size()); ++k) {
        const auto a = ancestors(f, apex, k);
        REQUIRE(!a.empty());
        CHECK(c.rows[k].left == a.front());
        CHECK(c.rows[k].right == a.back());
        CHECK(c.rows[k].count == static_cast<std::int64_t>(a.size()));
        CHECK(c.count(k) <= c.width(k) + 1);
        total += c.count(k);
        dmax = std::max(dmax, c.width(k));
      }
      CHECK(c.total == total);
      CHECK(c.max_width == dmax);
      CHECK(c.count(0) == 1);
      CHECK(c.width(0) == 0);
      if (!ex.censored) {
        CHECK(c.length == static_cast<std::int64_t>(c.rows.size()));
        CHECK(ancestors(f, apex, c.length).empty());
        CHECK(c.width(c.length) == 0);
        CHECK(c.count(c.length + 3) == 0);
      } else {
        CHECK(c.length == 60);
        CHECK(!ancestors(f, apex, 60).empty());
      }
    }
  }
}

TEST_CASE("cluster caps") {
  // A vertical chain at x = 0 flanked by chains at +-40 that feed only
  // themselves: L is unbounded and every generation is a single site.
  std::set<std::pair<std::int64_t, std::int64_t>> open;
  for (std::int64_t t = -100; t <= 0; ++t)
    for (std::int64_t x : {-40, 0, 40}) open.insert({x, t});
  const FixtureField f(open);
  const ClusterExploration ex = explore_cluster(f, Site{0, 0}, 10);
  CHECK(ex.censored);
  CHECK(ex.cluster.length == 10);
  CHECK(ex.cluster.total == 10);
  CHECK_THROWS_AS(cluster(f, Site{0, 0}, 10), CapExceeded);

  const ClusterExploration capped = explore_cluster(f, Site{0, 0}, 1000, 4);
  CHECK(capped.total_capped);
  CHECK(capped.cluster.total == 5);

  const Cluster closed = cluster(f, Site{3, 0}, 10);
  CHECK(closed.length == 0);
  CHECK(closed.total == 0);
}

TEST_CASE("single-site cluster") {
  // Apex (0,0) open; the only open site on row -1 is far right and maps elsewhere.
  const FixtureField f({{-20, 0}, {0, 0}, {9, 0}, {9, -1}});
  const Cluster c = cluster(f, Site{0, 0}, 10);
  CHECK(c.length == 1);
  CHECK(c.total == 1);
  CHECK(c.max_width == 0);
}
