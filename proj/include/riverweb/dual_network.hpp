#pragma once

// Dual graph: vertices at midpoints of consecutive open sites on each row,
// edges pointing one row down, never crossing a forward edge.
//
// Dual x-coordinates are half-integers in general and are stored doubled
// (x2 = 2x) so that midpoint and crossing predicates stay in exact integer
// arithmetic.

#include <compare>
#include <cstdint>
#include <vector>

#include "riverweb/errors.hpp"
#include "riverweb/forward_network.hpp"
#include "riverweb/lattice_field.hpp"

namespace riverweb {

struct DualSite {
  std::int64_t x2 = 0;  // doubled x-coordinate
  std::int64_t t = 0;

  bool on_integer() const noexcept { return x2 % 2 == 0; }
  double x() const noexcept { return static_cast<double>(x2) / 2.0; }

  friend constexpr auto operator<=>(const DualSite&, const DualSite&) = default;
};

struct DualNeighbours {
  DualSite left;
  DualSite right;
};

constexpr std::int64_t floor_div2(std::int64_t v) noexcept { return (v >= 0) ? v / 2 : -((-v + 1) / 2); }

/// r-hat(s) = (x + J+/2, t) and l-hat(s) = (x - J-/2, t).
template <Field F>
DualNeighbours dual_neighbours(const F& field, Site s) {
  if (!field.open(s)) throw NotOpen("dual neighbours of a closed site");
  return DualNeighbours{DualSite{2 * s.x - open_gap_left(field, s), s.t},
                        DualSite{2 * s.x + open_gap_right(field, s), s.t}};
}

/// True iff d is the midpoint of two consecutive open sites of its row.
template <Field F>
bool is_dual_site(const F& field, DualSite d) {
  const std::int64_t below = floor_div2(d.x2 - 1);  // largest integer < x2/2
  const std::int64_t above = floor_div2(d.x2) + 1;  // smallest integer > x2/2
  if (d.on_integer() && field.open(Site{d.x2 / 2, d.t})) return false;
  const std::int64_t cap = field.search_cap();
  std::int64_t left = below;
  while (!field.open(Site{left, d.t})) {
    if (below - left >= cap) throw SearchCapExceeded(cap);
    --left;
  }
  std::int64_t right = above;
  while (!field.open(Site{right, d.t})) {
    if (right - above >= cap) throw SearchCapExceeded(cap);
    ++right;
  }
  return left + right == d.x2;
}

/// Open sites a^l < a^r on row d.t - 1 bracketing the dual step out of d:
/// a^l is the rightmost open site whose forward image lies left of d, a^r the
/// leftmost one whose image lies right of d. They are consecutive open sites
/// because h is monotone along a row.
struct DualBracket {
  std::int64_t left = 0;
  std::int64_t right = 0;
};

template <Field F>
DualBracket dual_bracket(const F& field, DualSite d) {
  const std::int64_t row = d.t - 1;
  const std::int64_t cap = field.search_cap();
  auto side = [&](std::int64_t z) {
    const std::int64_t image2 = 2 * step_unchecked(field, Site{z, row}).x;
    if (image2 == d.x2) throw InvalidDualSite("forward edge ends on the dual vertex");
    return image2 < d.x2 ? -1 : 1;
  };
  auto next_open = [&](std::int64_t z, std::int64_t dir) {
    for (std::int64_t k = 1; k <= cap; ++k)
      if (field.open(Site{z + dir * k, row})) return z + dir * k;
    throw SearchCapExceeded(cap);
  };

  std::int64_t z = floor_div2(d.x2);
  if (!field.open(Site{z, row})) z = next_open(z, -1);

  DualBracket b;
  if (side(z) < 0) {
    b.left = z;
    for (;;) {
      const std::int64_t nz = next_open(b.left, +1);
      if (side(nz) < 0) {
        b.left = nz;
      } else {
        b.right = nz;
        break;
      }
    }
  } else {
    b.right = z;
    for (;;) {
      const std::int64_t nz = next_open(b.right, -1);
      if (side(nz) > 0) {
        b.right = nz;
      } else {
        b.left = nz;
        break;
      }
    }
  }
  return b;
}

/// h-hat(d): midpoint of (a^l, a^r) on row d.t - 1.
template <Field F>
DualSite dual_step(const F& field, DualSite d) {
  const DualBracket b = dual_bracket(field, d);
  return DualSite{b.left + b.right, d.t - 1};
}

template <Field F>
std::vector<DualSite> dual_path(const F& field, DualSite d, std::int64_t steps) {
  std::vector<DualSite> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(d);
  for (std::int64_t k = 0; k < steps; ++k) out.push_back(dual_step(field, out.back()));
  return out;
}

// ---------------------------------------------------------------------------
// Transition kernel of the dual x-coordinate.

struct KernelQuery {
  bool state_is_integer = false;
  std::int64_t v2 = 0;  // doubled increment
  double p = 0.5;
};

/// P(G = g) for G geometric on {1, 2, ...} with success probability p.
double geometric_pmf(std::int64_t g, double p);

/// P(G1 - G2 = m), closed form p (1-p)^|m| / (2 - p).
double geometric_difference_pmf(std::int64_t m, double p);

/// Same quantity by direct summation over G2, truncated once terms drop below 1e-16.
double geometric_difference_pmf_series(std::int64_t m, double p);

/// Probability that the doubled dual coordinate moves by q.v2 in one step.
double kernel(const KernelQuery& q);

/// kernel() with the series route for the geometric difference.
double kernel_series(const KernelQuery& q);

/// True iff for every k < L the dual paths strictly enclose row k of the
/// cluster: left[k].x2 < 2 l_k and 2 r_k < right[k].x2.
bool encloses(const Cluster& cluster, const std::vector<DualSite>& left_dual,
              const std::vector<DualSite>& right_dual);

// ---------------------------------------------------------------------------
// Exact planar predicates on doubled-x lattice points.

struct Point2 {
  std::int64_t x2 = 0;
  std::int64_t t = 0;
};

/// Closed-segment intersection test (touching counts as intersecting).
bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d);

/// Checks that the dual edge d -> next meets no forward edge between rows
/// next.t and d.t whose tail lies within `margin` of the dual edge, widening
/// the scan on each side until it includes an open tail. Forward edges
/// beyond those outermost open tails cannot reach the dual edge: forward
/// edges do not cross each other, so they stay outside the scanned ones.
template <Field F>
bool dual_edge_clear(const F& field, DualSite d, DualSite next, std::int64_t margin = 16) {
  const Point2 a{d.x2, d.t};
  const Point2 b{next.x2, next.t};
  const std::int64_t cap = field.search_cap();
  std::int64_t lo = floor_div2(std::min(d.x2, next.x2)) - margin;
  std::int64_t hi = floor_div2(std::max(d.x2, next.x2)) + 1 + margin;
  for (std::int64_t k = 0; !field.open(Site{lo, next.t}); ++k, --lo)
    if (k > cap) throw SearchCapExceeded(cap);
  for (std::int64_t k = 0; !field.open(Site{hi, next.t}); ++k, ++hi)
    if (k > cap) throw SearchCapExceeded(cap);
  for (std::int64_t z = lo; z <= hi; ++z) {
    const Site tail{z, next.t};
    if (!field.open(tail)) continue;
    const Site head = step_unchecked(field, tail);
    if (segments_intersect(a, b, Point2{2 * tail.x, tail.t}, Point2{2 * head.x, head.t})) return false;
  }
  return true;
}

}  // namespace riverweb
