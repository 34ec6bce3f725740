#pragma once

// Forward drainage graph: the map h, forward paths, k-th generation ancestor
// sets and the cluster (watershed) statistics L, D_k, #C_k, D_max.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "riverweb/errors.hpp"
#include "riverweb/lattice_field.hpp"

namespace riverweb {

/// h(s) without the openness precondition. Internal fast path.
template <Field F>
Site step_unchecked(const F& field, Site s) {
  const std::int64_t k = nearest_open_offset(field, Site{s.x, s.t + 1});
  return Site{s.x + k, s.t + 1};
}

/// h(s): the open site on row s.t + 1 nearest to s, ties broken by s's tie bit.
template <Field F>
Site step(const F& field, Site s) {
  if (!field.open(s)) throw NotOpen("forward map applied to a closed site");
  return step_unchecked(field, s);
}

/// x-coordinates of h^0(origin), h^1(origin), ..., h^n(origin).
struct PathTrace {
  Site origin;
  std::vector<std::int64_t> positions;
};

template <Field F>
PathTrace path(const F& field, Site s, std::int64_t steps) {
  if (!field.open(s)) throw NotOpen("forward path started at a closed site");
  PathTrace trace{s, {}};
  trace.positions.reserve(static_cast<std::size_t>(steps) + 1);
  trace.positions.push_back(s.x);
  Site cur = s;
  for (std::int64_t k = 0; k < steps; ++k) {
    cur = step_unchecked(field, cur);
    trace.positions.push_back(cur.x);
  }
  return trace;
}

/// Appends, in increasing order, every open y on row target.t - 1 with
/// h(y, target.t - 1) == target. `target` must be open.
///
/// A site y can only map to `target` if target is (one of) its nearest open
/// sites on the row above, which confines y to the Voronoi cell
/// [x - J-/2, x + J+/2] of target among the open sites of its row.
template <Field F>
void append_preimage(const F& field, Site target, std::vector<std::int64_t>& out) {
  const std::int64_t gap_left = open_gap_left(field, target);
  const std::int64_t gap_right = open_gap_right(field, target);
  const std::int64_t row = target.t - 1;
  for (std::int64_t y = target.x - gap_left / 2; y <= target.x + gap_right / 2; ++y) {
    const Site s{y, row};
    if (field.open(s) && step_unchecked(field, s).x == target.x) out.push_back(y);
  }
}

/// Next ancestor generation: all open sites on row `row - 1` mapped into the
/// sorted set `generation` of open sites on row `row`.
template <Field F>
std::vector<std::int64_t> preimage(const F& field, std::int64_t row,
                                   const std::vector<std::int64_t>& generation) {
  std::vector<std::int64_t> out;
  out.reserve(generation.size() + 2);
  for (std::int64_t x : generation) append_preimage(field, Site{x, row}, out);
  return out;
}

/// C_k(apex) as sorted x-coordinates on row apex.t - k; empty for a closed apex.
template <Field F>
std::vector<std::int64_t> ancestors(const F& field, Site apex, std::int64_t k) {
  if (!field.open(apex)) return {};
  std::vector<std::int64_t> gen{apex.x};
  for (std::int64_t j = 0; j < k && !gen.empty(); ++j) gen = preimage(field, apex.t - j, gen);
  return gen;
}

struct ClusterRow {
  std::int64_t left = 0;   // l_k
  std::int64_t right = 0;  // r_k
  std::int64_t count = 0;  // #C_k

  std::int64_t width() const noexcept { return right - left; }
};

/// The watershed C(apex): one row per generation k < L.
struct Cluster {
  Site apex;
  std::vector<ClusterRow> rows;
  std::int64_t length = 0;     // L
  std::int64_t max_width = 0;  // D_max
  std::int64_t total = 0;      // #C

  /// D_k, zero for k >= L.
  std::int64_t width(std::int64_t k) const {
    return (k >= 0 && k < static_cast<std::int64_t>(rows.size())) ? rows[static_cast<std::size_t>(k)].width() : 0;
  }
  /// #C_k, zero for k >= L.
  std::int64_t count(std::int64_t k) const {
    return (k >= 0 && k < static_cast<std::int64_t>(rows.size())) ? rows[static_cast<std::size_t>(k)].count : 0;
  }
};

/// Result of a capped exploration. When `censored`, the cluster holds the
/// first `cap` generations and L > cap. When `total_capped`, exploration
/// stopped as soon as #C exceeded the requested total.
struct ClusterExploration {
  Cluster cluster;
  bool censored = false;
  bool total_capped = false;
};

template <Field F>
ClusterExploration explore_cluster(const F& field, Site apex, std::int64_t cap_length,
                                   std::int64_t cap_total = std::numeric_limits<std::int64_t>::max()) {
  ClusterExploration result;
  Cluster& c = result.cluster;
  c.apex = apex;
  if (!field.open(apex)) return result;

  std::vector<std::int64_t> gen{apex.x};
  std::int64_t k = 0;
  while (!gen.empty()) {
    if (k == cap_length) {
      result.censored = true;
      break;
    }
    const ClusterRow row{gen.front(), gen.back(), static_cast<std::int64_t>(gen.size())};
    c.rows.push_back(row);
    c.total += row.count;
    c.max_width = std::max(c.max_width, row.width());
    if (c.total > cap_total) {
      result.total_capped = true;
      ++k;
      break;
    }
    gen = preimage(field, apex.t - k, gen);
    ++k;
  }
  c.length = k;
  return result;
}

/// Full cluster; throws CapExceeded when L > cap_length.
template <Field F>
Cluster cluster(const F& field, Site apex, std::int64_t cap_length) {
  ClusterExploration e = explore_cluster(field, apex, cap_length);
  if (e.censored) throw CapExceeded(cap_length);
  return std::move(e.cluster);
}

}  // namespace riverweb
