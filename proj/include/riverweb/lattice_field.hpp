#pragma once

// Lazily evaluated i.i.d. random environment on Z^2.
//
// Every site carries an openness bit (Bernoulli(p)) and a fair +-1 tie-break.
// Both are pure functions of (seed, x, t): a keyed 64-bit mix of the site
// coordinates, so arbitrarily large windows can be read in any order and from
// any thread with identical results.
//
// The network algorithms are written against the `Field` concept so that
// hand-built fixtures (FixtureField) can stand in for the hashed field.

#include <compare>
#include <concepts>
#include <cstdint>
#include <set>
#include <utility>

#include "riverweb/errors.hpp"

namespace riverweb {

inline constexpr std::int64_t kDefaultSearchCap = std::int64_t{1} << 16;

/// Lattice point. `t` is the generation coordinate; the forward map raises it by one.
struct Site {
  std::int64_t x = 0;
  std::int64_t t = 0;

  friend constexpr auto operator<=>(const Site&, const Site&) = default;
};

struct Cell {
  bool open = false;
  int tie = 1;  // +1 or -1
};

template <typename F>
concept Field = requires(const F& f, Site s) {
  { f.open(s) } -> std::convertible_to<bool>;
  { f.tie(s) } -> std::convertible_to<int>;
  { f.search_cap() } -> std::convertible_to<std::int64_t>;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Keyed hash of a site; the sole source of randomness for the field.
constexpr std::uint64_t site_hash(std::uint64_t seed, std::int64_t x, std::int64_t t) noexcept {
  const auto ux = static_cast<std::uint64_t>(x);
  const auto ut = static_cast<std::uint64_t>(t);
  const std::uint64_t a = mix64(seed ^ (ux * 0x9e3779b97f4a7c15ULL));
  return mix64(a + ut * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL);
}

/// The hashed Bernoulli(p) field with fair tie bits.
class FieldConfig {
 public:
  /// Throws DomainError unless 0 < p < 1.
  FieldConfig(double p, std::uint64_t seed, std::int64_t search_cap = kDefaultSearchCap);

  double p() const noexcept { return p_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::int64_t search_cap() const noexcept { return search_cap_; }

  bool open(Site s) const noexcept { return (site_hash(seed_, s.x, s.t) >> 11) < threshold_; }
  int tie(Site s) const noexcept { return (site_hash(seed_, s.x, s.t) & 1U) ? 1 : -1; }

  Cell cell(Site s) const noexcept {
    const std::uint64_t h = site_hash(seed_, s.x, s.t);
    return Cell{(h >> 11) < threshold_, (h & 1U) ? 1 : -1};
  }

 private:
  double p_;
  std::uint64_t seed_;
  std::int64_t search_cap_;
  std::uint64_t threshold_;  // open iff top 53 hash bits < threshold_
};

/// Explicit finite configuration: listed sites are open, everything else is
/// closed; tie bits are -1 on listed sites and +1 elsewhere. Used for
/// hand-computed fixtures.
class FixtureField {
 public:
  FixtureField(std::set<std::pair<std::int64_t, std::int64_t>> open_sites,
               std::set<std::pair<std::int64_t, std::int64_t>> negative_ties = {},
               std::int64_t search_cap = 64)
      : open_(std::move(open_sites)), neg_(std::move(negative_ties)), cap_(search_cap) {}

  bool open(Site s) const { return open_.count({s.x, s.t}) != 0; }
  int tie(Site s) const { return neg_.count({s.x, s.t}) != 0 ? -1 : 1; }
  std::int64_t search_cap() const noexcept { return cap_; }

 private:
  std::set<std::pair<std::int64_t, std::int64_t>> open_;
  std::set<std::pair<std::int64_t, std::int64_t>> neg_;
  std::int64_t cap_;
};

inline Cell sample_cell(const FieldConfig& cfg, Site s) noexcept { return cfg.cell(s); }

/// Signed offset k* of the open site on row `s.t` nearest to `s.x`, ties between
/// +k and -k broken by the tie bit of the querying site (s.x, s.t - 1).
/// This is the offset the forward map selects from (s.x, s.t - 1).
template <Field F>
std::int64_t nearest_open_offset(const F& field, Site s) {
  if (field.open(s)) return 0;
  const std::int64_t cap = field.search_cap();
  for (std::int64_t k = 1; k <= cap; ++k) {
    const bool right = field.open({s.x + k, s.t});
    const bool left = field.open({s.x - k, s.t});
    if (right && left) return field.tie({s.x, s.t - 1}) * k;
    if (right) return k;
    if (left) return -k;
  }
  throw SearchCapExceeded(cap);
}

/// J+ >= 1: distance to the first open site strictly right of `s` on its row.
template <Field F>
std::int64_t open_gap_right(const F& field, Site s) {
  const std::int64_t cap = field.search_cap();
  for (std::int64_t k = 1; k <= cap; ++k)
    if (field.open({s.x + k, s.t})) return k;
  throw SearchCapExceeded(cap);
}

/// J- >= 1: distance to the first open site strictly left of `s` on its row.
template <Field F>
std::int64_t open_gap_left(const F& field, Site s) {
  const std::int64_t cap = field.search_cap();
  for (std::int64_t k = 1; k <= cap; ++k)
    if (field.open({s.x - k, s.t})) return k;
  throw SearchCapExceeded(cap);
}

}  // namespace riverweb
