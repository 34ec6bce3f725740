#pragma once

// Experiment drivers that combine several modules: the dual increment kernel
// check, the exact invariant sweep, and the Brownian oracle suite.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "riverweb/brownian_oracle.hpp"
#include "riverweb/stats_harness.hpp"

namespace riverweb {

// ---------------------------------------------------------------------------
// Dual increments.

/// One chi-square cell. Interior cells hold a single v2; the two end cells
/// pool v2 < lo and v2 > hi (flagged by tail = -1 / +1).
struct DualKernelCell {
  bool integer_state = false;
  std::int64_t v2 = 0;
  int tail = 0;
  std::int64_t observed = 0;
  double expected = 0.0;  // expected count
  double probability = 0.0;
};

struct DualKernelResult {
  double p = 0.5;
  std::int64_t increments = 0;
  std::int64_t integer_states = 0;
  std::vector<DualKernelCell> cells;
  GofResult gof_non_integer;
  GofResult gof_integer;
  GofResult homogeneity;            // non-integer states grouped by the gap of their open pair
  std::int64_t homogeneity_groups = 0;
  double mean_increment = 0.0;      // mean of v = v2 / 2
  double mean_increment_stderr = 0.0;
  double kernel_mass_non_integer = 0.0;  // sum over |v2| <= 200
  double kernel_mass_integer = 0.0;
  double kernel_mean_non_integer = 0.0;  // sum of v * kernel over |v2| <= 400
  double kernel_mean_integer = 0.0;
};

/// P(v2 > k) under the kernel of the given state type.
double kernel_upper_tail(bool integer_state, std::int64_t k, double p);

/// Follows dual paths of `path_length` steps in fresh fields until
/// `increments` steps are recorded, and compares the increments per state
/// type with the closed-form kernel.
DualKernelResult dual_kernel_experiment(double p, std::int64_t increments, std::uint64_t seed, unsigned threads = 0,
                                        std::int64_t path_length = 1000);

// ---------------------------------------------------------------------------
// Exact invariants.

struct InvariantCheck {
  std::string name;
  std::int64_t passed = 0;
  std::int64_t failed = 0;
};

struct InvariantsResult {
  double p = 0.5;
  std::int64_t windows = 0;
  std::vector<InvariantCheck> checks;
  std::int64_t violations = 0;
};

/// Runs every exact check on `windows` independent fields.
InvariantsResult invariants_experiment(double p, std::int64_t windows, std::uint64_t seed, unsigned threads = 0,
                                       std::int64_t cap_length = 256);

// ---------------------------------------------------------------------------
// Oracle suite.

struct OracleCheck {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool pass = false;
};

struct OracleSuiteConfig {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::int64_t samples = 100000;
  std::int64_t meander_m = 4000;
  std::int64_t excursion_m = 32000;
  std::int64_t area_m = 2000;
  std::int64_t kaigh_m = 10000;
  std::int64_t kaigh_walks = 10000000;
  std::int64_t shifted_m = 1000;
  std::int64_t shifted_samples = 100000;
  std::filesystem::path table_dir = "riverweb-tables";
};

struct OracleSuiteResult {
  std::vector<OracleCheck> checks;
  bool all_pass() const;
};

OracleCheck make_check(std::string name, double value, double target, double lo, double hi);

OracleSuiteResult oracle_suite(const OracleSuiteConfig& cfg);

/// Path of the cached excursion-area (or maximum) table for a seed and size.
std::filesystem::path table_path(const std::filesystem::path& dir, FunctionalKind kind, std::int64_t m,
                                 std::int64_t samples, std::uint64_t seed);

}  // namespace riverweb
