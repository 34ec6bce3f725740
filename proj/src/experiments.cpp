#include "riverweb/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "riverweb/dual_network.hpp"
#include "riverweb/forward_network.hpp"
#include "riverweb/lattice_field.hpp"
#include "riverweb/numeric.hpp"
#include "riverweb/parallel.hpp"
#include "riverweb/rng.hpp"

namespace riverweb {
namespace {

std::int64_t first_open_at_or_right(const FieldConfig& field, std::int64_t x, std::int64_t t) {
  for (std::int64_t k = 0; k <= field.search_cap(); ++k)
    if (field.open(Site{x + k, t})) return x + k;
  throw SearchCapExceeded(field.search_cap());
}

struct Increment {
  std::int64_t v2 = 0;
  std::int64_t gap = 0;  // distance between the open pair defining the state
  bool integer_state = false;
};

// Chi-square cells for one state type: pooled tails beyond +-k, where k is the
// largest cut that leaves at least 5 expected observations in each tail.
std::int64_t tail_cut(bool integer_state, std::int64_t n, double p) {
  std::int64_t k = 0;
  while (static_cast<double>(n) * kernel_upper_tail(integer_state, k + 1, p) >= 5.0) ++k;
  return k;
}

std::vector<double> cell_probabilities(bool integer_state, std::int64_t k, double p) {
  std::vector<double> probs;
  probs.push_back(kernel_upper_tail(integer_state, k, p));
  for (std::int64_t v = -k; v <= k; ++v) probs.push_back(kernel(KernelQuery{integer_state, v, p}));
  probs.push_back(kernel_upper_tail(integer_state, k, p));
  return probs;
}

std::size_t cell_index(std::int64_t v2, std::int64_t k) {
  if (v2 < -k) return 0;
  if (v2 > k) return static_cast<std::size_t>(2 * k + 2);
  return static_cast<std::size_t>(v2 + k + 1);
}

}  // namespace

double kernel_upper_tail(bool integer_state, std::int64_t k, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("kernel probability must satisfy 0 < p < 1");
  if (k < 0) throw DomainError("upper tail defined for k >= 0");
  const double q = 1.0 - p;
  // P(G1 - G2 > k) = sum_{m > k} p q^m / (2 - p) = q^{k+1} / (2 - p)
  const double spread = std::pow(q, static_cast<double>(k + 1)) / (2.0 - p);
  if (!integer_state) return spread;
  return q * spread + 0.5 * p * std::pow(q, static_cast<double>(k));  // + (p/2) P(G > k)
}

DualKernelResult dual_kernel_experiment(double p, std::int64_t increments, std::uint64_t seed, unsigned threads,
                                        std::int64_t path_length) {
  if (increments < 1) throw DomainError("need at least one increment");
  if (path_length < 1) throw DomainError("dual path length must be >= 1");
  const std::int64_t paths = (increments + path_length - 1) / path_length;
  const auto traces = parallel_map<std::vector<Increment>>(paths, threads, [&](std::int64_t j) {
    const FieldConfig field(p, derive_seed(seed, "dual", static_cast<std::uint64_t>(j)));
    const std::int64_t steps = std::min(path_length, increments - j * path_length);
    const std::int64_t x0 = first_open_at_or_right(field, 0, 0);
    DualSite d = dual_neighbours(field, Site{x0, 0}).right;
    std::int64_t gap = open_gap_right(field, Site{x0, 0});
    std::vector<Increment> out;
    out.reserve(static_cast<std::size_t>(steps));
    for (std::int64_t k = 0; k < steps; ++k) {
      const DualBracket b = dual_bracket(field, d);
      const DualSite next{b.left + b.right, d.t - 1};
      out.push_back(Increment{next.x2 - d.x2, gap, d.on_integer()});
      gap = b.right - b.left;
      d = next;
    }
    return out;
  });

  DualKernelResult r;
  r.p = p;
  r.increments = increments;
  std::map<std::int64_t, std::int64_t> counts[2];
  std::map<std::int64_t, std::map<std::int64_t, std::int64_t>> by_gap;  // non-integer states
  std::int64_t n_type[2] = {0, 0};
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(increments));
  for (const auto& trace : traces)
    for (const auto& inc : trace) {
      const int type = inc.integer_state ? 1 : 0;
      ++counts[type][inc.v2];
      ++n_type[type];
      if (!inc.integer_state) ++by_gap[inc.gap][inc.v2];
      v.push_back(0.5 * static_cast<double>(inc.v2));
    }
  r.integer_states = n_type[1];

  for (int type = 0; type < 2; ++type) {
    const bool integer_state = type == 1;
    GofResult& gof = integer_state ? r.gof_integer : r.gof_non_integer;
    if (n_type[type] == 0) continue;
    const std::int64_t k = tail_cut(integer_state, n_type[type], p);
    const auto probs = cell_probabilities(integer_state, k, p);
    std::vector<std::int64_t> obs(probs.size(), 0);
    for (const auto& [v2, c] : counts[type]) obs[cell_index(v2, k)] += c;
    gof = chi_square(obs, probs);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      DualKernelCell cell;
      cell.integer_state = integer_state;
      cell.tail = i == 0 ? -1 : (i + 1 == probs.size() ? 1 : 0);
      cell.v2 = cell.tail == -1 ? -k - 1 : (cell.tail == 1 ? k + 1 : static_cast<std::int64_t>(i) - k - 1);
      cell.observed = obs[i];
      cell.probability = probs[i];
      cell.expected = probs[i] * static_cast<double>(n_type[type]);
      r.cells.push_back(cell);
    }
  }

  // Homogeneity of the non-integer increment law across the gap of the state.
  std::vector<std::pair<std::int64_t, std::int64_t>> groups;  // gap, size
  for (const auto& [gap, hist] : by_gap) {
    std::int64_t size = 0;
    for (const auto& [v2, c] : hist) size += c;
    if (size >= 2000 && groups.size() < 10) groups.emplace_back(gap, size);
  }
  r.homogeneity_groups = static_cast<std::int64_t>(groups.size());
  if (groups.size() >= 2) {
    std::int64_t smallest = groups.front().second;
    for (const auto& g : groups) smallest = std::min(smallest, g.second);
    const std::int64_t k = tail_cut(false, smallest, p);
    std::vector<std::vector<std::int64_t>> table;
    for (const auto& [gap, size] : groups) {
      std::vector<std::int64_t> row(static_cast<std::size_t>(2 * k + 3), 0);
      for (const auto& [v2, c] : by_gap[gap]) row[cell_index(v2, k)] += c;
      table.push_back(std::move(row));
    }
    r.homogeneity = chi_square_homogeneity(table);
  }

  const double nd = static_cast<double>(v.size());
  r.mean_increment = compensated_sum(v) / nd;
  for (auto& x : v) x = (x - r.mean_increment) * (x - r.mean_increment);
  r.mean_increment_stderr = std::sqrt(compensated_sum(v) / (nd - 1.0) / nd);

  std::vector<double> mass[2], mean[2];
  for (int type = 0; type < 2; ++type) {
    for (std::int64_t v2 = -400; v2 <= 400; ++v2) {
      const double k = kernel(KernelQuery{type == 1, v2, p});
      if (std::llabs(v2) <= 200) mass[type].push_back(k);
      mean[type].push_back(0.5 * static_cast<double>(v2) * k);
    }
  }
  r.kernel_mass_non_integer = compensated_sum(mass[0]);
  r.kernel_mass_integer = compensated_sum(mass[1]);
  r.kernel_mean_non_integer = compensated_sum(mean[0]);
  r.kernel_mean_integer = compensated_sum(mean[1]);
  return r;
}

namespace {

constexpr const char* kCheckNames[] = {"acyclicity",         "forward_non_crossing", "cluster_consistency",
                                       "ancestor_bruteforce", "dual_site_validity",   "dual_forward_non_crossing",
                                       "cluster_enclosure"};
constexpr std::size_t kChecks = std::size(kCheckNames);

using WindowOutcome = std::array<bool, kChecks>;

WindowOutcome check_window(const FieldConfig& field, std::int64_t cap_length) {
  WindowOutcome ok;
  ok.fill(true);
  const std::int64_t x0 = first_open_at_or_right(field, 0, 0);
  const Site apex{x0, 0};

  // Forward paths from every open site near the apex: t rises by one per
  // edge (no circuits) and the left-to-right order never flips.
  std::vector<std::int64_t> pos;
  for (std::int64_t x = x0 - 16; x <= x0 + 16; ++x)
    if (field.open(Site{x, 0})) pos.push_back(x);
  for (std::int64_t k = 0; k < 64; ++k) {
    for (auto& x : pos) {
      const Site next = step(field, Site{x, k});
      if (next.t != k + 1 || !field.open(next)) ok[0] = false;
      x = next.x;
    }
    for (std::size_t i = 0; i + 1 < pos.size(); ++i)
      if (pos[i] > pos[i + 1]) ok[1] = false;
  }

  const ClusterExploration ex = explore_cluster(field, apex, cap_length);
  Cluster c = ex.cluster;
  {
    std::int64_t total = 0, width = 0;
    for (const auto& row : c.rows) {
      total += row.count;
      width = std::max(width, row.width());
      if (row.count < 1 || row.count > row.width() + 1 || row.left > row.right) ok[2] = false;
    }
    if (total != c.total || width != c.max_width || c.length != static_cast<std::int64_t>(c.rows.size()) ||
        c.rows.empty() || c.rows.front().count != 1 || c.rows.front().left != x0)
      ok[2] = false;
  }

  // Ancestor sets by brute force over a window for the first generations.
  const std::int64_t depth = std::min<std::int64_t>(3, static_cast<std::int64_t>(c.rows.size()));
  for (std::int64_t k = 1; k <= depth; ++k) {
    const std::int64_t radius = 48 * (k + 1);
    std::vector<std::int64_t> brute;
    for (std::int64_t y = x0 - radius; y <= x0 + radius; ++y) {
      Site s{y, -k};
      if (!field.open(s)) continue;
      for (std::int64_t j = 0; j < k; ++j) s = step_unchecked(field, s);
      if (s.x == x0) brute.push_back(y);
    }
    const auto fast = ancestors(field, apex, k);
    if (fast != brute) ok[3] = false;
    if (k < static_cast<std::int64_t>(c.rows.size())) {
      const auto& row = c.rows[static_cast<std::size_t>(k)];
      if (brute.empty() || row.left != brute.front() || row.right != brute.back() ||
          row.count != static_cast<std::int64_t>(brute.size()))
        ok[3] = false;
    } else if (!brute.empty()) {
      ok[3] = false;
    }
  }

  // Dual paths from the apex's dual neighbours, one step per cluster row.
  const auto len = static_cast<std::int64_t>(c.rows.size());
  const DualNeighbours nb = dual_neighbours(field, apex);
  const auto left = dual_path(field, nb.left, len);
  const auto right = dual_path(field, nb.right, len);
  for (const auto* path : {&left, &right}) {
    for (std::size_t i = 0; i < path->size(); ++i) {
      const DualSite& d = (*path)[i];
      if (!is_dual_site(field, d)) ok[4] = false;
      if (i + 1 < path->size()) {
        if ((*path)[i + 1].t != d.t - 1) ok[0] = false;
        if (!dual_edge_clear(field, d, (*path)[i + 1])) ok[5] = false;
      }
    }
  }
  c.length = len;  // a censored cluster is checked over its explored rows
  if (!encloses(c, left, right)) ok[6] = false;
  return ok;
}

}  // namespace

InvariantsResult invariants_experiment(double p, std::int64_t windows, std::uint64_t seed, unsigned threads,
                                       std::int64_t cap_length) {
  if (windows < 1) throw DomainError("need at least one window");
  const auto outcomes = parallel_map<WindowOutcome>(windows, threads, [&](std::int64_t i) {
    const FieldConfig field(p, derive_seed(seed, "invariants", static_cast<std::uint64_t>(i)));
    return check_window(field, cap_length);
  });
  InvariantsResult r;
  r.p = p;
  r.windows = windows;
  for (std::size_t c = 0; c < kChecks; ++c) r.checks.push_back(InvariantCheck{kCheckNames[c], 0, 0});
  for (const auto& o : outcomes)
    for (std::size_t c = 0; c < kChecks; ++c) (o[c] ? r.checks[c].passed : r.checks[c].failed) += 1;
  for (const auto& c : r.checks) r.violations += c.failed;
  return r;
}

bool OracleSuiteResult::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const OracleCheck& c) { return c.pass; });
}

OracleCheck make_check(std::string name, double value, double target, double lo, double hi) {
  return OracleCheck{std::move(name), value, target, lo, hi, lo <= value && value <= hi};
}

std::filesystem::path table_path(const std::filesystem::path& dir, FunctionalKind kind, std::int64_t m,
                                 std::int64_t samples, std::uint64_t seed) {
  std::ostringstream name;
  name << to_string(kind) << "_m" << m << "_n" << samples << "_seed" << seed << ".csv";
  return dir / name.str();
}

OracleSuiteResult oracle_suite(const OracleSuiteConfig& cfg) {
  OracleSuiteResult r;
  const double mean_rayleigh = std::sqrt(std::numbers::pi / 2.0);
  auto mean_of = [](const std::vector<double>& xs) { return compensated_sum(xs) / static_cast<double>(xs.size()); };
  auto below_fraction = [](const std::vector<double>& xs, double x) {
    return static_cast<double>(std::count_if(xs.begin(), xs.end(), [x](double v) { return v <= x; })) /
           static_cast<double>(xs.size());
  };

  const auto meander = sample_functionals(FunctionalKind::meander_endpoint, cfg.meander_m, cfg.samples, cfg.seed,
                                          cfg.threads);
  r.checks.push_back(make_check("meander_endpoint_ks", ks_distance(meander, ref_rayleigh_cdf).statistic, 0.0, 0.0, 0.02));
  const double mm = mean_of(meander);
  r.checks.push_back(make_check("meander_endpoint_mean", mm, mean_rayleigh, mean_rayleigh - 0.01, mean_rayleigh + 0.01));

  const auto maxima = sample_functionals(FunctionalKind::excursion_max, cfg.excursion_m, cfg.samples, cfg.seed,
                                         cfg.threads);
  const double em = mean_of(maxima);
  r.checks.push_back(make_check("excursion_max_mean", em, mean_rayleigh, mean_rayleigh - 0.01, mean_rayleigh + 0.01));
  for (double x : {0.6, 1.0, 1.5}) {
    const double ref = ref_excursion_max_cdf(x);
    std::ostringstream name;
    name << "excursion_max_cdf_" << x;
    r.checks.push_back(make_check(name.str(), below_fraction(maxima, x), ref, ref - 0.01, ref + 0.01));
  }

  const TailTable area = cached_table(FunctionalKind::excursion_area, cfg.area_m, cfg.samples, cfg.seed,
                                      table_path(cfg.table_dir, FunctionalKind::excursion_area, cfg.area_m,
                                                 cfg.samples, cfg.seed),
                                      cfg.threads);
  const double area_mean_ref = std::sqrt(std::numbers::pi / 8.0);
  r.checks.push_back(make_check("excursion_area_mean", area.mean, area_mean_ref, area_mean_ref - 0.01,
                                area_mean_ref + 0.01));
  r.checks.push_back(make_check("excursion_area_tail_ratio_at_1", area.sf(1.0) / ref_excursion_area_tail_asym(1.0),
                                1.0, 0.7, 1.3));

  const KaighEstimate kaigh = kaigh_constants(cfg.kaigh_m, cfg.kaigh_walks, cfg.seed, cfg.threads);
  r.checks.push_back(make_check("kaigh_sqrt_m_survival", kaigh.sqrt_m_survival, std::sqrt(2.0 / std::numbers::pi),
                                0.75, 0.85));
  r.checks.push_back(make_check("kaigh_scaled_density", kaigh.scaled_density, 1.0 / std::sqrt(2.0 * std::numbers::pi),
                                0.36, 0.44));

  for (const auto& [tau, lambda] : {std::pair{1.0, 0.5}, std::pair{1.0, 1.0}, std::pair{2.0, 1.0}}) {
    const ShiftedAreaCheck s =
        shifted_area_law_check(tau, lambda, area, cfg.shifted_samples, cfg.shifted_m, cfg.seed, cfg.threads);
    std::ostringstream name;
    name << "shifted_area_tau" << tau << "_lambda" << lambda;
    r.checks.push_back(make_check(name.str(), s.lhs - s.rhs, 0.0, -0.02, 0.02));
  }

  // Endpoint of W^{+,tau} at tau = 1 against the Rayleigh law.
  {
    const std::int64_t count = cfg.shifted_samples;
    const std::int64_t blocks = (count + 1023) / 1024;
    std::vector<double> ends(static_cast<std::size_t>(count));
    ShiftedOptions opt;
    opt.keep_path = false;
    opt.max_after = 0;
    parallel_for(blocks, cfg.threads, [&](std::int64_t b) {
      Rng rng(derive_seed(cfg.seed, "shifted-endpoint", static_cast<std::uint64_t>(b)));
      const std::int64_t end = std::min(count, (b + 1) * 1024);
      for (std::int64_t i = b * 1024; i < end; ++i)
        ends[static_cast<std::size_t>(i)] = static_cast<double>(sample_w_plus_tau(1.0, cfg.meander_m, rng, opt).height_at_tau) /
                                            std::sqrt(static_cast<double>(cfg.meander_m));
    });
    r.checks.push_back(make_check("shifted_endpoint_ks", ks_distance(ends, ref_rayleigh_cdf).statistic, 0.0, 0.0, 0.02));
  }

  // The maximum-kind limit integral from the exact series against the MC table.
  {
    const TailTable max_table = tabulate_excursion_area_dist(maxima, {}, cfg.seed, cfg.excursion_m,
                                                             FunctionalKind::excursion_max);
    const double series = hack_limit_integral(1.0, HackKind::max, 0.5);
    const double table = hack_limit_integral(1.0, HackKind::max, 0.5, &max_table);
    r.checks.push_back(make_check("max_limit_integral_series_vs_table", table / series, 1.0, 0.98, 1.02));
  }
  return r;
}

}  // namespace riverweb
