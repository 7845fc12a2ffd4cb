#pragma once

#include "hotelling/analytics.hpp"
#include "hotelling/dynamics.hpp"
#include "hotelling/market.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace hotelling {

// ----------------------------------- RNG ------------------------------------

/// splitmix64: the generator behind every seeded experiment. Counter-based,
/// so independent tasks get independent deterministic streams.
struct SplitMix64 {
    uint64_t state = 0;
    explicit SplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    /// Uniform double in [0, 1).
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline constexpr const char* kRngAlgorithm = "splitmix64";

/// m i.i.d. uniform positions on [0,1)^2; identical for identical seeds.
std::vector<Point> place_firms_random(int m, uint64_t seed);

// ------------------------------- specification -------------------------------

enum class ExperimentKind {
    two_firm_sweep,
    variance_scaling,
    multi_firm_sweep,
    gamma_sweep,
    non_pbc_demo,
    nash_table,
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::two_firm_sweep;
    int n_side = 80;
    double r = 1.0;
    double gamma = 1.0;
    Boundary boundary = Boundary::periodic;
    int steps = 120;
    int burn_in = 80;
    Method method = Method::exact;
    int grid_points = 10000;
    double price_max = 1.0;
    double initial_price = 0.3;
    double epsilon = 1e-9;
    int fit_min_m = 8;
    std::vector<double> d_values;
    std::vector<int> n_values;
    std::vector<int> m_values;
    std::vector<double> gamma_values;
    std::vector<double> p2_values;   // rival prices for non-PBC profit profiles
    std::vector<uint64_t> seeds;
    int threads = 0;                 // 0 = hardware concurrency

    void validate() const;           // throws std::invalid_argument
};

/// Per-kind defaults (sweep lists, method, step counts). Flags and callers
/// override from here.
ExperimentSpec default_spec(ExperimentKind kind);

/// The grid best response needs a finer price grid on very large lattices;
/// from N = 640 upward at least 100,000 evaluation points are used.
int effective_grid_points(const ExperimentSpec& spec, int n_side);

// --------------------------------- results ----------------------------------

inline constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

/// One dynamics run at one sweep point; per-firm tail statistics are averaged
/// across firms for the scalar fields.
struct ResultRow {
    double d = kAbsent;
    int n_side = 0;
    int m = 0;
    double gamma = kAbsent;
    uint64_t seed = 0;
    double mean_price = kAbsent;
    double mean_profit = kAbsent;   // profit per firm and customer
    double var_profit = kAbsent;    // mean over firms of tail variances
    bool converged = false;
    double theory = kAbsent;        // closed-form companion where one exists
    Eigen::VectorXd firm_mean_price;
    Eigen::VectorXd firm_mean_profit;
    Eigen::VectorXd firm_var_profit;
};

/// Across-seed summary of one sweep point. std fields are NaN (absent) when
/// fewer than two seeds contribute.
struct AggregatePoint {
    double d = kAbsent;
    int n_side = 0;
    int m = 0;
    double gamma = kAbsent;
    int n_seeds = 0;
    double mean_profit = kAbsent;
    double std_profit = kAbsent;
    double mean_var_profit = kAbsent;
    double std_var_profit = kAbsent;
    double mean_price = kAbsent;
    double theory = kAbsent;
};

struct LabeledFit {
    double gamma = kAbsent;
    PowerLawFit fit;
};

struct ExperimentResult {
    ExperimentSpec spec;
    std::vector<ResultRow> rows;
    std::vector<AggregatePoint> aggregates;
    std::vector<LabeledFit> fits;
    double variance_slope = kAbsent;  // set by run_variance_scaling
    double wall_seconds = 0.0;
};

/// X1(p1 | p2) sampled on the price grid, for the non-PBC multimodality plot.
struct ProfitProfile {
    double p2 = 0.0;
    Eigen::VectorXd p1;
    Eigen::VectorXd profit1;
    Eigen::VectorXd share1;
};

struct NonPbcDemoResult {
    ExperimentSpec spec;
    double d = 0.0;
    DynamicsTrace trace;
    std::vector<ProfitProfile> profiles;
    double wall_seconds = 0.0;
};

struct NashTableResult {
    ExperimentSpec spec;
    std::vector<NashEquilibrium> rows;
    std::vector<bool> stable;
    double wall_seconds = 0.0;
};

// --------------------------------- runners ----------------------------------

/// Fixed firms at (0, 0.5) and (d, 0.5) on the torus, one deterministic
/// alternation per (d, N), reported against the closed form X*(d, r).
ExperimentResult run_two_firm_sweep(const ExperimentSpec& spec);

/// Pair at distance d (default 0.5) with a seeded initial price per
/// realization; tail profit variance per N and the log-log slope across N.
ExperimentResult run_variance_scaling(const ExperimentSpec& spec);

/// m randomly placed firms per seed, round-robin dynamics, power-law fit of
/// mean profit per firm over m >= fit_min_m.
ExperimentResult run_multi_firm_sweep(const ExperimentSpec& spec);

/// The multi-firm sweep repeated per gamma; one labeled fit each.
ExperimentResult run_gamma_sweep(const ExperimentSpec& spec);

/// Open-boundary pair at (0, 0.5), (d, 0.5): full trace (expected not to
/// converge) plus X1(p1 | p2) profiles showing the multiple maxima.
NonPbcDemoResult run_non_pbc_demo(const ExperimentSpec& spec);

/// Closed-form table over d: omega, X*, p*, stability.
NashTableResult run_nash_table(const ExperimentSpec& spec);

}  // namespace hotelling
