#pragma once

#include "hotelling/market.hpp"

#include <vector>

namespace hotelling {

enum class Method { grid, exact };

struct BestResponse {
    double price = 0.0;
    double profit_per_customer = 0.0;
    Method method = Method::grid;
};

/// Price-response structure of one firm with all rival prices held fixed.
/// Each lattice cell contributes one threshold: the firm wins the cell at
/// price p iff p < thr (open, ties lost to a lower id) or p <= thr (closed,
/// ties won against higher ids only). Profit is then p * cells_won(p) / N^2,
/// a sawtooth in p.
struct ResponseCurve {
    std::vector<double> open_thresholds;    // sorted ascending
    std::vector<double> closed_thresholds;  // sorted ascending
    long total_cells = 0;

    long cells_won(double price) const;
    double profit(double price) const;
};

ResponseCurve response_curve(const MarketConfig& config,
                             const std::vector<Eigen::ArrayXXd>& transport, int firm);

/// Evaluate the profit at evenly spaced prices over [0, price_max] and return
/// the maximizer (lowest such price on ties).
BestResponse best_response_grid(const MarketConfig& config,
                                const std::vector<Eigen::ArrayXXd>& transport, int firm,
                                int grid_points = 10000, double price_max = 1.0);
BestResponse best_response_grid(const MarketConfig& config, int firm, int grid_points = 10000,
                                double price_max = 1.0);

/// Evaluate the sawtooth at every threshold and just below it (epsilon under),
/// which covers every candidate optimum without a price cap. Throws
/// std::domain_error for a monopolist (no thresholds, unbounded response).
BestResponse best_response_exact(const MarketConfig& config,
                                 const std::vector<Eigen::ArrayXXd>& transport, int firm,
                                 double epsilon = 1e-9);
BestResponse best_response_exact(const MarketConfig& config, int firm, double epsilon = 1e-9);

struct TraceStep {
    int firm = 0;              // who acted
    Eigen::VectorXd prices;    // full price vector after the move
    Eigen::VectorXd profits;   // full profit vector after the move
};

/// Tail profit variance below this marks a trace as converged. Finite-N
/// lattice dynamics never settles exactly: on the torus the tail variance
/// stays near 1e-5 at N = 80 while open-boundary price cycling sits at
/// 2e-4 and above, so the cut lives between those regimes.
inline constexpr double kConvergedVarianceMax = 5e-5;

struct DynamicsTrace {
    std::vector<TraceStep> steps;
    int burn_in = 0;
    Eigen::VectorXd tail_mean_price;   // per firm, over steps >= burn_in
    Eigen::VectorXd tail_mean_profit;
    Eigen::VectorXd tail_var_profit;   // unbiased; NaN when tail has < 2 steps
    bool converged = false;
};

struct AlternationParams {
    int steps = 120;
    int burn_in = 80;
    double initial_price = 0.3;
    Method method = Method::exact;
    int grid_points = 10000;
    double price_max = 1.0;
    double epsilon = 1e-9;
};

/// Round-robin best-response dynamics: at step t firm (t mod m) re-prices.
DynamicsTrace run_alternating(const MarketConfig& config, const AlternationParams& params);

/// Unbiased per-firm sample variance over post-burn-in steps.
/// Throws std::invalid_argument when fewer than 2 tail steps exist.
Eigen::VectorXd tail_profit_variance(const DynamicsTrace& trace);

}  // namespace hotelling
