#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace hotelling {

enum class Boundary { periodic, open };

/// Canonicalize a coordinate into [0, 1).
inline double wrap01(double v) noexcept {
    double w = v - std::floor(v);
    return w >= 1.0 ? w - 1.0 : w;
}

/// Position on the unit square. The constructor wraps arbitrary reals mod 1.
struct Point {
    double x = 0.0;
    double y = 0.0;
    Point() = default;
    Point(double px, double py) : x(wrap01(px)), y(wrap01(py)) {}
};

struct FirmState {
    int id = 0;
    Point position;
    double price = 0.0;  // mill price, nonnegative
};

/// Full problem instance: N x N customer lattice plus the firms acting on it.
/// Customer (i, j), 0-based, sits at ((i + 0.5)/N, (j + 0.5)/N).
struct MarketConfig {
    int n_side = 80;
    std::vector<FirmState> firms;
    double r = 1.0;       // transport cost per unit distance
    double gamma = 1.0;   // distance exponent
    Boundary boundary = Boundary::periodic;

    int num_firms() const { return static_cast<int>(firms.size()); }
    long num_customers() const { return static_cast<long>(n_side) * n_side; }

    /// Throws std::invalid_argument if any field violates its invariant.
    void validate() const;
};

inline double customer_coord(int i, int n_side) { return (i + 0.5) / n_side; }

/// Shorter of the two arcs between coordinates on the unit circle; result in [0, 1/2].
double torus_delta(double a, double b);

/// [dx^2 + dy^2]^(gamma/2) with dx, dy per the boundary rule.
double distance(const Point& p, const Point& q, Boundary boundary, double gamma);

/// E_k = p_k + r * distance(customer, firm)^gamma.
double effective_cost(const Point& customer, const FirmState& firm, double r, double gamma,
                      Boundary boundary);

/// Partition of the customer lattice among firms.
struct Assignment {
    Eigen::VectorXi counts;   // N_k, sums to N^2
    Eigen::VectorXd shares;   // N_k / N^2
    Eigen::VectorXd profits;  // X_k = p_k * N_k / N^2
    Eigen::ArrayXXi owner;    // winning firm id per cell (i, j)
};

/// r * dist^gamma from every lattice cell to one firm; entry (i, j) is cell (x_i, y_j).
Eigen::ArrayXXd transport_cost_matrix(const MarketConfig& config, int firm);

/// All per-firm transport matrices; computed once, reused across price evaluations.
std::vector<Eigen::ArrayXXd> transport_cost_matrices(const MarketConfig& config);

/// Assign every customer to the firm with the lowest effective cost.
/// Ties go to the lowest firm id.
Assignment assign_customers(const MarketConfig& config);
Assignment assign_customers(const MarketConfig& config,
                            const std::vector<Eigen::ArrayXXd>& transport);

/// Cost-equality curves between two firms at (0, 0.5) and (d, 0.5) on the torus,
/// gamma = 1. x_left separates the firms directly, x_right acts through the
/// periodic image. Entries are NaN for y rows the curve does not reach.
struct BoundaryCurves {
    Eigen::VectorXd y;
    Eigen::VectorXd x_left;
    Eigen::VectorXd x_right;
};

/// Throws std::domain_error when |p1 - p2| >= r*d (one firm undercuts the other
/// everywhere on the near side, so no boundary exists).
BoundaryCurves boundary_curves(double d, double p1, double p2, double r, int y_samples = 512);

}  // namespace hotelling
