#pragma once

#include <vector>

namespace hotelling {

/// Denominator of the two-firm torus Nash profit: six terms, two square roots
/// and four logarithms. Accepts d anywhere in (0, 1); symmetric under d -> 1-d.
double omega(double d);

struct NashEquilibrium {
    double d = 0.0;
    double r = 0.0;
    double omega = 0.0;
    double profit = 0.0;  // X*(d, r) per firm and customer
    double price = 0.0;   // p* = 2 X* (each firm serves area 1/2)
};

/// Closed-form equilibrium for firms at torus distance d, transport rate r.
/// Throws std::domain_error for d outside (0, 1): co-located firms are the
/// zero-profit Bertrand limit.
NashEquilibrium nash_equilibrium(double d, double r);

/// Highest price that still captures the whole market from a rival at
/// p_other: p_other - r*d^gamma, floored at zero.
double undercut_price(double p_other, double r, double d, double gamma = 1.0);

/// Stability of a locally optimal state (p1, p2) with firm 1 holding area
/// share s1 (gamma = 1): undercutting must not beat the current profit.
bool is_stable(double p1, double p2, double s1, double r, double d);

/// p*(d, r) < 2 r d: whether the symmetric torus equilibrium resists undercutting.
bool pbc_stability_check(double d, double r);

/// Density of the distance to the nearest of m-1 competitors at unit firm
/// density: 2*pi*R*(1 - pi*R^2)^(m-2) * (m-1) on [0, 1/sqrt(pi)], else 0.
double nn_distance_pdf(double radius, int m);

/// Mean nearest-competitor distance, (m-1)/2 * Gamma(m-1)/Gamma(m+1/2),
/// evaluated through log-gamma so it stays finite for large m.
double nn_mean_distance(int m);

/// Leading-order equilibrium profit per firm and customer: r / m^(3/2).
double predicted_profit_per_firm(int m, double r);

struct PowerLawPoint {
    double m = 0.0;     // firm count (abscissa)
    double mean = 0.0;  // mean profit per firm, > 0
    double std = 0.0;   // standard deviation across realizations, > 0
};

struct PowerLawFit {
    double amplitude = 0.0;      // A in X = A * r / m^B
    double exponent = 0.0;       // B
    double se_amplitude = 0.0;
    double se_exponent = 0.0;
    double residual = 0.0;       // weighted sum of squared log-residuals
    int n_points = 0;
};

/// Weighted least squares in log-log space: regress ln(X/r) on ln m with
/// delta-method weights (mean/std)^2. Throws std::invalid_argument on fewer
/// than 3 points, nonpositive means or stds, or a single distinct m.
PowerLawFit fit_power_law(const std::vector<PowerLawPoint>& points, double r);

}  // namespace hotelling
