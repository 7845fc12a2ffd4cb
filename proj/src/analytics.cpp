#include "hotelling/analytics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hotelling {

namespace {

// ln(t^2 * (sqrt(t^2 + 1) - 1)) rewritten through
// sqrt(t^2+1) - 1 = t^2 / (sqrt(t^2+1) + 1), which keeps full precision for
// small t where the direct difference cancels catastrophically.
double log_ring_term(double t, double sqrt_t2p1) {
    return 4.0 * std::log(t) - std::log(sqrt_t2p1 + 1.0);
}

}  // namespace

double omega(double d) {
    if (!(d > 0.0) || !(d < 1.0)) throw std::domain_error("omega: d must lie in (0, 1)");
    const double u = 1.0 - d;
    const double sd = std::sqrt(d * d + 1.0);
    const double su = std::sqrt(u * u + 1.0);
    return d * su + u * sd
         + 3.0 * d * u * u * std::log(u)
         + 3.0 * d * d * u * std::log(d)
         - d * u * u * log_ring_term(u, su)
         - d * d * u * log_ring_term(d, sd);
}

NashEquilibrium nash_equilibrium(double d, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("nash_equilibrium: r must be > 0");
    if (!(d > 0.0) || !(d < 1.0))
        throw std::domain_error("nash_equilibrium: co-located firms (d in {0,1}) earn zero profit");
    NashEquilibrium eq;
    eq.d = d;
    eq.r = r;
    eq.omega = omega(d);
    eq.profit = (1.0 - d) * d * r / eq.omega;
    eq.price = 2.0 * eq.profit;
    return eq;
}

double undercut_price(double p_other, double r, double d, double gamma) {
    return std::max(0.0, p_other - r * std::pow(d, gamma));
}

bool is_stable(double p1, double p2, double s1, double r, double d) {
    if (s1 < 0.0 || s1 > 1.0) throw std::invalid_argument("is_stable: share must lie in [0, 1]");
    return undercut_price(p2, r, d) < p1 * s1;
}

bool pbc_stability_check(double d, double r) {
    if (!(d > 0.0) || d > 0.5)
        throw std::invalid_argument("pbc_stability_check: d must lie in (0, 0.5]");
    return nash_equilibrium(d, r).price < 2.0 * r * d;
}

double nn_distance_pdf(double radius, int m) {
    if (m < 2) throw std::invalid_argument("nn_distance_pdf: m must be >= 2");
    if (radius < 0.0) throw std::invalid_argument("nn_distance_pdf: radius must be >= 0");
    const double pi = std::numbers::pi;
    const double support = 1.0 / std::sqrt(pi);
    if (radius > support) return 0.0;
    const double hole = 1.0 - pi * radius * radius;
    return 2.0 * pi * radius * std::pow(std::max(hole, 0.0), m - 2) * (m - 1);
}

double nn_mean_distance(int m) {
    if (m < 2) throw std::invalid_argument("nn_mean_distance: m must be >= 2");
    const double log_ratio = std::lgamma(m - 1.0) - std::lgamma(m + 0.5);
    return 0.5 * (m - 1.0) * std::exp(log_ratio);
}

double predicted_profit_per_firm(int m, double r) {
    if (m < 2) throw std::invalid_argument("predicted_profit_per_firm: m must be >= 2");
    return r * std::pow(static_cast<double>(m), -1.5);
}

PowerLawFit fit_power_law(const std::vector<PowerLawPoint>& points, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("fit_power_law: r must be > 0");
    if (points.size() < 3) throw std::invalid_argument("fit_power_law: need >= 3 points");

    const int n = static_cast<int>(points.size());
    Eigen::VectorXd x(n), y(n), w(n);
    bool distinct = false;
    for (int i = 0; i < n; ++i) {
        const auto& pt = points[i];
        if (!(pt.m > 0.0)) throw std::invalid_argument("fit_power_law: m values must be > 0");
        if (!(pt.mean > 0.0)) throw std::invalid_argument("fit_power_law: means must be > 0");
        if (!(pt.std > 0.0)) throw std::invalid_argument("fit_power_law: stds must be > 0");
        x(i) = std::log(pt.m);
        y(i) = std::log(pt.mean / r);
        w(i) = (pt.mean / pt.std) * (pt.mean / pt.std);
        if (pt.m != points[0].m) distinct = true;
    }
    if (!distinct) throw std::invalid_argument("fit_power_law: need >= 2 distinct m values");

    // ln(X/r) = a - B ln m, weighted normal equations
    Eigen::Matrix2d normal;
    normal << w.sum(), w.dot(x),
              w.dot(x), w.dot(x.cwiseProduct(x));
    Eigen::Vector2d rhs(w.dot(y), w.dot(x.cwiseProduct(y)));
    const Eigen::Vector2d beta = normal.ldlt().solve(rhs);
    const double intercept = beta(0);
    const double slope = beta(1);

    const Eigen::Matrix2d cov = normal.inverse();
    PowerLawFit fit;
    fit.amplitude = std::exp(intercept);
    fit.exponent = -slope;
    fit.se_amplitude = fit.amplitude * std::sqrt(cov(0, 0));
    fit.se_exponent = std::sqrt(cov(1, 1));
    fit.n_points = n;
    const Eigen::VectorXd res = y.array() - intercept - slope * x.array();
    fit.residual = res.cwiseProduct(res).dot(w);
    return fit;
}

}  // namespace hotelling
