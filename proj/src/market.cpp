#include "hotelling/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hotelling {

void MarketConfig::validate() const {
    if (n_side < 1) throw std::invalid_argument("n_side must be >= 1");
    if (firms.empty()) throw std::invalid_argument("at least one firm required");
    if (!(r > 0.0)) throw std::invalid_argument("r must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
    for (int k = 0; k < num_firms(); ++k) {
        const FirmState& f = firms[k];
        if (f.id != k) throw std::invalid_argument("firm ids must equal their index");
        if (!(f.price >= 0.0) || !std::isfinite(f.price))
            throw std::invalid_argument("firm price must be finite and >= 0");
        if (f.position.x < 0.0 || f.position.x >= 1.0 || f.position.y < 0.0 ||
            f.position.y >= 1.0)
            throw std::invalid_argument("firm position must lie in [0,1)^2");
    }
}

double torus_delta(double a, double b) {
    double diff = std::abs(a - b);
    return diff <= 0.5 ? diff : 1.0 - diff;
}

namespace {

inline double coord_delta(double a, double b, Boundary boundary) {
    return boundary == Boundary::periodic ? torus_delta(a, b) : std::abs(a - b);
}

}  // namespace

double distance(const Point& p, const Point& q, Boundary boundary, double gamma) {
    const double dx = coord_delta(p.x, q.x, boundary);
    const double dy = coord_delta(p.y, q.y, boundary);
    const double d2 = dx * dx + dy * dy;
    if (d2 == 0.0) return 0.0;
    return std::pow(d2, 0.5 * gamma);
}

double effective_cost(const Point& customer, const FirmState& firm, double r, double gamma,
                      Boundary boundary) {
    return firm.price + r * distance(customer, firm.position, boundary, gamma);
}

Eigen::ArrayXXd transport_cost_matrix(const MarketConfig& config, int firm) {
    const int n = config.n_side;
    const Point pos = config.firms.at(firm).position;

    Eigen::ArrayXd dx2(n), dy2(n);
    for (int i = 0; i < n; ++i) {
        const double c = customer_coord(i, n);
        const double dx = coord_delta(c, pos.x, config.boundary);
        const double dy = coord_delta(c, pos.y, config.boundary);
        dx2(i) = dx * dx;
        dy2(i) = dy * dy;
    }
    // squared distance (i, j) = dx2(i) + dy2(j)
    Eigen::ArrayXXd d2 =
        dx2.replicate(1, n) + dy2.transpose().replicate(n, 1);
    if (config.gamma == 2.0) return config.r * d2;
    if (config.gamma == 1.0) return config.r * d2.sqrt();
    return config.r * d2.pow(0.5 * config.gamma);
}

std::vector<Eigen::ArrayXXd> transport_cost_matrices(const MarketConfig& config) {
    config.validate();
    std::vector<Eigen::ArrayXXd> out;
    out.reserve(config.firms.size());
    for (int k = 0; k < config.num_firms(); ++k) out.push_back(transport_cost_matrix(config, k));
    return out;
}

Assignment assign_customers(const MarketConfig& config) {
    return assign_customers(config, transport_cost_matrices(config));
}

Assignment assign_customers(const MarketConfig& config,
                            const std::vector<Eigen::ArrayXXd>& transport) {
    config.validate();
    const int m = config.num_firms();
    if (static_cast<int>(transport.size()) != m)
        throw std::invalid_argument("transport matrices do not match firm count");
    const int n = config.n_side;

    Eigen::ArrayXXd best = transport[0] + config.firms[0].price;
    Eigen::ArrayXXi owner = Eigen::ArrayXXi::Zero(n, n);
    for (int k = 1; k < m; ++k) {
        Eigen::ArrayXXd cost = transport[k] + config.firms[k].price;
        // strict comparison keeps the lowest id on ties
        owner = (cost < best).select(k, owner);
        best = best.min(cost);
    }

    Assignment a;
    a.counts = Eigen::VectorXi::Zero(m);
    const int* ids = owner.data();
    for (long c = 0; c < owner.size(); ++c) a.counts(ids[c]) += 1;

    const double total = static_cast<double>(config.num_customers());
    a.shares = a.counts.cast<double>() / total;
    a.profits.resize(m);
    for (int k = 0; k < m; ++k) a.profits(k) = config.firms[k].price * a.shares(k);
    a.owner = std::move(owner);
    return a;
}

// ----------------------------- boundary curves ------------------------------

namespace {

// Cost difference firm1 - firm2 along one horizontal line, firms at (0, 0.5)
// and (d, 0.5) with prices p1, p2, torus metric. The roots reduce to the
// direct and periodic-image boundary equations on their active branches.
struct CostGap {
    double d, p1, p2, r, h2;
    double operator()(double x) const {
        const double a = torus_delta(wrap01(x), 0.0);
        const double b = torus_delta(wrap01(x), d);
        return r * std::sqrt(a * a + h2) + p1 - (r * std::sqrt(b * b + h2) + p2);
    }
};

double bisect(const CostGap& f, double lo, double hi, double tol) {
    double flo = f(lo);
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = f(mid);
        if ((flo <= 0.0) == (fmid <= 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

constexpr double kCurveTol = 1e-10;

}  // namespace

BoundaryCurves boundary_curves(double d, double p1, double p2, double r, int y_samples) {
    if (!(d > 0.0) || !(d < 1.0)) throw std::invalid_argument("d must lie in (0, 1)");
    if (!(r > 0.0)) throw std::invalid_argument("r must be > 0");
    if (y_samples < 2) throw std::invalid_argument("y_samples must be >= 2");
    if (std::abs(p1 - p2) >= r * std::min(d, 1.0 - d))
        throw std::domain_error("no boundary: one firm undercuts the other everywhere");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    BoundaryCurves curves;
    curves.y.resize(y_samples);
    curves.x_left.resize(y_samples);
    curves.x_right.resize(y_samples);

    for (int s = 0; s < y_samples; ++s) {
        const double y = static_cast<double>(s) / (y_samples - 1);
        const double h = y - 0.5;
        curves.y(s) = y;
        const CostGap gap{d, p1, p2, r, h * h};

        // direct boundary between the firms: root in [0, d]
        if (gap(0.0) < 0.0 && gap(d) > 0.0)
            curves.x_left(s) = bisect(gap, 0.0, d, kCurveTol);
        else
            curves.x_left(s) = nan;

        // boundary behind firm 2, through firm 1's periodic image: root in [d, 1]
        if (gap(d) > 0.0 && gap(1.0) < 0.0)
            curves.x_right(s) = bisect(gap, d, 1.0, kCurveTol);
        else
            curves.x_right(s) = nan;
    }
    return curves;
}

}  // namespace hotelling
