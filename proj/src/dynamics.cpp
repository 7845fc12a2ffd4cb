#include "hotelling/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hotelling {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

long count_greater(const std::vector<double>& sorted, double v) {
    return sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), v);
}

long count_greater_equal(const std::vector<double>& sorted, double v) {
    return sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), v);
}

}  // namespace

long ResponseCurve::cells_won(double price) const {
    return count_greater(open_thresholds, price) + count_greater_equal(closed_thresholds, price);
}

double ResponseCurve::profit(double price) const {
    return price * static_cast<double>(cells_won(price)) / static_cast<double>(total_cells);
}

ResponseCurve response_curve(const MarketConfig& config,
                             const std::vector<Eigen::ArrayXXd>& transport, int firm) {
    config.validate();
    const int m = config.num_firms();
    if (firm < 0 || firm >= m) throw std::invalid_argument("firm index out of range");
    const int n = config.n_side;

    // cheapest rival offer per cell, split by id relative to the acting firm
    Eigen::ArrayXXd rival_lower = Eigen::ArrayXXd::Constant(n, n, kInf);  // ids < firm
    Eigen::ArrayXXd rival_higher = Eigen::ArrayXXd::Constant(n, n, kInf); // ids > firm
    for (int l = 0; l < m; ++l) {
        if (l == firm) continue;
        Eigen::ArrayXXd offer = transport[l] + config.firms[l].price;
        if (l < firm)
            rival_lower = rival_lower.min(offer);
        else
            rival_higher = rival_higher.min(offer);
    }

    ResponseCurve curve;
    curve.total_cells = config.num_customers();
    curve.open_thresholds.reserve(curve.total_cells);
    const double* lo = rival_lower.data();
    const double* hi = rival_higher.data();
    const double* own = transport[firm].data();
    for (long c = 0; c < rival_lower.size(); ++c) {
        const double s_open = lo[c] - own[c];    // must price strictly below
        const double s_closed = hi[c] - own[c];  // may price equal
        if (s_open <= s_closed)
            curve.open_thresholds.push_back(s_open);
        else
            curve.closed_thresholds.push_back(s_closed);
    }
    std::sort(curve.open_thresholds.begin(), curve.open_thresholds.end());
    std::sort(curve.closed_thresholds.begin(), curve.closed_thresholds.end());
    return curve;
}

BestResponse best_response_grid(const MarketConfig& config,
                                const std::vector<Eigen::ArrayXXd>& transport, int firm,
                                int grid_points, double price_max) {
    if (grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
    if (!(price_max > 0.0)) throw std::invalid_argument("price_max must be > 0");
    const ResponseCurve curve = response_curve(config, transport, firm);

    BestResponse best{0.0, 0.0, Method::grid};
    for (int g = 0; g < grid_points; ++g) {
        const double p = price_max * static_cast<double>(g) / (grid_points - 1);
        const double x = curve.profit(p);
        if (x > best.profit_per_customer) {
            best.price = p;
            best.profit_per_customer = x;
        }
    }
    return best;
}

BestResponse best_response_grid(const MarketConfig& config, int firm, int grid_points,
                                double price_max) {
    return best_response_grid(config, transport_cost_matrices(config), firm, grid_points,
                              price_max);
}

BestResponse best_response_exact(const MarketConfig& config,
                                 const std::vector<Eigen::ArrayXXd>& transport, int firm,
                                 double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (config.num_firms() < 2)
        throw std::domain_error("unbounded best response: monopolist has no competitor threshold");
    const ResponseCurve curve = response_curve(config, transport, firm);

    // Candidate optima: each distinct threshold and a point just below it.
    // The sawtooth p * cells_won(p) is increasing between thresholds, so its
    // maximum is attained at a closed threshold or approached at an open one.
    std::vector<double> candidates;
    candidates.reserve(2 * (curve.open_thresholds.size() + curve.closed_thresholds.size()) + 1);
    candidates.push_back(0.0);
    for (const auto* list : {&curve.open_thresholds, &curve.closed_thresholds}) {
        for (double thr : *list) {
            if (thr > 0.0) {
                candidates.push_back(thr);
                candidates.push_back(std::max(thr - epsilon, 0.0));
            }
        }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    BestResponse best{0.0, 0.0, Method::exact};
    for (double p : candidates) {
        const double x = curve.profit(p);
        if (x > best.profit_per_customer) {
            best.price = p;
            best.profit_per_customer = x;
        }
    }
    return best;
}

BestResponse best_response_exact(const MarketConfig& config, int firm, double epsilon) {
    return best_response_exact(config, transport_cost_matrices(config), firm, epsilon);
}

// ---------------------------- alternating dynamics ----------------------------

DynamicsTrace run_alternating(const MarketConfig& config, const AlternationParams& params) {
    config.validate();
    if (params.steps <= params.burn_in || params.burn_in < 0)
        throw std::invalid_argument("need steps > burn_in >= 0");
    if (!(params.initial_price >= 0.0))
        throw std::invalid_argument("initial_price must be >= 0");

    const int m = config.num_firms();
    const auto transport = transport_cost_matrices(config);

    MarketConfig state = config;
    for (auto& f : state.firms) f.price = params.initial_price;

    DynamicsTrace trace;
    trace.burn_in = params.burn_in;
    trace.steps.reserve(params.steps);

    for (int t = 0; t < params.steps; ++t) {
        const int k = t % m;
        const BestResponse br =
            params.method == Method::grid
                ? best_response_grid(state, transport, k, params.grid_points, params.price_max)
                : best_response_exact(state, transport, k, params.epsilon);
        state.firms[k].price = br.price;

        const Assignment asg = assign_customers(state, transport);
        TraceStep step;
        step.firm = k;
        step.prices.resize(m);
        for (int f = 0; f < m; ++f) step.prices(f) = state.firms[f].price;
        step.profits = asg.profits;
        trace.steps.push_back(std::move(step));
    }

    const int tail = params.steps - params.burn_in;
    trace.tail_mean_price = Eigen::VectorXd::Zero(m);
    trace.tail_mean_profit = Eigen::VectorXd::Zero(m);
    for (int t = params.burn_in; t < params.steps; ++t) {
        trace.tail_mean_price += trace.steps[t].prices;
        trace.tail_mean_profit += trace.steps[t].profits;
    }
    trace.tail_mean_price /= tail;
    trace.tail_mean_profit /= tail;

    if (tail >= 2) {
        trace.tail_var_profit = tail_profit_variance(trace);
        trace.converged = (trace.tail_var_profit.array() < kConvergedVarianceMax).all();
    } else {
        trace.tail_var_profit =
            Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
        trace.converged = false;
    }
    return trace;
}

Eigen::VectorXd tail_profit_variance(const DynamicsTrace& trace) {
    const int total = static_cast<int>(trace.steps.size());
    const int tail = total - trace.burn_in;
    if (tail < 2) throw std::invalid_argument("insufficient data: need >= 2 post-burn-in steps");
    const int m = static_cast<int>(trace.steps.front().profits.size());

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
    for (int t = trace.burn_in; t < total; ++t) mean += trace.steps[t].profits;
    mean /= tail;

    Eigen::VectorXd ss = Eigen::VectorXd::Zero(m);
    for (int t = trace.burn_in; t < total; ++t) {
        Eigen::VectorXd dev = trace.steps[t].profits - mean;
        ss += dev.cwiseProduct(dev);
    }
    return ss / (tail - 1);
}

}  // namespace hotelling
