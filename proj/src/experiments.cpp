#include "hotelling/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>
#include <thread>

namespace hotelling {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Deterministic parallel map: task i writes only slot i, so the result is
/// independent of scheduling.
void parallel_tasks(int n_tasks, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n_tasks));
    if (threads == 1) {
        for (int i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

AlternationParams alternation_params(const ExperimentSpec& spec, int n_side) {
    AlternationParams p;
    p.steps = spec.steps;
    p.burn_in = spec.burn_in;
    p.initial_price = spec.initial_price;
    p.method = spec.method;
    p.grid_points = effective_grid_points(spec, n_side);
    p.price_max = spec.price_max;
    p.epsilon = spec.epsilon;
    return p;
}

void fill_row_stats(ResultRow& row, const DynamicsTrace& trace) {
    row.firm_mean_price = trace.tail_mean_price;
    row.firm_mean_profit = trace.tail_mean_profit;
    row.firm_var_profit = trace.tail_var_profit;
    row.mean_price = trace.tail_mean_price.mean();
    row.mean_profit = trace.tail_mean_profit.mean();
    row.var_profit = trace.tail_var_profit.mean();
    row.converged = trace.converged;
}

/// Mean and unbiased std of the `mean_profit` / `var_profit` columns of a
/// group of rows that share a sweep point.
AggregatePoint aggregate_rows(const std::vector<ResultRow>& rows, size_t begin, size_t end) {
    AggregatePoint agg;
    const ResultRow& first = rows[begin];
    agg.d = first.d;
    agg.n_side = first.n_side;
    agg.m = first.m;
    agg.gamma = first.gamma;
    agg.theory = first.theory;
    const int n = static_cast<int>(end - begin);
    agg.n_seeds = n;

    double sum_p = 0, sum_v = 0, sum_pr = 0;
    for (size_t i = begin; i < end; ++i) {
        sum_p += rows[i].mean_profit;
        sum_v += rows[i].var_profit;
        sum_pr += rows[i].mean_price;
    }
    agg.mean_profit = sum_p / n;
    agg.mean_var_profit = sum_v / n;
    agg.mean_price = sum_pr / n;

    if (n >= 2) {
        double ss_p = 0, ss_v = 0;
        for (size_t i = begin; i < end; ++i) {
            ss_p += (rows[i].mean_profit - agg.mean_profit) * (rows[i].mean_profit - agg.mean_profit);
            ss_v += (rows[i].var_profit - agg.mean_var_profit) * (rows[i].var_profit - agg.mean_var_profit);
        }
        agg.std_profit = std::sqrt(ss_p / (n - 1));
        agg.std_var_profit = std::sqrt(ss_v / (n - 1));
    }
    return agg;
}

MarketConfig horizontal_pair(int n_side, double d, double r, double gamma, Boundary boundary) {
    MarketConfig cfg;
    cfg.n_side = n_side;
    cfg.r = r;
    cfg.gamma = gamma;
    cfg.boundary = boundary;
    cfg.firms = {FirmState{0, Point(0.0, 0.5), 0.0}, FirmState{1, Point(d, 0.5), 0.0}};
    return cfg;
}

}  // namespace

// ----------------------------------- spec -----------------------------------

void ExperimentSpec::validate() const {
    if (n_side < 1) throw std::invalid_argument("n_side must be >= 1");
    if (!(r > 0.0)) throw std::invalid_argument("r must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
    if (steps <= burn_in || burn_in < 0) throw std::invalid_argument("need steps > burn_in >= 0");
    if (grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
    if (!(price_max > 0.0)) throw std::invalid_argument("price_max must be > 0");
    if (!(initial_price >= 0.0)) throw std::invalid_argument("initial_price must be >= 0");
    if (fit_min_m < 0) throw std::invalid_argument("fit_min_m must be >= 0");
    for (double d : d_values)
        if (!(d > 0.0) || !(d < 1.0)) throw std::invalid_argument("d values must lie in (0, 1)");
    for (int n : n_values)
        if (n < 1) throw std::invalid_argument("n values must be >= 1");
    for (int m : m_values)
        if (m < 2) throw std::invalid_argument("m values must be >= 2");
    for (double g : gamma_values)
        if (!(g > 0.0)) throw std::invalid_argument("gamma values must be > 0");
    if (std::set<uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw std::invalid_argument("seeds must be distinct");

    switch (kind) {
        case ExperimentKind::two_firm_sweep:
        case ExperimentKind::nash_table:
        case ExperimentKind::non_pbc_demo:
            if (d_values.empty()) throw std::invalid_argument("d sweep list must be nonempty");
            break;
        case ExperimentKind::variance_scaling:
            if (n_values.empty()) throw std::invalid_argument("N sweep list must be nonempty");
            if (seeds.empty()) throw std::invalid_argument("seed list must be nonempty");
            break;
        case ExperimentKind::multi_firm_sweep:
            if (m_values.empty()) throw std::invalid_argument("m sweep list must be nonempty");
            if (seeds.empty()) throw std::invalid_argument("seed list must be nonempty");
            break;
        case ExperimentKind::gamma_sweep:
            if (m_values.empty()) throw std::invalid_argument("m sweep list must be nonempty");
            if (gamma_values.empty())
                throw std::invalid_argument("gamma sweep list must be nonempty");
            if (seeds.empty()) throw std::invalid_argument("seed list must be nonempty");
            break;
    }
}

ExperimentSpec default_spec(ExperimentKind kind) {
    ExperimentSpec spec;
    spec.kind = kind;
    spec.seeds.resize(20);
    for (int i = 0; i < 20; ++i) spec.seeds[i] = static_cast<uint64_t>(i);
    switch (kind) {
        case ExperimentKind::two_firm_sweep:
            spec.d_values = {0.1, 0.2, 0.3, 0.4, 0.5};
            spec.n_values = {80};
            break;
        case ExperimentKind::variance_scaling:
            spec.d_values = {0.5};
            spec.n_values = {10, 20, 40, 80, 160};
            spec.method = Method::grid;  // the finite-grid search is what leaves
                                         // the 1/N^2 residual fluctuations
            break;
        case ExperimentKind::multi_firm_sweep:
            spec.m_values = {8, 16, 32, 64};
            break;
        case ExperimentKind::gamma_sweep:
            spec.m_values = {8, 16, 32, 64};
            spec.gamma_values = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 3.5, 4.0};
            break;
        case ExperimentKind::non_pbc_demo:
            spec.d_values = {0.5};
            spec.p2_values = {0.65, 0.71};
            spec.boundary = Boundary::open;
            spec.method = Method::grid;
            spec.steps = 500;
            break;
        case ExperimentKind::nash_table:
            spec.d_values.resize(10);
            for (int i = 0; i < 10; ++i) spec.d_values[i] = 0.05 * (i + 1);
            break;
    }
    return spec;
}

int effective_grid_points(const ExperimentSpec& spec, int n_side) {
    if (spec.method == Method::grid && n_side >= 640) return std::max(spec.grid_points, 100000);
    return spec.grid_points;
}

// ---------------------------------- placement ---------------------------------

std::vector<Point> place_firms_random(int m, uint64_t seed) {
    if (m < 1) throw std::invalid_argument("place_firms_random: m must be >= 1");
    SplitMix64 rng(seed);
    std::vector<Point> points;
    points.reserve(m);
    for (int k = 0; k < m; ++k) {
        const double x = rng.next_unit();
        const double y = rng.next_unit();
        points.emplace_back(x, y);
    }
    return points;
}

// ---------------------------------- runners -----------------------------------

ExperimentResult run_two_firm_sweep(const ExperimentSpec& spec) {
    const auto t0 = Clock::now();
    spec.validate();
    if (spec.n_values.empty()) throw std::invalid_argument("N sweep list must be nonempty");

    ExperimentResult result;
    result.spec = spec;

    struct Task {
        double d;
        int n;
        double theory;
    };
    std::vector<Task> tasks;
    for (double d : spec.d_values) {
        const double theory = nash_equilibrium(d, spec.r).profit;
        for (int n : spec.n_values) tasks.push_back({d, n, theory});
    }

    result.rows.resize(tasks.size());
    parallel_tasks(static_cast<int>(tasks.size()), spec.threads, [&](int i) {
        const Task& task = tasks[i];
        MarketConfig cfg =
            horizontal_pair(task.n, task.d, spec.r, spec.gamma, spec.boundary);
        const DynamicsTrace trace = run_alternating(cfg, alternation_params(spec, task.n));
        ResultRow row;
        row.d = task.d;
        row.n_side = task.n;
        row.m = 2;
        row.gamma = spec.gamma;
        row.theory = task.theory;
        fill_row_stats(row, trace);
        result.rows[i] = std::move(row);
    });

    // the fixed-pair run is deterministic, so each sweep point has one row
    for (size_t i = 0; i < result.rows.size(); ++i)
        result.aggregates.push_back(aggregate_rows(result.rows, i, i + 1));

    result.wall_seconds = seconds_since(t0);
    return result;
}

ExperimentResult run_variance_scaling(const ExperimentSpec& spec) {
    const auto t0 = Clock::now();
    spec.validate();
    const double d = spec.d_values.empty() ? 0.5 : spec.d_values.front();

    ExperimentResult result;
    result.spec = spec;

    struct Task {
        int n;
        uint64_t seed;
    };
    std::vector<Task> tasks;
    for (int n : spec.n_values)
        for (uint64_t seed : spec.seeds) tasks.push_back({n, seed});

    result.rows.resize(tasks.size());
    parallel_tasks(static_cast<int>(tasks.size()), spec.threads, [&](int i) {
        const Task& task = tasks[i];
        // realizations differ in their initial price, which decides the phase
        // of the residual price orbit but not its 1/N^2 amplitude scaling
        SplitMix64 rng(task.seed);
        MarketConfig cfg = horizontal_pair(task.n, d, spec.r, spec.gamma, spec.boundary);
        AlternationParams params = alternation_params(spec, task.n);
        params.initial_price = 0.1 + 0.4 * rng.next_unit();
        const DynamicsTrace trace = run_alternating(cfg, params);
        ResultRow row;
        row.d = d;
        row.n_side = task.n;
        row.m = 2;
        row.gamma = spec.gamma;
        row.seed = task.seed;
        fill_row_stats(row, trace);
        result.rows[i] = std::move(row);
    });

    const size_t per_n = spec.seeds.size();
    for (size_t i = 0; i < result.rows.size(); i += per_n)
        result.aggregates.push_back(aggregate_rows(result.rows, i, i + per_n));

    // log-log slope of mean tail variance vs N (plain least squares)
    std::vector<PowerLawPoint> points;
    for (const AggregatePoint& agg : result.aggregates) {
        if (agg.mean_var_profit > 0.0)
            points.push_back({static_cast<double>(agg.n_side), agg.mean_var_profit,
                              agg.mean_var_profit});
    }
    if (points.size() >= 3) {
        const PowerLawFit fit = fit_power_law(points, 1.0);
        result.fits.push_back({spec.gamma, fit});
        result.variance_slope = -fit.exponent;
    }

    result.wall_seconds = seconds_since(t0);
    return result;
}

ExperimentResult run_multi_firm_sweep(const ExperimentSpec& spec) {
    const auto t0 = Clock::now();
    spec.validate();

    ExperimentResult result;
    result.spec = spec;

    struct Task {
        int m;
        uint64_t seed;
    };
    std::vector<Task> tasks;
    for (int m : spec.m_values)
        for (uint64_t seed : spec.seeds) tasks.push_back({m, seed});

    result.rows.resize(tasks.size());
    parallel_tasks(static_cast<int>(tasks.size()), spec.threads, [&](int i) {
        const Task& task = tasks[i];
        MarketConfig cfg;
        cfg.n_side = spec.n_side;
        cfg.r = spec.r;
        cfg.gamma = spec.gamma;
        cfg.boundary = spec.boundary;
        const auto positions = place_firms_random(task.m, task.seed);
        cfg.firms.reserve(task.m);
        for (int k = 0; k < task.m; ++k) cfg.firms.push_back(FirmState{k, positions[k], 0.0});
        // spec.steps counts a two-firm protocol; every firm still gets
        // steps/2 optimizations (and burn_in/2 burned) when m firms rotate
        AlternationParams params = alternation_params(spec, spec.n_side);
        params.steps = spec.steps * task.m / 2;
        params.burn_in = spec.burn_in * task.m / 2;
        const DynamicsTrace trace = run_alternating(cfg, params);
        ResultRow row;
        row.n_side = spec.n_side;
        row.m = task.m;
        row.gamma = spec.gamma;
        row.seed = task.seed;
        row.theory = predicted_profit_per_firm(task.m, spec.r);
        fill_row_stats(row, trace);
        result.rows[i] = std::move(row);
    });

    const size_t per_m = spec.seeds.size();
    for (size_t i = 0; i < result.rows.size(); i += per_m)
        result.aggregates.push_back(aggregate_rows(result.rows, i, i + per_m));

    std::vector<PowerLawPoint> points;
    for (const AggregatePoint& agg : result.aggregates) {
        if (agg.m >= spec.fit_min_m && agg.mean_profit > 0.0 && agg.std_profit > 0.0)
            points.push_back({static_cast<double>(agg.m), agg.mean_profit, agg.std_profit});
    }
    if (points.size() >= 3) result.fits.push_back({spec.gamma, fit_power_law(points, spec.r)});

    result.wall_seconds = seconds_since(t0);
    return result;
}

ExperimentResult run_gamma_sweep(const ExperimentSpec& spec) {
    const auto t0 = Clock::now();
    spec.validate();

    ExperimentResult result;
    result.spec = spec;
    for (double g : spec.gamma_values) {
        ExperimentSpec sub = spec;
        sub.kind = ExperimentKind::multi_firm_sweep;
        sub.gamma = g;
        sub.gamma_values.clear();
        ExperimentResult part = run_multi_firm_sweep(sub);
        result.rows.insert(result.rows.end(), part.rows.begin(), part.rows.end());
        result.aggregates.insert(result.aggregates.end(), part.aggregates.begin(),
                                 part.aggregates.end());
        result.fits.insert(result.fits.end(), part.fits.begin(), part.fits.end());
    }
    result.wall_seconds = seconds_since(t0);
    return result;
}

NonPbcDemoResult run_non_pbc_demo(const ExperimentSpec& spec) {
    const auto t0 = Clock::now();
    spec.validate();

    NonPbcDemoResult demo;
    demo.spec = spec;
    demo.d = spec.d_values.front();

    MarketConfig cfg =
        horizontal_pair(spec.n_side, demo.d, spec.r, spec.gamma, Boundary::open);
    demo.trace = run_alternating(cfg, alternation_params(spec, spec.n_side));

    // X1(p1 | p2) profiles on the price grid
    const int grid_points = effective_grid_points(spec, spec.n_side);
    for (double p2 : spec.p2_values) {
        MarketConfig profile_cfg = cfg;
        profile_cfg.firms[1].price = p2;
        const auto transport = transport_cost_matrices(profile_cfg);
        const ResponseCurve curve = response_curve(profile_cfg, transport, 0);

        ProfitProfile profile;
        profile.p2 = p2;
        profile.p1.resize(grid_points);
        profile.profit1.resize(grid_points);
        profile.share1.resize(grid_points);
        const double total = static_cast<double>(profile_cfg.num_customers());
        for (int g = 0; g < grid_points; ++g) {
            const double p = spec.price_max * static_cast<double>(g) / (grid_points - 1);
            const double share = static_cast<double>(curve.cells_won(p)) / total;
            profile.p1(g) = p;
            profile.share1(g) = share;
            profile.profit1(g) = p * share;
        }
        demo.profiles.push_back(std::move(profile));
    }
    demo.wall_seconds = seconds_since(t0);
    return demo;
}

NashTableResult run_nash_table(const ExperimentSpec& spec) {
    const auto t0 = Clock::now();
    spec.validate();

    NashTableResult table;
    table.spec = spec;
    for (double d : spec.d_values) {
        table.rows.push_back(nash_equilibrium(d, spec.r));
        table.stable.push_back(pbc_stability_check(std::min(d, 1.0 - d), spec.r));
    }
    table.wall_seconds = seconds_since(t0);
    return table;
}

}  // namespace hotelling
