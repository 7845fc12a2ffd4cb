#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hotelling/analytics.hpp"
#include "hotelling/dynamics.hpp"
#include "hotelling/experiments.hpp"

#include <cmath>

using namespace hotelling;

namespace {

constexpr double kNashProfitHalf = 0.1690396614883826;  // X*(0.5, 1)
constexpr double kNashPriceHalf = 0.3380793229767652;   // p*(0.5, 1)

MarketConfig pair_config(int n, double d, double p0, double p1,
                         Boundary boundary = Boundary::periodic, double gamma = 1.0,
                         double r = 1.0) {
    MarketConfig cfg;
    cfg.n_side = n;
    cfg.firms = {FirmState{0, Point(0.0, 0.5), p0}, FirmState{1, Point(d, 0.5), p1}};
    cfg.r = r;
    cfg.gamma = gamma;
    cfg.boundary = boundary;
    return cfg;
}

MarketConfig random_small_config(SplitMix64& rng) {
    MarketConfig cfg;
    cfg.n_side = 5 + static_cast<int>(rng.next() % 16);
    const int m = 2 + static_cast<int>(rng.next() % 3);
    for (int k = 0; k < m; ++k)
        cfg.firms.push_back(
            FirmState{k, Point(rng.next_unit(), rng.next_unit()), 0.05 + rng.next_unit()});
    cfg.r = 0.5 + rng.next_unit();
    cfg.gamma = 0.5 + 1.5 * rng.next_unit();
    cfg.boundary = rng.next() % 2 == 0 ? Boundary::periodic : Boundary::open;
    return cfg;
}

}  // namespace

TEST_CASE("monopolist grid response maxes the cap, exact throws") {
    MarketConfig cfg;
    cfg.n_side = 10;
    cfg.firms = {FirmState{0, Point(0.5, 0.5), 0.3}};
    const BestResponse br = best_response_grid(cfg, 0, 10000, 1.0);
    CHECK(br.price == doctest::Approx(1.0));
    CHECK(br.profit_per_customer == doctest::Approx(1.0));
    CHECK_THROWS_AS(best_response_exact(cfg, 0), std::domain_error);
}

TEST_CASE("best response to the equilibrium price stays near it") {
    // fixed-point property of the closed form, discretization error shrinks with N
    double prev_gap = 1.0;
    for (int n : {40, 80, 160}) {
        const auto cfg = pair_config(n, 0.5, 0.2, kNashPriceHalf);
        const BestResponse br = best_response_exact(cfg, 0);
        const double gap = std::abs(br.price - kNashPriceHalf);
        CHECK(gap < 4.0 / n);
        CHECK(gap <= prev_gap + 1e-12);
        prev_gap = gap;
    }
    const auto cfg = pair_config(80, 0.5, 0.2, kNashPriceHalf);
    const BestResponse grid = best_response_grid(cfg, 0, 10000, 1.0);
    CHECK(std::abs(grid.price - kNashPriceHalf) < 4.0 / 80);
}

TEST_CASE("open-boundary undercut captures the whole market") {
    const auto cfg = pair_config(80, 0.5, 0.3, 0.71, Boundary::open);
    const BestResponse br = best_response_grid(cfg, 0, 10000, 1.0);
    CHECK(br.price > 0.20);
    CHECK(br.price < 0.215);
    // the maximum sits on the X = p line: everyone buys from firm 0
    CHECK(br.profit_per_customer == doctest::Approx(br.price));

    const BestResponse exact = best_response_exact(cfg, 0);
    CHECK(exact.price == doctest::Approx(0.21).epsilon(0.01));
    CHECK(exact.profit_per_customer == doctest::Approx(exact.price));
}

TEST_CASE("degenerate flat sawtooth: co-located firms") {
    // both firms in the same spot: every cell's threshold equals the rival price
    auto cfg = pair_config(12, 0.0, 0.7, 0.7);
    cfg.firms[1].position = cfg.firms[0].position = Point(0.5, 0.5);

    // higher id must price strictly below, so it gives up epsilon
    const BestResponse br1 = best_response_exact(cfg, 1, 1e-9);
    CHECK(br1.price == doctest::Approx(0.7 - 1e-9));
    CHECK(br1.profit_per_customer == doctest::Approx(0.7).epsilon(1e-6));

    // lower id wins ties outright and can match the rival price exactly
    const BestResponse br0 = best_response_exact(cfg, 0, 1e-9);
    CHECK(br0.price == doctest::Approx(0.7));
    CHECK(br0.profit_per_customer == doctest::Approx(0.7));
}

TEST_CASE("exact and fine-grid responses agree") {
    const auto cfg = pair_config(80, 0.5, 0.2, kNashPriceHalf);
    const BestResponse exact = best_response_exact(cfg, 0);
    const BestResponse grid = best_response_grid(cfg, 0, 1000000, 1.0);
    CHECK(std::abs(exact.price - grid.price) <= 1.0 / 999999 + 1e-9);
    CHECK(exact.profit_per_customer >= grid.profit_per_customer - 1e-15);
}

TEST_CASE("exact dominates the grid and agrees within one step") {
    SplitMix64 rng(555);
    for (int it = 0; it < 100; ++it) {
        const MarketConfig cfg = random_small_config(rng);
        const int k = static_cast<int>(rng.next() % cfg.num_firms());
        const auto transport = transport_cost_matrices(cfg);
        const BestResponse exact = best_response_exact(cfg, transport, k);
        // cap the grid above every threshold so the grid can reach the optimum
        const double cap = std::max(1.0, exact.price * 1.5 + 0.1);
        const int points = 4000;
        const BestResponse grid = best_response_grid(cfg, transport, k, points, cap);
        CHECK(exact.profit_per_customer >= grid.profit_per_customer - 1e-15);
        CHECK(exact.profit_per_customer - grid.profit_per_customer <= cap / (points - 1) + 1e-12);
    }
}

TEST_CASE("best-response profit matches a full reassignment") {
    SplitMix64 rng(808);
    for (int it = 0; it < 50; ++it) {
        MarketConfig cfg = random_small_config(rng);
        const int k = static_cast<int>(rng.next() % cfg.num_firms());
        const auto transport = transport_cost_matrices(cfg);
        const BestResponse br = best_response_exact(cfg, transport, k);
        cfg.firms[k].price = br.price;
        const Assignment asg = assign_customers(cfg, transport);
        CHECK(asg.profits(k) == doctest::Approx(br.profit_per_customer).epsilon(1e-14));
    }
}

TEST_CASE("exact response scales with r and rival prices") {
    SplitMix64 rng(31);
    for (double c : {0.5, 3.0}) {
        for (int it = 0; it < 20; ++it) {
            MarketConfig cfg = random_small_config(rng);
            const int k = static_cast<int>(rng.next() % cfg.num_firms());
            const BestResponse base = best_response_exact(cfg, k);
            MarketConfig scaled = cfg;
            scaled.r *= c;
            for (auto& f : scaled.firms) f.price *= c;
            const BestResponse after = best_response_exact(scaled, k);
            CHECK(after.price == doctest::Approx(c * base.price).epsilon(1e-6));
            CHECK(after.profit_per_customer ==
                  doctest::Approx(c * base.profit_per_customer).epsilon(1e-6));
        }
    }
}

TEST_CASE("a cheaper rival never helps") {
    SplitMix64 rng(77);
    for (int it = 0; it < 60; ++it) {
        MarketConfig cfg = random_small_config(rng);
        const int k = static_cast<int>(rng.next() % cfg.num_firms());
        int rival = static_cast<int>(rng.next() % cfg.num_firms());
        if (rival == k) rival = (rival + 1) % cfg.num_firms();
        const BestResponse before = best_response_exact(cfg, k);
        MarketConfig cut = cfg;
        cut.firms[rival].price *= rng.next_unit();
        const BestResponse after = best_response_exact(cut, k);
        CHECK(after.profit_per_customer <= before.profit_per_customer + 1e-12);
    }
}

TEST_CASE("alternating dynamics is deterministic") {
    const auto cfg = pair_config(40, 0.3, 0.0, 0.0);
    AlternationParams params;
    params.steps = 30;
    params.burn_in = 10;
    const DynamicsTrace a = run_alternating(cfg, params);
    const DynamicsTrace b = run_alternating(cfg, params);
    REQUIRE(a.steps.size() == 30);
    for (size_t t = 0; t < a.steps.size(); ++t) {
        CHECK(a.steps[t].firm == b.steps[t].firm);
        CHECK((a.steps[t].prices.array() == b.steps[t].prices.array()).all());
        CHECK((a.steps[t].profits.array() == b.steps[t].profits.array()).all());
    }
}

TEST_CASE("rejects inconsistent step counts") {
    const auto cfg = pair_config(20, 0.3, 0.0, 0.0);
    AlternationParams params;
    params.steps = 100;
    params.burn_in = 100;
    CHECK_THROWS_AS(run_alternating(cfg, params), std::invalid_argument);
    params.steps = 100;
    params.burn_in = -1;
    CHECK_THROWS_AS(run_alternating(cfg, params), std::invalid_argument);
}

TEST_CASE("symmetric pair converges to the analytic profit") {
    const auto cfg = pair_config(80, 0.5, 0.0, 0.0);
    AlternationParams params;  // 120 steps, 80 burn-in, exact method
    const DynamicsTrace trace = run_alternating(cfg, params);
    for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(trace.tail_mean_profit(k) - kNashProfitHalf) / kNashProfitHalf < 0.15);
    }
    CHECK(trace.converged);  // torus cycling stays tiny
    // the firms are statistically interchangeable after the transient: tail
    // means agree and both wander in the same narrow band
    CHECK(std::abs(trace.tail_mean_price(0) - trace.tail_mean_price(1)) /
              trace.tail_mean_price(0) <
          0.02);
    double lo0 = 1e9, hi0 = -1e9, lo1 = 1e9, hi1 = -1e9;
    for (int t = trace.burn_in; t < static_cast<int>(trace.steps.size()); ++t) {
        lo0 = std::min(lo0, trace.steps[t].prices(0));
        hi0 = std::max(hi0, trace.steps[t].prices(0));
        lo1 = std::min(lo1, trace.steps[t].prices(1));
        hi1 = std::max(hi1, trace.steps[t].prices(1));
    }
    CHECK(lo0 < hi1);
    CHECK(lo1 < hi0);
    CHECK(hi0 - lo0 < 0.05);
}

TEST_CASE("open boundary at short distance keeps cycling") {
    auto cfg = pair_config(80, 0.2, 0.0, 0.0, Boundary::open);
    AlternationParams params;
    params.steps = 500;
    params.burn_in = 80;
    params.method = Method::grid;
    const DynamicsTrace trace = run_alternating(cfg, params);
    CHECK_FALSE(trace.converged);
    // collapses keep recurring: price range in the tail stays wide
    double lo = 1e9, hi = -1e9;
    for (int t = trace.burn_in; t < static_cast<int>(trace.steps.size()); ++t) {
        lo = std::min(lo, trace.steps[t].prices(0));
        hi = std::max(hi, trace.steps[t].prices(0));
    }
    CHECK(hi - lo > 0.05);
}

TEST_CASE("co-located firms grind prices down") {
    auto cfg = pair_config(20, 0.0, 0.0, 0.0);
    cfg.firms[1].position = cfg.firms[0].position = Point(0.5, 0.5);
    AlternationParams params;
    params.method = Method::grid;  // one grid step per undercut
    const DynamicsTrace trace = run_alternating(cfg, params);
    const auto& first = trace.steps.front();
    const auto& last = trace.steps.back();
    CHECK(last.prices(0) < first.prices(0));
    CHECK(last.prices(1) < first.prices(1));
    // every move by the higher id undercuts
    for (size_t t = 2; t < trace.steps.size(); t += 2) {
        CHECK(trace.steps[t].prices(1) <= trace.steps[t - 2].prices(1));
    }
}

TEST_CASE("tail profit variance") {
    DynamicsTrace trace;
    trace.burn_in = 1;
    for (double x : {0.5, 0.1, 0.3}) {
        TraceStep step;
        step.firm = 0;
        step.prices = Eigen::VectorXd::Constant(1, 0.2);
        step.profits = Eigen::VectorXd::Constant(1, x);
        trace.steps.push_back(step);
    }
    const Eigen::VectorXd var = tail_profit_variance(trace);
    CHECK(var(0) == doctest::Approx(0.02).epsilon(1e-12));

    DynamicsTrace flat;
    flat.burn_in = 0;
    for (int i = 0; i < 5; ++i) {
        TraceStep step;
        step.prices = Eigen::VectorXd::Constant(2, 0.4);
        step.profits = Eigen::VectorXd::Constant(2, 0.123);
        flat.steps.push_back(step);
    }
    CHECK(tail_profit_variance(flat).maxCoeff() == 0.0);

    DynamicsTrace tiny;
    tiny.burn_in = 2;
    tiny.steps = flat.steps;
    tiny.steps.resize(3);
    CHECK_THROWS_AS(tail_profit_variance(tiny), std::invalid_argument);
}
