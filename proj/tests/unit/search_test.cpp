#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <random>

#include "oracles/cma_reference.hpp"
#include "qdsa/search.hpp"

using namespace qdsa;
using Catch::Approx;

namespace {

BehaviorSpaceSpec bc1_bc2() {
    return {{BehaviorSpaceSpec::goal_distance(), BehaviorSpaceSpec::human_variation()}};
}

// Cheap stand-in for the simulator: BCs from the scenario geometry, f from a
// smooth bump.
Evaluation synthetic(const ScenarioParams& sp) {
    const double d = std::hypot(sp.phi[0] - sp.phi[2], sp.phi[1] - sp.phi[3]);
    if (d == 0.0)
        return {};
    double v = 0.0;
    for (double t : sp.theta)
        v += t * t;
    return {10.0 * std::exp(-20.0 * d) + 100.0 * v, {d, std::sqrt(v)}, Termination::Timeout};
}

}  // namespace

TEST_CASE("resample_into_bounds") {
    const std::vector<Interval> box{{0.0, 1.0}, {-1.0, 1.0}};
    std::mt19937_64 rng(30);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const auto r = resample_into_bounds([&] { return std::vector<double>{n(rng), n(rng)}; }, box);
        CHECK(within(r.value, box));
        CHECK(r.tries >= 1);
    }
    const auto out = resample_into_bounds([] { return std::vector<double>{5.0, -3.0}; }, box, 100);
    CHECK(out.clamped);
    CHECK(out.tries == 100);
    CHECK(out.value == std::vector<double>{1.0, -1.0});
}

TEST_CASE("map_elites_propose") {
    const auto bounds = Bounds::goal_placement(2);
    MapElitesConfig cfg;
    Rng rng(31);
    Archive empty(bc1_bc2());
    CHECK(bounds.contains(map_elites_propose(empty, cfg, rng, bounds, Domain::GoalPlacement).value));

    Archive a(bc1_bc2());
    const ScenarioParams parent{{0.1, 0.1, 0.2, 0.15}, {0.0, 0.01, -0.01, 0.02, 0.0}, Domain::GoalPlacement};
    a.try_insert({parent, 1.0, {0.1, 0.05}, 1});

    MapElitesConfig zero{100, 0.0, 0.0};
    CHECK(map_elites_propose(a, zero, rng, bounds, Domain::GoalPlacement).value == parent);

    const int n = 20000;
    double s_phi = 0.0, s_theta = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto c = map_elites_propose(a, cfg, rng, bounds, Domain::GoalPlacement).value;
        REQUIRE(bounds.contains(c));
        s_phi += std::pow(c.phi[0] - parent.phi[0], 2);
        s_theta += std::pow(c.theta[2] - parent.theta[2], 2);
    }
    CHECK(std::sqrt(s_phi / n) == Approx(0.01).epsilon(0.03));
    CHECK(std::sqrt(s_theta / n) == Approx(0.005).epsilon(0.03));
}

TEST_CASE("cma_sample") {
    const auto bounds = Bounds::goal_placement(2);
    const auto box = bounds.flatten();
    const auto diag = cma_initial_diag(bounds);
    REQUIRE(diag.size() == 9);
    CHECK(diag[0] == 1.0);
    CHECK(diag[3] == 1.0);
    CHECK(diag[4] == 0.5);

    Eigen::VectorXd mean(9);
    mean << 0.12, 0.1, 0.12, 0.1, 0, 0, 0, 0, 0;
    CmaConfig cfg;
    cfg.initial_sigma = 0.0;
    Rng rng(32);
    auto s = make_cma_state(mean, diag, cfg, 12);
    for (const auto& c : cma_sample(s, rng, box))
        CHECK(Eigen::Map<const Eigen::VectorXd>(c.x.data(), 9).isApprox(mean));

    // Empirical covariance of unconstrained draws.
    std::vector<Interval> wide(2, Interval{-100.0, 100.0});
    Eigen::VectorXd m2(2);
    m2 << 0.0, 0.0;
    cfg.initial_sigma = 1.0;
    auto s2 = make_cma_state(m2, Eigen::Vector2d(1.0, 1.0), cfg, 4);
    s2.cov << 2.0, 0.6, 0.6, 1.0;
    refresh_eigensystem(s2);
    Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
    const int draws = 20000;
    for (int i = 0; i < draws / 4; ++i)
        for (const auto& c : cma_sample(s2, rng, wide))
            acc += c.y * c.y.transpose();
    acc /= draws;
    CHECK(acc(0, 0) == Approx(2.0).epsilon(0.05));
    CHECK(acc(0, 1) == Approx(0.6).margin(0.05));
    CHECK(acc(1, 1) == Approx(1.0).epsilon(0.05));
}

TEST_CASE("cma_update matches the longhand first generation") {
    std::mt19937_64 rng(33);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t dim = 3, lambda = 4 + rep % 5;
        Eigen::VectorXd mean(dim);
        mean << n(rng), n(rng), n(rng);
        CmaConfig cfg;
        cfg.initial_sigma = 0.3;
        auto s = make_cma_state(mean, Eigen::VectorXd::Ones(dim), cfg, lambda);
        std::vector<CmaCandidate> cands;
        std::vector<std::vector<double>> ys;
        std::vector<double> f;
        for (std::size_t k = 0; k < lambda; ++k) {
            CmaCandidate c;
            c.y = Eigen::VectorXd(dim);
            for (std::size_t d = 0; d < dim; ++d)
                c.y[d] = n(rng);
            ys.emplace_back(c.y.data(), c.y.data() + dim);
            cands.push_back(c);
            f.push_back(n(rng));
        }
        const auto got = cma_update(s, cands, f);
        const auto want = oracle::cma_first_step({mean.data(), mean.data() + dim}, 0.3, ys, f);
        CHECK(got.sigma == Approx(want.sigma).epsilon(1e-12));
        for (std::size_t a = 0; a < dim; ++a) {
            CHECK(got.mean[a] == Approx(want.mean[a]).margin(1e-12));
            CHECK(got.p_sigma[a] == Approx(want.p_sigma[a]).margin(1e-12));
            CHECK(got.p_c[a] == Approx(want.p_c[a]).margin(1e-12));
            for (std::size_t b = 0; b < dim; ++b)
                CHECK(got.cov(a, b) == Approx(want.cov[a][b]).margin(1e-12));
        }
    }
}

TEST_CASE("cma_update with mu = 1 moves the mean to the best candidate") {
    CmaConfig cfg;
    cfg.mu = 1;
    cfg.initial_sigma = 0.5;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    auto s = make_cma_state(mean, Eigen::VectorXd::Ones(2), cfg, 4);
    std::vector<CmaCandidate> c(4);
    for (int k = 0; k < 4; ++k)
        c[k].y = Eigen::Vector2d(k, -k);
    const auto next = cma_update(s, c, {1.0, 3.0, 2.0, 0.0});
    CHECK(next.mean[0] == Approx(0.5));
    CHECK(next.mean[1] == Approx(-0.5));
}

TEST_CASE("restart check") {
    CmaConfig cfg;
    auto s = make_cma_state(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2), cfg, 12);
    CHECK(cma_restart_check(s, cfg) == RestartDecision::Continue);
    s.stagnant_generations = 50;
    CHECK(cma_restart_check(s, cfg) == RestartDecision::Restart);
    s.stagnant_generations = 0;
    s.sigma = 1e-13;
    CHECK(cma_restart_check(s, cfg) == RestartDecision::Restart);
    Rng rng(34);
    const std::vector<Interval> box(2, Interval{0.0, 1.0});
    const auto r = cma_restart(s, cfg, rng, box);
    CHECK(r.lambda == 24);
    CHECK(r.restarts == 1);
    CHECK(r.sigma == cfg.initial_sigma);
    CHECK(r.mean[0] >= 0.0);
    CHECK(r.mean[0] <= 1.0);
}

TEST_CASE("run_search basics") {
    const auto spec = bc1_bc2();
    const auto bounds = Bounds::goal_placement(2);
    for (auto algo : {Algorithm::MapElites, Algorithm::CmaEs, Algorithm::Random}) {
        INFO(to_string(algo));
        const auto one = run_search(algo, synthetic, spec, bounds, Domain::GoalPlacement, 1, 1);
        CHECK(one.log.records.size() == 1);
        CHECK(one.archive.size() == 1);

        const auto a = run_search(algo, synthetic, spec, bounds, Domain::GoalPlacement, 1000, 5);
        const auto b = run_search(algo, synthetic, spec, bounds, Domain::GoalPlacement, 1000, 5);
        REQUIRE(a.log.records.size() == 1000);
        CHECK(a.archive.sorted_cells() == b.archive.sorted_cells());
        CHECK(a.archive.qd_score() == b.archive.qd_score());
        for (std::size_t i = 0; i < 1000; ++i) {
            CHECK(bounds.contains(a.log.records[i].scenario));
            CHECK(a.log.records[i].eval_index == i + 1);
        }
        CHECK(a.log.qd_timeseries.size() == 10);
        for (std::size_t i = 1; i < a.log.qd_timeseries.size(); ++i)
            CHECK(a.log.qd_timeseries[i].coverage >= a.log.qd_timeseries[i - 1].coverage);
    }
    CHECK_THROWS(run_search(Algorithm::Random, synthetic, spec, bounds, Domain::GoalPlacement, 0, 1));
}

TEST_CASE("MAP-Elites with n_init equal to the budget is random search") {
    const auto spec = bc1_bc2();
    const auto bounds = Bounds::goal_placement(2);
    SearchOptions opt;
    opt.map_elites.n_init = 300;
    const auto me = run_search(Algorithm::MapElites, synthetic, spec, bounds, Domain::GoalPlacement, 300, 9, opt);
    const auto rnd = run_search(Algorithm::Random, synthetic, spec, bounds, Domain::GoalPlacement, 300, 9, opt);
    for (std::size_t i = 0; i < 300; ++i)
        CHECK(me.log.records[i].scenario == rnd.log.records[i].scenario);
}

TEST_CASE("CMA-ES covariance stays symmetric positive definite") {
    const auto bounds = Bounds::goal_placement(2);
    CmaConfig cfg;
    Rng rng(35);
    Eigen::VectorXd mean(9);
    mean << 0.12, 0.1, 0.12, 0.1, 0, 0, 0, 0, 0;
    auto s = make_cma_state(mean, cma_initial_diag(bounds), cfg, 12);
    const auto box = bounds.flatten();
    for (int g = 0; g < 200; ++g) {
        auto c = cma_sample(s, rng, box);
        std::vector<double> f;
        for (const auto& x : c)
            f.push_back(synthetic(ScenarioParams::unflatten(x.x, 4, Domain::GoalPlacement)).f.value_or(0.0));
        s = cma_update(std::move(s), c, f);
        CHECK((s.cov - s.cov.transpose()).norm() < 1e-12);
        CHECK(s.D.minCoeff() > 0.0);
    }
}

TEST_CASE("evaluator failures are retried once, then skipped") {
    const auto spec = bc1_bc2();
    const auto bounds = Bounds::goal_placement(2);
    std::atomic<int> calls{0};
    // Every third call throws, so every retry succeeds.
    Evaluator flaky = [&](const ScenarioParams& sp) {
        if (++calls % 3 == 0)
            throw std::runtime_error("transient");
        return synthetic(sp);
    };
    const auto r = run_search(Algorithm::Random, flaky, spec, bounds, Domain::GoalPlacement, 200, 3);
    CHECK(r.log.records.size() == 200);
    CHECK(r.log.evaluator_failures > 0);

    Evaluator broken = [](const ScenarioParams&) -> Evaluation { throw std::runtime_error("down"); };
    CHECK_THROWS(run_search(Algorithm::Random, broken, spec, bounds, Domain::GoalPlacement, 2, 3));
}

TEST_CASE("invalid scenarios do not consume budget") {
    const auto spec = bc1_bc2();
    const auto bounds = Bounds::goal_placement(2);
    for (auto algo : {Algorithm::MapElites, Algorithm::CmaEs, Algorithm::Random}) {
        std::atomic<int> calls{0};
        Evaluator sometimes = [&](const ScenarioParams& sp) {
            return ++calls % 4 == 0 ? Evaluation{} : synthetic(sp);
        };
        const auto r = run_search(algo, sometimes, spec, bounds, Domain::GoalPlacement, 400, 4);
        CHECK(r.log.records.size() == 400);
        CHECK(r.log.invalid_skipped >= 100);
    }
}

TEST_CASE("parallel search spends exactly the budget") {
    const auto spec = bc1_bc2();
    const auto bounds = Bounds::goal_placement(2);
    SearchOptions opt;
    opt.workers = 4;
    for (auto algo : {Algorithm::MapElites, Algorithm::CmaEs, Algorithm::Random}) {
        const auto r = run_search(algo, synthetic, spec, bounds, Domain::GoalPlacement, 777, 6, opt);
        CHECK(r.log.records.size() == 777);
        CHECK(r.log.qd_timeseries.back().eval_index == 777);
    }
}

TEST_CASE("algorithm names") {
    CHECK(algorithm_from_string("map_elites") == Algorithm::MapElites);
    CHECK(to_string(Algorithm::CmaEs) == "cma_es");
    CHECK_THROWS(algorithm_from_string("nsga2"));
}
