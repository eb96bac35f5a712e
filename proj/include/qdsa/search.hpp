// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

/// Scenario search: MAP-Elites, restarting CMA-ES and uniform random search,
/// all feeding the same (pseudo-)archive and evaluation log.

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qdsa/archive.hpp"
#include "qdsa/cma_es.hpp"
#include "qdsa/resample.hpp"
#include "qdsa/scenario.hpp"
#include "qdsa/sim.hpp"
#include "qdsa/worker_pool.hpp"

namespace qdsa {

enum class Algorithm { MapElites, CmaEs, Random };

inline std::string_view to_string(Algorithm a) {
    switch (a) {
    case Algorithm::MapElites: return "map_elites";
    case Algorithm::CmaEs: return "cma_es";
    case Algorithm::Random: return "random";
    }
    return "random";
}

inline Algorithm algorithm_from_string(std::string_view s) {
    if (s == "map_elites" || s == "map-elites" || s == "me")
        return Algorithm::MapElites;
    if (s == "cma_es" || s == "cma-es" || s == "cma")
        return Algorithm::CmaEs;
    if (s == "random")
        return Algorithm::Random;
    throw std::invalid_argument("unknown algorithm: " + std::string(s));
}

struct MapElitesConfig {
    std::size_t n_init{100};
    double sigma_phi{0.01};
    double sigma_theta{0.005};
};

/// What an evaluator reports for one scenario. An empty `f` marks an invalid
/// scenario, which is skipped without consuming budget.
struct Evaluation {
    std::optional<double> f;
    BcVector bc;
    Termination termination{Termination::Invalid};
};

using Evaluator = std::function<Evaluation(const ScenarioParams&)>;

struct EvalRecord {
    std::size_t eval_index{0};
    ScenarioParams scenario;
    double f{0.0};
    BcVector bc;
    Termination termination{Termination::Timeout};
};

struct QdSample {
    std::size_t eval_index{0};
    double qd_score{0.0};
    double coverage{0.0};
};

struct SearchLog {
    std::vector<EvalRecord> records;
    std::vector<QdSample> qd_timeseries;
    std::size_t invalid_skipped{0};
    std::size_t evaluator_failures{0};
    std::size_t resample_clamps{0};
    std::size_t cma_restarts{0};
};

struct SearchOptions {
    MapElitesConfig map_elites;
    CmaConfig cma;
    std::size_t workers{1};
    std::size_t sample_every{100};
    std::size_t max_resample_tries{100};
};

struct SearchResult {
    Archive archive;
    SearchLog log;
};

/// Uniform sample while the archive is empty, otherwise a uniformly chosen
/// elite perturbed by isotropic Gaussian noise per parameter block.
inline Resampled<ScenarioParams> map_elites_propose(const Archive& archive, const MapElitesConfig& cfg,
                                                    Rng& rng, const Bounds& bounds, Domain domain,
                                                    std::size_t max_tries = 100) {
    if (archive.empty())
        return {sample_random_scenario(bounds, domain, rng), false, 1};
    const auto& occ = archive.occupied();
    const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, occ.size() - 1)(rng);
    const ScenarioParams& parent = archive.cell(occ[pick])->scenario;
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&] {
        ScenarioParams p = parent;
        for (double& v : p.phi)
            v += cfg.sigma_phi * normal(rng);
        for (double& v : p.theta)
            v += cfg.sigma_theta * normal(rng);
        return p;
    };
    return resample_into_bounds(draw, bounds, max_tries);
}

/// CMA-ES initial covariance diagonal: 1.0 on object coordinates, 0.5 on
/// disturbances.
inline Eigen::VectorXd cma_initial_diag(const Bounds& bounds) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(bounds.dimension()));
    for (std::size_t i = 0; i < bounds.dimension(); ++i)
        d[static_cast<Eigen::Index>(i)] = i < bounds.phi.size() ? 1.0 : 0.5;
    return d;
}

namespace detail {

struct TaskResult {
    ScenarioParams scenario;
    std::optional<Evaluation> eval;  // empty when the evaluator failed twice
    std::size_t failures{0};
};

inline TaskResult evaluate_with_retry(const Evaluator& evaluator, ScenarioParams sp) {
    TaskResult r{std::move(sp), std::nullopt, 0};
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            r.eval = evaluator(r.scenario);
            return r;
        } catch (const std::exception&) {
            ++r.failures;
        }
    }
    return r;
}

class SearchRun {
public:
    SearchRun(const BehaviorSpaceSpec& spec, std::size_t budget, const SearchOptions& opt)
        : archive_(spec), budget_(budget), opt_(opt) {
        if (budget == 0)
            throw std::invalid_argument("budget must be at least 1");
    }

    bool done() const { return log_.records.size() >= budget_; }
    std::size_t completed() const { return log_.records.size(); }
    std::size_t remaining() const { return budget_ - log_.records.size(); }
    const Archive& archive() const { return archive_; }
    SearchLog& log() { return log_; }

    /// Applies one finished task. Returns the assessment if it was a valid
    /// evaluation that consumed budget.
    std::optional<double> absorb(TaskResult&& r) {
        log_.evaluator_failures += r.failures;
        if (!r.eval) {
            guard_failures();
            return std::nullopt;
        }
        if (!r.eval->f) {
            ++log_.invalid_skipped;
            guard_failures();
            return std::nullopt;
        }
        EvalRecord rec;
        rec.eval_index = log_.records.size() + 1;
        rec.scenario = std::move(r.scenario);
        rec.f = *r.eval->f;
        rec.bc = r.eval->bc;
        rec.termination = r.eval->termination;
        archive_.try_insert(Elite{rec.scenario, rec.f, rec.bc, rec.eval_index});
        log_.records.push_back(std::move(rec));
        const std::size_t n = log_.records.size();
        if (n % opt_.sample_every == 0 || n == budget_)
            log_.qd_timeseries.push_back({n, archive_.qd_score(), archive_.coverage()});
        return log_.records.back().f;
    }

    SearchResult finish() && { return SearchResult{std::move(archive_), std::move(log_)}; }

private:
    void guard_failures() {
        if (log_.invalid_skipped + log_.evaluator_failures > 100 * budget_ + 1000)
            throw std::runtime_error("too many invalid or failed evaluations");
    }

    Archive archive_;
    SearchLog log_;
    std::size_t budget_;
    SearchOptions opt_;
};

/// Propose/evaluate/insert loop for the archive-driven algorithms. With one
/// worker everything runs inline and the result is deterministic; with more,
/// proposals are drawn from the archive as it stands while other
/// evaluations are in flight, and results are applied in completion order.
template <typename Propose>
void run_async(SearchRun& run, const Evaluator& evaluator, std::size_t workers, Propose&& propose) {
    if (workers <= 1) {
        while (!run.done())
            run.absorb(evaluate_with_retry(evaluator, propose(run.archive(), run.completed())));
        return;
    }
    WorkerPool<TaskResult> pool(workers);
    std::size_t ticket = 0;
    auto in_flight = [&] { return pool.pending(); };
    auto submit = [&] {
        ScenarioParams sp = propose(run.archive(), run.completed() + in_flight());
        pool.submit(ticket++, [&evaluator, sp = std::move(sp)]() mutable {
            return evaluate_with_retry(evaluator, std::move(sp));
        });
    };
    while (in_flight() < workers && in_flight() < run.remaining())
        submit();
    while (auto r = pool.wait_any()) {
        run.absorb(std::move(r->second));
        while (!run.done() && in_flight() < workers && in_flight() < run.remaining())
            submit();
    }
}

}  // namespace detail

/// Drives the chosen algorithm until `budget` valid evaluations are logged.
inline SearchResult run_search(Algorithm algo, const Evaluator& evaluator, const BehaviorSpaceSpec& spec,
                               const Bounds& bounds, Domain domain, std::size_t budget, std::uint64_t seed,
                               const SearchOptions& opt = {}) {
    detail::SearchRun run(spec, budget, opt);
    Rng rng(seed);
    const std::size_t workers = std::max<std::size_t>(1, opt.workers);

    if (algo == Algorithm::Random) {
        detail::run_async(run, evaluator, workers, [&](const Archive&, std::size_t) {
            return sample_random_scenario(bounds, domain, rng);
        });
        return std::move(run).finish();
    }

    if (algo == Algorithm::MapElites) {
        detail::run_async(run, evaluator, workers, [&](const Archive& a, std::size_t issued) {
            if (issued < opt.map_elites.n_init)
                return sample_random_scenario(bounds, domain, rng);
            auto r = map_elites_propose(a, opt.map_elites, rng, bounds, domain, opt.max_resample_tries);
            run.log().resample_clamps += r.clamped ? 1 : 0;
            return std::move(r.value);
        });
        return std::move(run).finish();
    }

    // CMA-ES: one generation at a time, synchronised before each update.
    const auto box = bounds.flatten();
    const std::size_t n_phi = bounds.phi.size();
    Eigen::VectorXd mean(static_cast<Eigen::Index>(box.size()));
    for (std::size_t i = 0; i < box.size(); ++i)
        mean[static_cast<Eigen::Index>(i)] = std::uniform_real_distribution<double>(box[i].low, box[i].high)(rng);
    CmaState state = make_cma_state(mean, cma_initial_diag(bounds), opt.cma, opt.cma.initial_lambda);
    std::optional<WorkerPool<detail::TaskResult>> pool;
    if (workers > 1)
        pool.emplace(workers);

    while (!run.done()) {
        auto candidates = cma_sample(state, rng, box, opt.max_resample_tries);
        const std::size_t take = std::min(candidates.size(), run.remaining());
        std::vector<double> f(candidates.size(), -std::numeric_limits<double>::infinity());
        std::vector<std::optional<detail::TaskResult>> results(take);
        // Invalid or failed candidates are redrawn until valid.
        std::vector<std::size_t> todo(take);
        std::iota(todo.begin(), todo.end(), 0);
        while (!todo.empty()) {
            std::vector<detail::TaskResult> batch(todo.size());
            if (pool) {
                for (std::size_t j = 0; j < todo.size(); ++j) {
                    auto sp = ScenarioParams::unflatten(candidates[todo[j]].x, n_phi, domain);
                    pool->submit(j, [&evaluator, sp = std::move(sp)]() mutable {
                        return detail::evaluate_with_retry(evaluator, std::move(sp));
                    });
                }
                while (auto r = pool->wait_any())
                    batch[r->first] = std::move(r->second);
            } else {
                for (std::size_t j = 0; j < todo.size(); ++j)
                    batch[j] = detail::evaluate_with_retry(
                        evaluator, ScenarioParams::unflatten(candidates[todo[j]].x, n_phi, domain));
            }
            std::vector<std::size_t> retry;
            for (std::size_t j = 0; j < todo.size(); ++j) {
                if (batch[j].eval && batch[j].eval->f) {
                    results[todo[j]] = std::move(batch[j]);
                    continue;
                }
                run.log().evaluator_failures += batch[j].failures;
                if (batch[j].eval)
                    ++run.log().invalid_skipped;
                if (run.log().invalid_skipped + run.log().evaluator_failures > 100 * budget + 1000)
                    throw std::runtime_error("too many invalid or failed evaluations");
                auto redraw = cma_sample(CmaState{state}, rng, box, opt.max_resample_tries);
                candidates[todo[j]] = std::move(redraw.front());
                retry.push_back(todo[j]);
            }
            todo = std::move(retry);
        }
        for (std::size_t j = 0; j < take; ++j) {
            if (candidates[j].clamped)
                ++run.log().resample_clamps;
            if (auto fj = run.absorb(std::move(*results[j])))
                f[j] = *fj;
        }
        if (take < candidates.size())
            break;
        state = cma_update(std::move(state), candidates, f);
        if (cma_restart_check(state, opt.cma) == RestartDecision::Restart) {
            state = cma_restart(state, opt.cma, rng, box);
            ++run.log().cma_restarts;
        }
    }
    return std::move(run).finish();
}

}  // namespace qdsa
