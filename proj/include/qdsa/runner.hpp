// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

/// Experiment presets, trial orchestration, output files and the analyses
/// built on top of search logs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "qdsa/archive.hpp"
#include "qdsa/behavior.hpp"
#include "qdsa/io.hpp"
#include "qdsa/scenario.hpp"
#include "qdsa/search.hpp"
#include "qdsa/sim.hpp"

namespace qdsa {

enum class Preset { GoalDistanceRationality, GoalDistanceVariation, GoalDistanceVariation3, Obstacle };

inline std::string_view to_string(Preset p) {
    switch (p) {
    case Preset::GoalDistanceRationality: return "bc1_bc3";
    case Preset::GoalDistanceVariation: return "bc1_bc2";
    case Preset::GoalDistanceVariation3: return "bc1_bc2_3goals";
    case Preset::Obstacle: return "obstacle";
    }
    return "bc1_bc2";
}

inline Preset preset_from_string(std::string_view s) {
    for (Preset p : {Preset::GoalDistanceRationality, Preset::GoalDistanceVariation, Preset::GoalDistanceVariation3,
                     Preset::Obstacle})
        if (s == to_string(p))
            return p;
    throw std::invalid_argument("unknown preset: " + std::string(s));
}

inline Domain preset_domain(Preset p) { return p == Preset::Obstacle ? Domain::Obstacle : Domain::GoalPlacement; }

inline std::size_t preset_goals(Preset p) {
    switch (p) {
    case Preset::GoalDistanceVariation3: return 3;
    case Preset::Obstacle: return 1;
    default: return 2;
    }
}

inline std::size_t preset_default_budget(Preset p) { return p == Preset::Obstacle ? 20000 : 10000; }

inline BehaviorSpaceSpec preset_spec(Preset p) {
    using S = BehaviorSpaceSpec;
    switch (p) {
    case Preset::GoalDistanceRationality: return {{S::goal_distance(), S::rationality()}};
    case Preset::GoalDistanceVariation:
    case Preset::GoalDistanceVariation3: return {{S::goal_distance(), S::human_variation()}};
    case Preset::Obstacle: return {{S::horizontal_distance(), S::human_variation(), S::collision()}};
    }
    return {};
}

inline Bounds preset_bounds(Preset p, std::size_t waypoints = 5, const Layout& layout = {}) {
    return p == Preset::Obstacle ? Bounds::obstacle(waypoints, layout)
                                 : Bounds::goal_placement(preset_goals(p), waypoints, layout);
}

/// Simulates one scenario and computes the preset's behavior characteristics.
inline Evaluation evaluate_scenario(Preset preset, const ScenarioParams& sp, const SimConfig& cfg,
                                    const RationalityGrid& grid, EpisodeTrace* trace_out = nullptr) {
    EpisodeTrace trace = run_episode(sp, cfg);
    Evaluation e;
    e.termination = trace.outcome.termination;
    e.f = assess(trace, cfg);
    if (e.f) {
        const Environment env = generate_environment(sp.phi, sp.domain, cfg.layout);
        switch (preset) {
        case Preset::GoalDistanceRationality:
            e.bc = {*bc_goal_distance(env), bc_rationality(trace, env, grid, sp.theta.size())};
            break;
        case Preset::GoalDistanceVariation:
        case Preset::GoalDistanceVariation3:
            e.bc = {*bc_goal_distance(env), bc_human_variation(sp.theta)};
            break;
        case Preset::Obstacle:
            e.bc = {*bc_horizontal_distance(env), bc_human_variation(sp.theta), bc_collision(trace) ? 1.0 : 0.0};
            break;
        }
    }
    if (trace_out)
        *trace_out = std::move(trace);
    return e;
}

inline Evaluator make_evaluator(Preset preset, const SimConfig& cfg) {
    return [preset, cfg, grid = RationalityGrid::standard()](const ScenarioParams& sp) {
        return evaluate_scenario(preset, sp, cfg, grid);
    };
}

inline std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

struct ExperimentConfig {
    Preset preset{Preset::GoalDistanceVariation};
    Algorithm algorithm{Algorithm::MapElites};
    ControllerKind controller{ControllerKind::Hindsight};
    bool linear_term{true};
    /// 0 picks the preset default.
    std::size_t budget{0};
    std::size_t trials{5};
    std::uint64_t seed{0};
    std::size_t workers{1};
    std::string out_dir;
    bool export_traces{true};
    SearchOptions search;

    std::size_t effective_budget() const { return budget ? budget : preset_default_budget(preset); }

    SimConfig sim() const {
        SimConfig c = SimConfig::for_domain(preset_domain(preset));
        c.controller = controller;
        c.cost.linear_term_enabled = linear_term;
        return c;
    }
};

inline json to_json(const ExperimentConfig& c) {
    return json{{"preset", std::string(to_string(c.preset))},
                {"algorithm", std::string(to_string(c.algorithm))},
                {"controller", std::string(to_string(c.controller))},
                {"linear_term", c.linear_term},
                {"budget", c.effective_budget()},
                {"trials", c.trials},
                {"seed", c.seed},
                {"workers", c.workers}};
}

/// Applies the keys present in `j`; absent keys keep their current values.
inline void apply_json(ExperimentConfig& c, const json& j) {
    if (j.contains("preset"))
        c.preset = preset_from_string(j["preset"].get<std::string>());
    if (j.contains("algorithm"))
        c.algorithm = algorithm_from_string(j["algorithm"].get<std::string>());
    if (j.contains("controller"))
        c.controller = controller_from_string(j["controller"].get<std::string>());
    if (j.contains("linear_term"))
        c.linear_term = j["linear_term"].get<bool>();
    if (j.contains("budget"))
        c.budget = j["budget"].get<std::size_t>();
    if (j.contains("trials"))
        c.trials = j["trials"].get<std::size_t>();
    if (j.contains("seed"))
        c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers"))
        c.workers = j["workers"].get<std::size_t>();
    if (j.contains("out"))
        c.out_dir = j["out"].get<std::string>();
    if (j.contains("export_traces"))
        c.export_traces = j["export_traces"].get<bool>();
}

struct SliceStats {
    std::size_t occupied{0};
    double coverage{0.0};
    double mean_f{std::numeric_limits<double>::quiet_NaN()};
};

struct TrialSummary {
    std::uint64_t seed{0};
    double coverage{0.0};
    double qd_score{0.0};
    double mean_f{std::numeric_limits<double>::quiet_NaN()};
    std::size_t evaluations{0};
    std::size_t occupied{0};
    std::size_t timeout_elites{0};
    /// Obstacle preset only: index 0 no collision, 1 collision.
    std::vector<SliceStats> collision_slices;
    std::size_t low_variation_collision_elites{0};
    std::size_t clamp_events{0};
    std::size_t invalid_skipped{0};
    std::size_t evaluator_failures{0};
    std::size_t cma_restarts{0};
    double wall_seconds{0.0};
};

struct RunSummary {
    ExperimentConfig config;
    std::vector<TrialSummary> trials;
};

namespace detail {

inline double mean_or_nan(const std::vector<double>& v) {
    if (v.empty())
        return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) {
    if (v.size() < 2)
        return 0.0;
    const double m = mean_or_nan(v);
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

/// Occupancy and mean f per slice of the collision dimension (the last one).
inline std::vector<SliceStats> collision_slice_stats(const Archive& a) {
    const auto& dims = a.spec().dims;
    const std::size_t slices = dims.back().bins;
    const std::size_t per_slice = a.cell_count() / slices;
    std::vector<SliceStats> out(slices);
    std::vector<std::vector<double>> fs(slices);
    for (std::size_t flat : a.sorted_cells()) {
        const std::size_t s = unflatten_index(a.spec(), flat).back();
        ++out[s].occupied;
        fs[s].push_back(a.cell(flat)->f);
    }
    for (std::size_t s = 0; s < slices; ++s) {
        out[s].coverage = static_cast<double>(out[s].occupied) / static_cast<double>(per_slice);
        out[s].mean_f = detail::mean_or_nan(fs[s]);
    }
    return out;
}

/// Collision elites whose human-variation BC is below `threshold`.
inline std::size_t low_variation_collisions(const Archive& a, double threshold = 0.02) {
    std::size_t n = 0;
    for (const Elite& e : a.elites())
        if (e.bc.size() == 3 && e.bc[2] >= 0.5 && e.bc[1] < threshold)
            ++n;
    return n;
}

inline TrialSummary summarize_trial(const ExperimentConfig& cfg, const SearchResult& r, std::uint64_t seed,
                                    double wall_seconds) {
    TrialSummary t;
    t.seed = seed;
    t.coverage = r.archive.coverage();
    t.qd_score = r.archive.qd_score();
    std::vector<double> fs;
    const double horizon = cfg.sim().horizon;
    for (const Elite& e : r.archive.elites()) {
        fs.push_back(e.f);
        if (e.f >= horizon)
            ++t.timeout_elites;
    }
    t.mean_f = detail::mean_or_nan(fs);
    t.evaluations = r.log.records.size();
    t.occupied = r.archive.size();
    if (cfg.preset == Preset::Obstacle) {
        t.collision_slices = collision_slice_stats(r.archive);
        t.low_variation_collision_elites = low_variation_collisions(r.archive);
    }
    t.clamp_events = r.archive.clamp_events();
    t.invalid_skipped = r.log.invalid_skipped;
    t.evaluator_failures = r.log.evaluator_failures;
    t.cma_restarts = r.log.cma_restarts;
    t.wall_seconds = wall_seconds;
    return t;
}

inline json to_json(const TrialSummary& t) {
    json j{{"seed", t.seed},
           {"coverage", t.coverage},
           {"qd_score", t.qd_score},
           {"mean_f", detail::number_or_null(t.mean_f)},
           {"evaluations", t.evaluations},
           {"occupied_cells", t.occupied},
           {"timeout_elites", t.timeout_elites},
           {"clamp_events", t.clamp_events},
           {"invalid_skipped", t.invalid_skipped},
           {"evaluator_failures", t.evaluator_failures},
           {"cma_restarts", t.cma_restarts},
           {"wall_seconds", t.wall_seconds}};
    if (!t.collision_slices.empty()) {
        json slices = json::array();
        for (std::size_t s = 0; s < t.collision_slices.size(); ++s)
            slices.push_back({{"collision", s == 1},
                              {"occupied_cells", t.collision_slices[s].occupied},
                              {"coverage", t.collision_slices[s].coverage},
                              {"mean_f", detail::number_or_null(t.collision_slices[s].mean_f)}});
        j["collision_slices"] = slices;
        j["low_variation_collision_elites"] = t.low_variation_collision_elites;
    }
    return j;
}

inline json to_json(const RunSummary& s) {
    json trials = json::array();
    std::vector<double> cov, qd;
    for (const auto& t : s.trials) {
        trials.push_back(to_json(t));
        cov.push_back(t.coverage);
        qd.push_back(t.qd_score);
    }
    return json{{"config", to_json(s.config)},
                {"trials", trials},
                {"coverage_mean", detail::number_or_null(detail::mean_or_nan(cov))},
                {"coverage_std", detail::stddev(cov)},
                {"qd_score_mean", detail::number_or_null(detail::mean_or_nan(qd))},
                {"qd_score_std", detail::stddev(qd)}};
}

inline SearchResult run_trial(const ExperimentConfig& cfg, std::uint64_t seed) {
    SearchOptions opt = cfg.search;
    opt.workers = std::max<std::size_t>(1, cfg.workers);
    return run_search(cfg.algorithm, make_evaluator(cfg.preset, cfg.sim()), preset_spec(cfg.preset),
                      preset_bounds(cfg.preset), preset_domain(cfg.preset), cfg.effective_budget(), seed, opt);
}

/// Re-simulates the timeout and collision elites plus the ten highest-f
/// elites and writes one JSON file per elite.
inline std::size_t export_elite_traces(const ExperimentConfig& cfg, const Archive& a,
                                       const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const SimConfig sim = cfg.sim();
    const auto grid = RationalityGrid::standard();
    std::vector<std::size_t> cells = a.sorted_cells();
    std::vector<std::size_t> by_f(cells);
    std::stable_sort(by_f.begin(), by_f.end(),
                     [&](std::size_t l, std::size_t r) { return a.cell(l)->f > a.cell(r)->f; });
    by_f.resize(std::min<std::size_t>(10, by_f.size()));
    std::size_t written = 0;
    for (std::size_t flat : cells) {
        const Elite& e = *a.cell(flat);
        EpisodeTrace trace;
        evaluate_scenario(cfg.preset, e.scenario, sim, grid, &trace);
        const auto term = trace.outcome.termination;
        const bool top = std::find(by_f.begin(), by_f.end(), flat) != by_f.end();
        if (term != Termination::Timeout && term != Termination::Collision && !top)
            continue;
        json j{{"cell", unflatten_index(a.spec(), flat)},
               {"bc", e.bc},
               {"f", e.f},
               {"eval_index", e.eval_index},
               {"scenario", to_json(e.scenario)},
               {"preset", std::string(to_string(cfg.preset))},
               {"controller", std::string(to_string(cfg.controller))},
               {"linear_term", cfg.linear_term},
               {"trace", trace_to_json(trace)}};
        write_text_file((dir / ("elite_" + std::to_string(flat) + ".json")).string(), j.dump());
        ++written;
    }
    return written;
}

/// Runs every trial, writing per-trial files under out_dir/trial_<t>/ and
/// summary.json at the top. An empty out_dir skips all file output.
inline RunSummary run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    if (cfg.trials == 0)
        throw std::invalid_argument("trials must be at least 1");
    const bool write = !cfg.out_dir.empty();
    const fs::path root(cfg.out_dir);
    if (write) {
        std::error_code ec;
        fs::create_directories(root, ec);
        if (ec || !fs::is_directory(root))
            throw std::runtime_error("cannot create output directory " + cfg.out_dir);
        const fs::path probe = root / ".write_probe";
        write_text_file(probe.string(), "");
        fs::remove(probe);
    }
    RunSummary summary{cfg, {}};
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const std::uint64_t seed = cfg.seed + t;
        const auto start = std::chrono::steady_clock::now();
        SearchResult r = run_trial(cfg, seed);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        summary.trials.push_back(summarize_trial(cfg, r, seed, secs));
        if (write) {
            const fs::path dir = root / ("trial_" + std::to_string(t));
            fs::create_directories(dir);
            write_text_file((dir / "archive.csv").string(), archive_csv(r.archive));
            write_text_file((dir / "heatmap.csv").string(), heatmap_csv(r.archive));
            write_text_file((dir / "qdscore_timeseries.csv").string(), qdscore_csv(r.log));
            if (cfg.export_traces)
                export_elite_traces(cfg, r.archive, dir / "elites");
        }
    }
    if (write)
        write_text_file((root / "summary.json").string(), to_json(summary).dump(2) + "\n");
    return summary;
}

/// Visit count of every cell over all logged evaluations, elites or not.
inline std::vector<std::size_t> distortion_histogram(const SearchLog& log, const BehaviorSpaceSpec& spec) {
    std::vector<std::size_t> counts(spec.cell_count(), 0);
    for (const auto& rec : log.records)
        if (auto c = cell_index(spec, rec.bc))
            ++counts[flat_index(spec, c->index)];
    return counts;
}

/// Share of the total count held by the `fraction` most-visited cells of
/// the whole grid.
inline double top_cells_mass(const std::vector<std::size_t>& counts, double fraction) {
    std::vector<std::size_t> sorted(counts);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(sorted.size())));
    const double total = static_cast<double>(std::accumulate(sorted.begin(), sorted.end(), std::size_t{0}));
    if (total == 0.0)
        return 0.0;
    const auto top = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), std::size_t{0});
    return static_cast<double>(top) / total;
}

inline std::size_t visited_cells(const std::vector<std::size_t>& counts) {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

struct ControllerReport {
    ControllerKind controller{ControllerKind::Hindsight};
    TrialSummary trial;
};

struct ComparisonReport {
    std::vector<ControllerReport> runs;
};

inline json to_json(const ComparisonReport& r) {
    json runs = json::array();
    for (const auto& c : r.runs) {
        json j = to_json(c.trial);
        j["controller"] = std::string(to_string(c.controller));
        runs.push_back(j);
    }
    return json{{"runs", runs}};
}

/// One MAP-Elites run per controller on the obstacle preset. Each run's files
/// land in out_dir/<controller>/ when out_dir is set.
inline ComparisonReport compare_controllers(ExperimentConfig base) {
    base.preset = Preset::Obstacle;
    base.algorithm = Algorithm::MapElites;
    base.trials = 1;
    ComparisonReport report;
    const std::string root = base.out_dir;
    for (ControllerKind c : {ControllerKind::Blend, ControllerKind::Hindsight}) {
        ExperimentConfig cfg = base;
        cfg.controller = c;
        if (!root.empty())
            cfg.out_dir = (std::filesystem::path(root) / std::string(to_string(c))).string();
        RunSummary s = run_experiment(cfg);
        report.runs.push_back({c, s.trials.front()});
    }
    if (!root.empty())
        write_text_file((std::filesystem::path(root) / "comparison.json").string(), to_json(report).dump(2) + "\n");
    return report;
}

}  // namespace qdsa
