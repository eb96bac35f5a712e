// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: run, replay, heatmap, compare.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "qdsa/io.hpp"
#include "qdsa/runner.hpp"

namespace {

std::string default_out_root() {
    if (const char* env = std::getenv("QDSA_OUT_ROOT"); env && *env)
        return env;
    return "runs";
}

struct RunFlags {
    std::string config;
    std::string preset;
    std::string algo;
    std::string controller;
    std::string linear_term;
    std::size_t budget{0};
    std::size_t trials{0};
    long long seed{-1};
    std::size_t workers{0};
    std::string out;
    bool no_traces{false};
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config, "JSON config file; flags override its keys");
    cmd->add_option("--preset", f.preset, "bc1_bc3 | bc1_bc2 | bc1_bc2_3goals | obstacle");
    cmd->add_option("--algo", f.algo, "map_elites | cma_es | random");
    cmd->add_option("--controller", f.controller, "hindsight | blend");
    cmd->add_option("--linear-term", f.linear_term, "on | off")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--budget", f.budget, "valid evaluations per trial");
    cmd->add_option("--trials", f.trials, "number of trials");
    cmd->add_option("--seed", f.seed, "base seed; trial t uses seed + t");
    cmd->add_option("--workers", f.workers, "evaluation threads; 1 is sequential and deterministic");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_flag("--no-traces", f.no_traces, "skip elite trace export");
}

qdsa::ExperimentConfig build_config(const RunFlags& f) {
    qdsa::ExperimentConfig cfg;
    cfg.workers = qdsa::default_workers();
    if (!f.config.empty())
        qdsa::apply_json(cfg, qdsa::read_json_file(f.config));
    if (!f.preset.empty())
        cfg.preset = qdsa::preset_from_string(f.preset);
    if (!f.algo.empty())
        cfg.algorithm = qdsa::algorithm_from_string(f.algo);
    if (!f.controller.empty())
        cfg.controller = qdsa::controller_from_string(f.controller);
    if (!f.linear_term.empty())
        cfg.linear_term = f.linear_term == "on";
    if (f.budget)
        cfg.budget = f.budget;
    if (f.trials)
        cfg.trials = f.trials;
    if (f.seed >= 0)
        cfg.seed = static_cast<std::uint64_t>(f.seed);
    if (f.workers)
        cfg.workers = f.workers;
    if (!f.out.empty())
        cfg.out_dir = f.out;
    if (f.no_traces)
        cfg.export_traces = false;
    if (cfg.out_dir.empty())
        cfg.out_dir = (std::filesystem::path(default_out_root()) /
                       (std::string(qdsa::to_string(cfg.preset)) + "_" + std::string(qdsa::to_string(cfg.algorithm))))
                          .string();
    return cfg;
}

int cmd_run(const RunFlags& f) {
    const auto cfg = build_config(f);
    const auto summary = qdsa::run_experiment(cfg);
    for (std::size_t t = 0; t < summary.trials.size(); ++t) {
        const auto& tr = summary.trials[t];
        std::printf("trial %zu seed %llu coverage %.4f qd_score %.2f evals %zu (%.1fs)\n", t,
                    static_cast<unsigned long long>(tr.seed), tr.coverage, tr.qd_score, tr.evaluations,
                    tr.wall_seconds);
    }
    std::printf("wrote %s\n", cfg.out_dir.c_str());
    for (const auto& tr : summary.trials)
        if (tr.evaluations != cfg.effective_budget())
            return 1;
    return 0;
}

int cmd_replay(const std::string& path) {
    const auto j = qdsa::read_json_file(path);
    const auto sp = qdsa::scenario_from_json(j.at("scenario"));
    qdsa::SimConfig sim = qdsa::SimConfig::for_domain(sp.domain);
    if (j.contains("controller"))
        sim.controller = qdsa::controller_from_string(j["controller"].get<std::string>());
    if (j.contains("linear_term"))
        sim.cost.linear_term_enabled = j["linear_term"].get<bool>();
    const auto trace = qdsa::run_episode(sp, sim);
    std::printf("t,x,y,uhx,uhy,urx,ury");
    for (std::size_t g = 0; g < trace.n_goals; ++g)
        std::printf(",b%zu", g);
    std::printf("\n");
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        const auto& s = trace.steps[k];
        std::cout << qdsa::format_double(s.t) << ',' << qdsa::format_double(s.x.x) << ','
                  << qdsa::format_double(s.x.y) << ',' << qdsa::format_double(s.u_H.x) << ','
                  << qdsa::format_double(s.u_H.y) << ',' << qdsa::format_double(s.u_R.x) << ','
                  << qdsa::format_double(s.u_R.y);
        for (double b : trace.belief_at(k))
            std::cout << ',' << qdsa::format_double(b);
        std::cout << '\n';
    }
    std::cout << "# outcome " << qdsa::to_string(trace.outcome.termination) << " after "
              << qdsa::format_double(trace.outcome.elapsed) << " s\n";
    return 0;
}

qdsa::BehaviorSpaceSpec spec_from_names(const std::vector<std::string>& names) {
    using S = qdsa::BehaviorSpaceSpec;
    qdsa::BehaviorSpaceSpec spec;
    for (const auto& n : names) {
        bool found = false;
        for (const auto& d : {S::goal_distance(), S::human_variation(), S::rationality(), S::horizontal_distance(),
                              S::collision()}) {
            if (d.name == n) {
                spec.dims.push_back(d);
                found = true;
            }
        }
        if (!found)
            throw std::runtime_error("unknown behavior dimension in archive: " + n);
    }
    return spec;
}

int cmd_heatmap(const std::string& archive, std::string out) {
    std::ifstream in(archive);
    if (!in)
        throw std::runtime_error("cannot open " + archive);
    const auto table = qdsa::read_archive_csv(in);
    const auto spec = spec_from_names(table.dim_names);
    if (out.empty())
        out = (std::filesystem::path(archive).parent_path() / "heatmap").string();
    qdsa::write_text_file(out + ".csv", qdsa::heatmap_csv(spec, table.cells, table.f));
    qdsa::write_text_file(out + ".svg", qdsa::heatmap_svg(spec, table.cells, table.f));
    std::printf("wrote %s.csv and %s.svg\n", out.c_str(), out.c_str());
    return 0;
}

int cmd_compare(const RunFlags& f) {
    auto cfg = build_config(f);
    if (cfg.preset != qdsa::Preset::Obstacle)
        throw std::runtime_error("compare supports only the obstacle preset");
    if (f.out.empty())
        cfg.out_dir = (std::filesystem::path(default_out_root()) / "compare_obstacle").string();
    const auto report = qdsa::compare_controllers(cfg);
    for (const auto& r : report.runs) {
        const auto& s = r.trial.collision_slices;
        std::printf("%-9s coverage %.4f  no-collision cells %zu (mean f %.3f)  collision cells %zu  "
                    "collisions at BC2<0.02: %zu\n",
                    std::string(qdsa::to_string(r.controller)).c_str(), r.trial.coverage, s[0].occupied,
                    s[0].mean_f, s[1].occupied, r.trial.low_variation_collision_elites);
    }
    std::printf("wrote %s\n", cfg.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quality-diversity scenario generation for shared-autonomy controllers"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "run search trials and write archives");
    add_run_flags(run, run_flags);

    std::string elite;
    auto* replay = app.add_subcommand("replay", "re-simulate an exported elite and print its step table");
    replay->add_option("--elite", elite, "elite JSON file")->required()->check(CLI::ExistingFile);

    std::string archive, heat_out;
    auto* heatmap = app.add_subcommand("heatmap", "dense grid CSV and SVG from an archive.csv");
    heatmap->add_option("--archive", archive, "archive.csv path")->required()->check(CLI::ExistingFile);
    heatmap->add_option("--out", heat_out, "output path without extension");

    RunFlags cmp_flags;
    cmp_flags.preset = "obstacle";
    auto* compare = app.add_subcommand("compare", "blend vs hindsight archives on the obstacle preset");
    add_run_flags(compare, cmp_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(run_flags);
        if (*replay)
            return cmd_replay(elite);
        if (*heatmap)
            return cmd_heatmap(archive, heat_out);
        if (*compare)
            return cmd_compare(cmp_flags);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
