#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles/uniform_bc.hpp"
#include "qdsa/io.hpp"
#include "qdsa/runner.hpp"

using namespace qdsa;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("qdsa_unit_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("run_experiment writes the per-trial files") {
    const auto dir = scratch("files");
    ExperimentConfig cfg;
    cfg.preset = Preset::Obstacle;
    cfg.budget = 30;
    cfg.trials = 2;
    cfg.out_dir = dir.string();
    const auto s = run_experiment(cfg);
    REQUIRE(s.trials.size() == 2);
    CHECK(s.trials[0].seed == 0);
    CHECK(s.trials[1].seed == 1);
    for (const char* t : {"trial_0", "trial_1"}) {
        CHECK(fs::exists(dir / t / "archive.csv"));
        CHECK(fs::exists(dir / t / "heatmap.csv"));
        CHECK(fs::exists(dir / t / "qdscore_timeseries.csv"));
        CHECK(fs::is_directory(dir / t / "elites"));
    }
    const auto summary = read_json_file((dir / "summary.json").string());
    CHECK(summary["trials"].size() == 2);
    CHECK(summary["trials"][0]["evaluations"] == 30);
    CHECK(s.trials[0].evaluations == 30);
    fs::remove_all(dir);
}

TEST_CASE("smoke run without output") {
    ExperimentConfig cfg;
    cfg.budget = 10;
    cfg.trials = 1;
    const auto s = run_experiment(cfg);
    CHECK(s.trials.front().evaluations == 10);
    CHECK(s.trials.front().occupied >= 1);
}

TEST_CASE("distortion histogram counts every valid evaluation") {
    ExperimentConfig cfg;
    cfg.algorithm = Algorithm::Random;
    cfg.budget = 300;
    const auto r = run_trial(cfg, 3);
    const auto h = distortion_histogram(r.log, preset_spec(cfg.preset));
    CHECK(std::accumulate(h.begin(), h.end(), std::size_t{0}) == 300);
    CHECK(visited_cells(h) == r.archive.size());

    cfg.budget = 1;
    const auto one = run_trial(cfg, 3);
    CHECK(visited_cells(distortion_histogram(one.log, preset_spec(cfg.preset))) == 1);
}

TEST_CASE("uniform sampling concentrates in few cells") {
    const auto big = oracle::uniform_bc1_bc2(200000, 1);
    CHECK(oracle::top_fraction_mass(big.counts, 0.1) > 0.5);

    // Random search sees the same distortion as direct sampling of the BCs.
    ExperimentConfig cfg;
    cfg.algorithm = Algorithm::Random;
    cfg.budget = 5000;
    const auto r = run_trial(cfg, 4);
    const auto h = distortion_histogram(r.log, preset_spec(cfg.preset));
    const auto ref = oracle::uniform_bc1_bc2(5000, 2);
    CHECK(top_cells_mass(h, 0.1) == Approx(oracle::top_fraction_mass(ref.counts, 0.1)).margin(0.03));
    CHECK(top_cells_mass(h, 0.1) > 0.5);
    const double ratio = static_cast<double>(visited_cells(h)) / static_cast<double>(oracle::nonzero(ref.counts));
    CHECK(ratio == Approx(1.0).margin(0.1));
}

TEST_CASE("top_cells_mass") {
    CHECK(top_cells_mass({0, 0, 0, 0}, 0.25) == 0.0);
    CHECK(top_cells_mass({6, 1, 1, 2, 0, 0, 0, 0, 0, 0}, 0.1) == Approx(0.6));
    CHECK(top_cells_mass({6, 1, 1, 2, 0, 0, 0, 0, 0, 0}, 0.2) == Approx(0.8));
}

TEST_CASE("archive csv round trip") {
    for (auto preset : {Preset::GoalDistanceRationality, Preset::GoalDistanceVariation, Preset::Obstacle}) {
        ExperimentConfig cfg;
        cfg.preset = preset;
        cfg.budget = 40;
        const auto r = run_trial(cfg, 5);
        const std::string text = archive_csv(r.archive);
        std::istringstream in(text);
        const auto t = read_archive_csv(in);
        REQUIRE(t.dim_names.size() == preset_spec(preset).dims.size());
        for (std::size_t i = 0; i < t.dim_names.size(); ++i)
            CHECK(t.dim_names[i] == preset_spec(preset).dims[i].name);
        REQUIRE(t.cells.size() == r.archive.size());
        const auto cells = r.archive.sorted_cells();
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& e = *r.archive.cell(cells[i]);
            CHECK(t.cells[i] == unflatten_index(r.archive.spec(), cells[i]));
            CHECK(t.f[i] == e.f);
            CHECK(t.bcs[i] == e.bc);
        }
    }
    CHECK(archive_csv(Archive(preset_spec(Preset::Obstacle))).rfind(
              "cell_horizontal_distance,cell_human_variation,cell_collision,horizontal_distance,human_variation,"
              "collision,f,eval_index,scenario\n",
              0) == 0);
}

TEST_CASE("heatmap shape") {
    Archive a(preset_spec(Preset::GoalDistanceVariation));
    a.try_insert({ScenarioParams{}, 4.5, {0.0, 0.0}, 1});
    std::istringstream in(heatmap_csv(a));
    std::string line;
    std::size_t rows = 0;
    std::getline(in, line);
    CHECK(line.rfind("goal_distance\\human_variation,0,1,", 0) == 0);
    while (std::getline(in, line)) {
        CHECK(csv_split(line).size() == 101);
        ++rows;
    }
    CHECK(rows == 25);

    Archive b(preset_spec(Preset::Obstacle));
    std::istringstream in3(heatmap_csv(b));
    std::size_t rows3 = 0;
    std::getline(in3, line);
    CHECK(line.rfind("collision,", 0) == 0);
    while (std::getline(in3, line)) {
        CHECK(csv_split(line).size() == 102);
        ++rows3;
    }
    CHECK(rows3 == 50);
}

TEST_CASE("json round trips") {
    const ScenarioParams sp{{0.1, 0.2}, {0.01, -0.02, 0.0, 0.03, -0.05}, Domain::Obstacle};
    CHECK(scenario_from_json(to_json(sp)) == sp);

    ExperimentConfig cfg;
    cfg.preset = Preset::GoalDistanceRationality;
    cfg.algorithm = Algorithm::CmaEs;
    cfg.controller = ControllerKind::Blend;
    cfg.linear_term = false;
    cfg.budget = 123;
    cfg.trials = 2;
    cfg.seed = 77;
    ExperimentConfig back;
    apply_json(back, to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));

    CHECK(format_double(0.1) == "0.1");
    CHECK(parse_double(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(csv_split(csv_quote("a,\"b\"") + ",x") == std::vector<std::string>{"a,\"b\"", "x"});
}

TEST_CASE("unwritable output directory is reported") {
    const auto file = scratch("blocker");
    { std::ofstream(file.string()) << "x"; }
    ExperimentConfig cfg;
    cfg.budget = 5;
    cfg.trials = 1;
    cfg.out_dir = (file / "sub").string();
    CHECK_THROWS(run_experiment(cfg));
    fs::remove(file);
}

TEST_CASE("preset tables") {
    CHECK(preset_from_string("bc1_bc2_3goals") == Preset::GoalDistanceVariation3);
    CHECK(preset_bounds(Preset::GoalDistanceVariation3).dimension() == 11);
    CHECK(preset_bounds(Preset::Obstacle).dimension() == 7);
    CHECK(preset_default_budget(Preset::Obstacle) == 20000);
    CHECK(preset_spec(Preset::GoalDistanceRationality).cell_count() == 25 * 101);
    CHECK_THROWS(preset_from_string("bc9"));
}
