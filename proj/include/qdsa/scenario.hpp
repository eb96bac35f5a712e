// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

/// Scenario parameters, the environment generator and the waypoint-following
/// simulated human.
///
/// A scenario is the pair (phi, theta). phi places the objects on the table:
/// for the goal-placement domain it holds (x, y) for each goal, the first goal
/// being the one the human wants; for the obstacle domain it holds the x
/// coordinates of the single goal and of the obstacle. theta holds one
/// horizontal disturbance per intermediate waypoint of the human's path.

#include <cstddef>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qdsa/geometry.hpp"

namespace qdsa {

using Rng = std::mt19937_64;

class BoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// The object placement is physically impossible (e.g. coincident objects).
class InvalidScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Domain { GoalPlacement, Obstacle };

inline std::string_view to_string(Domain d) {
    return d == Domain::GoalPlacement ? "goal_placement" : "obstacle";
}

inline Domain domain_from_string(std::string_view s) {
    if (s == "goal_placement")
        return Domain::GoalPlacement;
    if (s == "obstacle")
        return Domain::Obstacle;
    throw std::invalid_argument("unknown domain: " + std::string(s));
}

struct ScenarioParams {
    std::vector<double> phi;
    std::vector<double> theta;
    Domain domain{Domain::GoalPlacement};

    std::size_t dimension() const { return phi.size() + theta.size(); }

    /// phi followed by theta.
    std::vector<double> flatten() const {
        std::vector<double> v(phi);
        v.insert(v.end(), theta.begin(), theta.end());
        return v;
    }

    static ScenarioParams unflatten(const std::vector<double>& v, std::size_t n_phi, Domain d) {
        ScenarioParams p;
        p.domain = d;
        p.phi.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_phi));
        p.theta.assign(v.begin() + static_cast<std::ptrdiff_t>(n_phi), v.end());
        return p;
    }

    friend bool operator==(const ScenarioParams&, const ScenarioParams&) = default;
};

struct Interval {
    double low{0.0};
    double high{0.0};

    bool contains(double v) const { return v >= low && v <= high; }
    double width() const { return high - low; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Fixed geometry of the workspace.
struct Layout {
    Vec2 robot_start{0.125, 0.40};
    Interval goal_x{0.0, 0.25};
    Interval goal_y{0.0, 0.2};
    /// Obstacle domain: goal row, obstacle row, obstacle radius.
    double obstacle_goal_y{0.10};
    double obstacle_y{0.25};
    double obstacle_radius{0.05};
    double grasp_tolerance{0.01};
    double max_disturbance{0.05};
};

struct Bounds {
    std::vector<Interval> phi;
    std::vector<Interval> theta;

    std::size_t dimension() const { return phi.size() + theta.size(); }

    std::vector<Interval> flatten() const {
        std::vector<Interval> v(phi);
        v.insert(v.end(), theta.begin(), theta.end());
        return v;
    }

    bool contains(const ScenarioParams& p) const {
        if (p.phi.size() != phi.size() || p.theta.size() != theta.size())
            return false;
        for (std::size_t i = 0; i < phi.size(); ++i)
            if (!phi[i].contains(p.phi[i]))
                return false;
        for (std::size_t i = 0; i < theta.size(); ++i)
            if (!theta[i].contains(p.theta[i]))
                return false;
        return true;
    }

    ScenarioParams clamp(ScenarioParams p) const {
        for (std::size_t i = 0; i < phi.size(); ++i)
            p.phi[i] = std::clamp(p.phi[i], phi[i].low, phi[i].high);
        for (std::size_t i = 0; i < theta.size(); ++i)
            p.theta[i] = std::clamp(p.theta[i], theta[i].low, theta[i].high);
        return p;
    }

    static Bounds goal_placement(std::size_t n_goals, std::size_t m = 5, const Layout& l = {}) {
        Bounds b;
        for (std::size_t g = 0; g < n_goals; ++g) {
            b.phi.push_back(l.goal_x);
            b.phi.push_back(l.goal_y);
        }
        b.theta.assign(m, Interval{-l.max_disturbance, l.max_disturbance});
        return b;
    }

    static Bounds obstacle(std::size_t m = 5, const Layout& l = {}) {
        Bounds b;
        b.phi = {l.goal_x, l.goal_x};
        b.theta.assign(m, Interval{-l.max_disturbance, l.max_disturbance});
        return b;
    }
};

struct Environment {
    /// goals.front() is the human's intended goal.
    std::vector<Vec2> goals;
    std::optional<Sphere> obstacle;
    Vec2 robot_start;
    double grasp_tolerance{0.01};

    const Vec2& human_goal() const { return goals.front(); }
};

inline Environment generate_environment(const std::vector<double>& phi, Domain domain,
                                        const Layout& layout = {}) {
    Environment env;
    env.robot_start = layout.robot_start;
    env.grasp_tolerance = layout.grasp_tolerance;

    auto check = [](const Interval& iv, double v, const char* what) {
        if (!std::isfinite(v) || !iv.contains(v))
            throw BoundsError(std::string(what) + " out of bounds");
    };

    if (domain == Domain::GoalPlacement) {
        if (phi.size() < 2 || phi.size() % 2 != 0)
            throw std::invalid_argument("goal placement needs an even, non-zero number of coordinates");
        for (std::size_t i = 0; i < phi.size(); i += 2) {
            check(layout.goal_x, phi[i], "goal x");
            check(layout.goal_y, phi[i + 1], "goal y");
            env.goals.emplace_back(phi[i], phi[i + 1]);
        }
        // Other goals may coincide with each other but not with the human's goal.
        for (std::size_t i = 1; i < env.goals.size(); ++i)
            if (distance(env.goals[i], env.goals[0]) == 0.0)
                throw InvalidScenarioError("goal objects collide");
        return env;
    }

    if (phi.size() != 2)
        throw std::invalid_argument("obstacle domain needs (goal x, obstacle x)");
    check(layout.goal_x, phi[0], "goal x");
    check(layout.goal_x, phi[1], "obstacle x");
    env.goals.emplace_back(phi[0], layout.obstacle_goal_y);
    env.obstacle = Sphere({phi[1], layout.obstacle_y}, layout.obstacle_radius);
    if (env.obstacle->contains(env.goals[0]))
        throw InvalidScenarioError("goal lies inside the obstacle");
    if (env.obstacle->contains(env.robot_start))
        throw InvalidScenarioError("robot starts inside the obstacle");
    return env;
}

struct HumanParams {
    double gain{2.0};            // 1/s
    double max_speed{0.2};       // m/s
    double advance_tolerance{0.01};
    /// Also advance once the robot has passed a waypoint, i.e. crossed the line
    /// through it normal to the nominal direction of travel. Without this a
    /// waypoint the robot misses is chased forever.
    bool advance_on_pass{true};
};

/// Deterministic human: proportional velocity commands toward a sequence of
/// (disturbed) waypoints ending at the human's goal.
class WaypointPlan {
public:
    WaypointPlan() = default;
    WaypointPlan(std::vector<Vec2> waypoints, std::vector<Vec2> travel_dirs, HumanParams hp)
        : waypoints_(std::move(waypoints)), travel_dirs_(std::move(travel_dirs)), params_(hp) {}

    const std::vector<Vec2>& waypoints() const { return waypoints_; }
    const HumanParams& params() const { return params_; }
    std::size_t current_index() const { return index_; }
    bool exhausted() const { return index_ >= waypoints_.size(); }

    /// Advances past every waypoint already reached, then returns the command.
    Vec2 command(const Vec2& x) {
        while (!exhausted() && reached(x))
            ++index_;
        if (exhausted())
            return {};
        return clamp_norm((waypoints_[index_] - x) * params_.gain, params_.max_speed);
    }

private:
    bool reached(const Vec2& x) const {
        const Vec2& w = waypoints_[index_];
        if (distance(x, w) < params_.advance_tolerance)
            return true;
        // The final waypoint (the goal) must actually be reached.
        if (!params_.advance_on_pass || index_ + 1 >= waypoints_.size())
            return false;
        return (x - w).dot(travel_dirs_[index_]) >= 0.0;
    }

    std::vector<Vec2> waypoints_;
    std::vector<Vec2> travel_dirs_;
    HumanParams params_;
    std::size_t index_{0};
};

/// m equidistant intermediates along the shortest collision-free path from the
/// robot start to the human's goal, each shifted horizontally by theta[i];
/// the goal itself is appended undisturbed.
inline WaypointPlan build_waypoint_plan(const Environment& env, const std::vector<double>& theta,
                                        const HumanParams& hp = {}) {
    const Vec2 goal = env.human_goal();
    const auto nominal = wrap_path_waypoints(env.robot_start, goal, env.obstacle, theta.size());
    std::vector<Vec2> wps;
    std::vector<Vec2> dirs;
    wps.reserve(theta.size() + 1);
    for (std::size_t i = 0; i < nominal.size(); ++i) {
        wps.push_back(nominal[i] + Vec2{theta[i], 0.0});
        const Vec2 next = i + 1 < nominal.size() ? nominal[i + 1] : goal;
        dirs.push_back(unit_or_zero(next - nominal[i]));
    }
    wps.push_back(goal);
    dirs.push_back({});
    return WaypointPlan(std::move(wps), std::move(dirs), hp);
}

inline Vec2 human_command(WaypointPlan& plan, const Vec2& x_R) { return plan.command(x_R); }

inline ScenarioParams sample_random_scenario(const Bounds& bounds, Domain domain, Rng& rng) {
    ScenarioParams p;
    p.domain = domain;
    auto draw = [&rng](const Interval& iv) {
        return std::uniform_real_distribution<double>(iv.low, iv.high)(rng);
    };
    for (const auto& iv : bounds.phi)
        p.phi.push_back(draw(iv));
    for (const auto& iv : bounds.theta)
        p.theta.push_back(draw(iv));
    return p;
}

}  // namespace qdsa
