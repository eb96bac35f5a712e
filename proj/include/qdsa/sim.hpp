// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "qdsa/geometry.hpp"
#include "qdsa/policy.hpp"
#include "qdsa/scenario.hpp"

namespace qdsa {

enum class HumanModel {
    Waypoints,
    /// Full-magnitude input straight at the human's goal at every step.
    ConstantTowardGoal,
};

struct SimConfig {
    double dt{0.02};
    double horizon{10.0};
    ControllerKind controller{ControllerKind::Hindsight};
    CostParams cost;
    BlendParams blend;
    ObstacleResponse obstacle;
    HumanParams human;
    HumanModel human_model{HumanModel::Waypoints};
    Layout layout;

    std::size_t max_steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

    static SimConfig for_domain(Domain d) {
        SimConfig c;
        c.horizon = d == Domain::Obstacle ? 15.0 : 10.0;
        return c;
    }
};

enum class Termination { ReachedGoal, Timeout, Collision, Invalid };

inline std::string_view to_string(Termination t) {
    switch (t) {
    case Termination::ReachedGoal: return "reached_goal";
    case Termination::Timeout: return "timeout";
    case Termination::Collision: return "collision";
    case Termination::Invalid: return "invalid";
    }
    return "invalid";
}

struct EpisodeOutcome {
    Termination termination{Termination::Invalid};
    double elapsed{0.0};
    bool collided{false};
    Vec2 final_position;
};

struct StepRecord {
    double t{0.0};
    Vec2 x;
    Vec2 u_H;
    Vec2 u_R;
};

struct WaypointEvent {
    double t{0.0};
    std::size_t step{0};
    /// Index of the waypoint the human targets from now on.
    std::size_t index{0};
};

struct EpisodeTrace {
    std::vector<StepRecord> steps;
    /// Belief after each step's update, `n_goals` entries per step.
    std::vector<double> beliefs;
    std::size_t n_goals{0};
    std::vector<WaypointEvent> waypoint_events;
    EpisodeOutcome outcome;

    std::vector<double> belief_at(std::size_t step) const {
        const auto first = beliefs.begin() + static_cast<std::ptrdiff_t>(step * n_goals);
        return {first, first + static_cast<std::ptrdiff_t>(n_goals)};
    }
};

/// Closed loop: human command, belief update, controller, Euler step.
/// Invalid scenarios yield an empty trace with an Invalid outcome.
inline EpisodeTrace run_episode(const ScenarioParams& sp, const SimConfig& cfg) {
    EpisodeTrace trace;
    Environment env;
    WaypointPlan plan;
    try {
        env = generate_environment(sp.phi, sp.domain, cfg.layout);
        plan = build_waypoint_plan(env, sp.theta, cfg.human);
    } catch (const InvalidScenarioError&) {
        trace.outcome.termination = Termination::Invalid;
        return trace;
    }

    const std::size_t n = env.goals.size();
    const std::size_t max_steps = cfg.max_steps();
    trace.n_goals = n;
    trace.steps.reserve(max_steps);
    trace.beliefs.reserve(max_steps * n);

    Belief belief = Belief::uniform(n);
    Vec2 x = env.robot_start;
    const Vec2 goal = env.human_goal();
    trace.waypoint_events.push_back({0.0, 0, 0});

    for (std::size_t k = 0; k < max_steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        Vec2 u_H;
        if (cfg.human_model == HumanModel::Waypoints) {
            const std::size_t before = plan.current_index();
            u_H = human_command(plan, x);
            for (std::size_t i = before + 1; i <= plan.current_index(); ++i)
                trace.waypoint_events.push_back({t, k, i});
        } else {
            u_H = unit_or_zero(goal - x) * cfg.human.max_speed;
        }

        belief = belief_update(belief, x, u_H, cfg.dt, env, cfg.cost);
        const Vec2 u_R = cfg.controller == ControllerKind::Hindsight
                             ? hindsight_action(belief, x, u_H, env, cfg.cost, cfg.obstacle)
                             : blend_action(belief, x, u_H, env, cfg.cost, cfg.blend, cfg.obstacle);

        trace.steps.push_back({t, x, u_H, u_R});
        trace.beliefs.insert(trace.beliefs.end(), belief.probs.begin(), belief.probs.end());

        x += u_R * cfg.dt;
        const double elapsed = static_cast<double>(k + 1) * cfg.dt;
        if (distance(x, goal) < env.grasp_tolerance) {
            trace.outcome = {Termination::ReachedGoal, elapsed, false, x};
            return trace;
        }
        if (env.obstacle && env.obstacle->contains(x)) {
            trace.outcome = {Termination::Collision, elapsed, true, x};
            return trace;
        }
    }
    trace.outcome = {Termination::Timeout, cfg.horizon, false, x};
    return trace;
}

/// Time to completion; timeouts score the full horizon. nullopt for invalid
/// scenarios, which the search skips.
inline std::optional<double> assess(const EpisodeTrace& trace, const SimConfig& cfg) {
    switch (trace.outcome.termination) {
    case Termination::Invalid: return std::nullopt;
    case Termination::Timeout: return cfg.horizon;
    case Termination::ReachedGoal:
    case Termination::Collision: return trace.outcome.elapsed;
    }
    return std::nullopt;
}

}  // namespace qdsa
