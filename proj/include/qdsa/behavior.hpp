// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

/// Behavior characteristics: goal distance, human variation, MAP rationality
/// of the human's inputs and whether the robot collided.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "qdsa/geometry.hpp"
#include "qdsa/scenario.hpp"
#include "qdsa/sim.hpp"

namespace qdsa {

struct RationalityGrid {
    std::vector<double> betas;
    std::vector<double> prior;
    /// Directions of the candidate actions, each scaled to the observed input
    /// magnitude; the zero action and the observed action are always included.
    std::size_t n_directions{24};

    static RationalityGrid standard(std::size_t n = 101, double beta_max = 1000.0) {
        RationalityGrid g;
        g.betas.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            g.betas[i] = n == 1 ? 0.0 : beta_max * static_cast<double>(i) / static_cast<double>(n - 1);
        g.prior.assign(n, 1.0 / static_cast<double>(n));
        return g;
    }
};

/// Distance from the human's goal to the nearest other goal.
inline std::optional<double> bc_goal_distance(const Environment& env) {
    if (env.goals.size() < 2)
        return std::nullopt;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < env.goals.size(); ++i)
        best = std::min(best, distance(env.human_goal(), env.goals[i]));
    return best;
}

inline std::optional<double> bc_horizontal_distance(const Environment& env) {
    if (!env.obstacle || env.goals.empty())
        return std::nullopt;
    return std::abs(env.human_goal().x - env.obstacle->center.x);
}

/// Root sum of squares of the waypoint disturbances.
inline double bc_human_variation(const std::vector<double>& theta) {
    double s = 0.0;
    for (double d : theta)
        s += d * d;
    return std::sqrt(s);
}

/// Boltzmann rationality model Q = -|u| - |x + u - g|.
inline double rationality_q(const Vec2& u, const Vec2& x, const Vec2& g) {
    return -u.norm() - distance(x + u, g);
}

namespace detail {

inline std::vector<Vec2> candidate_actions(const Vec2& u, std::size_t n_directions) {
    std::vector<Vec2> c;
    c.reserve(n_directions + 2);
    const double mag = u.norm();
    for (std::size_t k = 0; k < n_directions; ++k) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_directions);
        c.push_back(Vec2{std::cos(a), std::sin(a)} * mag);
    }
    c.push_back({});
    c.push_back(u);
    return c;
}

inline double log_likelihood(const Vec2& u, const Vec2& x, const Vec2& g, double beta,
                             const std::vector<Vec2>& candidates) {
    double max_q = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates)
        max_q = std::max(max_q, beta * rationality_q(c, x, g));
    double sum = 0.0;
    for (const auto& c : candidates)
        sum += std::exp(beta * rationality_q(c, x, g) - max_q);
    return beta * rationality_q(u, x, g) - max_q - std::log(sum);
}

}  // namespace detail

/// P(u | x, g, beta), normalised over the candidate set.
inline double action_likelihood(const Vec2& u, const Vec2& x, const Vec2& g, double beta,
                                const RationalityGrid& grid) {
    return std::exp(detail::log_likelihood(u, x, g, beta, detail::candidate_actions(u, grid.n_directions)));
}

/// Posterior over the grid after updating with each (x, u) observation.
inline std::vector<double> rationality_posterior(const std::vector<std::pair<Vec2, Vec2>>& observations,
                                                 const Vec2& goal, const RationalityGrid& grid) {
    const std::size_t n = grid.betas.size();
    std::vector<double> logp(n);
    for (std::size_t i = 0; i < n; ++i)
        logp[i] = std::log(grid.prior[i]);
    for (const auto& [x, u] : observations) {
        const auto candidates = detail::candidate_actions(u, grid.n_directions);
        for (std::size_t i = 0; i < n; ++i)
            logp[i] += detail::log_likelihood(u, x, goal, grid.betas[i], candidates);
    }
    const double max_log = *std::max_element(logp.begin(), logp.end());
    std::vector<double> post(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        post[i] = std::exp(logp[i] - max_log);
        sum += post[i];
    }
    for (double& p : post)
        p /= sum;
    return post;
}

/// (position, human command) at the episode start and at every advance to the
/// next intermediate waypoint.
inline std::vector<std::pair<Vec2, Vec2>> rationality_observations(const EpisodeTrace& trace,
                                                                   std::size_t n_intermediate) {
    std::vector<std::pair<Vec2, Vec2>> obs;
    for (const auto& ev : trace.waypoint_events) {
        if (ev.index > n_intermediate || ev.step >= trace.steps.size())
            continue;
        const auto& s = trace.steps[ev.step];
        obs.emplace_back(s.x, s.u_H);
    }
    return obs;
}

/// Maximum a posteriori rationality; ties resolve to the smaller beta.
inline double bc_rationality(const EpisodeTrace& trace, const Environment& env,
                             const RationalityGrid& grid, std::size_t n_intermediate = 5) {
    const auto post = rationality_posterior(rationality_observations(trace, n_intermediate),
                                            env.human_goal(), grid);
    std::size_t best = 0;
    for (std::size_t i = 1; i < post.size(); ++i)
        if (post[i] > post[best])
            best = i;
    return grid.betas[best];
}

inline bool bc_collision(const EpisodeTrace& trace) { return trace.outcome.collided; }

}  // namespace qdsa
