// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

/// Shared-autonomy controllers under test: Bayesian goal inference with a
/// Huber-style goal cost, hindsight-optimization assistance and "timid"
/// linear policy blending.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qdsa/geometry.hpp"
#include "qdsa/scenario.hpp"

namespace qdsa {

struct Belief {
    std::vector<double> probs;

    static Belief uniform(std::size_t n) {
        return Belief{std::vector<double>(n, 1.0 / static_cast<double>(n))};
    }

    std::size_t size() const { return probs.size(); }

    bool valid(double tol = 1e-9) const {
        if (probs.empty())
            return false;
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0 && p <= 1.0))
                return false;
            sum += p;
        }
        return std::abs(sum - 1.0) <= tol;
    }
};

/// Goal cost: constant rate far from the goal, linear rate inside
/// `linear_threshold`, which makes the cost-to-go quadratic near the goal.
struct CostParams {
    double far_rate{1.0};            // cost per meter
    double linear_threshold{0.05};   // m
    double obs_sharpness{50.0};      // 1/cost
    double auto_speed{0.1};          // m/s
    double robot_max_speed{0.2};     // m/s
    /// Speed at which the per-step cost of the inference model is charged.
    double reference_speed{0.2};     // m/s
    bool linear_term_enabled{true};
};

struct BlendParams {
    double conf_low{0.4};
    double conf_high{0.8};
    double alpha_max{0.6};
};

/// Reaction to the obstacle within `margin` of its surface.
struct ObstacleResponse {
    double margin{0.01};     // m
    double push_speed{0.05}; // m/s, radially outward
    /// Hindsight optimization plans with an obstacle-aware cost, so it never
    /// commands motion into the obstacle near its surface. Blending mixes the
    /// raw commands and has no such constraint.
    bool hindsight_constrained{true};
};

enum class ControllerKind { Hindsight, Blend };

inline std::string_view to_string(ControllerKind c) {
    return c == ControllerKind::Hindsight ? "hindsight" : "blend";
}

inline ControllerKind controller_from_string(std::string_view s) {
    if (s == "hindsight")
        return ControllerKind::Hindsight;
    if (s == "blend")
        return ControllerKind::Blend;
    throw std::invalid_argument("unknown controller: " + std::string(s));
}

/// Cost-to-go from distance d along the shortest collision-free path.
inline double value_from_distance(double d, const CostParams& cp) {
    const double c = cp.far_rate;
    const double delta = cp.linear_threshold;
    if (!cp.linear_term_enabled)
        return c * d;
    if (d <= delta)
        return c * d * d / (2.0 * delta);
    return c * (d - delta) + c * delta / 2.0;
}

inline double value_to_go(const Vec2& x, const Vec2& g, const CostParams& cp,
                          const std::optional<Sphere>& obs = std::nullopt) {
    return value_from_distance(wrap_path_length(x, g, obs), cp);
}

namespace detail {

/// Points inside the obstacle are evaluated at their projection on the surface.
inline Vec2 project_outside(const Vec2& p, const std::optional<Sphere>& obs) {
    if (!obs || !obs->contains(p))
        return p;
    const Vec2 out = p - obs->center;
    const double n = out.norm();
    const Vec2 dir = n > 0.0 ? out / n : Vec2{0.0, 1.0};
    // Just outside the surface so rounding cannot put it back inside.
    return obs->center + dir * (obs->radius * (1.0 + 1e-9));
}

inline double value_outside(const Vec2& x, const Vec2& g, const CostParams& cp,
                            const std::optional<Sphere>& obs) {
    return value_to_go(project_outside(x, obs), g, cp, obs);
}

}  // namespace detail

/// Central finite difference of value_to_go, one-sided where a probe would
/// land inside the obstacle.
inline Vec2 value_gradient(const Vec2& x, const Vec2& g, const CostParams& cp,
                           const std::optional<Sphere>& obs = std::nullopt, double step = 1e-4) {
    auto v = [&](const Vec2& p) { return value_to_go(p, g, cp, obs); };
    auto partial = [&](const Vec2& e) {
        const Vec2 fwd = x + e * step;
        const Vec2 bwd = x - e * step;
        const bool fwd_in = obs && obs->contains(fwd);
        const bool bwd_in = obs && obs->contains(bwd);
        if (fwd_in && bwd_in)
            return 0.0;
        if (fwd_in)
            return (v(x) - v(bwd)) / step;
        if (bwd_in)
            return (v(fwd) - v(x)) / step;
        return (v(fwd) - v(bwd)) / (2.0 * step);
    };
    return {partial({1.0, 0.0}), partial({0.0, 1.0})};
}

/// Cost charged per control step under goal g: the rate of the goal cost at
/// x, applied for dt at the reference speed.
inline double step_cost(const Vec2& x, const Vec2& g, double dt, const CostParams& cp,
                        const std::optional<Sphere>& obs) {
    double rate = 1.0;
    if (cp.linear_term_enabled) {
        const double d = wrap_path_length(detail::project_outside(x, obs), g, obs);
        rate = std::min(1.0, d / cp.linear_threshold);
    }
    return cp.far_rate * cp.reference_speed * dt * rate;
}

/// Treats the human command as an observation:
/// b'(g) ~ b(g) exp(eta [V_g(x) - V_g(x + u dt) - c_g(x)]).
inline Belief belief_update(const Belief& b, const Vec2& x, const Vec2& u_H, double dt,
                            const Environment& env, const CostParams& cp) {
    if (u_H.squared_norm() == 0.0 || b.size() != env.goals.size())
        return b;
    const Vec2 next = x + u_H * dt;
    std::vector<double> logp(b.size());
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b.probs[i] <= 0.0) {
            logp[i] = -std::numeric_limits<double>::infinity();
            continue;
        }
        const Vec2& g = env.goals[i];
        const double gain = detail::value_outside(x, g, cp, env.obstacle) -
                            detail::value_outside(next, g, cp, env.obstacle) -
                            step_cost(x, g, dt, cp, env.obstacle);
        logp[i] = std::log(b.probs[i]) + cp.obs_sharpness * gain;
        max_log = std::max(max_log, logp[i]);
    }
    if (!std::isfinite(max_log))
        return b;
    Belief out{std::vector<double>(b.size())};
    double sum = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        out.probs[i] = std::exp(logp[i] - max_log);
        sum += out.probs[i];
    }
    if (!(sum > 0.0) || !std::isfinite(sum))
        return b;
    for (double& p : out.probs)
        p /= sum;
    return out;
}

inline double confidence(const Belief& b) {
    return b.probs.empty() ? 0.0 : *std::max_element(b.probs.begin(), b.probs.end());
}

inline double arbitration_alpha(double conf, const BlendParams& bp = {}) {
    if (conf <= bp.conf_low)
        return 0.0;
    if (conf >= bp.conf_high)
        return bp.alpha_max;
    return bp.alpha_max * (conf - bp.conf_low) / (bp.conf_high - bp.conf_low);
}

/// Autonomous command: auto_speed down the belief-weighted value gradient.
inline Vec2 autonomous_action(const Belief& b, const Vec2& x, const Environment& env,
                              const CostParams& cp) {
    Vec2 grad;
    for (std::size_t i = 0; i < b.size() && i < env.goals.size(); ++i)
        if (b.probs[i] > 0.0)
            grad += value_gradient(x, env.goals[i], cp, env.obstacle) * b.probs[i];
    return unit_or_zero(grad) * -cp.auto_speed;
}

/// Within the margin: optionally drop the inward radial part of u, then push
/// outward at a fixed speed.
inline Vec2 apply_obstacle_response(Vec2 u, const Vec2& x, const std::optional<Sphere>& obs,
                                    const ObstacleResponse& resp, bool constrain) {
    if (!obs)
        return u;
    const Vec2 out = x - obs->center;
    const double dist = out.norm();
    if (dist >= obs->radius + resp.margin)
        return u;
    const Vec2 n = dist > 0.0 ? out / dist : Vec2{0.0, 1.0};
    if (constrain) {
        const double radial = u.dot(n);
        if (radial < 0.0)
            u -= n * radial;
    }
    return u + n * resp.push_speed;
}

/// u_R = u_R^A + u_R^u with u_R^u = u_H, clamped to the robot speed limit.
inline Vec2 hindsight_action(const Belief& b, const Vec2& x, const Vec2& u_H,
                             const Environment& env, const CostParams& cp,
                             const ObstacleResponse& resp = {}) {
    Vec2 u = autonomous_action(b, x, env, cp) + u_H;
    u = apply_obstacle_response(u, x, env.obstacle, resp, resp.hindsight_constrained);
    return clamp_norm(u, cp.robot_max_speed);
}

inline Vec2 blend_action(const Belief& b, const Vec2& x, const Vec2& u_H, const Environment& env,
                         const CostParams& cp, const BlendParams& bp = {},
                         const ObstacleResponse& resp = {}) {
    const double alpha = arbitration_alpha(confidence(b), bp);
    Vec2 u = autonomous_action(b, x, env, cp) * alpha + u_H * (1.0 - alpha);
    u = apply_obstacle_response(u, x, env.obstacle, resp, false);
    return clamp_norm(u, cp.robot_max_speed);
}

}  // namespace qdsa
