// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

/// (mu/mu_w, lambda)-CMA-ES maximizing a scalar objective, with box
/// resampling and population-doubling restarts.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "qdsa/resample.hpp"
#include "qdsa/scenario.hpp"

namespace qdsa {

struct CmaConfig {
    double initial_sigma{0.05};
    std::size_t initial_lambda{12};
    /// Defaults to lambda / 2.
    std::optional<std::size_t> mu;
    std::size_t stagnation_generations{50};
    double tol_x{1e-12};
    std::size_t max_resample_tries{100};
};

/// Strategy constants derived from dimension and population size.
struct CmaConstants {
    std::size_t lambda{0};
    std::size_t mu{0};
    Eigen::VectorXd weights;
    double mu_eff{0.0};
    double c_sigma{0.0};
    double d_sigma{0.0};
    double c_c{0.0};
    double c_1{0.0};
    double c_mu{0.0};
    double chi_n{0.0};

    static CmaConstants make(std::size_t n, std::size_t lambda, std::optional<std::size_t> mu_override) {
        CmaConstants k;
        const double dn = static_cast<double>(n);
        k.lambda = lambda;
        k.mu = std::max<std::size_t>(1, mu_override.value_or(lambda / 2));
        k.weights.resize(static_cast<Eigen::Index>(k.mu));
        for (std::size_t i = 0; i < k.mu; ++i)
            k.weights[static_cast<Eigen::Index>(i)] =
                std::log(static_cast<double>(k.mu) + 0.5) - std::log(static_cast<double>(i + 1));
        k.weights /= k.weights.sum();
        k.mu_eff = 1.0 / k.weights.squaredNorm();
        k.c_sigma = (k.mu_eff + 2.0) / (dn + k.mu_eff + 5.0);
        k.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((k.mu_eff - 1.0) / (dn + 1.0)) - 1.0) + k.c_sigma;
        k.c_c = (4.0 + k.mu_eff / dn) / (dn + 4.0 + 2.0 * k.mu_eff / dn);
        k.c_1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + k.mu_eff);
        k.c_mu = std::min(1.0 - k.c_1,
                          2.0 * (k.mu_eff - 2.0 + 1.0 / k.mu_eff) / ((dn + 2.0) * (dn + 2.0) + k.mu_eff));
        k.chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));
        return k;
    }
};

struct CmaState {
    Eigen::VectorXd mean;
    double sigma{0.05};
    Eigen::MatrixXd cov;
    Eigen::VectorXd p_c;
    Eigen::VectorXd p_sigma;
    std::size_t lambda{12};
    std::size_t generation{0};
    std::size_t restarts{0};
    double best_f{-std::numeric_limits<double>::infinity()};
    std::size_t stagnant_generations{0};
    std::size_t covariance_resets{0};

    /// Restored on restart or when the covariance degenerates.
    Eigen::VectorXd initial_diag;
    double initial_sigma{0.05};

    CmaConstants constants;
    /// cov = B diag(D^2) B^T
    Eigen::MatrixXd B;
    Eigen::VectorXd D;

    std::size_t dimension() const { return static_cast<std::size_t>(mean.size()); }
};

inline bool refresh_eigensystem(CmaState& s) {
    s.cov = 0.5 * (s.cov + s.cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.cov);
    if (es.info() != Eigen::Success || !es.eigenvalues().allFinite() || es.eigenvalues().minCoeff() <= 0.0) {
        s.cov = s.initial_diag.asDiagonal();
        s.B = Eigen::MatrixXd::Identity(s.cov.rows(), s.cov.cols());
        s.D = s.initial_diag.cwiseSqrt();
        ++s.covariance_resets;
        return false;
    }
    s.B = es.eigenvectors();
    s.D = es.eigenvalues().cwiseSqrt();
    return true;
}

inline CmaState make_cma_state(const Eigen::VectorXd& mean, const Eigen::VectorXd& initial_diag,
                               const CmaConfig& cfg, std::size_t lambda) {
    CmaState s;
    const auto n = mean.size();
    s.mean = mean;
    s.sigma = cfg.initial_sigma;
    s.initial_sigma = cfg.initial_sigma;
    s.initial_diag = initial_diag;
    s.cov = initial_diag.asDiagonal();
    s.p_c = Eigen::VectorXd::Zero(n);
    s.p_sigma = Eigen::VectorXd::Zero(n);
    s.lambda = std::max<std::size_t>(4, lambda);
    s.constants = CmaConstants::make(static_cast<std::size_t>(n), s.lambda, cfg.mu);
    refresh_eigensystem(s);
    return s;
}

struct CmaCandidate {
    std::vector<double> x;
    /// (x - mean) / sigma actually taken, after resampling or clamping.
    Eigen::VectorXd y;
    bool clamped{false};
};

/// lambda draws from N(mean, sigma^2 cov), each resampled into the box.
inline std::vector<CmaCandidate> cma_sample(const CmaState& s, Rng& rng,
                                            const std::vector<Interval>& bounds,
                                            std::size_t max_tries = 100) {
    const auto n = s.mean.size();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<CmaCandidate> out;
    out.reserve(s.lambda);
    for (std::size_t k = 0; k < s.lambda; ++k) {
        auto draw = [&] {
            Eigen::VectorXd z(n);
            for (Eigen::Index i = 0; i < n; ++i)
                z[i] = normal(rng);
            const Eigen::VectorXd x = s.mean + s.sigma * (s.B * s.D.asDiagonal() * z);
            return std::vector<double>(x.data(), x.data() + n);
        };
        auto r = resample_into_bounds(draw, bounds, max_tries);
        CmaCandidate c;
        c.x = std::move(r.value);
        c.clamped = r.clamped;
        const Eigen::Map<const Eigen::VectorXd> xv(c.x.data(), n);
        c.y = s.sigma > 0.0 ? Eigen::VectorXd((xv - s.mean) / s.sigma) : Eigen::VectorXd::Zero(n);
        out.push_back(std::move(c));
    }
    return out;
}

/// Ranks by descending f (non-finite last, stable on ties) and applies the
/// standard recombination, path, covariance and step-size updates.
inline CmaState cma_update(CmaState s, const std::vector<CmaCandidate>& candidates,
                           const std::vector<double>& f) {
    const auto& k = s.constants;
    const auto n = s.mean.size();
    const double dn = static_cast<double>(n);

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t i) {
        return std::isfinite(f[i]) ? f[i] : -std::numeric_limits<double>::infinity();
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });

    const std::size_t mu = std::min(k.mu, candidates.size());
    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < mu; ++i)
        y_w += k.weights[static_cast<Eigen::Index>(i)] * candidates[order[i]].y;

    s.mean += s.sigma * y_w;

    const Eigen::MatrixXd inv_sqrt = s.B * s.D.cwiseInverse().asDiagonal() * s.B.transpose();
    s.p_sigma = (1.0 - k.c_sigma) * s.p_sigma + std::sqrt(k.c_sigma * (2.0 - k.c_sigma) * k.mu_eff) * (inv_sqrt * y_w);

    const double gen = static_cast<double>(s.generation + 1);
    const double ps_norm = s.p_sigma.norm();
    const bool h_sigma =
        ps_norm / std::sqrt(1.0 - std::pow(1.0 - k.c_sigma, 2.0 * gen)) < (1.4 + 2.0 / (dn + 1.0)) * k.chi_n;
    s.p_c = (1.0 - k.c_c) * s.p_c + (h_sigma ? std::sqrt(k.c_c * (2.0 - k.c_c) * k.mu_eff) : 0.0) * y_w;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < mu; ++i) {
        const auto& y = candidates[order[i]].y;
        rank_mu += k.weights[static_cast<Eigen::Index>(i)] * (y * y.transpose());
    }
    const double delta_h = h_sigma ? 0.0 : k.c_c * (2.0 - k.c_c);
    s.cov = (1.0 - k.c_1 - k.c_mu) * s.cov + k.c_1 * (s.p_c * s.p_c.transpose() + delta_h * s.cov) +
            k.c_mu * rank_mu;
    s.sigma *= std::exp((k.c_sigma / k.d_sigma) * (ps_norm / k.chi_n - 1.0));

    const double gen_best = key(order.front());
    if (gen_best > s.best_f) {
        s.best_f = gen_best;
        s.stagnant_generations = 0;
    } else {
        ++s.stagnant_generations;
    }
    ++s.generation;
    refresh_eigensystem(s);
    return s;
}

enum class RestartDecision { Continue, Restart };

inline RestartDecision cma_restart_check(const CmaState& s, const CmaConfig& cfg) {
    if (s.stagnant_generations >= cfg.stagnation_generations)
        return RestartDecision::Restart;
    if (s.D.size() > 0 && s.sigma * s.D.maxCoeff() < cfg.tol_x)
        return RestartDecision::Restart;
    return RestartDecision::Continue;
}

/// Doubles lambda and restarts from a uniform random mean with the initial
/// step size and covariance.
inline CmaState cma_restart(const CmaState& s, const CmaConfig& cfg, Rng& rng,
                            const std::vector<Interval>& bounds) {
    Eigen::VectorXd mean(s.mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        const auto& iv = bounds[static_cast<std::size_t>(i)];
        mean[i] = std::uniform_real_distribution<double>(iv.low, iv.high)(rng);
    }
    CmaState next = make_cma_state(mean, s.initial_diag, cfg, s.lambda * 2);
    next.restarts = s.restarts + 1;
    next.covariance_resets = s.covariance_resets;
    return next;
}

}  // namespace qdsa
