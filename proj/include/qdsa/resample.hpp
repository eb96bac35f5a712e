// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "qdsa/scenario.hpp"

namespace qdsa {

template <typename T>
struct Resampled {
    T value;
    /// max_tries draws all fell outside the bounds; value was clamped.
    bool clamped{false};
    std::size_t tries{0};
};

inline bool within(const std::vector<double>& v, const std::vector<Interval>& bounds) {
    if (v.size() != bounds.size())
        return false;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!bounds[i].contains(v[i]))
            return false;
    return true;
}

/// Redraws the whole vector until it lies inside the box; clamps the last draw
/// after max_tries failures.
template <typename Draw>
Resampled<std::vector<double>> resample_into_bounds(Draw&& draw, const std::vector<Interval>& bounds,
                                                    std::size_t max_tries = 100) {
    std::vector<double> v;
    for (std::size_t t = 1; t <= std::max<std::size_t>(1, max_tries); ++t) {
        v = draw();
        if (within(v, bounds))
            return {std::move(v), false, t};
    }
    for (std::size_t i = 0; i < v.size() && i < bounds.size(); ++i)
        v[i] = std::clamp(v[i], bounds[i].low, bounds[i].high);
    return {std::move(v), true, max_tries};
}

template <typename Draw>
Resampled<ScenarioParams> resample_into_bounds(Draw&& draw, const Bounds& bounds,
                                               std::size_t max_tries = 100) {
    ScenarioParams p;
    for (std::size_t t = 1; t <= std::max<std::size_t>(1, max_tries); ++t) {
        p = draw();
        if (bounds.contains(p))
            return {std::move(p), false, t};
    }
    return {bounds.clamp(std::move(p)), true, max_tries};
}

}  // namespace qdsa
