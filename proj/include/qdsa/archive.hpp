// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

/// Grid archive over a behavior space: one elite per cell, QD-Score and
/// coverage.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdsa/scenario.hpp"

namespace qdsa {

struct BehaviorDim {
    std::string name;
    double low{0.0};
    double high{1.0};
    std::size_t bins{1};

    double bin_width() const { return (high - low) / static_cast<double>(bins); }
    friend bool operator==(const BehaviorDim&, const BehaviorDim&) = default;
};

struct BehaviorSpaceSpec {
    std::vector<BehaviorDim> dims;

    std::size_t cell_count() const {
        std::size_t n = 1;
        for (const auto& d : dims)
            n *= d.bins;
        return n;
    }

    static BehaviorDim goal_distance() { return {"goal_distance", 0.0, 0.32, 25}; }
    static BehaviorDim human_variation() { return {"human_variation", 0.0, 0.11, 100}; }
    static BehaviorDim rationality() { return {"rationality", 0.0, 1000.0, 101}; }
    static BehaviorDim horizontal_distance() { return {"horizontal_distance", 0.0, 0.25, 25}; }
    static BehaviorDim collision() { return {"collision", 0.0, 1.0, 2}; }

    friend bool operator==(const BehaviorSpaceSpec&, const BehaviorSpaceSpec&) = default;
};

using BcVector = std::vector<double>;
using CellIndex = std::vector<std::size_t>;

struct CellLookup {
    CellIndex index;
    /// At least one coordinate fell outside its range and was clamped.
    bool clamped{false};
};

/// Half-open bins [lo, hi); v == high lands in the last bin and out-of-range
/// values clamp to the edge bins. nullopt for NaN or an arity mismatch.
inline std::optional<CellLookup> cell_index(const BehaviorSpaceSpec& spec, const BcVector& bc) {
    if (bc.size() != spec.dims.size())
        return std::nullopt;
    CellLookup out;
    out.index.resize(bc.size());
    for (std::size_t i = 0; i < bc.size(); ++i) {
        const auto& d = spec.dims[i];
        const double v = bc[i];
        if (std::isnan(v))
            return std::nullopt;
        if (v < d.low || v > d.high)
            out.clamped = true;
        const double pos = std::floor((v - d.low) / (d.high - d.low) * static_cast<double>(d.bins));
        if (!(pos >= 0.0))
            out.index[i] = 0;
        else if (pos >= static_cast<double>(d.bins))
            out.index[i] = d.bins - 1;
        else
            out.index[i] = static_cast<std::size_t>(pos);
    }
    return out;
}

/// Row-major flattening, first dimension slowest.
inline std::size_t flat_index(const BehaviorSpaceSpec& spec, const CellIndex& idx) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < idx.size(); ++i)
        flat = flat * spec.dims[i].bins + idx[i];
    return flat;
}

inline CellIndex unflatten_index(const BehaviorSpaceSpec& spec, std::size_t flat) {
    CellIndex idx(spec.dims.size());
    for (std::size_t i = spec.dims.size(); i-- > 0;) {
        idx[i] = flat % spec.dims[i].bins;
        flat /= spec.dims[i].bins;
    }
    return idx;
}

struct Elite {
    ScenarioParams scenario;
    double f{0.0};
    BcVector bc;
    std::size_t eval_index{0};

    friend bool operator==(const Elite&, const Elite&) = default;
};

enum class InsertStatus { NewCell, Improved, Rejected };

class Archive {
public:
    explicit Archive(BehaviorSpaceSpec spec) : spec_(std::move(spec)), cells_(spec_.cell_count()) {
        if (spec_.dims.empty())
            throw std::invalid_argument("behavior space needs at least one dimension");
        for (const auto& d : spec_.dims)
            if (d.bins < 1 || !(d.low < d.high))
                throw std::invalid_argument("invalid behavior dimension " + d.name);
    }

    const BehaviorSpaceSpec& spec() const { return spec_; }
    std::size_t cell_count() const { return cells_.size(); }
    std::size_t size() const { return occupied_.size(); }
    bool empty() const { return occupied_.empty(); }
    std::size_t clamp_events() const { return clamp_events_; }

    const std::optional<Elite>& cell(std::size_t flat) const { return cells_.at(flat); }

    /// Flat indices of occupied cells in insertion order of first occupation.
    const std::vector<std::size_t>& occupied() const { return occupied_; }

    /// Keeps the incumbent on ties.
    InsertStatus try_insert(const Elite& e) {
        const auto lookup = cell_index(spec_, e.bc);
        if (!lookup || !std::isfinite(e.f))
            return InsertStatus::Rejected;
        if (lookup->clamped)
            ++clamp_events_;
        const std::size_t flat = flat_index(spec_, lookup->index);
        auto& slot = cells_[flat];
        if (!slot) {
            slot = e;
            occupied_.push_back(flat);
            return InsertStatus::NewCell;
        }
        if (slot->f < e.f) {
            slot = e;
            return InsertStatus::Improved;
        }
        return InsertStatus::Rejected;
    }

    /// Summed in cell order so the score does not depend on insertion order.
    double qd_score() const {
        double s = 0.0;
        for (const auto& c : cells_)
            if (c)
                s += c->f;
        return s;
    }

    double coverage() const {
        return static_cast<double>(occupied_.size()) / static_cast<double>(cells_.size());
    }

    std::vector<Elite> elites() const {
        std::vector<Elite> out;
        out.reserve(occupied_.size());
        for (std::size_t flat : occupied_)
            out.push_back(*cells_[flat]);
        return out;
    }

    /// Occupied flat indices in ascending order.
    std::vector<std::size_t> sorted_cells() const {
        std::vector<std::size_t> v(occupied_);
        std::sort(v.begin(), v.end());
        return v;
    }

private:
    BehaviorSpaceSpec spec_;
    std::vector<std::optional<Elite>> cells_;
    std::vector<std::size_t> occupied_;
    std::size_t clamp_events_{0};
};

/// Sum of elite assessments; empty cells contribute nothing.
inline double qd_score(const Archive& a) { return a.qd_score(); }
inline double coverage(const Archive& a) { return a.coverage(); }

/// Archive populated after the fact from another algorithm's evaluations.
template <typename Range>
Archive pseudo_archive(const Range& evals, const BehaviorSpaceSpec& spec) {
    Archive a(spec);
    for (const Elite& e : evals)
        a.try_insert(e);
    return a;
}

}  // namespace qdsa
