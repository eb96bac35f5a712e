// Copyright 2026 The qdsa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

/// JSON and CSV serialization for scenarios, traces, archives and heatmaps.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdsa/archive.hpp"
#include "qdsa/scenario.hpp"
#include "qdsa/search.hpp"
#include "qdsa/sim.hpp"

namespace qdsa {

using json = nlohmann::json;

/// Shortest round-trip representation; "nan" / "inf" / "-inf" otherwise.
inline std::string format_double(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{})
        throw std::runtime_error("number formatting failed");
    return std::string(buf.data(), end);
}

inline double parse_double(const std::string& s) {
    if (s == "nan" || s.empty())
        return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("not a number: " + s);
    return v;
}

inline json to_json(const ScenarioParams& p) {
    return json{{"phi", p.phi}, {"theta", p.theta}, {"domain", std::string(to_string(p.domain))}};
}

inline ScenarioParams scenario_from_json(const json& j) {
    ScenarioParams p;
    p.phi = j.at("phi").get<std::vector<double>>();
    p.theta = j.at("theta").get<std::vector<double>>();
    p.domain = domain_from_string(j.at("domain").get<std::string>());
    return p;
}

inline json to_json(const EpisodeOutcome& o) {
    return json{{"termination", std::string(to_string(o.termination))},
                {"elapsed", o.elapsed},
                {"collided", o.collided},
                {"final_position", {o.final_position.x, o.final_position.y}}};
}

/// Column arrays t, x, y, uhx, uhy, urx, ury and one belief vector per step.
inline json trace_to_json(const EpisodeTrace& tr) {
    json j;
    std::vector<double> t, x, y, uhx, uhy, urx, ury;
    for (const auto& s : tr.steps) {
        t.push_back(s.t);
        x.push_back(s.x.x);
        y.push_back(s.x.y);
        uhx.push_back(s.u_H.x);
        uhy.push_back(s.u_H.y);
        urx.push_back(s.u_R.x);
        ury.push_back(s.u_R.y);
    }
    json belief = json::array();
    for (std::size_t k = 0; k < tr.steps.size(); ++k)
        belief.push_back(tr.belief_at(k));
    j["t"] = t;
    j["x"] = x;
    j["y"] = y;
    j["uhx"] = uhx;
    j["uhy"] = uhy;
    j["urx"] = urx;
    j["ury"] = ury;
    j["belief"] = belief;
    j["outcome"] = to_json(tr.outcome);
    return j;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

/// Splits one CSV line, honouring double-quoted fields.
inline std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

/// One row per occupied cell in ascending flat order:
/// cell_<dim>..., <dim>..., f, eval_index, scenario.
inline std::string archive_csv(const Archive& a) {
    std::ostringstream os;
    const auto& dims = a.spec().dims;
    for (const auto& d : dims)
        os << "cell_" << d.name << ',';
    for (const auto& d : dims)
        os << d.name << ',';
    os << "f,eval_index,scenario\n";
    for (std::size_t flat : a.sorted_cells()) {
        const Elite& e = *a.cell(flat);
        for (std::size_t i : unflatten_index(a.spec(), flat))
            os << i << ',';
        for (double v : e.bc)
            os << format_double(v) << ',';
        os << format_double(e.f) << ',' << e.eval_index << ',' << csv_quote(to_json(e.scenario).dump()) << '\n';
    }
    return os.str();
}

struct ArchiveTable {
    std::vector<std::string> dim_names;
    std::vector<CellIndex> cells;
    std::vector<BcVector> bcs;
    std::vector<double> f;
};

inline ArchiveTable read_archive_csv(std::istream& in) {
    ArchiveTable t;
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty archive file");
    const auto header = csv_split(line);
    for (const auto& h : header)
        if (h.rfind("cell_", 0) == 0)
            t.dim_names.push_back(h.substr(5));
    const std::size_t k = t.dim_names.size();
    if (k == 0 || header.size() < 2 * k + 3)
        throw std::runtime_error("unrecognised archive header");
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto row = csv_split(line);
        if (row.size() != header.size())
            throw std::runtime_error("malformed archive row");
        CellIndex idx(k);
        BcVector bc(k);
        for (std::size_t i = 0; i < k; ++i) {
            idx[i] = std::stoul(row[i]);
            bc[i] = parse_double(row[k + i]);
        }
        t.cells.push_back(std::move(idx));
        t.bcs.push_back(std::move(bc));
        t.f.push_back(parse_double(row[2 * k]));
    }
    return t;
}

/// Dense f grid over the first two dimensions (NaN where empty). A third
/// dimension, if present, selects the slice.
inline std::vector<double> dense_grid(const BehaviorSpaceSpec& spec, const std::vector<CellIndex>& cells,
                                      const std::vector<double>& f, std::size_t slice) {
    const std::size_t rows = spec.dims.at(0).bins;
    const std::size_t cols = spec.dims.at(1).bins;
    std::vector<double> g(rows * cols, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        if (c.size() > 2 && c[2] != slice)
            continue;
        g[c[0] * cols + c[1]] = f[i];
    }
    return g;
}

/// Rows follow the first dimension, columns the second. For three
/// dimensions each slice of the third is written as its own block, tagged
/// by a leading slice column.
inline std::string heatmap_csv(const BehaviorSpaceSpec& spec, const std::vector<CellIndex>& cells,
                               const std::vector<double>& f) {
    if (spec.dims.size() < 2 || spec.dims.size() > 3)
        throw std::invalid_argument("heatmap needs a 2-D or 3-D behavior space");
    const bool sliced = spec.dims.size() == 3;
    const std::size_t rows = spec.dims[0].bins;
    const std::size_t cols = spec.dims[1].bins;
    const std::size_t slices = sliced ? spec.dims[2].bins : 1;
    std::ostringstream os;
    if (sliced)
        os << spec.dims[2].name << ',';
    os << spec.dims[0].name << '\\' << spec.dims[1].name;
    for (std::size_t c = 0; c < cols; ++c)
        os << ',' << c;
    os << '\n';
    for (std::size_t s = 0; s < slices; ++s) {
        const auto g = dense_grid(spec, cells, f, s);
        for (std::size_t r = 0; r < rows; ++r) {
            if (sliced)
                os << s << ',';
            os << r;
            for (std::size_t c = 0; c < cols; ++c)
                os << ',' << format_double(g[r * cols + c]);
            os << '\n';
        }
    }
    return os.str();
}

inline std::string heatmap_csv(const Archive& a) {
    std::vector<CellIndex> cells;
    std::vector<double> f;
    for (std::size_t flat : a.sorted_cells()) {
        cells.push_back(unflatten_index(a.spec(), flat));
        f.push_back(a.cell(flat)->f);
    }
    return heatmap_csv(a.spec(), cells, f);
}

/// Blue (low f) to red (high f); empty cells light grey.
inline std::string heatmap_svg(const BehaviorSpaceSpec& spec, const std::vector<CellIndex>& cells,
                               const std::vector<double>& f) {
    const std::size_t rows = spec.dims.at(0).bins;
    const std::size_t cols = spec.dims.at(1).bins;
    const std::size_t slices = spec.dims.size() > 2 ? spec.dims[2].bins : 1;
    const double cw = std::max(4.0, 600.0 / static_cast<double>(cols));
    const double ch = std::max(4.0, 400.0 / static_cast<double>(rows));
    const double panel_w = cw * static_cast<double>(cols);
    const double panel_h = ch * static_cast<double>(rows);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : f) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(panel_w * slices + 20.0 * slices)
       << "\" height=\"" << format_double(panel_h + 40.0) << "\">\n";
    for (std::size_t s = 0; s < slices; ++s) {
        const double ox = static_cast<double>(s) * (panel_w + 20.0);
        const auto g = dense_grid(spec, cells, f, s);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const double v = g[r * cols + c];
                std::string fill = "#dddddd";
                if (!std::isnan(v)) {
                    const double u = hi > lo ? (v - lo) / (hi - lo) : 0.5;
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "#%02x40%02x", static_cast<int>(255 * u),
                                  static_cast<int>(255 * (1 - u)));
                    fill = buf;
                }
                // Row 0 at the bottom, like a plot axis.
                os << "<rect x=\"" << format_double(ox + cw * static_cast<double>(c)) << "\" y=\""
                   << format_double(panel_h - ch * static_cast<double>(r + 1)) << "\" width=\"" << format_double(cw)
                   << "\" height=\"" << format_double(ch) << "\" fill=\"" << fill << "\"/>\n";
            }
        }
        os << "<text x=\"" << format_double(ox) << "\" y=\"" << format_double(panel_h + 16.0)
           << "\" font-size=\"12\">" << spec.dims[1].name << " (x) vs " << spec.dims[0].name << " (y)";
        if (slices > 1)
            os << ", " << spec.dims[2].name << " bin " << s;
        os << "</text>\n";
    }
    os << "<text x=\"0\" y=\"" << format_double(panel_h + 34.0) << "\" font-size=\"12\">f range "
       << format_double(lo) << " to " << format_double(hi) << "</text>\n</svg>\n";
    return os.str();
}

inline std::string qdscore_csv(const SearchLog& log) {
    std::ostringstream os;
    os << "eval_index,qd_score,coverage\n";
    for (const auto& s : log.qd_timeseries)
        os << s.eval_index << ',' << format_double(s.qd_score) << ',' << format_double(s.coverage) << '\n';
    return os.str();
}

}  // namespace qdsa
