#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "laplab/harness.hpp"

namespace laplab {

inline constexpr const char* kCsvHeader =
    "experiment,manifold,density,laplacian,kernel,N,eps,replica,metric,value,wall_ms,solver,residual";

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_ms(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

} // namespace detail

/// Results CSV: one metric row per measurement, UTF-8, LF line ends, '.'
/// decimal separator. Failed cells appear as metric "failed" with value nan.
inline void write_csv(const SweepResult& res, const std::string& path) {
    std::ofstream f(path, std::ios::binary);  // binary: no newline translation
    if (!f) throw std::runtime_error("write_csv: cannot open " + path);
    const auto& c = res.config;
    const std::string prefix = to_string(c.experiment) + "," + to_string(c.manifold) + "," +
                               to_string(c.density) + "," + to_string(c.laplacian) + "," +
                               to_string(c.kernel) + ",";
    f << kCsvHeader << "\n";
    for (const auto& r : res.records) {
        const std::string row_tail = "," + detail::fmt_ms(r.wall_ms) + "," +
                                     (r.solver.empty() ? "none" : r.solver) + "," +
                                     detail::fmt_g17(r.residual);
        const std::string cell = prefix + std::to_string(r.n) + "," + detail::fmt_g17(r.eps) +
                                 "," + std::to_string(r.replica) + ",";
        if (r.failed) {
            f << cell << "failed," << detail::fmt_g17(std::numeric_limits<double>::quiet_NaN())
              << row_tail << "\n";
            continue;
        }
        for (const auto& [name, value] : r.metrics)
            f << cell << name << "," << detail::fmt_g17(value) << row_tail << "\n";
    }
    if (!f) throw std::runtime_error("write_csv: write failed for " + path);
}

/// Rebuilds a SweepResult (records + aggregates) from a results CSV, for
/// re-plotting. Metric values round-trip exactly through the %.17g format, so
/// plots regenerated from CSV match the originals byte for byte.
inline SweepResult read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != kCsvHeader)
        throw std::runtime_error("read_csv: unexpected header in " + path);

    struct Row {
        std::string experiment, manifold, density, laplacian, kernel, metric, solver;
        int n = 0, replica = 0;
        double eps = 0, value = 0, wall_ms = 0, residual = 0;
    };
    std::vector<Row> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> parts;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) parts.push_back(tok);
        if (parts.size() != 13) throw std::runtime_error("read_csv: malformed row: " + line);
        Row r;
        r.experiment = parts[0]; r.manifold = parts[1]; r.density = parts[2];
        r.laplacian = parts[3]; r.kernel = parts[4];
        r.n = std::stoi(parts[5]); r.eps = std::strtod(parts[6].c_str(), nullptr);
        r.replica = std::stoi(parts[7]); r.metric = parts[8];
        r.value = std::strtod(parts[9].c_str(), nullptr);
        r.wall_ms = std::strtod(parts[10].c_str(), nullptr);
        r.solver = parts[11];
        r.residual = std::strtod(parts[12].c_str(), nullptr);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw std::runtime_error("read_csv: no data rows in " + path);

    SweepResult res;
    ExperimentConfig& c = res.config;
    c.experiment = parse_experiment(rows[0].experiment);
    c.manifold = parse_manifold(rows[0].manifold);
    c.density = parse_density(rows[0].density);
    c.laplacian = parse_laplacian(rows[0].laplacian);
    c.kernel = parse_kernel(rows[0].kernel);

    std::set<int> ns;
    std::set<double> epss;
    std::set<std::string> metrics;
    int max_rep = 0;
    for (const auto& r : rows) {
        ns.insert(r.n);
        epss.insert(r.eps);
        max_rep = std::max(max_rep, r.replica);
        if (r.metric != "failed") metrics.insert(r.metric);
    }
    c.n_grid.assign(ns.begin(), ns.end());
    const bool derived_eps = c.experiment == ExperimentType::FormCheck;
    if (!derived_eps) c.eps_grid.assign(epss.begin(), epss.end());
    c.replicas = max_rep + 1;
    res.metric_names.assign(metrics.begin(), metrics.end());

    auto n_index = [&](int n) {
        return int(std::lower_bound(c.n_grid.begin(), c.n_grid.end(), n) - c.n_grid.begin());
    };
    auto eps_index = [&](double e) {
        if (derived_eps) return 0;
        return int(std::lower_bound(c.eps_grid.begin(), c.eps_grid.end(), e) - c.eps_grid.begin());
    };

    std::map<std::tuple<int, int, int>, CellRecord> cells;
    for (const auto& r : rows) {
        const auto key = std::make_tuple(n_index(r.n), eps_index(r.eps), r.replica);
        CellRecord& rec = cells[key];
        rec.n_index = std::get<0>(key);
        rec.eps_index = std::get<1>(key);
        rec.replica = r.replica;
        rec.n = r.n;
        rec.eps = r.eps;
        rec.wall_ms = r.wall_ms;
        rec.solver = r.solver;
        rec.residual = r.residual;
        if (r.metric == "failed")
            rec.failed = true;
        else
            rec.metrics.emplace_back(r.metric, r.value);
    }
    res.records.reserve(cells.size());
    for (auto& [key, rec] : cells) res.records.push_back(std::move(rec));
    detail::aggregate(res);
    return res;
}

/// Aggregate JSON: grids, per-cell means and standard errors, best-eps table,
/// fitted slopes with r^2, wall-time accounting.
inline void write_json(const SweepResult& res, const std::string& path) {
    using json = nlohmann::ordered_json;
    const auto& c = res.config;
    json j;
    j["experiment"] = to_string(c.experiment);
    j["manifold"] = to_string(c.manifold);
    j["density"] = to_string(c.density);
    j["laplacian"] = to_string(c.laplacian);
    j["kernel"] = to_string(c.kernel);
    j["k_max"] = c.k_max;
    j["replicas"] = c.replicas;
    j["base_seed"] = c.base_seed;
    j["backend"] = to_string(c.backend);
    j["n_grid"] = c.n_grid;
    if (!c.eps_grid.empty()) {
        j["eps_grid"] = c.eps_grid;
    } else {
        std::vector<double> eps;
        std::set<double> seen;
        for (const auto& r : res.records)
            if (seen.insert(r.eps).second) eps.push_back(r.eps);
        j["eps_per_n"] = eps;
    }

    int failures = 0;
    for (const auto& r : res.records) failures += r.failed ? 1 : 0;
    j["records"] = res.records.size();
    j["failed_cells"] = failures;

    for (const auto& name : res.metric_names) {
        json m;
        const auto& grid = res.aggregates.at(name);
        json means = json::array(), stderrs = json::array(), counts = json::array();
        for (const auto& row : grid) {
            json mr = json::array(), sr = json::array(), cr = json::array();
            for (const auto& a : row) {
                mr.push_back(a.mean);
                sr.push_back(a.stderr_);
                cr.push_back(a.count);
            }
            means.push_back(mr);
            stderrs.push_back(sr);
            counts.push_back(cr);
        }
        m["mean"] = means;
        m["stderr"] = stderrs;
        m["count"] = counts;
        m["best_eps_index"] = res.best_eps_index.at(name);
        json best_eps = json::array(), best_mean = json::array();
        for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
            const int b = res.best_eps_index.at(name)[i];
            if (b < 0) {
                best_eps.push_back(nullptr);
                best_mean.push_back(nullptr);
            } else {
                best_eps.push_back(c.eps_grid.empty() ? res.records[i * c.replicas].eps
                                                      : c.eps_grid[b]);
                best_mean.push_back(grid[i][b].mean);
            }
        }
        m["best_eps"] = best_eps;
        m["best_mean"] = best_mean;
        auto put_fit = [&](const char* key, const std::optional<SlopeFit>& fit) {
            if (!fit) return;
            m[key] = {{"slope", fit->slope}, {"intercept", fit->intercept}, {"r2", fit->r2}};
        };
        if (auto it = res.best_slope.find(name); it != res.best_slope.end())
            put_fit("best_error_fit", it->second);
        if (auto it = res.small_eps_slope.find(name); it != res.small_eps_slope.end())
            put_fit("small_eps_fit", it->second);
        if (auto it = res.large_eps_slope.find(name); it != res.large_eps_slope.end())
            put_fit("large_eps_fit", it->second);
        j["metrics"][name] = m;
    }
    j["cells_wall_ms_total"] = res.cells_wall_ms_total;
    j["wall_clock_ms"] = res.wall_clock_ms;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_json: cannot open " + path);
    f << j.dump(2) << "\n";
    if (!f) throw std::runtime_error("write_json: write failed for " + path);
}

inline void write_json(const ValidationReport& rep, const ExperimentConfig& cfg,
                       const std::string& path) {
    using json = nlohmann::ordered_json;
    json j;
    j["experiment"] = to_string(cfg.experiment);
    j["all_pass"] = rep.all_pass;
    json checks = json::array();
    for (const auto& c : rep.checks) {
        json e;
        e["name"] = c.name;
        e["measured"] = c.measured;
        e["threshold"] = c.threshold;
        e["pass"] = c.pass;
        if (!c.note.empty()) e["note"] = c.note;
        checks.push_back(e);
    }
    j["checks"] = checks;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_json: cannot open " + path);
    f << j.dump(2) << "\n";
}

} // namespace laplab
