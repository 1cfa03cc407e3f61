#pragma once

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "laplab/harness.hpp"

namespace laplab {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace toml {

/// Strict flat-TOML subset: `key = value` lines, `#` comments, values are
/// strings, integers, floats, booleans, or homogeneous arrays of those.
/// Anything else (tables, dates, multi-line constructs) is rejected, and every
/// key must be consumed by the schema: unknown keys are errors, not warnings.
using Value = std::variant<std::string, std::int64_t, double, bool,
                           std::vector<double>, std::vector<std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

inline Value parse_scalar(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    if (s.empty()) throw config_error("config: empty value for key '" + key + "'");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw config_error("config: unterminated string for key '" + key + "'");
        return s.substr(1, s.size() - 2);
    }
    if (s == "true") return true;
    if (s == "false") return false;
    errno = 0;
    char* end = nullptr;
    if (s.find_first_of(".eE") == std::string::npos) {
        const long long v = std::strtoll(s.c_str(), &end, 10);
        if (end == s.c_str() + s.size() && errno == 0) return static_cast<std::int64_t>(v);
    }
    const double d = std::strtod(s.c_str(), &end);
    if (end == s.c_str() + s.size() && errno == 0) return d;
    throw config_error("config: cannot parse value '" + s + "' for key '" + key + "'");
}

} // namespace detail

inline std::map<std::string, Value> parse(std::istream& in, const std::string& origin) {
    std::map<std::string, Value> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = detail::trim(detail::strip_comment(line));
        if (body.empty()) continue;
        const auto where = origin + ":" + std::to_string(lineno);
        if (body.front() == '[')
            throw config_error("config: tables are not supported (" + where + ")");
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw config_error("config: expected 'key = value' (" + where + ")");
        const std::string key = detail::trim(body.substr(0, eq));
        std::string value = detail::trim(body.substr(eq + 1));
        if (key.empty()) throw config_error("config: empty key (" + where + ")");
        if (out.count(key)) throw config_error("config: duplicate key '" + key + "' (" + where + ")");
        if (!value.empty() && value.front() == '[') {
            if (value.back() != ']')
                throw config_error("config: unterminated array (" + where + ")");
            std::string inner = value.substr(1, value.size() - 2);
            std::vector<std::string> items;
            std::string cur;
            bool in_str = false;
            for (char ch : inner) {
                if (ch == '"') in_str = !in_str;
                if (ch == ',' && !in_str) {
                    items.push_back(cur);
                    cur.clear();
                } else {
                    cur += ch;
                }
            }
            if (!detail::trim(cur).empty()) items.push_back(cur);
            bool strings = false, numbers = false;
            std::vector<double> nums;
            std::vector<std::string> strs;
            for (const auto& item : items) {
                Value v = detail::parse_scalar(item, key);
                if (std::holds_alternative<std::string>(v)) {
                    strings = true;
                    strs.push_back(std::get<std::string>(v));
                } else if (std::holds_alternative<std::int64_t>(v)) {
                    numbers = true;
                    nums.push_back(static_cast<double>(std::get<std::int64_t>(v)));
                } else if (std::holds_alternative<double>(v)) {
                    numbers = true;
                    nums.push_back(std::get<double>(v));
                } else {
                    throw config_error("config: unsupported array element (" + where + ")");
                }
            }
            if (strings && numbers)
                throw config_error("config: mixed array types for key '" + key + "'");
            if (strings)
                out.emplace(key, strs);
            else
                out.emplace(key, nums);
        } else {
            out.emplace(key, detail::parse_scalar(value, key));
        }
    }
    return out;
}

} // namespace toml

namespace detail {

/// Typed access with consumption; leftover keys are reported as errors.
class ConfigReader {
public:
    explicit ConfigReader(std::map<std::string, toml::Value> kv) : kv_(std::move(kv)) {}

    std::optional<std::string> take_string(const std::string& key) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return std::nullopt;
        if (!std::holds_alternative<std::string>(it->second))
            throw config_error("config: key '" + key + "' must be a string");
        std::string v = std::get<std::string>(it->second);
        kv_.erase(it);
        return v;
    }
    std::optional<std::int64_t> take_int(const std::string& key) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return std::nullopt;
        if (!std::holds_alternative<std::int64_t>(it->second))
            throw config_error("config: key '" + key + "' must be an integer");
        std::int64_t v = std::get<std::int64_t>(it->second);
        kv_.erase(it);
        return v;
    }
    std::optional<double> take_number(const std::string& key) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return std::nullopt;
        double v = 0;
        if (std::holds_alternative<double>(it->second))
            v = std::get<double>(it->second);
        else if (std::holds_alternative<std::int64_t>(it->second))
            v = static_cast<double>(std::get<std::int64_t>(it->second));
        else
            throw config_error("config: key '" + key + "' must be a number");
        kv_.erase(it);
        return v;
    }
    std::optional<bool> take_bool(const std::string& key) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return std::nullopt;
        if (!std::holds_alternative<bool>(it->second))
            throw config_error("config: key '" + key + "' must be a boolean");
        bool v = std::get<bool>(it->second);
        kv_.erase(it);
        return v;
    }
    std::optional<std::vector<double>> take_numbers(const std::string& key) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return std::nullopt;
        if (!std::holds_alternative<std::vector<double>>(it->second))
            throw config_error("config: key '" + key + "' must be a numeric array");
        std::vector<double> v = std::get<std::vector<double>>(it->second);
        kv_.erase(it);
        return v;
    }
    void finish() const {
        if (kv_.empty()) return;
        std::string keys;
        for (const auto& [k, v] : kv_) keys += (keys.empty() ? "" : ", ") + k;
        throw config_error("config: unknown key(s): " + keys);
    }

private:
    std::map<std::string, toml::Value> kv_;
};

inline std::vector<int> log_spaced_counts(int lo, int hi, int count) {
    if (lo < 1 || hi < lo || count < 1)
        throw config_error("config: invalid N range");
    std::vector<int> out;
    for (int i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        const int v = static_cast<int>(std::lround(std::exp(
            std::log(double(lo)) + f * (std::log(double(hi)) - std::log(double(lo))))));
        if (out.empty() || v > out.back()) out.push_back(v);
    }
    return out;
}

inline std::vector<double> log_spaced(double lo, double hi, int count) {
    if (!(lo > 0) || !(hi >= lo) || count < 1)
        throw config_error("config: invalid eps range");
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        out.push_back(std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))));
    }
    return out;
}

} // namespace detail

/// Parses an experiment TOML file into an ExperimentConfig. Grids are given
/// either explicitly (n_list / eps_list) or as log-spaced ranges
/// (n_min, n_max, n_count / eps_min, eps_max, eps_count).
inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("config: cannot open " + path);
    detail::ConfigReader r(toml::parse(f, path));
    ExperimentConfig c;

    const auto exp = r.take_string("experiment");
    if (!exp) throw config_error("config: missing required key 'experiment'");
    try {
        c.experiment = parse_experiment(*exp);
        if (auto v = r.take_string("manifold")) c.manifold = parse_manifold(*v);
        if (auto v = r.take_string("density")) c.density = parse_density(*v);
        if (auto v = r.take_string("laplacian")) c.laplacian = parse_laplacian(*v);
        if (auto v = r.take_string("kernel")) c.kernel = parse_kernel(*v);
        if (auto v = r.take_string("backend")) c.backend = parse_backend(*v);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("config: ") + e.what());
    }

    if (auto v = r.take_numbers("n_list")) {
        for (double d : *v) c.n_grid.push_back(static_cast<int>(std::lround(d)));
    } else if (auto lo = r.take_int("n_min")) {
        const auto hi = r.take_int("n_max");
        const auto count = r.take_int("n_count");
        if (!hi || !count) throw config_error("config: n_min requires n_max and n_count");
        c.n_grid = detail::log_spaced_counts(static_cast<int>(*lo), static_cast<int>(*hi),
                                             static_cast<int>(*count));
    } else if (auto n = r.take_int("n")) {
        c.n_grid = {static_cast<int>(*n)};
    }

    if (auto v = r.take_numbers("eps_list")) {
        c.eps_grid = *v;
    } else if (auto lo = r.take_number("eps_min")) {
        const auto hi = r.take_number("eps_max");
        const auto count = r.take_int("eps_count");
        if (!hi || !count) throw config_error("config: eps_min requires eps_max and eps_count");
        c.eps_grid = detail::log_spaced(*lo, *hi, static_cast<int>(*count));
    } else if (auto e = r.take_number("eps")) {
        c.eps_grid = {*e};
    }

    if (auto v = r.take_int("k_max")) c.k_max = static_cast<int>(*v);
    if (auto v = r.take_int("replicas")) c.replicas = static_cast<int>(*v);
    if (auto v = r.take_int("base_seed")) c.base_seed = static_cast<std::uint64_t>(*v);
    if (auto v = r.take_int("workers")) c.workers = static_cast<int>(*v);
    if (auto v = r.take_number("gap_rel_tol")) c.gap_rel_tol = *v;
    if (auto v = r.take_string("test_function")) c.test_function = *v;
    if (auto v = r.take_string("name")) c.name = *v;
    if (auto v = r.take_string("out_dir")) c.out_dir = *v;
    if (auto v = r.take_bool("quiet")) c.quiet = *v;
    r.finish();

    try {
        validate_config(c);
    } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
    }
    return c;
}

} // namespace laplab
