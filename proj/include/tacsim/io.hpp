#pragma once

// Run configuration, CSV snapshots, run manifest and post-run diagnostics.
//
// Config files are INI-style: `[section]` headers followed by `key = value`;
// keys are addressed as `section.key` (e.g. model.c0, model.potential.a).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tacsim/driver.hpp"
#include "tacsim/errors.hpp"
#include "tacsim/grid.hpp"
#include "tacsim/initial_data.hpp"
#include "tacsim/model.hpp"
#include "tacsim/theta_map.hpp"

namespace tacsim {

inline constexpr const char* kSoftwareVersion = "0.1.0";

// ---------------------------------------------------------------------------
// diagnostics

/// mu = sqrt(xi / rho).
inline ScalarField chemical_potential(const SystemState& s) {
    ScalarField mu(s.rho.grid);
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (!(s.rho[k] > 0.0)) throw DomainError("chemical_potential: rho must be positive");
        mu[k] = std::sqrt(s.xi[k] / s.rho[k]);
    }
    return mu;
}

/// Max-norm of theta dt(xi/theta) - dt xi = -(xi/theta) dt theta between
/// consecutive saved states, i.e. the size of the term dropped from the xi equation.
inline std::vector<double> neglected_term_report(const Trajectory& traj) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
        const auto& a = traj.states[i];
        const auto& b = traj.states[i + 1];
        const double dt = traj.times[i + 1] - traj.times[i];
        double m = 0.0;
        for (std::size_t k = 0; k < a.rho.size(); ++k) {
            const double xi_mid = 0.5 * (a.xi[k] + b.xi[k]);
            const double th_mid = 0.5 * (a.theta[k] + b.theta[k]);
            m = std::max(m, std::abs(xi_mid / th_mid * (b.theta[k] - a.theta[k]) / dt));
        }
        out.push_back(m);
    }
    return out;
}

// ---------------------------------------------------------------------------
// configuration

struct RunConfig {
    ModelParams params = ModelParams::make(1.0, 1.0);
    double potential_a = 3.0;
    Grid grid = Grid::make(1, 129);
    DriverConfig driver{};
    double horizon = 0.3;
    std::string sigma_bar = "0.1";
    std::string init_mode = "synthesize";
    std::string rho0_file;
    double theta_frac = 0.5;
    std::string output_dir = "run_out";
    int stride = 1;
    std::filesystem::path base_dir = ".";

    [[nodiscard]] std::filesystem::path resolve(const std::string& p) const {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    }
};

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "model.c0",        "model.cv",          "model.kappa",          "model.theta_c",       "model.potential.a",
        "grid.dim",        "grid.n",            "driver.dt",            "driver.T_init",       "driver.horizon",
        "driver.outer_tol", "driver.outer_max_iters", "driver.window_shrink", "driver.M_cap",  "source.sigma_bar",
        "init.mode",       "init.rho0_file",    "init.theta_frac",      "output.dir",          "output.stride"};
    return keys;
}

namespace detail {

inline std::string fmt17(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline double parse_double(const std::string& s, const std::string& key) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) throw ConfigError("config: '" + key + "' is not a number: '" + s + "'");
    return v;
}

inline bool is_number(const std::string& s) {
    try {
        parse_double(s, "");
        return true;
    } catch (const ConfigError&) {
        return false;
    }
}

inline int parse_int(const std::string& s, const std::string& key) {
    const double v = parse_double(s, key);
    if (v != std::floor(v)) throw ConfigError("config: '" + key + "' must be an integer");
    return static_cast<int>(v);
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace detail

inline std::map<std::string, std::string> read_keyvalues(const std::filesystem::path& path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    std::map<std::string, std::string> kv;
    for (const auto& [section, node] : tree) {
        if (node.empty()) {
            kv[section] = node.data();
            continue;
        }
        for (const auto& [key, leaf] : node) kv[section + "." + key] = leaf.data();
    }
    return kv;
}

inline RunConfig parse_config(const std::map<std::string, std::string>& kv, const std::filesystem::path& base_dir = ".") {
    const auto& known = config_keys();
    for (const auto& [k, v] : kv)
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("config: unknown key '" + k + "'");

    RunConfig c;
    c.base_dir = base_dir;
    auto num = [&](const char* key, double fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : detail::parse_double(it->second, key);
    };
    auto integer = [&](const char* key, int fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : detail::parse_int(it->second, key);
    };
    auto str = [&](const char* key, const std::string& fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    };

    c.potential_a = num("model.potential.a", 3.0);
    try {
        c.params = ModelParams::make(num("model.c0", 1.0), num("model.cv", 1.0), num("model.kappa", 1.0),
                                     num("model.theta_c", 0.0), c.potential_a);
        c.grid = Grid::make(integer("grid.dim", 1), integer("grid.n", 129));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.driver.dt = num("driver.dt", 2.5e-4);
    c.driver.T_init = num("driver.T_init", 0.1);
    c.horizon = num("driver.horizon", 0.3);
    c.driver.outer_tol = num("driver.outer_tol", 1e-8);
    c.driver.outer_max_iters = integer("driver.outer_max_iters", 30);
    c.driver.window_shrink = num("driver.window_shrink", 0.5);
    c.driver.M_cap = num("driver.M_cap", 1e4);
    c.sigma_bar = str("source.sigma_bar", "0.1");
    c.init_mode = str("init.mode", "synthesize");
    c.rho0_file = str("init.rho0_file", "");
    c.theta_frac = num("init.theta_frac", 0.5);
    c.output_dir = str("output.dir", "run_out");
    c.stride = integer("output.stride", 1);
    c.driver.save_stride = c.stride;

    if (c.init_mode != "files" && c.init_mode != "synthesize")
        throw ConfigError("config: init.mode must be 'files' or 'synthesize'");
    if (c.init_mode == "files" && c.rho0_file.empty()) throw ConfigError("config: init.mode=files needs init.rho0_file");
    if (c.stride < 1) throw ConfigError("config: output.stride must be >= 1");
    if (!(c.horizon > 0.0)) throw ConfigError("config: driver.horizon must be positive");
    c.driver.check();
    if (!c.rho0_file.empty() && !std::filesystem::exists(c.resolve(c.rho0_file)))
        throw ConfigError("config: init.rho0_file does not exist: " + c.rho0_file);
    if (!detail::is_number(c.sigma_bar) && !std::filesystem::exists(c.resolve(c.sigma_bar)))
        throw ConfigError("config: source.sigma_bar is neither a number nor an existing file: " + c.sigma_bar);
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config: no such file " + path.string());
    return parse_config(read_keyvalues(path), path.parent_path().empty() ? "." : path.parent_path());
}

/// Effective configuration as key/value text (used for hashing and the manifest).
inline std::map<std::string, std::string> to_keyvalues(const RunConfig& c) {
    using detail::fmt17;
    return {{"model.c0", fmt17(c.params.c0)},
            {"model.cv", fmt17(c.params.cv)},
            {"model.kappa", fmt17(c.params.kappa)},
            {"model.theta_c", fmt17(c.params.theta_c)},
            {"model.potential.a", fmt17(c.potential_a)},
            {"grid.dim", std::to_string(c.grid.dim)},
            {"grid.n", std::to_string(c.grid.n)},
            {"driver.dt", fmt17(c.driver.dt)},
            {"driver.T_init", fmt17(c.driver.T_init)},
            {"driver.horizon", fmt17(c.horizon)},
            {"driver.outer_tol", fmt17(c.driver.outer_tol)},
            {"driver.outer_max_iters", std::to_string(c.driver.outer_max_iters)},
            {"driver.window_shrink", fmt17(c.driver.window_shrink)},
            {"driver.M_cap", fmt17(c.driver.M_cap)},
            {"source.sigma_bar", c.sigma_bar},
            {"init.mode", c.init_mode},
            {"init.rho0_file", c.rho0_file},
            {"init.theta_frac", fmt17(c.theta_frac)},
            {"output.dir", c.output_dir},
            {"output.stride", std::to_string(c.stride)}};
}

inline std::string config_hash(const RunConfig& c) {
    std::string text;
    for (const auto& [k, v] : to_keyvalues(c)) text += k + "=" + v + "\n";
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << detail::fnv1a(text);
    return os.str();
}

/// The desk-scale reference run: 1D, n=129, c0=cv=1, logarithmic well a=3,
/// rho0 = 0.4 + 0.1 cos(pi x), theta_frac = 0.5, sigma_bar = 0.1.
inline RunConfig canonical_config() { return RunConfig{}; }

inline ScalarField canonical_rho0(const Grid& g) {
    return ScalarField::from_function(g, [&](double x, double y) {
        const double cy = g.dim == 2 ? std::cos(std::numbers::pi * y) : 1.0;
        return 0.4 + 0.1 * std::cos(std::numbers::pi * x) * cy;
    });
}

// ---------------------------------------------------------------------------
// CSV fields and snapshots

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] int column(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("csv: cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("csv: empty file " + path.string());
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cell.erase(std::remove_if(cell.begin(), cell.end(), [](unsigned char ch) { return std::isspace(ch); }), cell.end());
            t.header.push_back(cell);
        }
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(detail::parse_double(cell, path.string()));
        if (row.size() != t.header.size()) throw ConfigError("csv: ragged row in " + path.string());
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Infers the grid from the coordinate columns of a table.
inline Grid grid_of(const CsvTable& t) {
    const bool two_d = t.column("y") >= 0;
    const std::size_t rows = t.rows.size();
    int n = static_cast<int>(rows);
    if (two_d) {
        n = static_cast<int>(std::llround(std::sqrt(static_cast<double>(rows))));
        if (static_cast<std::size_t>(n) * n != rows) throw ConfigError("csv: 2D table is not square");
    }
    Grid g;
    try {
        g = Grid::make(two_d ? 2 : 1, n);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("csv: ") + e.what());
    }
    const int cx = t.column("x"), cy = t.column("y");
    if (cx < 0) throw ConfigError("csv: missing x column");
    for (std::size_t k = 0; k < rows; ++k) {
        if (std::abs(t.rows[k][cx] - g.x(k)) > 1e-9 || (two_d && std::abs(t.rows[k][cy] - g.y(k)) > 1e-9))
            throw ConfigError("csv: coordinates do not match a uniform unit grid in x-fastest order");
    }
    return g;
}

inline ScalarField field_column(const CsvTable& t, const Grid& g, const std::string& name) {
    const int c = t.column(name);
    if (c < 0) throw ConfigError("csv: missing column '" + name + "'");
    ScalarField f(g);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = t.rows[k][c];
    return f;
}

/// A single field from a `x[,y],value` file (a snapshot's `rho` column is accepted too).
inline ScalarField read_field_csv(const std::filesystem::path& path, const std::string& preferred = "value") {
    const CsvTable t = read_csv(path);
    const Grid g = grid_of(t);
    if (t.column(preferred) >= 0) return field_column(t, g, preferred);
    if (t.column("value") >= 0) return field_column(t, g, "value");
    throw ConfigError("csv: " + path.string() + " has neither '" + preferred + "' nor 'value' column");
}

inline void write_field_csv(const std::filesystem::path& path, const ScalarField& f) {
    std::ofstream out(path);
    if (!out) throw ConfigError("csv: cannot write " + path.string());
    out << std::setprecision(17);
    out << (f.grid.dim == 2 ? "x,y,value\n" : "x,value\n");
    for (std::size_t k = 0; k < f.size(); ++k) {
        out << f.grid.x(k) << ',';
        if (f.grid.dim == 2) out << f.grid.y(k) << ',';
        out << f[k] << '\n';
    }
}

inline void write_snapshot(const std::filesystem::path& path, const SystemState& s, const ModelParams& p) {
    std::ofstream out(path);
    if (!out) throw ConfigError("snapshot: cannot write " + path.string());
    const Grid& g = s.rho.grid;
    const ScalarField mu = chemical_potential(s);
    out << std::setprecision(17);
    out << (g.dim == 2 ? "x,y,rho,xi,theta,mu,margin\n" : "x,rho,xi,theta,mu,margin\n");
    for (std::size_t k = 0; k < g.size(); ++k) {
        out << g.x(k) << ',';
        if (g.dim == 2) out << g.y(k) << ',';
        out << s.rho[k] << ',' << s.xi[k] << ',' << s.theta[k] << ',' << mu[k] << ',' << margin_at(s.rho[k], s.xi[k], p)
            << '\n';
    }
}

inline SystemState read_snapshot(const std::filesystem::path& path, double t = 0.0) {
    const CsvTable tab = read_csv(path);
    const Grid g = grid_of(tab);
    return SystemState{t, field_column(tab, g, "rho"), field_column(tab, g, "xi"), field_column(tab, g, "theta")};
}

inline std::string snapshot_name(std::size_t index, double t) {
    std::ostringstream os;
    os << "t_" << std::setw(6) << std::setfill('0') << index << '_' << std::fixed << std::setprecision(6) << t << ".csv";
    return os.str();
}

// ---------------------------------------------------------------------------
// building runs from a config

inline SourceTerm make_source(const RunConfig& c) {
    if (detail::is_number(c.sigma_bar)) return SourceTerm::constant(detail::parse_double(c.sigma_bar, "source.sigma_bar"));
    ScalarField f = read_field_csv(c.resolve(c.sigma_bar));
    if (!(f.grid == c.grid)) throw ConfigError("config: sigma_bar field grid differs from grid.dim/grid.n");
    if (!f.all_finite()) throw ConfigError("config: sigma_bar field is not finite");
    SourceTerm s = SourceTerm::field(std::move(f));
    s.description = "field " + c.sigma_bar;
    return s;
}

inline InitialTriple make_initial(const RunConfig& c) {
    if (c.init_mode == "files") {
        const SystemState s = read_snapshot(c.resolve(c.rho0_file));
        if (!(s.rho.grid == c.grid)) throw ConfigError("config: initial data grid differs from grid.dim/grid.n");
        InitialTriple t{s.rho, s.xi, s.theta, 0.0};
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < t.rho0.size(); ++k)
            if (t.rho0[k] > 0.0 && t.xi0[k] >= 0.0) m = std::min(m, margin_at(t.rho0[k], t.xi0[k], c.params));
        t.eps0 = 0.5 * m;
        return t;
    }
    ScalarField rho0 = c.rho0_file.empty() ? canonical_rho0(c.grid) : read_field_csv(c.resolve(c.rho0_file), "rho");
    if (!(rho0.grid == c.grid)) throw ConfigError("config: rho0 grid differs from grid.dim/grid.n");
    return synthesize(rho0, c.theta_frac, c.params);
}

// ---------------------------------------------------------------------------
// manifest

using Manifest = std::vector<std::pair<std::string, std::string>>;

inline Manifest build_manifest(const RunConfig& c, const RunResult& r) {
    using detail::fmt17;
    Manifest m;
    m.emplace_back("software_version", kSoftwareVersion);
    m.emplace_back("config_hash", config_hash(c));
    for (const auto& [k, v] : to_keyvalues(c)) m.emplace_back("config." + k, v);
    m.emplace_back("status", to_string(r.status));
    m.emplace_back("status_detail", r.status_detail);
    m.emplace_back("constants.note",
                   "existence constants M and T are replaced by monitored margin/rate conditions with geometric window shrinking");
    m.emplace_back("saved_states", std::to_string(r.trajectory.states.size()));
    m.emplace_back("shrink_signals", std::to_string(r.shrink_log.size()));
    for (std::size_t i = 0; i < r.shrink_log.size(); ++i)
        m.emplace_back("shrink." + std::to_string(i), std::string(to_string(r.shrink_log[i].reason)) + ": " +
                                                          r.shrink_log[i].detail);
    m.emplace_back("windows", std::to_string(r.windows.size()));
    for (std::size_t i = 0; i < r.windows.size(); ++i) {
        const auto& w = r.windows[i];
        const std::string p = "window." + std::to_string(i) + ".";
        m.emplace_back(p + "t_start", fmt17(w.t_start));
        m.emplace_back(p + "T", fmt17(w.T));
        m.emplace_back(p + "outer_iters", std::to_string(w.outer_iters));
        m.emplace_back(p + "theta_residual", fmt17(w.theta_residual));
        m.emplace_back(p + "shrinks", std::to_string(w.shrinks));
        m.emplace_back(p + "inner_iters", std::to_string(w.inner_iters));
        m.emplace_back(p + "eps0", fmt17(w.eps0));
        m.emplace_back(p + "min_margin", fmt17(w.min_margin));
        m.emplace_back(p + "delta0", fmt17(w.delta0));
        m.emplace_back(p + "theta_rate_bound", fmt17(w.theta_rate_bound));
        m.emplace_back(p + "observed_max_dt_theta", fmt17(w.observed_max_dt_theta));
        m.emplace_back(p + "transcendental_residual", fmt17(w.transcendental_residual));
        m.emplace_back(p + "pde_residual", fmt17(w.pde_residual));
    }
    return m;
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m, bool with_timestamp = true) {
    std::ofstream out(path);
    if (!out) throw ConfigError("manifest: cannot write " + path.string());
    for (const auto& [k, v] : m) out << k << " = \"" << v << "\"\n";
    if (with_timestamp) {
        const std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        out << "created_utc = \"" << buf << "\"\n";
    }
}

inline std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("manifest: cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        std::string v = line.substr(eq + 3);
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
        kv[line.substr(0, eq)] = v;
    }
    return kv;
}

/// Writes every saved state as a snapshot plus run.manifest into dir.
inline void write_run(const std::filesystem::path& dir, const RunConfig& c, RunResult& r) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < r.trajectory.states.size(); ++i)
        write_snapshot(dir / snapshot_name(i, r.trajectory.times[i]), r.trajectory.states[i], c.params);
    r.trajectory.manifest = build_manifest(c, r);
    write_manifest(dir / "run.manifest", r.trajectory.manifest);
}

// ---------------------------------------------------------------------------
// post-run summary

struct SnapshotSummary {
    std::string file;
    double t = 0.0;
    double min_rho = 0.0, max_rho = 0.0, min_xi = 0.0, min_theta = 0.0, max_theta = 0.0;
    double transcendental_residual = 0.0;
    double min_branch_gap = 0.0;  ///< min theta - s_lower(rho)
    double max_upper_excess = 0.0;  ///< max theta - s_upper(rho), <= 0 when on the branch
    double min_margin = 0.0;
    double mu_identity = 0.0;  ///< max |mu^2 rho - xi|
};

struct RunSummary {
    std::map<std::string, std::string> manifest;
    std::vector<SnapshotSummary> snapshots;
    bool invariants_hold = true;
};

inline RunSummary summarize_run(const std::filesystem::path& dir) {
    RunSummary s;
    s.manifest = read_manifest(dir / "run.manifest");
    auto get = [&](const std::string& k) {
        auto it = s.manifest.find("config." + k);
        if (it == s.manifest.end()) throw ConfigError("report: manifest lacks config." + k);
        return detail::parse_double(it->second, k);
    };
    const ModelParams p = ModelParams::make(get("model.c0"), get("model.cv"), get("model.kappa"), get("model.theta_c"),
                                            get("model.potential.a"));
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.rfind("t_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    const double lo = theta_star_lo(p), hi = theta_star_hi(p);
    for (const auto& f : files) {
        const CsvTable tab = read_csv(f);
        const Grid g = grid_of(tab);
        const ScalarField rho = field_column(tab, g, "rho"), xi = field_column(tab, g, "xi"),
                          th = field_column(tab, g, "theta"), mu = field_column(tab, g, "mu");
        SnapshotSummary ss;
        ss.file = f.filename().string();
        const auto stem = f.stem().string();
        ss.t = detail::parse_double(stem.substr(stem.rfind('_') + 1), "snapshot time");
        ss.min_rho = rho.min();
        ss.max_rho = rho.max();
        ss.min_xi = xi.min();
        ss.min_theta = th.min();
        ss.max_theta = th.max();
        ss.min_branch_gap = std::numeric_limits<double>::infinity();
        ss.max_upper_excess = -std::numeric_limits<double>::infinity();
        ss.min_margin = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < g.size(); ++k) {
            ss.transcendental_residual =
                std::max(ss.transcendental_residual, std::abs(lambda(rho[k], th[k], p) + std::sqrt(rho[k] * xi[k])));
            ss.min_branch_gap = std::min(ss.min_branch_gap, th[k] - s_lower(rho[k], p));
            ss.max_upper_excess = std::max(ss.max_upper_excess, th[k] - s_upper(rho[k], p));
            ss.min_margin = std::min(ss.min_margin, margin_at(rho[k], xi[k], p));
            ss.mu_identity = std::max(ss.mu_identity, std::abs(mu[k] * mu[k] * rho[k] - xi[k]));
        }
        const bool ok = ss.min_rho > 0.0 && ss.max_rho < 1.0 && ss.min_xi >= 0.0 && ss.min_theta >= lo &&
                        ss.max_theta <= hi && ss.transcendental_residual <= 1e-10 && ss.min_branch_gap > 0.0 &&
                        ss.max_upper_excess <= 0.0 && ss.min_margin > 0.0;
        s.invariants_hold = s.invariants_hold && ok;
        s.snapshots.push_back(ss);
    }
    return s;
}

}  // namespace tacsim
