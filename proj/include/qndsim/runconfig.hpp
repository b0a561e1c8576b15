#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qndsim/fock.hpp"
#include "qndsim/montecarlo.hpp"

namespace qnd {

using nlohmann::json;

inline const char* to_string(GainPolicy p) {
    return p == GainPolicy::Adiabatic ? "ADIABATIC" : "OPTIMIZED";
}

inline GainPolicy gain_policy_from_string(const std::string& s) {
    if (s == "OPTIMIZED") return GainPolicy::Optimized;
    if (s == "ADIABATIC") return GainPolicy::Adiabatic;
    throw config_error("unknown gain policy: " + s + " (expected OPTIMIZED or ADIABATIC)");
}

namespace detail {

// Reject unknown keys so typos surface as config errors naming the field.
inline void expect_keys(const json& obj, const std::vector<std::string>& allowed,
                        const std::string& context) {
    if (!obj.is_object()) throw config_error("config block '" + context + "' must be an object");
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw config_error("unknown config field '" + context + "." + item.key() + "'");
    }
}

template <typename T>
T field(const json& obj, const std::string& key, const T& fallback, const std::string& context) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw config_error("config field '" + context + "." + key + "': " + e.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config blocks
// ---------------------------------------------------------------------------

struct SweepConfig {
    std::string variable = "S";  // one of S, g, tau
    double from = 1.0;
    double to = 3.981071705534972;  // 12 dB of presqueezing
    int steps = 61;
    double marker_db_step = 3.0;  // S-sweeps: flag rows at multiples of this gain

    void validate() const {
        if (variable != "S" && variable != "g" && variable != "tau")
            throw config_error("sweep.variable must be one of S, g, tau");
        if (!(from < to)) throw config_error("sweep range must be nonempty and ordered (from < to)");
        if (steps < 2) throw config_error("sweep.steps must be >= 2");
        if (!(marker_db_step > 0.0)) throw config_error("sweep.marker_db_step must be > 0");
    }
};

struct WignerConfig {
    std::vector<std::string> points = {"O", "A", "B", "C"};
    int fock_n = 1;
    double half_extent = 5.0;
    int n_points = 101;
    std::string preset = "fig3_points.json";  // resolved against the preset directory

    void validate() const {
        if (points.empty()) throw config_error("wigner.points must be nonempty");
        if (fock_n < 0 || fock_n > MAX_FOCK)
            throw config_error("wigner.fock_n must lie in [0, 3]");
        if (!(half_extent > 0.0) || n_points < 2)
            throw config_error("wigner grid needs half_extent > 0 and n_points >= 2");
    }
};

struct OutputConfig {
    std::string dir = ".";
    std::string prefix = "qndsim";
};

struct RunConfig {
    std::string command;  // channel, sweep, wigner, montecarlo, validate
    InterfaceParams params = InterfaceParams::reference();
    std::vector<ModelTier> tiers = {ModelTier::Full};
    GainPolicy policy = GainPolicy::Optimized;
    SweepConfig sweep;
    WignerConfig wigner;
    MonteCarloConfig mc;
    OutputConfig output;

    void validate() const {
        if (command != "channel" && command != "sweep" && command != "wigner" &&
            command != "montecarlo" && command != "validate")
            throw config_error("unknown command: " + command);
        if (tiers.empty()) throw config_error("tiers must be nonempty");
        params.validate();
        if (command == "sweep") sweep.validate();
        if (command == "wigner") wigner.validate();
    }

    static RunConfig from_json(const json& root, const std::string& command_hint = "");
    json to_json() const;
};

inline RunConfig RunConfig::from_json(const json& root, const std::string& command_hint) {
    detail::expect_keys(root, {"command", "params", "tiers", "gain_policy", "sweep", "wigner",
                               "montecarlo", "output"},
                        "<top>");
    RunConfig cfg;
    cfg.command = detail::field<std::string>(root, "command", command_hint, "<top>");
    if (cfg.command.empty()) throw config_error("no command given (config field or subcommand)");
    if (!command_hint.empty() && cfg.command != command_hint)
        throw config_error("config command '" + cfg.command + "' does not match subcommand '" +
                           command_hint + "'");

    // exactly one command block: blocks belonging to other commands are rejected
    if (root.contains("sweep") && cfg.command != "sweep")
        throw config_error("sweep block present but command is " + cfg.command);
    if (root.contains("wigner") && cfg.command != "wigner")
        throw config_error("wigner block present but command is " + cfg.command);
    if (root.contains("montecarlo") && cfg.command != "montecarlo" && cfg.command != "validate")
        throw config_error("montecarlo block present but command is " + cfg.command);

    if (root.contains("params")) {
        const json& p = root.at("params");
        detail::expect_keys(p, {"kappa", "g", "gamma", "tau", "S", "n_th", "n_0", "n_cav0",
                                "angular_convention"},
                            "params");
        InterfaceParams d = cfg.params;
        const bool angular = detail::field<bool>(p, "angular_convention", false, "params");
        const double f = angular ? 2.0 * M_PI : 1.0;
        InterfaceParams q;
        q.kappa = f * detail::field<double>(p, "kappa", d.kappa, "params");
        q.g = f * detail::field<double>(p, "g", d.g, "params");
        q.gamma = f * detail::field<double>(p, "gamma", d.gamma, "params");
        q.tau = detail::field<double>(p, "tau", d.tau, "params");
        q.S = detail::field<double>(p, "S", d.S, "params");
        q.n_th = detail::field<double>(p, "n_th", d.n_th, "params");
        q.n_0 = detail::field<double>(p, "n_0", d.n_0, "params");
        q.n_cav0 = detail::field<double>(p, "n_cav0", d.n_cav0, "params");
        q.angular_convention = angular;
        cfg.params = q;
    }

    if (root.contains("tiers")) {
        cfg.tiers.clear();
        for (const auto& t : detail::field<std::vector<std::string>>(root, "tiers", {}, "<top>"))
            cfg.tiers.push_back(tier_from_string(t));
    }
    cfg.policy = gain_policy_from_string(
        detail::field<std::string>(root, "gain_policy", to_string(cfg.policy), "<top>"));

    if (root.contains("sweep")) {
        const json& s = root.at("sweep");
        detail::expect_keys(s, {"variable", "from", "to", "steps", "marker_db_step"}, "sweep");
        cfg.sweep.variable = detail::field<std::string>(s, "variable", cfg.sweep.variable, "sweep");
        cfg.sweep.from = detail::field<double>(s, "from", cfg.sweep.from, "sweep");
        cfg.sweep.to = detail::field<double>(s, "to", cfg.sweep.to, "sweep");
        cfg.sweep.steps = detail::field<int>(s, "steps", cfg.sweep.steps, "sweep");
        cfg.sweep.marker_db_step =
            detail::field<double>(s, "marker_db_step", cfg.sweep.marker_db_step, "sweep");
    }

    if (root.contains("wigner")) {
        const json& w = root.at("wigner");
        detail::expect_keys(w, {"points", "fock_n", "half_extent", "n_points", "preset"}, "wigner");
        cfg.wigner.points =
            detail::field<std::vector<std::string>>(w, "points", cfg.wigner.points, "wigner");
        cfg.wigner.fock_n = detail::field<int>(w, "fock_n", cfg.wigner.fock_n, "wigner");
        cfg.wigner.half_extent =
            detail::field<double>(w, "half_extent", cfg.wigner.half_extent, "wigner");
        cfg.wigner.n_points = detail::field<int>(w, "n_points", cfg.wigner.n_points, "wigner");
        cfg.wigner.preset = detail::field<std::string>(w, "preset", cfg.wigner.preset, "wigner");
    }

    if (root.contains("montecarlo")) {
        const json& m = root.at("montecarlo");
        detail::expect_keys(m, {"n_traj", "dt", "seed", "amp_x_sd", "amp_y_sd", "sigma_level",
                                "n_threads", "gain_scale"},
                            "montecarlo");
        cfg.mc.n_traj = detail::field<long>(m, "n_traj", cfg.mc.n_traj, "montecarlo");
        cfg.mc.dt = detail::field<double>(m, "dt", cfg.mc.dt, "montecarlo");
        cfg.mc.seed = detail::field<uint64_t>(m, "seed", cfg.mc.seed, "montecarlo");
        cfg.mc.amp_x_sd = detail::field<double>(m, "amp_x_sd", cfg.mc.amp_x_sd, "montecarlo");
        cfg.mc.amp_y_sd = detail::field<double>(m, "amp_y_sd", cfg.mc.amp_y_sd, "montecarlo");
        cfg.mc.sigma_level =
            detail::field<double>(m, "sigma_level", cfg.mc.sigma_level, "montecarlo");
        cfg.mc.n_threads = detail::field<int>(m, "n_threads", cfg.mc.n_threads, "montecarlo");
        cfg.mc.gain_scale = detail::field<double>(m, "gain_scale", cfg.mc.gain_scale, "montecarlo");
    }
    cfg.mc.policy = cfg.policy;

    if (root.contains("output")) {
        const json& o = root.at("output");
        detail::expect_keys(o, {"dir", "prefix"}, "output");
        cfg.output.dir = detail::field<std::string>(o, "dir", cfg.output.dir, "output");
        cfg.output.prefix = detail::field<std::string>(o, "prefix", cfg.output.prefix, "output");
    }

    cfg.validate();
    return cfg;
}

// Canonical serialization: all fields of the active command's blocks with
// defaults filled in, keys in the library's canonical (alphabetical) order,
// so parse -> serialize is idempotent.
inline json RunConfig::to_json() const {
    json root;
    root["command"] = command;
    const double f = params.angular_convention ? 2.0 * M_PI : 1.0;
    root["params"] = {{"kappa", params.kappa / f}, {"g", params.g / f},
                      {"gamma", params.gamma / f}, {"tau", params.tau},
                      {"S", params.S},             {"n_th", params.n_th},
                      {"n_0", params.n_0},         {"n_cav0", params.n_cav0},
                      {"angular_convention", params.angular_convention}};
    json tj = json::array();
    for (ModelTier t : tiers) tj.push_back(to_string(t));
    root["tiers"] = tj;
    root["gain_policy"] = to_string(policy);
    if (command == "sweep")
        root["sweep"] = {{"variable", sweep.variable},
                         {"from", sweep.from},
                         {"to", sweep.to},
                         {"steps", sweep.steps},
                         {"marker_db_step", sweep.marker_db_step}};
    if (command == "wigner")
        root["wigner"] = {{"points", wigner.points},
                          {"fock_n", wigner.fock_n},
                          {"half_extent", wigner.half_extent},
                          {"n_points", wigner.n_points},
                          {"preset", wigner.preset}};
    if (command == "montecarlo" || command == "validate")
        root["montecarlo"] = {{"n_traj", mc.n_traj},         {"dt", mc.dt},
                              {"seed", mc.seed},             {"amp_x_sd", mc.amp_x_sd},
                              {"amp_y_sd", mc.amp_y_sd},     {"sigma_level", mc.sigma_level},
                              {"n_threads", mc.n_threads},   {"gain_scale", mc.gain_scale}};
    root["output"] = {{"dir", output.dir}, {"prefix", output.prefix}};
    return root;
}

// Apply one "dotted.path=value" override onto the raw config document; the
// value is parsed as JSON when possible and kept as a string otherwise.
inline void apply_override(json& root, const std::string& spec) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        throw config_error("--set expects path=value, got '" + spec + "'");
    const std::string path = spec.substr(0, eq);
    const std::string raw = spec.substr(eq + 1);

    json* node = &root;
    size_t start = 0;
    for (;;) {
        const size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw config_error("--set path has an empty segment: '" + path + "'");
        if (dot == std::string::npos) {
            json value;
            try {
                value = json::parse(raw);
            } catch (const json::exception&) {
                value = raw;  // unquoted strings (tier names, paths)
            }
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw config_error(std::string("config parse error in ") + path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

inline json channel_to_json(const ChannelDecomposition& ch) {
    return {{"T", ch.T},           {"V_XN", ch.V_XN},
            {"V_YN", ch.V_YN},     {"V_N", ch.V_N},
            {"gain", ch.gain},     {"sym_factor", ch.sym_factor},
            {"mismatch", ch.mismatch}, {"tier", to_string(ch.tier)}};
}

inline json report_to_json(const OracleReport& r) {
    json table = json::array();
    for (const CoefficientRow& row : r.table)
        table.push_back({{"output", row.output},
                         {"regressor", row.regressor},
                         {"estimated", row.estimated},
                         {"analytic", row.analytic},
                         {"se", row.se},
                         {"deviation_sigmas", row.deviation_sigmas}});
    return {{"tier", to_string(r.tier)},
            {"n_traj", r.n_traj},
            {"dt", r.dt},
            {"n_steps", r.n_steps},
            {"seed", r.seed},
            {"sigma_level", r.sigma_level},
            {"analytic", channel_to_json(r.analytic)},
            {"T_hat", r.T_hat},
            {"T_se", r.T_se},
            {"V_XN_hat", r.V_XN_hat},
            {"V_XN_se", r.V_XN_se},
            {"V_YN_hat", r.V_YN_hat},
            {"V_YN_se", r.V_YN_se},
            {"V_N_hat", r.V_N_hat},
            {"coefficients", table},
            {"max_channel_sigmas", r.max_channel_sigmas},
            {"max_coef_sigmas", r.max_coef_sigmas},
            {"pass", r.pass}};
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
    double value = 0.0;
    bool marker = false;
    ChannelDecomposition ch;
};

// Sweep grid: uniform in the variable, with S-sweeps additionally carrying a
// row at every marker gain (multiples of marker_db_step from S = 1) inside
// the range so figure markers land on exact rows.
inline std::vector<std::pair<double, bool>> sweep_grid(const SweepConfig& s) {
    s.validate();
    std::vector<std::pair<double, bool>> grid;
    for (int i = 0; i < s.steps; ++i)
        grid.emplace_back(s.from + (s.to - s.from) * i / (s.steps - 1), false);
    if (s.variable == "S") {
        for (int m = 0;; ++m) {
            const double sv = std::pow(10.0, m * s.marker_db_step / 20.0);
            if (sv > s.to * (1.0 + 1e-12)) break;
            if (sv < s.from * (1.0 - 1e-12)) continue;
            bool found = false;
            for (auto& g : grid) {
                if (std::abs(g.first - sv) <= 1e-12 * sv) {
                    g.second = true;
                    found = true;
                    break;
                }
            }
            if (!found) grid.emplace_back(sv, true);
        }
        std::sort(grid.begin(), grid.end());
    }
    return grid;
}

inline std::vector<SweepRow> run_sweep(const InterfaceParams& base, ModelTier tier,
                                       GainPolicy policy, const SweepConfig& s) {
    double InterfaceParams::*fld = nullptr;
    if (s.variable == "S") fld = &InterfaceParams::S;
    else if (s.variable == "g") fld = &InterfaceParams::g;
    else if (s.variable == "tau") fld = &InterfaceParams::tau;
    else throw config_error("sweep.variable must be one of S, g, tau");

    std::vector<SweepRow> rows;
    for (const auto& [value, marker] : sweep_grid(s)) {
        SweepRow row;
        row.value = value;
        row.marker = marker;
        row.ch = compute_channel(base.with(fld, value), tier, policy);
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Figure points
// ---------------------------------------------------------------------------

struct FigurePoint {
    std::string name;
    std::string tier = "-";          // "-" for explicit-channel points
    ChannelDecomposition ch;
    bool from_params = false;
    double T_quoted_rates = 0.0;     // rates used as given
    double T_angular_rates = 0.0;    // rates multiplied by 2*pi
    std::string note;
};

inline FigurePoint resolve_figure_point(const json& preset, const std::string& name) {
    if (!preset.contains("points") || !preset.at("points").contains(name))
        throw config_error("preset does not define point '" + name + "'");
    const json& pt = preset.at("points").at(name);
    detail::expect_keys(pt, {"tier", "gain_policy", "params", "channel", "note"},
                        "points." + name);
    FigurePoint fp;
    fp.name = name;
    fp.note = detail::field<std::string>(pt, "note", "", "points." + name);

    if (pt.contains("channel")) {
        const json& ch = pt.at("channel");
        detail::expect_keys(ch, {"T", "V_XN", "V_YN"}, "points." + name + ".channel");
        fp.ch.T = detail::field<double>(ch, "T", 0.0, "points." + name + ".channel");
        fp.ch.V_XN = detail::field<double>(ch, "V_XN", 1.0, "points." + name + ".channel");
        fp.ch.V_YN = detail::field<double>(ch, "V_YN", 1.0, "points." + name + ".channel");
        fp.ch.V_N = std::sqrt(fp.ch.V_XN * fp.ch.V_YN);
        fp.ch.validate();
        fp.T_quoted_rates = fp.T_angular_rates = fp.ch.T;
        return fp;
    }

    if (!pt.contains("params") || !pt.contains("tier"))
        throw config_error("preset point '" + name + "' needs either a channel or params + tier");
    const ModelTier tier =
        tier_from_string(detail::field<std::string>(pt, "tier", "", "points." + name));
    const GainPolicy policy = gain_policy_from_string(
        detail::field<std::string>(pt, "gain_policy", "ADIABATIC", "points." + name));
    const json& p = pt.at("params");
    detail::expect_keys(p, {"kappa", "g", "gamma", "tau", "S", "n_th", "n_0", "n_cav0"},
                        "points." + name + ".params");
    auto ctx = "points." + name + ".params";
    auto build = [&](bool angular) {
        return InterfaceParams::from_quoted(
            detail::field<double>(p, "kappa", 0.0, ctx), detail::field<double>(p, "g", 0.0, ctx),
            detail::field<double>(p, "gamma", 0.0, ctx), detail::field<double>(p, "tau", 0.0, ctx),
            detail::field<double>(p, "S", 1.0, ctx), detail::field<double>(p, "n_th", 0.0, ctx),
            detail::field<double>(p, "n_0", 0.0, ctx), detail::field<double>(p, "n_cav0", 0.0, ctx),
            angular);
    };
    fp.from_params = true;
    fp.tier = to_string(tier);
    fp.ch = compute_channel(build(false), tier, policy);
    fp.T_quoted_rates = fp.ch.T;
    fp.T_angular_rates = compute_channel(build(true), tier, policy).T;
    return fp;
}

}  // namespace qnd
