// Batch front end: JSON run configs in, CSV tables / JSON records out.
//
// Subcommands: channel, sweep, wigner, montecarlo, validate.
// Exit codes: 0 success, 1 config error, 2 domain/numerical error,
// 3 validation failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qndsim/runconfig.hpp"

namespace fs = std::filesystem;
using namespace qnd;

namespace {

std::string dbl(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write output file: " + path.string());
    out << content;
}

fs::path exe_dir() {
    std::error_code ec;
    const fs::path p = fs::read_symlink("/proc/self/exe", ec);
    return ec ? fs::path(".") : p.parent_path();
}

// Preset lookup order: the path as given, then $QND_SIM_PRESET_DIR, then the
// presets directory shipped next to (or one level above) the binary.
fs::path resolve_preset(const std::string& name) {
    std::vector<fs::path> candidates = {name};
    if (const char* env = std::getenv("QND_SIM_PRESET_DIR")) candidates.push_back(fs::path(env) / name);
    candidates.push_back(exe_dir() / "presets" / name);
    candidates.push_back(exe_dir() / ".." / "presets" / name);
    for (const fs::path& c : candidates)
        if (fs::exists(c)) return c;
    throw config_error("preset file not found: " + name);
}

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir, prefix;
    bool dump = false;
};

fs::path out_file(const RunConfig& cfg, const std::string& suffix) {
    fs::create_directories(cfg.output.dir);
    return fs::path(cfg.output.dir) / (cfg.output.prefix + suffix);
}

int cmd_channel(const RunConfig& cfg) {
    std::string lines;
    for (ModelTier tier : cfg.tiers) {
        const ChannelDecomposition ch = compute_channel(cfg.params, tier, cfg.policy);
        const std::string line = channel_to_json(ch).dump();
        std::cout << line << "\n";
        lines += line + "\n";
    }
    const fs::path path = out_file(cfg, "_channel.jsonl");
    std::ofstream out(path, std::ios::app);
    if (!out) throw config_error("cannot write output file: " + path.string());
    out << lines;
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    for (ModelTier tier : cfg.tiers) {
        const std::vector<SweepRow> rows = run_sweep(cfg.params, tier, cfg.policy, cfg.sweep);
        std::string csv = cfg.sweep.variable + ",T,V_XN,V_YN,V_N,tier,marker\n";
        for (const SweepRow& r : rows)
            csv += dbl(r.value) + "," + dbl(r.ch.T) + "," + dbl(r.ch.V_XN) + "," +
                   dbl(r.ch.V_YN) + "," + dbl(r.ch.V_N) + "," + to_string(tier) + "," +
                   (r.marker ? "1" : "0") + "\n";
        const fs::path path =
            out_file(cfg, "_sweep_" + cfg.sweep.variable + "_" + to_string(tier) + ".csv");
        write_text(path, csv);
        std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
    }
    return 0;
}

int cmd_wigner(const RunConfig& cfg) {
    const json preset = load_json_file(resolve_preset(cfg.wigner.preset).string());
    const std::string convention =
        preset.contains("description") ? preset.at("description").get<std::string>() : "";
    json scalars = json::array();
    for (const std::string& name : cfg.wigner.points) {
        const FigurePoint fp = resolve_figure_point(preset, name);
        WignerGrid grid = WignerGrid::linspace(cfg.wigner.half_extent, cfg.wigner.n_points);
        channel_wigner(cfg.wigner.fock_n, fp.ch, grid);

        std::string csv;
        csv += "# point=" + name + "\n";
        csv += "# state=" + grid.state_label + "\n";
        csv += "# tier=" + fp.tier + "\n";
        csv += "# T=" + dbl(fp.ch.T) + "\n";
        csv += "# V_XN=" + dbl(fp.ch.V_XN) + "\n";
        csv += "# V_YN=" + dbl(fp.ch.V_YN) + "\n";
        csv += "# V_N=" + dbl(fp.ch.V_N) + "\n";
        csv += "# gain=" + dbl(fp.ch.gain) + "\n";
        csv += "# convention=" + convention + "\n";
        csv += "x,p,W\n";
        for (size_t i = 0; i < grid.x.size(); ++i)
            for (size_t j = 0; j < grid.p.size(); ++j)
                csv += dbl(grid.x[i]) + "," + dbl(grid.p[j]) + "," + dbl(grid.at(i, j)) + "\n";
        write_text(out_file(cfg, "_wigner_" + name + ".csv"), csv);

        const double w00 =
            channel_wigner_value(cfg.wigner.fock_n, fp.ch.T, fp.ch.V_XN, fp.ch.V_YN, 0.0, 0.0);
        scalars.push_back({{"point", name},
                           {"tier", fp.tier},
                           {"T", fp.ch.T},
                           {"V_XN", fp.ch.V_XN},
                           {"V_YN", fp.ch.V_YN},
                           {"V_N", fp.ch.V_N},
                           {"W00", w00},
                           {"T_quoted_rates", fp.T_quoted_rates},
                           {"T_angular_rates", fp.T_angular_rates},
                           {"note", fp.note}});
        std::cout << "point " << name << ": T=" << dbl(fp.ch.T) << " V_N=" << dbl(fp.ch.V_N)
                  << " W(0,0)=" << dbl(w00) << "\n";
    }
    write_text(out_file(cfg, "_w00.json"),
               json({{"fock_n", cfg.wigner.fock_n}, {"points", scalars}}).dump(2) + "\n");

    // single-photon negativity boundary next to the quoted bound
    const std::vector<double> ts = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.85129, 0.9, 0.95};
    std::string bcsv = "T,V_boundary,paper_bound\n";
    for (const NegativityBoundaryPoint& r : negativity_boundary_scan(ts))
        bcsv += dbl(r.T) + "," + dbl(r.V_boundary) + "," + dbl(r.paper_bound) + "\n";
    write_text(out_file(cfg, "_negativity_boundary.csv"), bcsv);
    return 0;
}

int cmd_montecarlo(const RunConfig& cfg) {
    bool all_pass = true;
    for (ModelTier tier : cfg.tiers) {
        const OracleReport rep = mc_channel(cfg.params, tier, cfg.mc);
        write_text(out_file(cfg, std::string("_montecarlo_") + to_string(tier) + ".json"),
                   report_to_json(rep).dump(2) + "\n");
        std::cout << (rep.pass ? "[PASS] " : "[FAIL] ") << to_string(tier)
                  << " T=" << dbl(rep.T_hat) << "(" << dbl(rep.analytic.T) << ")"
                  << " V_XN=" << dbl(rep.V_XN_hat) << "(" << dbl(rep.analytic.V_XN) << ")"
                  << " V_YN=" << dbl(rep.V_YN_hat) << "(" << dbl(rep.analytic.V_YN) << ")"
                  << " max_sigmas=" << dbl(rep.max_channel_sigmas) << "/"
                  << dbl(rep.max_coef_sigmas) << "\n";
        all_pass = all_pass && rep.pass;
    }
    return all_pass ? 0 : 3;
}

int cmd_validate(const RunConfig& cfg) {
    bool all_pass = true;
    json mc_entries = json::array();
    for (ModelTier tier : cfg.tiers) {
        const OracleReport rep = mc_channel(cfg.params, tier, cfg.mc);
        // flag each channel quantity that leaves its sigma window
        json flagged = json::array();
        auto check = [&](const char* name, double est, double se, double target) {
            const double sig = se > 0.0 ? std::abs(est - target) / se : std::abs(est - target);
            if (sig > rep.sigma_level) flagged.push_back(name);
        };
        check("T", rep.T_hat, rep.T_se, rep.analytic.T);
        check("V_XN", rep.V_XN_hat, rep.V_XN_se, rep.analytic.V_XN);
        check("V_YN", rep.V_YN_hat, rep.V_YN_se, rep.analytic.V_YN);
        if (rep.V_XN_hat > 0.0 && rep.V_YN_hat > 0.0) {
            const double se_vn =
                0.5 * std::sqrt(rep.V_YN_hat / rep.V_XN_hat * rep.V_XN_se * rep.V_XN_se +
                                rep.V_XN_hat / rep.V_YN_hat * rep.V_YN_se * rep.V_YN_se);
            check("V_N", rep.V_N_hat, se_vn, rep.analytic.V_N);
        }
        const bool ok = rep.pass && flagged.empty();
        all_pass = all_pass && ok;
        mc_entries.push_back({{"tier", to_string(tier)},
                              {"pass", ok},
                              {"flagged", flagged},
                              {"report", report_to_json(rep)}});
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << "monte-carlo " << to_string(tier)
                  << " max_sigmas=" << dbl(rep.max_channel_sigmas) << "/"
                  << dbl(rep.max_coef_sigmas);
        if (!flagged.empty()) {
            std::cout << " mismatched:";
            for (const auto& f : flagged) std::cout << " " << f.get<std::string>();
        }
        std::cout << "\n";
    }

    // Fock-basis oracle vs the closed-form channel Wigner function
    struct FockCase { int n; double T, vx, vy; };
    const FockCase cases[] = {{0, 0.5, 1.0, 1.0},      {1, 0.5, 1.0, 1.0},
                              {2, 0.5, 1.0, 1.0},      {0, 0.85129, 1.3755, 1.3755},
                              {1, 0.85129, 1.3755, 1.3755}, {2, 0.9, 2.0, 2.0}};
    json fock_entries = json::array();
    for (const FockCase& c : cases) {
        Eigen::MatrixXd rho = fock_channel_oracle(c.n, c.T, c.vx, c.vy, 60);
        rho /= rho.trace();
        double sup = 0.0;
        const int np = 41;
        for (int i = 0; i < np; ++i) {
            const double x = -5.0 + 10.0 * i / (np - 1);
            for (int j = 0; j < np; ++j) {
                const double p = -5.0 + 10.0 * j / (np - 1);
                sup = std::max(sup, std::abs(channel_wigner_value(c.n, c.T, c.vx, c.vy, x, p) -
                                             wigner_from_density_value(rho, x, p)));
            }
        }
        const bool ok = sup <= 1e-6;
        all_pass = all_pass && ok;
        fock_entries.push_back({{"n", c.n}, {"T", c.T}, {"V_XN", c.vx}, {"V_YN", c.vy},
                                {"sup_diff", sup}, {"pass", ok}});
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << "fock-oracle n=" << c.n << " T=" << dbl(c.T)
                  << " sup_diff=" << dbl(sup) << "\n";
    }

    write_text(out_file(cfg, "_validate.json"),
               json({{"monte_carlo", mc_entries},
                     {"fock_oracle", fock_entries},
                     {"pass", all_pass}}).dump(2) + "\n");
    return all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pulsed optomechanical quantum interface simulator"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> cmds = {
        {"channel", "single-point channel decomposition"},
        {"sweep", "parameter sweep tables (one CSV per tier)"},
        {"wigner", "Wigner grids for named figure points"},
        {"montecarlo", "stochastic-trajectory verification of the channel"},
        {"validate", "full oracle validation suite"}};
    std::vector<CommonOpts> opts(cmds.size());
    for (size_t i = 0; i < cmds.size(); ++i) {
        CLI::App* sub = app.add_subcommand(cmds[i].first, cmds[i].second);
        sub->add_option("-c,--config", opts[i].config_path, "JSON run config");
        sub->add_option("--set", opts[i].overrides, "override a config field, path=value");
        sub->add_option("--out-dir", opts[i].out_dir, "output directory");
        sub->add_option("--prefix", opts[i].prefix, "output file prefix");
        sub->add_flag("--dump-config", opts[i].dump, "print the resolved config and exit");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // bad flags are config errors
    }

    try {
        for (size_t i = 0; i < cmds.size(); ++i) {
            if (!app.get_subcommand(cmds[i].first)->parsed()) continue;
            const CommonOpts& o = opts[i];
            json root = o.config_path.empty() ? json::object() : load_json_file(o.config_path);
            for (const std::string& s : o.overrides) apply_override(root, s);
            RunConfig cfg = RunConfig::from_json(root, cmds[i].first);
            if (!o.out_dir.empty()) cfg.output.dir = o.out_dir;
            if (!o.prefix.empty()) cfg.output.prefix = o.prefix;
            if (const char* env = std::getenv("QND_SIM_THREADS")) {
                const int bound = std::atoi(env);
                if (bound < 1) throw config_error("QND_SIM_THREADS must be a positive integer");
                cfg.mc.n_threads = std::min(cfg.mc.n_threads, bound);
            }
            if (o.dump) {
                std::cout << cfg.to_json().dump(2) << "\n";
                return 0;
            }
            if (cmds[i].first == "channel") return cmd_channel(cfg);
            if (cmds[i].first == "sweep") return cmd_sweep(cfg);
            if (cmds[i].first == "wigner") return cmd_wigner(cfg);
            if (cmds[i].first == "montecarlo") return cmd_montecarlo(cfg);
            return cmd_validate(cfg);
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
