#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "qndsim/channel.hpp"
#include "qndsim/philox.hpp"

namespace qnd {

struct MonteCarloConfig {
    long n_traj = 100000;
    double dt = 0.0;          // integrator step, s; 0 selects 0.05 / kappa
    uint64_t seed = 0x51DE5EEDu;
    double amp_x_sd = 2.0;    // injected signal displacement spread, X quadrature
    double amp_y_sd = 2.0;    // injected signal displacement spread, Y quadrature
    double sigma_level = 5.0;
    GainPolicy policy = GainPolicy::Optimized;
    int n_threads = 1;
    double gain_scale = 1.0;  // fault injection: scales the simulated feedforward only

    double resolved_dt(const InterfaceParams& p) const {
        return dt > 0.0 ? dt : 0.05 / p.kappa;
    }

    void validate(const InterfaceParams& p) const {
        if (n_traj < 1000) throw config_error("monte carlo requires n_traj >= 1000");
        const double h = resolved_dt(p);
        if (!(h > 0.0) || h > 0.1 / p.kappa * (1.0 + 1e-12))
            throw domain_error("integrator step unstable: dt must satisfy dt <= 0.1 / kappa");
        if (!(amp_x_sd > 0.0 && amp_y_sd > 0.0))
            throw config_error("regression needs nonzero injected signal amplitudes");
        if (!(sigma_level > 0.0)) throw config_error("sigma level must be > 0");
        if (n_threads < 1) throw config_error("n_threads must be >= 1");
        if (!(gain_scale > 0.0)) throw config_error("gain_scale must be > 0");
    }
};

// One regression-slope comparison against the analytic input-output map.
struct CoefficientRow {
    std::string output;     // which output functional
    std::string regressor;  // which sampled input amplitude
    double estimated = 0.0;
    double analytic = 0.0;
    double se = 0.0;
    double deviation_sigmas = 0.0;
};

struct OracleReport {
    ModelTier tier = ModelTier::Full;
    long n_traj = 0;
    double dt = 0.0;          // actual step after rounding to an integer count
    long n_steps = 0;
    uint64_t seed = 0;
    double sigma_level = 0.0;

    ChannelDecomposition analytic;  // deterministic pipeline (supplies the gain)

    double T_hat = 0.0, T_se = 0.0;
    double V_XN_hat = 0.0, V_XN_se = 0.0;
    double V_YN_hat = 0.0, V_YN_se = 0.0;
    double V_N_hat = 0.0;

    std::vector<CoefficientRow> table;
    double max_channel_sigmas = 0.0;  // over T, V_XN, V_YN
    double max_coef_sigmas = 0.0;
    bool pass = false;
};

namespace detail {

// Number of sampled per-trajectory inputs (regressors) and recorded outputs.
inline constexpr int MC_NR = 6;  // q0, p0, X0, Y0, a_x, a_y
inline constexpr int MC_NY = 4;  // q_fb, p, xbar_out, ybar_out

struct McSums {
    double n = 0.0;
    double sr[MC_NR] = {};
    double srr[MC_NR] = {};
    double sy[MC_NY] = {};
    double syy[MC_NY] = {};
    double sry[MC_NR][MC_NY] = {};
    bool finite = true;

    void add(const double r[MC_NR], const double y[MC_NY]) {
        n += 1.0;
        for (int k = 0; k < MC_NR; ++k) {
            sr[k] += r[k];
            srr[k] += r[k] * r[k];
        }
        for (int o = 0; o < MC_NY; ++o) {
            sy[o] += y[o];
            syy[o] += y[o] * y[o];
            if (!std::isfinite(y[o])) finite = false;
            for (int k = 0; k < MC_NR; ++k) sry[k][o] += r[k] * y[o];
        }
    }

    void merge(const McSums& o) {
        n += o.n;
        finite = finite && o.finite;
        for (int k = 0; k < MC_NR; ++k) {
            sr[k] += o.sr[k];
            srr[k] += o.srr[k];
        }
        for (int y = 0; y < MC_NY; ++y) {
            sy[y] += o.sy[y];
            syy[y] += o.syy[y];
            for (int k = 0; k < MC_NR; ++k) sry[k][y] += o.sry[k][y];
        }
    }
};

struct McStepConstants {
    bool adiabatic = false;
    bool has_bath = false;
    long n_steps = 0;
    double u_dt = 0.0;        // pulse amplitude times dt
    double sdt = 0.0;         // sqrt(dt)
    double S = 1.0, inv_S = 1.0;
    double cg = 1.0;          // mechanical decay factor 1 - (gamma/2) dt
    double ck = 1.0;          // cavity decay factor 1 - kappa dt
    double gdt = 0.0;         // g dt
    double s2k = 0.0;         // sqrt(2 kappa)
    double gk = 0.0;          // g sqrt(2 / kappa)  (adiabatic coupling)
    double bath_sd = 0.0;     // sqrt(gamma dt (2 n_th + 1))
    double mech0_sd = 1.0;    // sqrt(2 n_0 + 1)
    double cav0_sd = 1.0;     // sqrt(2 n_cav0 + 1)
    double u = 0.0;           // pulse amplitude 1/sqrt(tau)
};

inline McStepConstants mc_constants(const InterfaceParams& p, ModelTier tier, double dt_req) {
    InterfaceParams q = p;
    if (tier == ModelTier::AdiabaticNoBath || tier == ModelTier::FullNoBath) q.gamma = 0.0;
    McStepConstants c;
    c.adiabatic = (tier == ModelTier::AdiabaticNoBath || tier == ModelTier::AdiabaticBath);
    c.has_bath = q.gamma > 0.0;
    c.n_steps = static_cast<long>(std::ceil(q.tau / dt_req - 1e-9));
    const double dt = q.tau / static_cast<double>(c.n_steps);
    c.u = 1.0 / std::sqrt(q.tau);
    c.u_dt = c.u * dt;
    c.sdt = std::sqrt(dt);
    c.S = q.S;
    c.inv_S = 1.0 / q.S;
    c.cg = 1.0 - 0.5 * q.gamma * dt;
    c.ck = 1.0 - q.kappa * dt;
    c.gdt = q.g * dt;
    c.s2k = std::sqrt(2.0 * q.kappa);
    c.gk = q.g * std::sqrt(2.0 / q.kappa);
    c.bath_sd = std::sqrt(q.gamma * dt * thermal_variance(q.n_th));
    c.mech0_sd = std::sqrt(thermal_variance(q.n_0));
    c.cav0_sd = std::sqrt(thermal_variance(q.n_cav0));
    return c;
}

// Steps buffered per refill so the branchy normal sampling stays out of the
// integrator's dependency chain.
inline constexpr int MC_CHUNK_STEPS = 512;

// A batch of B trajectories integrated in lockstep.  Each lane owns its
// Philox stream with draw order a_x, a_y, q0, p0, then X0, Y0 for the full
// tiers, then per step the optical pair and, when the bath is live, the bath
// pair; the per-lane arithmetic never mixes lanes, so results are
// bit-identical regardless of how trajectories are grouped.  Interleaving
// exists purely to hide the latency of the serial state recurrences.
template <int B>
inline void mc_batch(const McStepConstants& c, double gain, double amp_x_sd, double amp_y_sd,
                     uint64_t seed, long first_traj, double r[][MC_NR], double y[][MC_NY]) {
    std::vector<NormalStream> ns;
    ns.reserve(B);
    for (int l = 0; l < B; ++l)
        ns.emplace_back(seed, static_cast<uint64_t>(first_traj + l));

    double q[B], p[B], X[B], Y[B], xacc[B], yacc[B], dxa[B], dya[B];
    for (int l = 0; l < B; ++l) {
        const double ax = amp_x_sd * ns[l].normal();
        const double ay = amp_y_sd * ns[l].normal();
        q[l] = c.mech0_sd * ns[l].normal();
        p[l] = c.mech0_sd * ns[l].normal();
        X[l] = Y[l] = 0.0;
        if (!c.adiabatic) {
            X[l] = c.cav0_sd * ns[l].normal();
            Y[l] = c.cav0_sd * ns[l].normal();
        }
        r[l][0] = q[l]; r[l][1] = p[l]; r[l][2] = X[l]; r[l][3] = Y[l];
        r[l][4] = ax; r[l][5] = ay;
        xacc[l] = yacc[l] = 0.0;
        // per-step deterministic displacement of the presqueezed increments
        dxa[l] = c.S * ax * c.u_dt;
        dya[l] = c.inv_S * ay * c.u_dt;
    }
    const double dxw = c.S * c.sdt, dyw = c.inv_S * c.sdt;
    const double a_out = c.s2k * c.u_dt;  // output weight of the intracavity field
    const int nd = c.has_bath ? 4 : 2;    // normals consumed per step
    const double u = c.u, cg = c.cg, ck = c.ck, gdt = c.gdt, s2k = c.s2k;
    const double gk = c.gk, bath_sd = c.bath_sd, u_dt = c.u_dt;

    NormalStream* const nsp = ns.data();
    alignas(64) double nb[B][MC_CHUNK_STEPS * 4];
    for (long base = 0; base < c.n_steps; base += MC_CHUNK_STEPS) {
        const int m = static_cast<int>(std::min<long>(MC_CHUNK_STEPS, c.n_steps - base));
        for (int l = 0; l < B; ++l) nsp[l].normals(nb[l], nd * m);

        if (!c.adiabatic && c.has_bath) {
            for (int i = 0; i < m; ++i) {
                for (int l = 0; l < B; ++l) {
                    const double* d = &nb[l][4 * i];
                    const double dxin = dxa[l] + dxw * d[0];
                    const double dyin = dya[l] + dyw * d[1];
                    xacc[l] += a_out * X[l] - u * dxin;
                    yacc[l] += a_out * Y[l] - u * dyin;
                    const double qn = cg * q[l] + bath_sd * d[2];
                    const double pn = cg * p[l] + gdt * X[l] + bath_sd * d[3];
                    const double Xn = ck * X[l] + s2k * dxin;
                    const double Yn = ck * Y[l] + gdt * q[l] + s2k * dyin;
                    q[l] = qn; p[l] = pn; X[l] = Xn; Y[l] = Yn;
                }
            }
        } else if (!c.adiabatic) {
            for (int i = 0; i < m; ++i) {
                for (int l = 0; l < B; ++l) {
                    const double* d = &nb[l][2 * i];
                    const double dxin = dxa[l] + dxw * d[0];
                    const double dyin = dya[l] + dyw * d[1];
                    xacc[l] += a_out * X[l] - u * dxin;
                    yacc[l] += a_out * Y[l] - u * dyin;
                    const double Yn = ck * Y[l] + gdt * q[l] + s2k * dyin;
                    p[l] += gdt * X[l];
                    X[l] = ck * X[l] + s2k * dxin;
                    Y[l] = Yn;
                }
            }
        } else if (c.has_bath) {
            for (int i = 0; i < m; ++i) {
                for (int l = 0; l < B; ++l) {
                    const double* d = &nb[l][4 * i];
                    const double dxin = dxa[l] + dxw * d[0];
                    const double dyin = dya[l] + dyw * d[1];
                    xacc[l] += u * dxin;
                    yacc[l] += u * dyin + gk * q[l] * u_dt;
                    const double qn = cg * q[l] + bath_sd * d[2];
                    p[l] = cg * p[l] + gk * dxin + bath_sd * d[3];
                    q[l] = qn;
                }
            }
        } else {
            for (int i = 0; i < m; ++i) {
                for (int l = 0; l < B; ++l) {
                    const double* d = &nb[l][2 * i];
                    const double dxin = dxa[l] + dxw * d[0];
                    const double dyin = dya[l] + dyw * d[1];
                    xacc[l] += u * dxin;
                    yacc[l] += u * dyin + gk * q[l] * u_dt;
                    p[l] += gk * dxin;
                }
            }
        }
    }

    for (int l = 0; l < B; ++l) {
        y[l][0] = q[l] - gain * yacc[l];
        y[l][1] = p[l];
        y[l][2] = xacc[l];
        y[l][3] = yacc[l];
    }
}

}  // namespace detail

// Brute-force verification of the channel reduction by stochastic
// trajectories.  The feedforward gain and the analytic targets come from the
// deterministic pipeline; T is estimated from the regression of the final
// mechanical quadratures on the injected signal displacements, the residual
// variances give the added noise.  Fixed (seed, trajectory) -> stream
// assignment and an ordered chunk reduction make the result bit-identical
// for a given config regardless of thread count.
inline OracleReport mc_channel(const InterfaceParams& params, ModelTier tier,
                               const MonteCarloConfig& cfg) {
    params.validate();
    cfg.validate(params);

    const ChannelResult pipeline = compute_channel_detail(params, tier, cfg.policy);
    const double gain = pipeline.ch.gain * cfg.gain_scale;
    const detail::McStepConstants consts = detail::mc_constants(params, tier, cfg.resolved_dt(params));

    constexpr long CHUNK = 250;
    const long n_chunks = (cfg.n_traj + CHUNK - 1) / CHUNK;
    std::vector<detail::McSums> partial(static_cast<size_t>(n_chunks));

    std::atomic<long> next_chunk{0};
    auto worker = [&]() {
        for (;;) {
            const long ci = next_chunk.fetch_add(1);
            if (ci >= n_chunks) return;
            detail::McSums& s = partial[static_cast<size_t>(ci)];
            const long t0 = ci * CHUNK;
            const long t1 = std::min(cfg.n_traj, t0 + CHUNK);
            double r[2][detail::MC_NR], y[2][detail::MC_NY];
            long t = t0;
            for (; t + 2 <= t1; t += 2) {
                detail::mc_batch<2>(consts, gain, cfg.amp_x_sd, cfg.amp_y_sd, cfg.seed, t, r, y);
                s.add(r[0], y[0]);
                s.add(r[1], y[1]);
            }
            if (t < t1) {
                detail::mc_batch<1>(consts, gain, cfg.amp_x_sd, cfg.amp_y_sd, cfg.seed, t, r, y);
                s.add(r[0], y[0]);
            }
        }
    };
    if (cfg.n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < cfg.n_threads; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    detail::McSums sums;
    for (const detail::McSums& s : partial) sums.merge(s);
    if (!sums.finite) throw numerical_error("monte carlo produced a non-finite trajectory");

    const double n = sums.n;
    double var_r[detail::MC_NR], cov[detail::MC_NR][detail::MC_NY], var_y[detail::MC_NY];
    for (int k = 0; k < detail::MC_NR; ++k)
        var_r[k] = (sums.srr[k] - sums.sr[k] * sums.sr[k] / n) / n;
    for (int o = 0; o < detail::MC_NY; ++o) {
        var_y[o] = (sums.syy[o] - sums.sy[o] * sums.sy[o] / n) / n;
        for (int k = 0; k < detail::MC_NR; ++k)
            cov[k][o] = (sums.sry[k][o] - sums.sr[k] * sums.sy[o] / n) / n;
    }

    OracleReport rep;
    rep.tier = tier;
    rep.n_traj = cfg.n_traj;
    rep.n_steps = consts.n_steps;
    rep.dt = params.tau / static_cast<double>(consts.n_steps);
    rep.seed = cfg.seed;
    rep.sigma_level = cfg.sigma_level;
    rep.analytic = pipeline.ch;

    // Channel estimates.  The signal enters mechanical q through -Y and p
    // through X; residuals after removing both injected amplitudes are the
    // added-noise variances scaled by (1 - T).
    auto slope = [&](int out, int reg) { return cov[reg][out] / var_r[reg]; };
    auto resid = [&](int out) {
        double v = var_y[out];
        v -= cov[4][out] * cov[4][out] / var_r[4];
        v -= cov[5][out] * cov[5][out] / var_r[5];
        return v;
    };

    const double c_q = -slope(0, 5);  // q_fb on a_y
    const double c_p = slope(1, 4);   // p on a_x
    const double R_q = resid(0), R_p = resid(1);
    const double se_cq = std::sqrt(std::max(R_q, 0.0) / (n * var_r[5]));
    const double se_cp = std::sqrt(std::max(R_p, 0.0) / (n * var_r[4]));
    const double se_Rq = R_q * std::sqrt(2.0 / n);
    const double se_Rp = R_p * std::sqrt(2.0 / n);

    const double T = c_q * c_p;
    rep.T_hat = T;
    rep.T_se = std::sqrt(c_p * c_p * se_cq * se_cq + c_q * c_q * se_cp * se_cp);

    // The regression removes only the injected displacement; the pulse
    // mode's own vacuum (variance c^2 per side) rides through into the
    // residual and belongs to the transmitted signal, not the added noise.
    const bool sym = c_q > 0.0 && c_p > 0.0 && T < 1.0;
    const double lam2 = sym ? c_p / c_q : 1.0;
    const double om = 1.0 - T;
    const double E_q = R_q - c_q * c_q;
    const double E_p = R_p - c_p * c_p;
    rep.V_XN_hat = lam2 * E_q / om;
    rep.V_YN_hat = E_p / (lam2 * om);
    rep.V_N_hat = std::sqrt(std::max(rep.V_XN_hat * rep.V_YN_hat, 0.0));
    if (sym) {
        // delta-method errors through V = (c_p / c_q)(R_q - c_q^2) / (1 - c_q c_p)
        const double vx = rep.V_XN_hat, vy = rep.V_YN_hat;
        const double dx_cq = vx * (-1.0 / c_q + c_p / om) - 2.0 * c_p / om;
        const double dx_cp = vx * (1.0 / c_p + c_q / om);
        const double dy_cq = vy * (1.0 / c_q + c_p / om);
        const double dy_cp = vy * (-1.0 / c_p + c_q / om) - 2.0 * c_q / om;
        rep.V_XN_se = std::sqrt(dx_cq * dx_cq * se_cq * se_cq + dx_cp * dx_cp * se_cp * se_cp +
                                lam2 * lam2 / (om * om) * se_Rq * se_Rq);
        rep.V_YN_se = std::sqrt(dy_cq * dy_cq * se_cq * se_cq + dy_cp * dy_cp * se_cp * se_cp +
                                se_Rp * se_Rp / (lam2 * lam2 * om * om));
    } else {
        rep.V_XN_se = std::sqrt(se_Rq * se_Rq / (om * om) +
                                rep.V_XN_hat * rep.V_XN_hat / (om * om) * rep.T_se * rep.T_se);
        rep.V_YN_se = std::sqrt(se_Rp * se_Rp / (om * om) +
                                rep.V_YN_hat * rep.V_YN_hat / (om * om) * rep.T_se * rep.T_se);
    }

    // Per-coefficient regression table against the analytic map (feedforward
    // folded into the q row).
    const LinearInputOutputMap& map = pipeline.map;
    const int i_mech = 0;
    const int i_cav = consts.adiabatic ? -1 : 1;
    const int i_sig = map.signal_mode;
    auto analytic_coef = [&](int out, int mode, bool on_q) -> double {
        auto pick = [&](int o) {
            const QuadCoef& qc = map.coef[o][static_cast<size_t>(mode)];
            return on_q ? qc.on_q : qc.on_p;
        };
        if (out == 0) return pick(OUT_Q) - gain * pick(OUT_YBAR);
        if (out == 1) return pick(OUT_P);
        if (out == 2) return pick(OUT_XBAR);
        return pick(OUT_YBAR);
    };
    const char* out_names[detail::MC_NY] = {"q_fb", "p", "xbar_out", "ybar_out"};
    struct Reg { int idx; int mode; bool on_q; const char* name; };
    std::vector<Reg> regs = {{0, i_mech, true, "q0"},
                             {1, i_mech, false, "p0"},
                             {4, i_sig, true, "a_x"},
                             {5, i_sig, false, "a_y"}};
    if (i_cav >= 0) {
        regs.insert(regs.begin() + 2, {2, i_cav, true, "X0"});
        regs.insert(regs.begin() + 3, {3, i_cav, false, "Y0"});
    }
    for (int o = 0; o < detail::MC_NY; ++o) {
        for (const Reg& rg : regs) {
            CoefficientRow row;
            row.output = out_names[o];
            row.regressor = rg.name;
            row.estimated = slope(o, rg.idx);
            row.analytic = analytic_coef(o, rg.mode, rg.on_q);
            const double rv = std::max(var_y[o] - cov[rg.idx][o] * cov[rg.idx][o] / var_r[rg.idx], 0.0);
            row.se = std::sqrt(rv / (n * var_r[rg.idx]));
            row.deviation_sigmas = row.se > 0.0 ? std::abs(row.estimated - row.analytic) / row.se
                                                : std::abs(row.estimated - row.analytic);
            rep.max_coef_sigmas = std::max(rep.max_coef_sigmas, row.deviation_sigmas);
            rep.table.push_back(std::move(row));
        }
    }

    auto dev = [](double est, double se, double target) {
        return se > 0.0 ? std::abs(est - target) / se : std::abs(est - target);
    };
    rep.max_channel_sigmas = std::max({dev(rep.T_hat, rep.T_se, rep.analytic.T),
                                       dev(rep.V_XN_hat, rep.V_XN_se, rep.analytic.V_XN),
                                       dev(rep.V_YN_hat, rep.V_YN_se, rep.analytic.V_YN)});
    rep.pass = rep.max_channel_sigmas <= cfg.sigma_level && rep.max_coef_sigmas <= cfg.sigma_level;
    return rep;
}

}  // namespace qnd
