#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "qndsim/iomap.hpp"

namespace qnd {

// Measurement-induced squeezer: X -> S X, Y -> Y / S, with optional residual
// OPO noise entering the Y side when the ancilla squeezing is finite.
struct SqueezerModel {
    double S = 1.0;                 // amplitude gain on the X quadrature
    double bs_transmittivity = 1.0; // variable-beamsplitter transmittivity, 1/S^2
    double opo_Y_variance = 0.0;    // V_sq in shot-noise units; 0 = ideal OPO

    explicit SqueezerModel(double s, double v_sq = 0.0)
        : S(s), bs_transmittivity(1.0 / (s * s)), opo_Y_variance(v_sq) {
        if (!(S >= 1.0 - 1e-12)) throw domain_error("squeezer gain S must be >= 1");
        if (!(bs_transmittivity > 0.0 && bs_transmittivity <= 1.0 + 1e-12))
            throw domain_error("squeezer transmittivity must lie in (0, 1]");
        if (v_sq < 0.0 || v_sq > 1.0) throw domain_error("OPO Y variance must lie in [0, 1]");
        if (std::abs(S - 1.0 / std::sqrt(bs_transmittivity)) > 1e-12 * S)
            throw domain_error("inconsistent squeezer gain");
    }
};

// Effective beamsplitter reduction of the interface.
struct ChannelDecomposition {
    double T = 0.0;        // transmittivity
    double V_XN = 1.0;     // added-noise variance, q side
    double V_YN = 1.0;     // added-noise variance, p side
    double V_N = 1.0;      // sqrt(V_XN * V_YN)
    double gain = 0.0;     // feedforward gain applied to Ybar_out
    double sym_factor = 1.0;  // formal symmetrizing squeeze amplitude
    double mismatch = 0.0;    // relative q/p signal-coefficient imbalance after symmetrization
    ModelTier tier = ModelTier::Full;

    void validate() const {
        if (!(T >= 0.0 && T < 1.0)) throw domain_error("channel T must lie in [0, 1)");
        if (!(V_XN > 0.0 && V_YN > 0.0)) throw domain_error("channel noise variances must be > 0");
    }
};

enum class GainPolicy { Optimized, Adiabatic };

// Rescale the optical modes by the squeezer and attach residual OPO noise
// modes where the Y quadratures enter.
inline LinearInputOutputMap apply_presqueeze(const LinearInputOutputMap& map,
                                             const SqueezerModel& sq) {
    LinearInputOutputMap out = map;
    const double S = sq.S;
    const double opo_coupling = std::sqrt(std::max(0.0, 1.0 - sq.bs_transmittivity));
    const size_t n = map.modes.size();
    for (size_t m = 0; m < n; ++m) {
        const ModeKind kind = out.modes[m].kind;
        if (kind != ModeKind::Signal && kind != ModeKind::OpticalResidual) continue;
        bool used = false;
        for (int o = 0; o < 4; ++o) {
            QuadCoef& c = out.coef[o][m];
            if (c.on_p != 0.0) used = true;
            c.on_q *= S;
            c.on_p /= S;
        }
        if (sq.opo_Y_variance > 0.0 && used) {
            // The OPO ancilla rides along wherever this mode's Y quadrature
            // does, with weight sqrt(1 - bs_transmittivity).
            out.modes.push_back({ModeKind::Opo, "opo_" + out.modes[m].label,
                                 sq.opo_Y_variance, 1.0 / sq.opo_Y_variance});
            for (int o = 0; o < 4; ++o) {
                const double y_coef = map.coef[o][m].on_p;  // pre-squeeze coefficient
                out.coef[o].push_back({y_coef * opo_coupling, 0.0});
            }
        }
    }
    return out;
}

// K' = KS / (1 + (KS)^2): the adiabatic-tier feedforward scale.
inline double adiabatic_gain(double K, double S) {
    if (!(K >= 0.0) || !(S > 0.0)) throw domain_error("adiabatic_gain requires K >= 0, S > 0");
    const double ks = K * S;
    return ks / (1.0 + ks * ks);
}

// Reduce a presqueezed map, with the feedforward displacement
// q -> q - gain * Ybar_out already chosen, to the beamsplitter form.
inline ChannelDecomposition decompose(const LinearInputOutputMap& map, double gain,
                                      ModelTier tier = ModelTier::Full) {
    const size_t n = map.modes.size();
    const int sig = map.signal_mode;

    std::vector<QuadCoef> q_raw(n);
    for (size_t m = 0; m < n; ++m) {
        q_raw[m].on_q = map.coef[OUT_Q][m].on_q - gain * map.coef[OUT_YBAR][m].on_q;
        q_raw[m].on_p = map.coef[OUT_Q][m].on_p - gain * map.coef[OUT_YBAR][m].on_p;
    }
    const std::vector<QuadCoef>& p_fin = map.coef[OUT_P];

    // Signal couples to q only through Ybar_in and to p only through Xbar_in.
    const double c_q = -q_raw[sig].on_p;
    const double c_p = p_fin[sig].on_q;
    const double scale = std::max(std::abs(c_q), std::abs(c_p));
    if (scale > 0.0 && (std::abs(q_raw[sig].on_q) > 1e-9 * scale ||
                        std::abs(p_fin[sig].on_p) > 1e-9 * scale))
        throw domain_error("signal couples to the wrong quadrature: inconsistent map");

    ChannelDecomposition ch;
    ch.tier = tier;
    ch.gain = gain;

    const double T = c_q * c_p;
    if (!(T >= 0.0 && T < 1.0)) throw domain_error("decompose: signal coefficients give T outside [0, 1)");
    ch.T = T;

    const double lambda = (c_q > 0.0 && c_p > 0.0) ? std::sqrt(c_p / c_q) : 1.0;
    ch.sym_factor = lambda;
    ch.mismatch = (T > 0.0) ? std::abs(c_q * lambda - c_p / lambda) / std::sqrt(T) : 0.0;

    double var_q = 0.0, var_p = 0.0;
    for (size_t m = 0; m < n; ++m) {
        if (static_cast<int>(m) == sig) continue;
        var_q += q_raw[m].on_q * q_raw[m].on_q * map.modes[m].var_q +
                 q_raw[m].on_p * q_raw[m].on_p * map.modes[m].var_p;
        var_p += p_fin[m].on_q * p_fin[m].on_q * map.modes[m].var_q +
                 p_fin[m].on_p * p_fin[m].on_p * map.modes[m].var_p;
    }
    ch.V_XN = lambda * lambda * var_q / (1.0 - T);
    ch.V_YN = var_p / (lambda * lambda * (1.0 - T));
    ch.V_N = std::sqrt(ch.V_XN * ch.V_YN);
    if (!std::isfinite(ch.V_N)) throw numerical_error("decompose produced non-finite noise variance");
    return ch;
}

// Feedforward gain selection.  The bare added-noise product sqrt(V_XN V_YN)
// is non-increasing toward zero gain (where T -> 0 and the channel is
// useless), so plain product minimization is degenerate.  The well-posed
// optimum is the gain balancing the two added-noise quadratures,
// V_XN = V_YN: it reproduces S * adiabatic_gain exactly in the adiabatic
// tier and stays within a few percent of it in the bath-dominated regime.
inline double optimize_gain(const LinearInputOutputMap& map) {
    const int sig = map.signal_mode;
    const double c_p = map.coef[OUT_P][sig].on_q;
    const double c_yy = map.coef[OUT_YBAR][sig].on_p;
    if (!(c_p > 0.0) || !(c_yy > 0.0)) return 0.0;  // nothing to feed forward

    const double g_hi = (1.0 - 1e-9) / (c_p * c_yy);
    const double g_lo = 1e-12 * g_hi;

    auto ratio = [&](double gain) {
        const ChannelDecomposition ch = decompose(map, gain);
        const double r = std::log(ch.V_XN / ch.V_YN);
        if (!std::isfinite(r)) throw numerical_error("optimize_gain: non-finite objective");
        return r;
    };

    // Scan in log-gain for a sign change, then bisect.
    const int n_scan = 256;
    double prev_g = g_lo, prev_f = ratio(g_lo);
    double best_g = g_lo, best_af = std::abs(prev_f);
    double lo = -1.0, hi = -1.0;
    for (int i = 1; i <= n_scan; ++i) {
        const double gg = g_lo * std::pow(g_hi / g_lo, static_cast<double>(i) / n_scan);
        const double f = ratio(gg);
        if (std::abs(f) < best_af) { best_af = std::abs(f); best_g = gg; }
        if (prev_f == 0.0 || (prev_f > 0.0) != (f > 0.0)) { lo = prev_g; hi = gg; break; }
        prev_g = gg;
        prev_f = f;
    }
    if (lo < 0.0) return best_g;  // no crossing: closest-to-balanced gain
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((ratio(mid) > 0.0) == (ratio(lo) > 0.0)) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct ChannelResult {
    ChannelDecomposition ch;
    LinearInputOutputMap map;  // after presqueeze, before feedforward
};

inline ChannelResult compute_channel_detail(const InterfaceParams& params, ModelTier tier,
                                            GainPolicy policy = GainPolicy::Optimized,
                                            double opo_Y_variance = 0.0) {
    params.validate();
    const TransferKernels kernels = kernels_for_tier(params, tier);
    const PulseMode pulse(params.tau);
    LinearInputOutputMap map = project_onto_pulse(kernels, pulse);
    map = apply_presqueeze(map, SqueezerModel(params.S, opo_Y_variance));
    const double gain = (policy == GainPolicy::Adiabatic)
                            ? params.S * adiabatic_gain(adiabatic_K(params), params.S)
                            : optimize_gain(map);
    ChannelResult res{decompose(map, gain, tier), std::move(map)};
    return res;
}

inline ChannelDecomposition compute_channel(const InterfaceParams& params, ModelTier tier,
                                            GainPolicy policy = GainPolicy::Optimized,
                                            double opo_Y_variance = 0.0) {
    return compute_channel_detail(params, tier, policy, opo_Y_variance).ch;
}

// V_N ~ sqrt(1 + 4 g^2 S^4 / kappa^2): cavity-memory noise floor with all
// auxiliary modes in the ground state.
inline double vn_cavity_approx(const InterfaceParams& p) {
    p.validate();
    const double x = p.g * p.S * p.S / p.kappa;
    return std::sqrt(1.0 + 4.0 * x * x);
}

// V_N ~ 1 + 2 gamma (g tau S)^2 (2 n_th + 1) / kappa: bath-dominated regime.
inline double vn_thermal_estimate(const InterfaceParams& p) {
    p.validate();
    const double gts = p.g * p.tau * p.S;
    return 1.0 + 2.0 * p.gamma * gts * gts * thermal_variance(p.n_th) / p.kappa;
}

// Asymptotic window S^2 eps / kappa << tau << 1 / (eps gamma n_th) with
// eps = g^2 S^2 tau / kappa.  Reports the two bounds; no pass/fail.
struct TauWindow {
    double epsilon;
    double tau_min;
    double tau_max;  // +inf when n_th = 0
};

inline TauWindow tau_window(const InterfaceParams& p) {
    p.validate();
    const double eps = p.g * p.g * p.S * p.S * p.tau / p.kappa;
    if (!(eps > 0.0)) throw domain_error("tau_window requires g > 0");
    TauWindow w;
    w.epsilon = eps;
    w.tau_min = p.S * p.S * eps / p.kappa;
    w.tau_max = (p.n_th > 0.0 && p.gamma > 0.0)
                    ? 1.0 / (eps * p.gamma * p.n_th)
                    : std::numeric_limits<double>::infinity();
    return w;
}

// Upper bound on V_N^2 for single-photon negativity transfer quoted with the
// sweep figures: V_N^2 < T / (1 - T).  The Fock-basis scan provides the
// independently calibrated boundary.
inline double negativity_bound(double T) {
    if (!(T > 0.0 && T < 1.0)) throw domain_error("negativity_bound requires T in (0, 1)");
    return T / (1.0 - T);
}

}  // namespace qnd
