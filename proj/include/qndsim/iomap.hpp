#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qndsim/dynamics.hpp"
#include "qndsim/exp_sum.hpp"
#include "qndsim/params.hpp"

namespace qnd {

enum class ModeKind { MechInit, CavInit, Signal, OpticalResidual, Bath, Opo };

// One input mode: a canonical quadrature pair (Q_m, P_m) with [Q_m, P_m] = 2i
// and symmetric-ordered variances.  For optical modes Q is the X quadrature,
// for bath modes Q is the xi_q side.
struct BasisMode {
    ModeKind kind;
    std::string label;
    double var_q = 1.0;
    double var_p = 1.0;
};

struct QuadCoef {
    double on_q = 0.0;
    double on_p = 0.0;
};

// Output functionals of the interface, ordered as in TransferKernels.
enum OutputIndex { OUT_Q = 0, OUT_P = 1, OUT_XBAR = 2, OUT_YBAR = 3 };

// The exact linear solution expressed over a finite mode basis: coefficients
// of every input mode quadrature in every output operator.
struct LinearInputOutputMap {
    InterfaceParams params;
    std::vector<BasisMode> modes;
    std::array<std::vector<QuadCoef>, 4> coef;  // [output][mode]
    int signal_mode = -1;

    // Symplectic form between two outputs; canonical pairs give 2.
    double symplectic(int out_a, int out_b) const {
        double v = 0.0;
        for (size_t m = 0; m < modes.size(); ++m) {
            const QuadCoef& a = coef[out_a][m];
            const QuadCoef& b = coef[out_b][m];
            v += a.on_q * b.on_p - a.on_p * b.on_q;
        }
        return 2.0 * v;
    }

    // Variance of an output functional, optionally excluding the signal mode.
    double variance(int out, bool include_signal = true) const {
        double v = 0.0;
        for (size_t m = 0; m < modes.size(); ++m) {
            if (!include_signal && static_cast<int>(m) == signal_mode) continue;
            const QuadCoef& c = coef[out][m];
            v += c.on_q * c.on_q * modes[m].var_q + c.on_p * c.on_p * modes[m].var_p;
        }
        return v;
    }

    const QuadCoef& signal_coef(int out) const { return coef[out][signal_mode]; }
};

// Split every input-field kernel into its component along the pulse mode and
// an orthogonal residual, normalized into unit-commutator modes.  Bath
// kernels are projected onto the same orthonormal temporal basis.
inline LinearInputOutputMap project_onto_pulse(const TransferKernels& k, const PulseMode& mode) {
    const InterfaceParams& p = k.params;
    const double tau = p.tau;
    if (std::abs(mode.duration - tau) > 1e-12 * tau)
        throw domain_error("pulse mode duration does not match params.tau");

    const std::array<const OutputKernel*, 4> outs = {&k.q_final, &k.p_final, &k.x_out, &k.y_out};

    // Temporal basis: the pulse mode first, then every exponential appearing
    // in any kernel.  Gram-Schmidt drops duplicates (e.g. gamma = 0).
    std::vector<ExpSum> fns = {mode.shape()};
    std::vector<double> rates;
    auto collect = [&rates](const ExpSum& f) {
        for (const auto& t : f.terms())
            if (t.rate > 0.0) rates.push_back(t.rate);
    };
    for (const OutputKernel* o : outs) {
        collect(o->vs_xin);
        collect(o->vs_yin);
        collect(o->vs_xiq);
        collect(o->vs_xip);
    }
    std::sort(rates.begin(), rates.end());
    rates.erase(std::unique(rates.begin(), rates.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12 * b; }),
                rates.end());
    for (double r : rates) fns.push_back(ExpSum::exponential(1.0, r));
    const std::vector<ExpSum> basis = orthonormalize(fns, tau);

    const bool has_bath = p.gamma > 0.0;

    LinearInputOutputMap map;
    map.params = p;

    // Mode layout: mech init, cavity init (full model only), signal pulse
    // mode, optical residuals, bath modes.
    map.modes.push_back({ModeKind::MechInit, "mech0", thermal_variance(p.n_0), thermal_variance(p.n_0)});
    const int i_mech = 0;
    int i_cav = -1;
    if (!k.adiabatic) {
        map.modes.push_back(
            {ModeKind::CavInit, "cav0", thermal_variance(p.n_cav0), thermal_variance(p.n_cav0)});
        i_cav = 1;
    }
    const int i_sig = static_cast<int>(map.modes.size());
    map.signal_mode = i_sig;
    map.modes.push_back({ModeKind::Signal, "pulse", 1.0, 1.0});
    for (size_t j = 1; j < basis.size(); ++j)
        map.modes.push_back({ModeKind::OpticalResidual, "residual" + std::to_string(j), 1.0, 1.0});
    const int i_bath = static_cast<int>(map.modes.size());
    if (has_bath) {
        const double vb = thermal_variance(p.n_th);
        for (size_t j = 0; j < basis.size(); ++j)
            map.modes.push_back({ModeKind::Bath, "bath" + std::to_string(j), vb, vb});
    }

    for (int o = 0; o < 4; ++o) {
        map.coef[o].assign(map.modes.size(), QuadCoef{});
        const OutputKernel& ok = *outs[o];
        map.coef[o][i_mech] = {ok.ic[IQ], ok.ic[IP]};
        if (i_cav >= 0) map.coef[o][i_cav] = {ok.ic[IX], ok.ic[IY]};
        for (size_t j = 0; j < basis.size(); ++j) {
            QuadCoef& c = map.coef[o][i_sig + static_cast<int>(j)];
            if (!ok.vs_xin.empty()) c.on_q = ok.vs_xin.inner(basis[j], tau);
            if (!ok.vs_yin.empty()) c.on_p = ok.vs_yin.inner(basis[j], tau);
            if (has_bath) {
                QuadCoef& b = map.coef[o][i_bath + static_cast<int>(j)];
                if (!ok.vs_xiq.empty()) b.on_q = ok.vs_xiq.inner(basis[j], tau);
                if (!ok.vs_xip.empty()) b.on_p = ok.vs_xip.inner(basis[j], tau);
            }
        }
    }
    return map;
}

}  // namespace qnd
