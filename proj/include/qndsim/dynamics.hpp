#pragma once

#include <array>
#include <cmath>

#include "qndsim/exp_sum.hpp"
#include "qndsim/params.hpp"

namespace qnd {

// State ordering for the linearized Langevin system (q, p, X, Y):
//   dq/dt = -(gamma/2) q                + sqrt(gamma) xi_q
//   dp/dt = -(gamma/2) p + g X          + sqrt(gamma) xi_p
//   dX/dt = -kappa X                    + sqrt(2 kappa) X_in
//   dY/dt = -kappa Y + g q              + sqrt(2 kappa) Y_in
enum StateIndex { IQ = 0, IP = 1, IX = 2, IY = 3 };

using Mat4 = std::array<std::array<double, 4>, 4>;

inline Mat4 drift_matrix(const InterfaceParams& p) {
    p.validate();
    Mat4 a{};
    a[IQ][IQ] = -p.gamma / 2.0;
    a[IP][IP] = -p.gamma / 2.0;
    a[IP][IX] = p.g;
    a[IX][IX] = -p.kappa;
    a[IY][IY] = -p.kappa;
    a[IY][IQ] = p.g;
    return a;
}

// Diffusion input matrix: columns order (xi_q, xi_p, X_in, Y_in).
inline Mat4 noise_matrix(const InterfaceParams& p) {
    p.validate();
    Mat4 b{};
    b[IQ][0] = std::sqrt(p.gamma);
    b[IP][1] = std::sqrt(p.gamma);
    b[IX][2] = std::sqrt(2.0 * p.kappa);
    b[IY][3] = std::sqrt(2.0 * p.kappa);
    return b;
}

// theta(t) = g / (kappa - gamma/2) * (exp(-gamma t / 2) - exp(-kappa t)).
// This is the (p, X) and (Y, q) entry of the propagator.
inline double theta(const InterfaceParams& p, double t) {
    p.validate();
    if (p.kappa <= p.gamma / 2.0) throw domain_error("theta requires kappa > gamma/2");
    if (t < 0.0) throw domain_error("theta requires t >= 0");
    return p.g / (p.kappa - p.gamma / 2.0) * (std::exp(-p.gamma * t / 2.0) - std::exp(-p.kappa * t));
}

// Integral of theta over [0, t]; appears as the q(0) coefficient of the
// output pulse mode.  Stable for gamma t << 1 and exact at gamma = 0.
inline double theta_integral(const InterfaceParams& p, double t) {
    if (p.kappa <= p.gamma / 2.0) throw domain_error("theta requires kappa > gamma/2");
    const double pref = p.g / (p.kappa - p.gamma / 2.0);
    const double mech = t * em1_over(p.gamma * t / 2.0);           // (2/gamma)(1 - e^{-gamma t/2})
    const double cav = em1_over(p.kappa * t) * t;                  // (1/kappa)(1 - e^{-kappa t})
    return pref * (mech - cav);
}

// Propagator Phi(t) = exp(A t) in closed form: the drift is lower triangular
// in the ordering (q, X, p, Y) with eigenvalues -gamma/2, -kappa.
inline Mat4 propagator(const InterfaceParams& p, double t) {
    p.validate();
    if (t < 0.0) throw domain_error("propagator requires t >= 0");
    const double em = std::exp(-p.gamma * t / 2.0);
    const double ec = std::exp(-p.kappa * t);
    const double th = theta(p, t);
    Mat4 m{};
    m[IQ][IQ] = em;
    m[IP][IP] = em;
    m[IP][IX] = th;
    m[IX][IX] = ec;
    m[IY][IY] = ec;
    m[IY][IQ] = th;
    return m;
}

// K = g sqrt(2 tau / kappa), the QND transfer gain of one rectangular pulse.
inline double adiabatic_K(const InterfaceParams& p) {
    p.validate();
    return p.g * std::sqrt(2.0 * p.tau / p.kappa);
}

// Rectangular pulse mode u(s) = 1/sqrt(tau) on [0, tau].
struct PulseMode {
    double duration = 0.0;

    explicit PulseMode(double tau) : duration(tau) {
        if (!(tau > 0.0)) throw domain_error("pulse duration must be > 0");
    }

    double amplitude(double) const { return 1.0 / std::sqrt(duration); }
    ExpSum shape() const { return ExpSum::constant(1.0 / std::sqrt(duration)); }
};

// Exact kernels of one output functional.  Initial-condition coefficients on
// (q(0), p(0), X(0), Y(0)) plus integration kernels against the input field
// and bath quadratures, written as functions of t = tau - s.
struct OutputKernel {
    std::array<double, 4> ic{};  // q0, p0, X0, Y0
    ExpSum vs_xin;               // against X_in(s)
    ExpSum vs_yin;               // against Y_in(s)
    ExpSum vs_xiq;               // against xi_q(s)
    ExpSum vs_xip;               // against xi_p(s)
};

struct TransferKernels {
    InterfaceParams params;
    bool adiabatic = false;       // cavity mode eliminated
    OutputKernel q_final;         // q(tau)
    OutputKernel p_final;         // p(tau)
    OutputKernel x_out;           // pulse-mode X of the output field
    OutputKernel y_out;           // pulse-mode Y of the output field
};

// Full-dynamics kernels (no adiabatic elimination).  Valid for gamma >= 0;
// at gamma = 0 the bath kernels vanish identically.
inline TransferKernels output_kernels(const InterfaceParams& p) {
    p.validate();
    if (p.kappa <= p.gamma / 2.0) throw domain_error("output_kernels requires kappa > gamma/2");
    const double kappa = p.kappa, g = p.g, gamma = p.gamma, tau = p.tau;
    const double hg = gamma / 2.0;
    const double sqg = std::sqrt(gamma);
    const double sq2k = std::sqrt(2.0 * kappa);
    const double rt = std::sqrt(tau);
    const double th_pref = g / (kappa - hg);

    TransferKernels k;
    k.params = p;

    // theta(t) and its integral as ExpSum in t = tau - s
    const ExpSum theta_fn{{th_pref, hg}, {-th_pref, kappa}};

    // q(tau)
    k.q_final.ic[IQ] = std::exp(-hg * tau);
    if (gamma > 0.0) k.q_final.vs_xiq = ExpSum::exponential(sqg, hg);

    // p(tau)
    k.p_final.ic[IP] = std::exp(-hg * tau);
    k.p_final.ic[IX] = theta(p, tau);
    k.p_final.vs_xin = sq2k * theta_fn;
    if (gamma > 0.0) k.p_final.vs_xip = ExpSum::exponential(sqg, hg);

    // X_out pulse mode: (1/sqrt(tau)) int (sqrt(2 kappa) X(s) - X_in(s)) ds
    k.x_out.ic[IX] = std::sqrt(2.0 / (kappa * tau)) * -std::expm1(-kappa * tau);
    k.x_out.vs_xin = ExpSum{{1.0 / rt, 0.0}, {-2.0 / rt, kappa}};

    // Y_out pulse mode
    k.y_out.ic[IQ] = std::sqrt(2.0 * kappa / tau) * theta_integral(p, tau);
    k.y_out.ic[IY] = std::sqrt(2.0 / (kappa * tau)) * -std::expm1(-kappa * tau);
    k.y_out.vs_yin = ExpSum{{1.0 / rt, 0.0}, {-2.0 / rt, kappa}};
    if (gamma > 0.0) {
        // sqrt(2 kappa gamma / tau) * Theta(tau - s)
        const double c = std::sqrt(2.0 * kappa * gamma / tau) * th_pref;
        k.y_out.vs_xiq = ExpSum{{c * (2.0 / gamma - 1.0 / kappa), 0.0},
                                {-c * 2.0 / gamma, hg},
                                {c / kappa, kappa}};
    }
    return k;
}

// Kernels with the intracavity mode adiabatically eliminated
// (X = sqrt(2/kappa) X_in, Y = (g/kappa) q + sqrt(2/kappa) Y_in).
inline TransferKernels adiabatic_kernels(const InterfaceParams& p) {
    p.validate();
    const double kappa = p.kappa, g = p.g, gamma = p.gamma, tau = p.tau;
    const double hg = gamma / 2.0;
    const double sqg = std::sqrt(gamma);
    const double rt = std::sqrt(tau);
    const double gk = g * std::sqrt(2.0 / kappa);

    TransferKernels k;
    k.params = p;
    k.adiabatic = true;

    k.q_final.ic[IQ] = std::exp(-hg * tau);
    if (gamma > 0.0) k.q_final.vs_xiq = ExpSum::exponential(sqg, hg);

    k.p_final.ic[IP] = std::exp(-hg * tau);
    k.p_final.vs_xin = ExpSum::exponential(gk, hg);
    if (gamma > 0.0) k.p_final.vs_xip = ExpSum::exponential(sqg, hg);

    // X_out = X_in exactly under elimination
    k.x_out.vs_xin = ExpSum::constant(1.0 / rt);

    // Y_out = Y_in + g sqrt(2/kappa) (1/sqrt(tau)) int q(s) ds
    k.y_out.ic[IQ] = gk / rt * tau * em1_over(hg * tau);
    k.y_out.vs_yin = ExpSum::constant(1.0 / rt);
    if (gamma > 0.0) {
        // kernel (g sqrt(2 gamma / kappa) / sqrt(tau)) * (2/gamma)(1 - e^{-gamma t/2})
        const double c = gk * sqg / rt * 2.0 / gamma;
        k.y_out.vs_xiq = ExpSum{{c, 0.0}, {-c, hg}};
    }
    return k;
}

inline TransferKernels kernels_for_tier(const InterfaceParams& p, ModelTier tier) {
    InterfaceParams q = p;
    switch (tier) {
        case ModelTier::AdiabaticNoBath:
            q.gamma = 0.0;
            return adiabatic_kernels(q);
        case ModelTier::AdiabaticBath:
            return adiabatic_kernels(q);
        case ModelTier::FullNoBath:
            q.gamma = 0.0;
            return output_kernels(q);
        case ModelTier::Full:
            return output_kernels(q);
    }
    throw domain_error("unknown tier");
}

}  // namespace qnd
