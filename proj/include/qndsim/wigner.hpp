#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qndsim/channel.hpp"

namespace qnd {

inline constexpr double INV_2PI = 0.15915494309189533577;
inline constexpr int MAX_FOCK = 3;

// Phase-space grid of Wigner values in shot-noise units (vacuum quadrature
// variance 1).  Values are row-major with the x (mechanical q) index slow.
struct WignerGrid {
    std::vector<double> x;
    std::vector<double> p;
    std::vector<double> w;
    std::string state_label;
    std::string channel_label;

    static WignerGrid linspace(double half_extent, int n_points) {
        if (!(half_extent > 0.0) || n_points < 2)
            throw domain_error("wigner grid needs half_extent > 0 and >= 2 points");
        WignerGrid g;
        g.x.resize(n_points);
        g.p.resize(n_points);
        for (int i = 0; i < n_points; ++i) {
            const double v = -half_extent + 2.0 * half_extent * i / (n_points - 1);
            g.x[i] = v;
            g.p[i] = v;
        }
        g.w.assign(static_cast<size_t>(n_points) * n_points, 0.0);
        return g;
    }

    double& at(size_t ix, size_t ip) { return w[ix * p.size() + ip]; }
    double at(size_t ix, size_t ip) const { return w[ix * p.size() + ip]; }

    // Trapezoid-rule integral over the grid.
    double integral() const {
        double total = 0.0;
        for (size_t i = 0; i + 1 < x.size(); ++i)
            for (size_t j = 0; j + 1 < p.size(); ++j) {
                const double cell = 0.25 * (at(i, j) + at(i + 1, j) + at(i, j + 1) + at(i + 1, j + 1));
                total += cell * (x[i + 1] - x[i]) * (p[j + 1] - p[j]);
            }
        return total;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : w) m = std::max(m, std::abs(v));
        return m;
    }

    double max_value() const {
        double m = -std::numeric_limits<double>::infinity();
        for (double v : w) m = std::max(m, v);
        return m;
    }
};

namespace detail {

// Laguerre polynomial coefficients: L_n(z) = sum_j c_j z^j,
// c_j = (-1)^j C(n, j) / j!.
inline std::vector<double> laguerre_coefs(int n) {
    if (n < 0 || n > MAX_FOCK) throw domain_error("Fock number must lie in [0, 3]");
    std::vector<double> c(static_cast<size_t>(n) + 1);
    double binom = 1.0, fact = 1.0, sign = 1.0;
    for (int j = 0; j <= n; ++j) {
        if (j > 0) {
            binom *= static_cast<double>(n - j + 1) / j;
            fact *= j;
            sign = -sign;
        }
        c[j] = sign * binom / fact;
    }
    return c;
}

// Even raw moments E[U^0..U^max_m] of N(mu, var) by the standard recurrence.
inline void gaussian_moments(double mu, double var, int max_m, std::vector<double>& out) {
    out.assign(static_cast<size_t>(max_m) + 1, 0.0);
    out[0] = 1.0;
    if (max_m >= 1) out[1] = mu;
    for (int m = 2; m <= max_m; ++m) out[m] = mu * out[m - 1] + (m - 1) * var * out[m - 2];
}

}  // namespace detail

// Wigner function of Fock |n> in the variance-1 convention:
// W_n(x, p) = ((-1)^n / 2 pi) L_n(x^2 + p^2) exp(-(x^2 + p^2) / 2).
inline double fock_wigner_value(int n, double x, double p) {
    if (n < 0 || n > MAX_FOCK) throw domain_error("Fock number must lie in [0, 3]");
    const double z = x * x + p * p;
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return sign * INV_2PI * std::laguerre(static_cast<unsigned>(n), z) * std::exp(-z / 2.0);
}

inline void fock_wigner(int n, WignerGrid& grid) {
    for (size_t i = 0; i < grid.x.size(); ++i)
        for (size_t j = 0; j < grid.p.size(); ++j)
            grid.at(i, j) = fock_wigner_value(n, grid.x[i], grid.p[j]);
    grid.state_label = "fock" + std::to_string(n);
    grid.channel_label = "identity";
}

// Beamsplitter-channel action on Fock |n> in closed form: the output Wigner
// is the sqrt(T)-rescaled input convolved with a Gaussian of quadrature
// variances a = (1-T) V_XN (x axis) and b = (1-T) V_YN (p axis), evaluated
// by Gaussian-moment integrals of the polynomial factor.  The interface's
// quadrature swap routes the signal X quadrature to mechanical p and -Y to
// mechanical q; for the rotation-symmetric Fock inputs this only fixes which
// noise variance attaches to which output axis (V_XN -> q axis).
inline double channel_wigner_value(int n, double T, double V_XN, double V_YN, double x, double p) {
    if (n < 0 || n > MAX_FOCK) throw domain_error("Fock number must lie in [0, 3]");
    if (!(T > 0.0 && T <= 1.0)) throw domain_error("channel_wigner requires T in (0, 1]");
    if (!(V_XN > 0.0 && V_YN > 0.0)) throw domain_error("noise variances must be > 0");

    const double a = (1.0 - T) * V_XN;
    const double b = (1.0 - T) * V_YN;
    const double sx = T + a, sp = T + b;  // output Gaussian variances per axis
    const double rt = std::sqrt(T);

    const std::vector<double> c = detail::laguerre_coefs(n);
    std::vector<double> mx, mp;
    detail::gaussian_moments(rt * x / sx, a / sx, 2 * n, mx);
    detail::gaussian_moments(rt * p / sp, b / sp, 2 * n, mp);

    double poly = 0.0;
    for (int j = 0; j <= n; ++j) {
        double binom = 1.0, inner = 0.0;
        for (int k = 0; k <= j; ++k) {
            if (k > 0) binom *= static_cast<double>(j - k + 1) / k;
            inner += binom * mx[2 * k] * mp[2 * (j - k)];
        }
        poly += c[j] * inner;
    }

    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return sign * INV_2PI / std::sqrt(sx * sp) *
           std::exp(-x * x / (2.0 * sx) - p * p / (2.0 * sp)) * poly;
}

inline void channel_wigner(int n, const ChannelDecomposition& ch, WignerGrid& grid) {
    ch.validate();
    if (!(ch.T > 0.0)) throw domain_error("channel_wigner requires T > 0");
    for (size_t i = 0; i < grid.x.size(); ++i)
        for (size_t j = 0; j < grid.p.size(); ++j)
            grid.at(i, j) = channel_wigner_value(n, ch.T, ch.V_XN, ch.V_YN, grid.x[i], grid.p[j]);
    grid.state_label = "fock" + std::to_string(n);
    grid.channel_label = "beamsplitter T=" + std::to_string(ch.T) +
                         " (input X -> output p, -Y -> output q)";
}

inline double wigner_at_origin(int n, const ChannelDecomposition& ch) {
    ch.validate();
    if (!(ch.T > 0.0)) throw domain_error("wigner_at_origin requires T > 0");
    return channel_wigner_value(n, ch.T, ch.V_XN, ch.V_YN, 0.0, 0.0);
}

inline double wigner_at_origin(int n, double T, double V) {
    return channel_wigner_value(n, T, V, V, 0.0, 0.0);
}

// One row of the symmetric-noise (V_XN = V_YN = V) negativity boundary for a
// single-photon input: the largest V whose output Wigner is negative at the
// origin, next to the bound quoted with the figure sweeps for comparison.
struct NegativityBoundaryPoint {
    double T;
    double V_boundary;   // bisected oracle boundary, NaN when outside [v_lo, v_hi]
    double paper_bound;  // sqrt(T / (1 - T))
};

inline std::vector<NegativityBoundaryPoint> negativity_boundary_scan(
    const std::vector<double>& t_values, double v_lo = 1e-3, double v_hi = 1e3) {
    if (!(v_lo > 0.0 && v_hi > v_lo)) throw domain_error("invalid V range");
    std::vector<NegativityBoundaryPoint> rows;
    rows.reserve(t_values.size());
    for (const double T : t_values) {
        if (!(T > 0.0 && T < 1.0)) throw domain_error("boundary scan requires T in (0, 1)");
        NegativityBoundaryPoint row{T, std::numeric_limits<double>::quiet_NaN(),
                                    std::sqrt(negativity_bound(T))};
        const bool neg_lo = wigner_at_origin(1, T, v_lo) < 0.0;
        const bool neg_hi = wigner_at_origin(1, T, v_hi) < 0.0;
        if (neg_lo && !neg_hi) {
            double lo = v_lo, hi = v_hi;
            while (hi - lo > 1e-6) {
                const double mid = 0.5 * (lo + hi);
                if (wigner_at_origin(1, T, mid) < 0.0) lo = mid; else hi = mid;
            }
            row.V_boundary = 0.5 * (lo + hi);
        } else if (neg_lo && neg_hi) {
            row.V_boundary = v_hi;  // negativity persists through the whole range
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace qnd
