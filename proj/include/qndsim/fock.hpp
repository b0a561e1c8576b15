#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "qndsim/wigner.hpp"

namespace qnd {

namespace detail {

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// exp(A) for a modest real matrix by scaling-and-squaring with a Taylor
// series; adequate for the squeeze generator (entries of order r).
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
    const double norm = a.cwiseAbs().maxCoeff() * a.rows();
    int s = 0;
    double scaled_norm = norm;
    while (scaled_norm > 0.5) { scaled_norm /= 2.0; ++s; }
    const Eigen::MatrixXd h = a / std::ldexp(1.0, s);
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd term = result;
    for (int k = 1; k <= 30; ++k) {
        term = term * h / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    for (int i = 0; i < s; ++i) result = result * result;
    return result;
}

}  // namespace detail

// Single-mode squeeze operator exp((r/2)(a'^2 - a^2)) in the truncated Fock
// basis.  The generator is real antisymmetric, so the result is orthogonal
// up to truncation leakage at the top of the basis.
inline Eigen::MatrixXd squeeze_matrix(int dim, double r) {
    if (dim < 2) throw domain_error("squeeze_matrix needs dim >= 2");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = 0; n + 2 < dim + 0; ++n) {
        if (n + 2 >= dim) break;
        const double c = 0.5 * r * std::sqrt(static_cast<double>((n + 1) * (n + 2)));
        g(n + 2, n) += c;   // creation pair
        g(n, n + 2) -= c;   // annihilation pair
    }
    return detail::expm(g);
}

// Thermal occupation probabilities p_k = nbar^k / (1 + nbar)^(k+1).
inline std::vector<double> thermal_weights(double nbar, int dim) {
    if (nbar < 0.0) throw domain_error("thermal occupation must be >= 0");
    std::vector<double> p(dim);
    const double q = nbar / (1.0 + nbar);
    double w = 1.0 / (1.0 + nbar);
    for (int k = 0; k < dim; ++k) {
        p[k] = w;
        w *= q;
    }
    return p;
}

// Brute-force beamsplitter channel: input Fock |n> mixed with a squeezed
// thermal ancilla of quadrature variances (V_XN, V_YN) on a beamsplitter of
// transmittivity T, traced over the ancilla.  Photon number is conserved
// exactly inside the enlarged workspace, so the only truncation loss is the
// ancilla preparation itself; insufficient truncation raises instead of
// silently renormalizing.
inline Eigen::MatrixXd fock_channel_oracle(int n, double T, double V_XN, double V_YN,
                                           int truncation) {
    if (n < 0 || n > MAX_FOCK) throw domain_error("Fock number must lie in [0, 3]");
    if (!(T > 0.0 && T <= 1.0)) throw domain_error("fock_channel_oracle requires T in (0, 1]");
    if (!(V_XN >= 1.0 - 1e-9 && V_YN >= 1.0 - 1e-9))
        throw domain_error("fock_channel_oracle requires noise variances >= 1");
    if (truncation < 40) throw domain_error("fock_channel_oracle requires truncation >= 40");

    const int dim = truncation + 1;       // ancilla basis size
    const int out_dim = dim + n;          // workspace holds all n + j photons
    const double v_n = std::sqrt(V_XN * V_YN);
    const double nbar = (v_n - 1.0) / 2.0;
    const double r = 0.25 * std::log(V_XN / V_YN);

    const std::vector<double> weights = thermal_weights(nbar, dim);
    Eigen::MatrixXd sq;
    const bool squeezed = std::abs(r) > 1e-15;
    if (squeezed) sq = squeeze_matrix(dim, r);

    const double lt = std::log(T), lr = std::log1p(-T);
    std::vector<double> lf(out_dim + 1);
    for (int i = 0; i <= out_dim; ++i) lf[i] = detail::log_factorial(i);

    // Beamsplitter expansion of |n, j>: amplitude of |ma, mb> with
    // ma + mb = n + j, accumulated over the two binomial factors.
    // bs[j](ma) is the amplitude on |ma, n + j - ma>.
    std::vector<std::vector<double>> bs(dim);
    for (int j = 0; j < dim; ++j) {
        bs[j].assign(static_cast<size_t>(n + j) + 1, 0.0);
        for (int i = 0; i <= n; ++i) {
            const double lbn = lf[n] - lf[i] - lf[n - i];
            for (int l = 0; l <= j; ++l) {
                const int ma = i + l;
                const int mb = n + j - ma;
                const double lbj = lf[j] - lf[l] - lf[j - l];
                double lamp = lbn + lbj + 0.5 * (lf[ma] + lf[mb] - lf[n] - lf[j]);
                // add the log-weights only for nonzero exponents so the
                // T = 1 limit (log(1 - T) = -inf) stays well defined
                const int pow_t = i + j - l, pow_r = n - i + l;
                if (pow_t > 0) lamp += 0.5 * pow_t * lt;
                if (pow_r > 0) lamp += 0.5 * pow_r * lr;
                const double sign = (l % 2 == 0) ? 1.0 : -1.0;
                bs[j][ma] += sign * std::exp(lamp);
            }
        }
    }

    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(out_dim, out_dim);
    Eigen::MatrixXd psi(out_dim, out_dim);  // psi(ma, mb)
    double kept = 0.0;
    for (int k = 0; k < dim; ++k) {
        if (weights[k] < 1e-16) continue;
        kept += weights[k];
        psi.setZero();
        if (squeezed) {
            for (int j = 0; j < dim; ++j) {
                const double c = sq(j, k);
                if (c == 0.0) continue;
                for (int ma = 0; ma <= n + j; ++ma) psi(ma, n + j - ma) += c * bs[j][ma];
            }
        } else {
            for (int ma = 0; ma <= n + k; ++ma) psi(ma, n + k - ma) = bs[k][ma];
        }
        rho.noalias() += weights[k] * (psi * psi.transpose());
    }

    const double trace = rho.trace();
    if (!(trace >= (1.0 - 1e-8) * kept) || kept < 1.0 - 1e-8)
        throw numerical_error("fock_channel_oracle: truncation insufficient (trace loss)");
    return rho.topLeftCorner(dim, dim);
}

// Wigner value of a real density matrix by the displaced-parity formula
// W(x, p) = (1/2pi) sum_k (-1)^k <k| D(-alpha) rho D(alpha) |k>, evaluated
// through closed-form displacement matrix elements (generalized Laguerre
// recurrences); alpha = (x + i p)/2 in the variance-1 convention.
inline double wigner_from_density_value(const Eigen::MatrixXd& rho, double x, double p) {
    const int dim = static_cast<int>(rho.rows());
    const double z = x * x + p * p;
    const double gauss = std::exp(-z / 2.0);

    // gamma^d for gamma = x + i p
    std::vector<double> re_gd(dim), im_gd(dim);
    re_gd[0] = 1.0;
    im_gd[0] = 0.0;
    for (int d = 1; d < dim; ++d) {
        re_gd[d] = re_gd[d - 1] * x - im_gd[d - 1] * p;
        im_gd[d] = re_gd[d - 1] * p + im_gd[d - 1] * x;
    }

    std::vector<double> lf(dim);
    for (int i = 0; i < dim; ++i) lf[i] = detail::log_factorial(i);

    double total = 0.0;
    std::vector<double> lag(dim);
    for (int d = 0; d < dim; ++d) {
        // generalized Laguerre L_m^{(d)}(z) by the three-term recurrence
        double lm2 = 1.0, lm1 = 1.0 + d - z;
        double band = 0.0;
        for (int m = 0; m + d < dim; ++m) {
            double lmd;
            if (m == 0) lmd = lm2;
            else if (m == 1) lmd = lm1;
            else {
                lmd = ((2.0 * m - 1.0 + d - z) * lm1 - (m - 1.0 + d) * lm2) / m;
                lm2 = lm1;
                lm1 = lmd;
            }
            const double parity = (m % 2 == 0) ? 1.0 : -1.0;
            const double scale = std::exp(0.5 * (lf[m] - lf[m + d]));
            band += parity * rho(m + d, m) * scale * lmd;
        }
        total += (d == 0 ? 1.0 : 2.0 * re_gd[d]) * band;
    }
    return INV_2PI * gauss * total;
}

inline void wigner_from_density(const Eigen::MatrixXd& rho, WignerGrid& grid) {
    if (std::abs(rho.trace() - 1.0) > 1e-8)
        throw domain_error("wigner_from_density requires a trace-normalized density matrix");
    for (size_t i = 0; i < grid.x.size(); ++i)
        for (size_t j = 0; j < grid.p.size(); ++j)
            grid.at(i, j) = wigner_from_density_value(rho, grid.x[i], grid.p[j]);
    grid.state_label = "density";
    grid.channel_label = "fock-basis";
}

}  // namespace qnd
