#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qndsim/params.hpp"

namespace qnd {

// Linear combination of decaying exponentials f(t) = sum_i c_i exp(-r_i t)
// on an interval [0, L].  All transfer kernels of the linear Langevin system
// are of this form (as functions of t = tau - s), so inner products and
// norms have closed forms.  A quadrature-based cross-check path lives in the
// test suite.  Internal arithmetic is extended precision: orthonormalizing
// nearly dependent exponentials divides by small residual norms, and the
// extra digits keep the assembled maps symplectic to ~1e-12.
class ExpSum {
public:
    struct Term {
        long double coef;
        long double rate;
    };

    ExpSum() = default;
    ExpSum(std::initializer_list<Term> terms) : terms_(terms) { compress(); }

    static ExpSum constant(double c) { return ExpSum{{c, 0.0L}}; }
    static ExpSum exponential(double c, double rate) {
        return ExpSum{{static_cast<long double>(c), static_cast<long double>(rate)}};
    }

    const std::vector<Term>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    double eval(double t) const {
        long double v = 0.0L;
        for (const Term& tm : terms_) v += tm.coef * std::exp(-tm.rate * static_cast<long double>(t));
        return static_cast<double>(v);
    }

    ExpSum& operator+=(const ExpSum& o) {
        terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
        compress();
        return *this;
    }

    ExpSum& operator*=(double s) {
        for (Term& t : terms_) t.coef *= s;
        return *this;
    }

    friend ExpSum operator+(ExpSum a, const ExpSum& b) { return a += b; }
    friend ExpSum operator*(double s, ExpSum a) { return a *= s; }

    ExpSum axpy(double a, const ExpSum& x) const {
        ExpSum r = *this;
        for (const Term& t : x.terms_) r.terms_.push_back({t.coef * a, t.rate});
        r.compress();
        return r;
    }

    // int_0^L exp(-r t) dt, stable for r L near 0
    static long double integral(long double rate, long double L) {
        const long double x = rate * L;
        if (x == 0.0L) return L;
        if (std::abs(x) < 1e-6L) return L * (1.0L - x / 2.0L + x * x / 6.0L);
        return -std::expm1(-x) / rate;
    }

    // int_0^L f(t) dt
    double integrate(double L) const {
        long double v = 0.0L;
        for (const Term& t : terms_) v += t.coef * integral(t.rate, L);
        return static_cast<double>(v);
    }

    // int_0^L f(t) g(t) dt
    double inner(const ExpSum& g, double L) const {
        long double v = 0.0L;
        for (const Term& a : terms_)
            for (const Term& b : g.terms_) v += a.coef * b.coef * integral(a.rate + b.rate, L);
        return static_cast<double>(v);
    }

    double norm2(double L) const { return inner(*this, L); }

private:
    void compress() {
        std::sort(terms_.begin(), terms_.end(),
                  [](const Term& a, const Term& b) { return a.rate < b.rate; });
        std::vector<Term> out;
        for (const Term& t : terms_) {
            if (!out.empty() && std::abs(out.back().rate - t.rate) <=
                                    1e-14L * std::max(std::abs(out.back().rate), std::abs(t.rate))) {
                out.back().coef += t.coef;
            } else {
                out.push_back(t);
            }
        }
        std::erase_if(out, [](const Term& t) { return t.coef == 0.0L; });
        terms_ = std::move(out);
    }

    std::vector<Term> terms_;
};

// Gram-Schmidt orthonormalization of a set of ExpSum functions on [0, L].
// Near-dependent directions are dropped (relative residual-norm threshold),
// which is what collapses the basis when gamma = 0 makes exp(-gamma t / 2)
// coincide with the constant.  The threshold trades residual truncation
// (~tol^2) against roundoff amplification (~eps/tol) in the normalization.
inline std::vector<ExpSum> orthonormalize(const std::vector<ExpSum>& fns, double L,
                                          double drop_tol = 1e-8) {
    std::vector<ExpSum> basis;
    for (const ExpSum& f : fns) {
        ExpSum r = f;
        const double orig2 = f.norm2(L);
        for (const ExpSum& b : basis) r = r.axpy(-r.inner(b, L), b);
        // re-orthogonalize once; cheap and fixes loss of orthogonality
        for (const ExpSum& b : basis) r = r.axpy(-r.inner(b, L), b);
        const double r2 = r.norm2(L);
        if (!(r2 > drop_tol * drop_tol * orig2)) continue;
        r *= 1.0 / std::sqrt(r2);
        basis.push_back(r);
    }
    return basis;
}

}  // namespace qnd
