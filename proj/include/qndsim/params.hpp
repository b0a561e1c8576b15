#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace qnd {

// Error taxonomy used across the library.  Parameter-domain violations and
// config problems map onto distinct CLI exit codes.
class domain_error : public std::runtime_error {
public:
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

enum class ModelTier {
    AdiabaticNoBath,  // cavity eliminated, gamma = 0
    AdiabaticBath,    // cavity eliminated, mechanical bath kept
    FullNoBath,       // full cavity dynamics, gamma = 0
    Full              // full cavity dynamics with mechanical bath
};

inline const char* to_string(ModelTier t) {
    switch (t) {
        case ModelTier::AdiabaticNoBath: return "ADIABATIC_NO_BATH";
        case ModelTier::AdiabaticBath:   return "ADIABATIC_BATH";
        case ModelTier::FullNoBath:      return "FULL_NO_BATH";
        case ModelTier::Full:            return "FULL";
    }
    return "?";
}

inline ModelTier tier_from_string(const std::string& s) {
    if (s == "ADIABATIC_NO_BATH") return ModelTier::AdiabaticNoBath;
    if (s == "ADIABATIC_BATH")    return ModelTier::AdiabaticBath;
    if (s == "FULL_NO_BATH")      return ModelTier::FullNoBath;
    if (s == "FULL")              return ModelTier::Full;
    throw config_error("unknown model tier: " + s);
}

// Physical knobs of the pulsed interface.  Rates are in s^-1 as used by the
// equations of motion; from_quoted() applies the optional 2*pi factor for
// rates quoted as linear frequencies.
struct InterfaceParams {
    double kappa  = 0.0;  // cavity amplitude decay rate, s^-1
    double g      = 0.0;  // enhanced optomechanical coupling, s^-1
    double gamma  = 0.0;  // mechanical damping rate, s^-1
    double tau    = 0.0;  // pulse duration, s
    double S      = 1.0;  // presqueezing amplitude gain
    double n_th   = 0.0;  // mean bath occupation
    double n_0    = 0.0;  // initial mechanical occupation
    double n_cav0 = 0.0;  // initial intracavity occupation
    bool angular_convention = false;  // true: quoted rates were multiplied by 2*pi

    void validate() const {
        if (!(kappa > 0.0)) throw domain_error("kappa must be > 0");
        if (!(tau > 0.0)) throw domain_error("tau must be > 0");
        if (!(g >= 0.0)) throw domain_error("g must be >= 0");
        if (!(gamma >= 0.0)) throw domain_error("gamma must be >= 0");
        if (!(S > 0.0)) throw domain_error("S must be > 0");
        if (!(n_th >= 0.0)) throw domain_error("n_th must be >= 0");
        if (!(n_0 >= 0.0)) throw domain_error("n_0 must be >= 0");
        if (!(n_cav0 >= 0.0)) throw domain_error("n_cav0 must be >= 0");
        // The exponential kernel forms assume kappa > gamma/2; anything close
        // to degenerate is far outside the physical regime and rejected.
        if (gamma >= kappa) throw domain_error("gamma >= kappa: outside the model's validity");
    }

    bool valid() const {
        try { validate(); } catch (const domain_error&) { return false; }
        return true;
    }

    // Build from quoted rates, optionally interpreting them as linear
    // frequencies (multiply by 2*pi).
    static InterfaceParams from_quoted(double kappa, double g, double gamma, double tau,
                                       double S = 1.0, double n_th = 0.0, double n_0 = 0.0,
                                       double n_cav0 = 0.0, bool angular = false) {
        const double f = angular ? 2.0 * M_PI : 1.0;
        InterfaceParams p;
        p.kappa = f * kappa;
        p.g = f * g;
        p.gamma = f * gamma;
        p.tau = tau;
        p.S = S;
        p.n_th = n_th;
        p.n_0 = n_0;
        p.n_cav0 = n_cav0;
        p.angular_convention = angular;
        p.validate();
        return p;
    }

    InterfaceParams with(double InterfaceParams::*field, double value) const {
        InterfaceParams p = *this;
        p.*field = value;
        return p;
    }

    // The parameter set of the optomechanical-crystal experiment the sweeps
    // start from (point O), without the 2*pi convention.
    static InterfaceParams reference() {
        return from_quoted(221.5e6, 1.0e6, 328.0, 4.0e-5, 1.0, 2.0, 0.01, 0.0, false);
    }
};

// Symmetric-ordered quadrature variance of a thermal state.
inline double thermal_variance(double n) { return 2.0 * n + 1.0; }

// (1 - exp(-x)) / x, stable near 0.
inline double em1_over(double x) {
    if (x == 0.0) return 1.0;
    if (std::abs(x) < 1e-5) return 1.0 - x / 2.0 + x * x / 6.0;
    return -std::expm1(-x) / x;
}

}  // namespace qnd
