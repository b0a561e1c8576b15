#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qndsim/wigner.hpp"
#include "oracle_utils.hpp"

using namespace qnd;

namespace {

// Independent route: brute-force 2-D convolution of the rescaled input
// Wigner with the noise Gaussian, by nested adaptive quadrature.
double convolution_oracle(int n, double T, double V_XN, double V_YN, double x, double p) {
    const double a = (1.0 - T) * V_XN;
    const double b = (1.0 - T) * V_YN;
    const double rt = std::sqrt(T);
    const double lim = 12.0;
    auto outer = [&](double u) {
        auto inner = [&](double v) {
            const double g = std::exp(-(x - rt * u) * (x - rt * u) / (2.0 * a) -
                                      (p - rt * v) * (p - rt * v) / (2.0 * b)) /
                             (2.0 * M_PI * std::sqrt(a * b));
            return fock_wigner_value(n, u, v) * g;
        };
        return oracle::integrate(inner, -lim, lim, 1e-11);
    };
    return oracle::integrate(outer, -lim, lim, 1e-11);
}

ChannelDecomposition make_channel(double T, double vx, double vy) {
    ChannelDecomposition ch;
    ch.T = T;
    ch.V_XN = vx;
    ch.V_YN = vy;
    ch.V_N = std::sqrt(vx * vy);
    return ch;
}

}  // namespace

TEST_CASE("fock wigner goldens") {
    CHECK(fock_wigner_value(0, 0.0, 0.0) == doctest::Approx(INV_2PI).epsilon(1e-14));
    CHECK(fock_wigner_value(1, 0.0, 0.0) == doctest::Approx(-INV_2PI).epsilon(1e-14));
    CHECK(fock_wigner_value(1, 0.0, 0.0) == doctest::Approx(-0.15915).epsilon(1e-4));
    // single-photon Wigner vanishes on the unit circle
    for (double phi : {0.0, 0.7, 1.9, 3.1, 4.6}) {
        CHECK(std::abs(fock_wigner_value(1, std::cos(phi), std::sin(phi))) < 1e-15);
    }
    CHECK_THROWS_AS(fock_wigner_value(-1, 0, 0), domain_error);
    CHECK_THROWS_AS(fock_wigner_value(4, 0, 0), domain_error);
}

TEST_CASE("fock wigner grid invariants") {
    for (int n = 0; n <= 3; ++n) {
        WignerGrid g = WignerGrid::linspace(5.0 * std::sqrt(2.0 * n + 1.0), 201);
        fock_wigner(n, g);
        const double norm = g.integral();
        CHECK(norm > 0.99);
        CHECK(norm < 1.001);
        CHECK(g.max_abs() <= INV_2PI + 1e-9);
    }
}

TEST_CASE("channel wigner: identity limit") {
    WignerGrid g = WignerGrid::linspace(5.0, 101);
    WignerGrid ref = g;
    for (int n = 0; n <= 2; ++n) {
        channel_wigner(n, make_channel(1.0 - 1e-12, 1.0, 1.0), g);
        fock_wigner(n, ref);
        for (size_t i = 0; i < g.w.size(); ++i)
            CHECK(g.w[i] == doctest::Approx(ref.w[i]).epsilon(1e-9).scale(INV_2PI));
    }
}

TEST_CASE("channel wigner: full-replacement limit is the noise Gaussian") {
    const double T = 1e-9, vx = 1.7, vy = 1.2;
    for (const double x : {0.0, 0.8, -1.5}) {
        for (const double p : {0.0, -0.4, 2.1}) {
            const double got = channel_wigner_value(1, T, vx, vy, x, p);
            const double gauss = INV_2PI / std::sqrt(vx * vy) *
                                 std::exp(-x * x / (2.0 * vx) - p * p / (2.0 * vy));
            CHECK(got == doctest::Approx(gauss).epsilon(1e-6));
        }
    }
}

TEST_CASE("channel wigner against the convolution oracle") {
    struct Pt { int n; double T, vx, vy, x, p; };
    const Pt pts[] = {
        {0, 0.5, 1.0, 1.0, 0.0, 0.0},   {1, 0.5, 1.0, 1.0, 0.3, -0.8},
        {1, 0.85129, 1.0, 1.0, 0.0, 0.0}, {1, 0.85129, 1.3755, 1.3755, 1.0, 0.5},
        {2, 0.9, 2.0, 2.0, -0.7, 0.2},  {2, 0.7, 1.4, 2.3, 0.5, 1.1},
        {3, 0.6, 1.1, 1.6, 0.2, -0.3},
    };
    for (const Pt& q : pts) {
        const double closed = channel_wigner_value(q.n, q.T, q.vx, q.vy, q.x, q.p);
        const double brute = convolution_oracle(q.n, q.T, q.vx, q.vy, q.x, q.p);
        CHECK(closed == doctest::Approx(brute).epsilon(1e-8).scale(INV_2PI));
    }
}

TEST_CASE("origin value closed form for symmetric noise") {
    // n = 1, V_XN = V_YN = V: W(0,0) = -(1/2pi)(T - a)/(T + a)^2, a = (1-T)V
    for (const double T : {0.3, 0.5, 0.85129, 0.95}) {
        for (const double V : {0.5, 1.0, 1.3755, 3.0}) {
            const double a = (1.0 - T) * V;
            const double expect = -INV_2PI * (T - a) / ((T + a) * (T + a));
            CHECK(wigner_at_origin(1, T, V) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("origin value consistent with the grid") {
    WignerGrid g = WignerGrid::linspace(5.0, 101);  // odd count -> includes 0
    const ChannelDecomposition ch = make_channel(0.85129, 1.3755, 1.1);
    channel_wigner(1, ch, g);
    const size_t mid = g.x.size() / 2;
    CHECK(g.x[mid] == doctest::Approx(0.0).scale(1.0));
    CHECK(wigner_at_origin(1, ch) == doctest::Approx(g.at(mid, mid)).epsilon(1e-10));
}

TEST_CASE("channel preserves normalization and the Wigner bound") {
    WignerGrid g = WignerGrid::linspace(12.0, 241);
    for (int n = 0; n <= 2; ++n) {
        channel_wigner(n, make_channel(0.7, 1.6, 1.2), g);
        const double norm = g.integral();
        CHECK(norm > 0.99);
        CHECK(norm < 1.001);
        CHECK(g.max_abs() <= INV_2PI + 1e-9);
    }
}

TEST_CASE("single-photon negativity cases") {
    // ideal channel keeps the full negativity
    CHECK(wigner_at_origin(1, make_channel(1.0 - 1e-13, 1.0, 1.0)) ==
          doctest::Approx(-INV_2PI).epsilon(1e-9));
    // lossy vacuum-noise channel at T = 0.5 sits exactly on the boundary
    CHECK(std::abs(wigner_at_origin(1, 0.5, 1.0)) < 1e-14);
    // strong transmission without excess noise stays negative
    CHECK(wigner_at_origin(1, 0.85129, 1.0) < 0.0);
    CHECK(wigner_at_origin(1, make_channel(0.85129, 1.0, 1.0)) < 0.0);
}

TEST_CASE("negativity monotonicity in noise and transmission") {
    for (const double T : {0.55, 0.7, 0.9}) {
        double prev = -1.0;
        for (const double V : {0.8, 1.0, 1.5, 2.5, 4.0}) {
            const double w0 = wigner_at_origin(1, T, V);
            CHECK(w0 > prev);  // strictly increasing in V at fixed T
            prev = w0;
        }
    }
    for (const double V : {1.0, 1.5}) {
        double prev = 1.0;
        for (const double T : {0.55, 0.7, 0.85, 0.95}) {
            const double w0 = wigner_at_origin(1, T, V);
            CHECK(w0 < prev);  // strictly decreasing in T at fixed V
            prev = w0;
        }
    }
    // purity: peak height decreases with growing noise at fixed T
    WignerGrid g = WignerGrid::linspace(5.0, 101);
    double prev_peak = 1.0;
    for (const double V : {1.0, 1.5, 2.5}) {
        channel_wigner(0, make_channel(0.7, V, V), g);
        const double peak = g.max_value();
        CHECK(peak < prev_peak);
        prev_peak = peak;
    }
}

TEST_CASE("negativity boundary scan") {
    const std::vector<double> ts = {0.3, 0.5, 0.6, 0.7, 0.8, 0.85129, 0.9};
    const auto rows = negativity_boundary_scan(ts);
    REQUIRE(rows.size() == ts.size());
    double prev = 0.0;
    for (const auto& r : rows) {
        // oracle boundary is V* = T/(1-T), not the square-root form
        CHECK(std::abs(r.V_boundary - r.T / (1.0 - r.T)) < 2e-6);
        CHECK(r.paper_bound == doctest::Approx(std::sqrt(r.T / (1.0 - r.T))).epsilon(1e-12));
        CHECK(r.V_boundary > prev);  // monotone increasing in T
        prev = r.V_boundary;
    }
    // spot values: T = 0.5 -> V* = 1; T = 0.8 -> V* = 4 with paper bound 2
    CHECK(std::abs(rows[1].V_boundary - 1.0) < 2e-6);
    CHECK(std::abs(rows[4].V_boundary - 4.0) < 2e-6);
    CHECK(rows[4].paper_bound == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("channel wigner input validation") {
    CHECK_THROWS_AS(channel_wigner_value(1, 0.0, 1.0, 1.0, 0, 0), domain_error);
    CHECK_THROWS_AS(channel_wigner_value(1, 1.1, 1.0, 1.0, 0, 0), domain_error);
    CHECK_THROWS_AS(channel_wigner_value(1, 0.5, -1.0, 1.0, 0, 0), domain_error);
    CHECK_THROWS_AS(WignerGrid::linspace(-1.0, 101), domain_error);
    CHECK_THROWS_AS(WignerGrid::linspace(5.0, 1), domain_error);
}
