#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qndsim/fock.hpp"

using namespace qnd;

TEST_CASE("identity channel keeps the Fock state") {
    for (int n = 0; n <= 3; ++n) {
        const Eigen::MatrixXd rho = fock_channel_oracle(n, 1.0, 1.0, 1.0, 60);
        CHECK(rho(n, n) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
        double off = 0.0;
        for (int i = 0; i < rho.rows(); ++i)
            for (int j = 0; j < rho.cols(); ++j)
                if (i != n || j != n) off = std::max(off, std::abs(rho(i, j)));
        CHECK(off < 1e-12);
    }
}

TEST_CASE("pure loss on one photon") {
    const Eigen::MatrixXd rho = fock_channel_oracle(1, 0.9, 1.0, 1.0, 60);
    CHECK(rho(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(rho(1, 1) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(std::abs(rho(0, 1)) < 1e-14);
    CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("trace preservation (unitarity of the truncated beamsplitter)") {
    for (const double T : {0.37, 0.5, 0.85129, 0.99}) {
        for (int n = 0; n <= 2; ++n) {
            const Eigen::MatrixXd rho = fock_channel_oracle(n, T, 1.0, 1.0, 60);
            CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
    // thermal ancilla: only the occupation tail beyond the truncation is lost
    const Eigen::MatrixXd rho = fock_channel_oracle(1, 0.9, 2.0, 2.0, 60);
    CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("squeeze matrix is orthogonal and scales quadratures") {
    const int dim = 80;
    const double r = 0.15;
    const Eigen::MatrixXd s = squeeze_matrix(dim, r);
    // orthogonality away from the truncation edge
    const Eigen::MatrixXd gram = s.transpose() * s;
    for (int i = 0; i < dim / 2; ++i)
        for (int j = 0; j < dim / 2; ++j)
            CHECK(gram(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10).scale(1.0));

    // vacuum -> squeezed vacuum with X variance e^{2r}
    Eigen::VectorXd vac = Eigen::VectorXd::Zero(dim);
    vac(0) = 1.0;
    const Eigen::VectorXd sv = s * vac;
    // <X^2> with X = a + a^dagger: sum over the matrix elements
    double x2 = 0.0;
    for (int m = 0; m < dim; ++m) {
        x2 += sv(m) * sv(m) * (2.0 * m + 1.0);
        if (m + 2 < dim) x2 += 2.0 * sv(m) * sv(m + 2) * std::sqrt((m + 1.0) * (m + 2.0));
    }
    CHECK(x2 == doctest::Approx(std::exp(2.0 * r)).epsilon(1e-10));
}

TEST_CASE("thermal weights") {
    const auto p = thermal_weights(2.0, 100);
    CHECK(p[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("displaced-parity Wigner: pure Fock states") {
    for (int n = 0; n <= 3; ++n) {
        Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(61, 61);
        rho(n, n) = 1.0;
        for (const double x : {0.0, 0.5, -1.2, 2.0}) {
            for (const double p : {0.0, 0.9, -2.3}) {
                CHECK(wigner_from_density_value(rho, x, p) ==
                      doctest::Approx(fock_wigner_value(n, x, p)).epsilon(1e-8).scale(INV_2PI));
            }
        }
    }
}

TEST_CASE("displaced-parity Wigner: thermal state") {
    const int dim = 61;
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(dim, dim);
    const auto w = thermal_weights(2.0, dim);
    for (int k = 0; k < dim; ++k) rho(k, k) = w[k];
    rho /= rho.trace();
    // Gaussian with quadrature variance 5: W(0,0) = 1/(10 pi)
    CHECK(wigner_from_density_value(rho, 0.0, 0.0) ==
          doctest::Approx(1.0 / (10.0 * M_PI)).epsilon(1e-9));
    for (const double x : {0.7, 1.5, -2.0}) {
        const double expect = 1.0 / (10.0 * M_PI) * std::exp(-x * x / 10.0);
        CHECK(wigner_from_density_value(rho, x, 0.0) == doctest::Approx(expect).epsilon(1e-8));
        CHECK(wigner_from_density_value(rho, 0.0, x) == doctest::Approx(expect).epsilon(1e-8));
    }
}

TEST_CASE("cross-module equivalence with the closed-form channel") {
    struct Case { int n; double T, vx, vy; };
    const Case cases[] = {
        {0, 0.5, 1.0, 1.0},
        {1, 0.5, 1.0, 1.0},
        {1, 0.85129, 1.3755, 1.3755},
        {2, 0.9, 2.0, 2.0},
    };
    for (const Case& c : cases) {
        Eigen::MatrixXd rho = fock_channel_oracle(c.n, c.T, c.vx, c.vy, 60);
        rho /= rho.trace();
        WignerGrid oracle_grid = WignerGrid::linspace(5.0, 41);
        wigner_from_density(rho, oracle_grid);
        WignerGrid closed = WignerGrid::linspace(5.0, 41);
        ChannelDecomposition ch;
        ch.T = c.T;
        ch.V_XN = c.vx;
        ch.V_YN = c.vy;
        ch.V_N = std::sqrt(c.vx * c.vy);
        channel_wigner(c.n, ch, closed);
        double sup = 0.0;
        for (size_t i = 0; i < closed.w.size(); ++i)
            sup = std::max(sup, std::abs(closed.w[i] - oracle_grid.w[i]));
        CHECK(sup <= 1e-6);
    }
}

TEST_CASE("asymmetric noise routes the squeezed ancilla correctly") {
    const int n = 1;
    const double T = 0.7, vx = 2.0, vy = 1.2;
    Eigen::MatrixXd rho = fock_channel_oracle(n, T, vx, vy, 70);
    rho /= rho.trace();
    for (const double x : {0.0, 1.0, -0.6}) {
        for (const double p : {0.0, -1.3, 0.4}) {
            CHECK(wigner_from_density_value(rho, x, p) ==
                  doctest::Approx(channel_wigner_value(n, T, vx, vy, x, p))
                      .epsilon(1e-6)
                      .scale(INV_2PI));
        }
    }
}

TEST_CASE("cross-oracle negativity boundary") {
    // closed-form boundary at T = 0.7 is V* = 7/3; the Fock oracle must flip
    // sign across it
    const double T = 0.7, vstar = T / (1.0 - T);
    auto origin = [&](double v) {
        Eigen::MatrixXd rho = fock_channel_oracle(1, T, v, v, 60);
        rho /= rho.trace();
        return wigner_from_density_value(rho, 0.0, 0.0);
    };
    CHECK(origin(vstar - 0.01) < 0.0);
    CHECK(origin(vstar + 0.01) > 0.0);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(fock_channel_oracle(1, 0.5, 1.0, 1.0, 39), domain_error);
    CHECK_THROWS_AS(fock_channel_oracle(1, 0.5, 0.5, 1.0, 60), domain_error);
    CHECK_THROWS_AS(fock_channel_oracle(1, 0.0, 1.0, 1.0, 60), domain_error);
    CHECK_THROWS_AS(fock_channel_oracle(4, 0.5, 1.0, 1.0, 60), domain_error);
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(10, 10);
    rho(0, 0) = 0.5;  // not normalized
    WignerGrid g = WignerGrid::linspace(3.0, 11);
    CHECK_THROWS_AS(wigner_from_density(rho, g), domain_error);
}
