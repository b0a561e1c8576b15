#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qndsim/montecarlo.hpp"

using namespace qnd;

namespace {

// Scaled-down interface used by the statistical checks: same structure as the
// reference point but ~40k integrator steps instead of ~180k.
InterfaceParams scaled_params() {
    InterfaceParams p;
    p.kappa = 1e6;
    p.g = 2e4;
    p.gamma = 50.0;
    p.tau = 2e-3;
    p.n_th = 2.0;
    p.n_0 = 0.01;
    p.S = 1.0;
    return p;
}

}  // namespace

TEST_CASE("counter generator matches the published reference vectors") {
    // Known-answer vectors from the Random123 distribution (philox4x32, 10
    // rounds): all-zero, all-ones, and pi-digit counter/key inputs.
    std::array<uint32_t, 4> out;

    Philox4x32::block({0u, 0u, 0u, 0u}, 0u, 0u, out);
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);

    Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, 0xffffffffu,
                      0xffffffffu, out);
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);

    Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, 0xa4093822u,
                      0x299f31d0u, out);
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("buffered stream replays the raw counter blocks") {
    const uint64_t seed = 0x0123456789abcdefull;
    const uint64_t stream = 0xfedcba98ull;
    NormalStream ns(seed, stream);
    for (uint64_t blk = 0; blk < 300; ++blk) {  // crosses a refill boundary
        std::array<uint32_t, 4> ref;
        Philox4x32::block({static_cast<uint32_t>(blk), static_cast<uint32_t>(blk >> 32),
                           static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32)},
                          static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), ref);
        for (int w = 0; w < 4; ++w) CHECK(ns.next_u32() == ref[w]);
    }

    // distinct streams and seeds decorrelate immediately
    NormalStream a(1, 0), b(1, 1), c(2, 0);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 64; ++i) {
        const uint32_t va = a.next_u32();
        same_ab += (va == b.next_u32());
        same_ac += (va == c.next_u32());
    }
    CHECK(same_ab == 0);
    CHECK(same_ac == 0);
}

TEST_CASE("uniforms stay inside the open interval") {
    NormalStream ns(7, 7);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = ns.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(5e-3));
}

TEST_CASE("normal sampler moments") {
    NormalStream ns(0xabcdef, 3);
    const int n = 400000;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    int tail = 0;
    for (int i = 0; i < n; ++i) {
        const double x = ns.normal();
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
        tail += std::abs(x) > 3.5;
    }
    const double inv_n = 1.0 / n;
    // 5-sigma windows around the exact moments of N(0, 1)
    CHECK(std::abs(s1 * inv_n) < 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(s2 * inv_n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(s3 * inv_n) < 5.0 * std::sqrt(15.0 / n));
    CHECK(s4 * inv_n == doctest::Approx(3.0).epsilon(0.05));
    // P(|x| > 3.5) = 4.65e-4; expect ~186 hits, so the tail is exercised
    CHECK(tail > 80);
    CHECK(tail < 400);
}

TEST_CASE("bulk sampling matches the scalar sampler in distribution") {
    const int n = 300000;
    std::vector<double> buf(n);
    NormalStream bulk(0x5eed, 11);
    bulk.normals(buf.data(), n);
    double b1 = 0.0, b2 = 0.0, b4 = 0.0;
    for (double x : buf) {
        b1 += x;
        b2 += x * x;
        b4 += x * x * x * x;
    }
    CHECK(std::abs(b1 / n) < 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(b2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(b4 / n == doctest::Approx(3.0).epsilon(0.06));

    // repeated bulk calls are reproducible and chunk-size invariant only for
    // identical call patterns, which is what the integrator relies on
    std::vector<double> again(n);
    NormalStream bulk2(0x5eed, 11);
    bulk2.normals(again.data(), n);
    for (int i = 0; i < n; i += 997) CHECK(buf[i] == again[i]);
}

TEST_CASE("config validation") {
    const InterfaceParams p = scaled_params();
    MonteCarloConfig cfg;
    cfg.n_traj = 999;
    CHECK_THROWS_AS(mc_channel(p, ModelTier::FullNoBath, cfg), config_error);
    cfg.n_traj = 1000;
    cfg.dt = 0.2 / p.kappa;  // integrator would be unstable
    CHECK_THROWS_AS(mc_channel(p, ModelTier::FullNoBath, cfg), domain_error);
    cfg.dt = 0.0;
    cfg.amp_x_sd = 0.0;
    CHECK_THROWS_AS(mc_channel(p, ModelTier::FullNoBath, cfg), config_error);
    cfg.amp_x_sd = 2.0;
    cfg.sigma_level = 0.0;
    CHECK_THROWS_AS(mc_channel(p, ModelTier::FullNoBath, cfg), config_error);
    cfg.sigma_level = 5.0;
    cfg.n_threads = 0;
    CHECK_THROWS_AS(mc_channel(p, ModelTier::FullNoBath, cfg), config_error);
}

TEST_CASE("bit-identical results across repeats and thread counts") {
    const InterfaceParams p = scaled_params();
    MonteCarloConfig cfg;
    cfg.n_traj = 1000;
    cfg.seed = 99;

    const OracleReport r1 = mc_channel(p, ModelTier::FullNoBath, cfg);
    const OracleReport r2 = mc_channel(p, ModelTier::FullNoBath, cfg);
    cfg.n_threads = 4;
    const OracleReport r4 = mc_channel(p, ModelTier::FullNoBath, cfg);

    CHECK(r1.T_hat == r2.T_hat);
    CHECK(r1.V_XN_hat == r2.V_XN_hat);
    CHECK(r1.V_YN_hat == r2.V_YN_hat);
    CHECK(r1.T_hat == r4.T_hat);
    CHECK(r1.V_XN_hat == r4.V_XN_hat);
    CHECK(r1.V_YN_hat == r4.V_YN_hat);

    // a different seed must actually change the estimate
    cfg.n_threads = 1;
    cfg.seed = 100;
    const OracleReport r5 = mc_channel(p, ModelTier::FullNoBath, cfg);
    CHECK(r5.T_hat != r1.T_hat);
}

TEST_CASE("report bookkeeping") {
    const InterfaceParams p = scaled_params();
    MonteCarloConfig cfg;
    cfg.n_traj = 1000;
    OracleReport full = mc_channel(p, ModelTier::Full, cfg);
    CHECK(full.n_traj == 1000);
    CHECK(full.seed == cfg.seed);
    CHECK(full.n_steps == 40000);  // tau / (0.05 / kappa)
    CHECK(full.dt == doctest::Approx(p.tau / 40000.0).epsilon(1e-15));
    CHECK(full.table.size() == 24);  // 4 outputs x 6 regressors

    OracleReport adi = mc_channel(p, ModelTier::AdiabaticNoBath, cfg);
    CHECK(adi.table.size() == 16);  // no intracavity regressors

    // requested steps that do not divide tau are rounded up
    cfg.dt = 0.3 * p.tau / 10000.0;
    OracleReport rounded = mc_channel(p, ModelTier::AdiabaticNoBath, cfg);
    CHECK(rounded.n_steps == 33334);
    CHECK(rounded.dt <= cfg.dt);
}

TEST_CASE("monte carlo reproduces the analytic channel on every tier") {
    const InterfaceParams p = scaled_params();
    MonteCarloConfig cfg;
    cfg.n_traj = 4000;
    cfg.seed = 42;
    for (ModelTier tier : {ModelTier::Full, ModelTier::AdiabaticBath, ModelTier::FullNoBath,
                           ModelTier::AdiabaticNoBath}) {
        const OracleReport r = mc_channel(p, tier, cfg);
        INFO("tier ", to_string(tier), " channel ", r.max_channel_sigmas, " coef ",
             r.max_coef_sigmas);
        CHECK(r.pass);
        CHECK(r.max_channel_sigmas <= 5.0);
        CHECK(r.max_coef_sigmas <= 5.0);
        CHECK(r.T_se < 0.05);
    }
}

TEST_CASE("presqueezing shifts the simulated channel like the analytic one") {
    InterfaceParams p = scaled_params();
    p.S = std::pow(10.0, 6.0 / 20.0);  // 6 dB of presqueezing
    MonteCarloConfig cfg;
    cfg.n_traj = 4000;
    cfg.seed = 7;
    cfg.policy = GainPolicy::Adiabatic;
    const OracleReport r = mc_channel(p, ModelTier::Full, cfg);
    CHECK(r.pass);
    CHECK(r.analytic.T > 0.5);  // squeezing strengthens the transfer
}

TEST_CASE("zero coupling transmits nothing") {
    InterfaceParams p = scaled_params();
    p.g = 0.0;
    MonteCarloConfig cfg;
    cfg.n_traj = 2000;
    cfg.seed = 5;
    const OracleReport r = mc_channel(p, ModelTier::Full, cfg);
    CHECK(r.analytic.T == doctest::Approx(0.0).scale(1.0));
    CHECK(std::abs(r.T_hat) <= 5.0 * r.T_se + 1e-12);
}

TEST_CASE("lossless adiabatic limit approaches a pure beamsplitter") {
    // gamma = 0 and kappa tau >> 1: the analytic added noise is exactly the
    // input vacuum, and the trajectories must agree within the error bars.
    InterfaceParams p;
    p.kappa = 1e6;
    p.g = 1e4;
    p.gamma = 0.0;
    p.tau = 1e-2;  // kappa tau = 1e4
    p.n_0 = 0.0;
    MonteCarloConfig cfg;
    cfg.n_traj = 2000;
    cfg.seed = 12;
    const OracleReport r = mc_channel(p, ModelTier::AdiabaticNoBath, cfg);
    CHECK(r.analytic.V_N == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.pass);
    CHECK(std::abs(r.V_N_hat - 1.0) <= 5.0 * std::max(r.V_XN_se, r.V_YN_se));
}

TEST_CASE("halving the step keeps the estimate consistent") {
    const InterfaceParams p = scaled_params();
    MonteCarloConfig cfg;
    cfg.n_traj = 2000;
    cfg.seed = 21;
    cfg.dt = 0.1 / p.kappa;
    const OracleReport coarse = mc_channel(p, ModelTier::FullNoBath, cfg);
    cfg.dt = 0.05 / p.kappa;
    const OracleReport fine = mc_channel(p, ModelTier::FullNoBath, cfg);
    CHECK(fine.n_steps == 2 * coarse.n_steps);
    CHECK(coarse.pass);
    CHECK(fine.pass);
    // both step sizes target the same analytic channel
    CHECK(std::abs(coarse.T_hat - fine.T_hat) <=
          5.0 * std::sqrt(coarse.T_se * coarse.T_se + fine.T_se * fine.T_se));
}

TEST_CASE("standard errors shrink like one over root n") {
    const InterfaceParams p = scaled_params();
    MonteCarloConfig cfg;
    cfg.seed = 33;
    cfg.n_traj = 1000;
    const OracleReport small = mc_channel(p, ModelTier::AdiabaticNoBath, cfg);
    cfg.n_traj = 4000;
    const OracleReport large = mc_channel(p, ModelTier::AdiabaticNoBath, cfg);
    const double ratio = small.T_se / large.T_se;
    CHECK(ratio > 1.4);
    CHECK(ratio < 2.9);
    CHECK(small.V_XN_se / large.V_XN_se > 1.4);
    CHECK(small.V_XN_se / large.V_XN_se < 2.9);
}
