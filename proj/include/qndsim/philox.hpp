#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "qndsim/params.hpp"

namespace qnd {

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3").  A 64-bit key plus a 64-bit stream id select
// an independent sequence; the remaining 64 counter bits index into it, so
// trajectories can be assigned non-overlapping streams deterministically and
// evaluated in any order or in parallel.
struct Philox4x32 {
    uint32_t k0 = 0;
    uint32_t k1 = 0;

    static constexpr uint32_t MULT_A = 0xD2511F53u;
    static constexpr uint32_t MULT_B = 0xCD9E8D57u;
    static constexpr uint32_t WEYL_A = 0x9E3779B9u;
    static constexpr uint32_t WEYL_B = 0xBB67AE85u;

    // Core block function on an explicit 128-bit counter (verified against
    // the Random123 reference test vectors).
    static void block(const std::array<uint32_t, 4>& ctr, uint32_t key0, uint32_t key1,
                      std::array<uint32_t, 4>& out) {
        uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
        for (int r = 0; r < 10; ++r) {
            const uint64_t p0 = static_cast<uint64_t>(MULT_A) * c0;
            const uint64_t p1 = static_cast<uint64_t>(MULT_B) * c2;
            const uint32_t n0 = static_cast<uint32_t>(p1 >> 32) ^ c1 ^ key0;
            const uint32_t n1 = static_cast<uint32_t>(p1);
            const uint32_t n2 = static_cast<uint32_t>(p0 >> 32) ^ c3 ^ key1;
            const uint32_t n3 = static_cast<uint32_t>(p0);
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            key0 += WEYL_A;
            key1 += WEYL_B;
        }
        out = {c0, c1, c2, c3};
    }

    // Fill nblk consecutive counter blocks (4 words each) for one stream.
    // Eight counters are processed interleaved: the ten rounds are a serial
    // dependency chain per counter, so independent lanes are needed to reach
    // multiplier throughput instead of latency.  Static with a restrict
    // output so the lane loop vectorizes even when the destination buffer
    // lives next to the key.
    static void fill(uint32_t k0, uint32_t k1, uint64_t ctr0, uint64_t stream, int nblk,
                     uint32_t* __restrict out) {
        const uint32_t s0 = static_cast<uint32_t>(stream);
        const uint32_t s1 = static_cast<uint32_t>(stream >> 32);
        int b = 0;
        for (; b + 8 <= nblk; b += 8) {
            uint32_t c0[8], c1[8], c2[8], c3[8];
            for (int l = 0; l < 8; ++l) {
                const uint64_t c = ctr0 + static_cast<uint64_t>(b + l);
                c0[l] = static_cast<uint32_t>(c);
                c1[l] = static_cast<uint32_t>(c >> 32);
                c2[l] = s0;
                c3[l] = s1;
            }
            uint32_t kk0 = k0, kk1 = k1;
            for (int r = 0; r < 10; ++r) {
                for (int l = 0; l < 8; ++l) {
                    const uint64_t p0 = static_cast<uint64_t>(MULT_A) * c0[l];
                    const uint64_t p1 = static_cast<uint64_t>(MULT_B) * c2[l];
                    const uint32_t n0 = static_cast<uint32_t>(p1 >> 32) ^ c1[l] ^ kk0;
                    const uint32_t n1 = static_cast<uint32_t>(p1);
                    const uint32_t n2 = static_cast<uint32_t>(p0 >> 32) ^ c3[l] ^ kk1;
                    const uint32_t n3 = static_cast<uint32_t>(p0);
                    c0[l] = n0; c1[l] = n1; c2[l] = n2; c3[l] = n3;
                }
                kk0 += WEYL_A;
                kk1 += WEYL_B;
            }
            for (int l = 0; l < 8; ++l) {
                uint32_t* o = out + 4 * static_cast<size_t>(b + l);
                o[0] = c0[l]; o[1] = c1[l]; o[2] = c2[l]; o[3] = c3[l];
            }
        }
        for (; b < nblk; ++b) {
            const uint64_t c = ctr0 + static_cast<uint64_t>(b);
            std::array<uint32_t, 4> o;
            block({static_cast<uint32_t>(c), static_cast<uint32_t>(c >> 32), s0, s1}, k0, k1, o);
            uint32_t* dst = out + 4 * static_cast<size_t>(b);
            dst[0] = o[0]; dst[1] = o[1]; dst[2] = o[2]; dst[3] = o[3];
        }
    }
};

namespace detail {

// 128-layer ziggurat tables for the standard normal (Marsaglia & Tsang
// layout, 31-bit comparison constants).
struct ZigguratTables {
    uint32_t kn[128];
    double wn[128];
    double fn[128];

    ZigguratTables() {
        const double m1 = 2147483648.0;
        const double vn = 9.91256303526217e-3;  // layer area
        double dn = 3.442619855899;             // tail start
        double tn = dn;
        const double q = vn / std::exp(-0.5 * dn * dn);
        kn[0] = static_cast<uint32_t>((dn / q) * m1);
        kn[1] = 0;
        wn[0] = q / m1;
        wn[127] = dn / m1;
        fn[0] = 1.0;
        fn[127] = std::exp(-0.5 * dn * dn);
        for (int i = 126; i >= 1; --i) {
            dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
            kn[i + 1] = static_cast<uint32_t>((dn / tn) * m1);
            tn = dn;
            fn[i] = std::exp(-0.5 * dn * dn);
            wn[i] = dn / m1;
        }
    }
};

inline const ZigguratTables& ziggurat() {
    static const ZigguratTables t;
    return t;
}

}  // namespace detail

// Buffered stream of uniforms and standard normals over one Philox stream.
// Consumption order is part of the stream definition, so a fixed draw
// sequence per trajectory yields bit-identical results regardless of
// scheduling.
class NormalStream {
  public:
    NormalStream(uint64_t seed, uint64_t stream)
        : rng_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
          stream_(stream),
          zig_(&detail::ziggurat()) {}  // resolve the table guard outside the hot loop

    uint32_t next_u32() {
        if (pos_ == BUF_WORDS) refill();
        return buf_[pos_++];
    }

    // Uniform on (0, 1), never exactly 0 or 1.
    double uniform() { return (next_u32() + 0.5) * 0x1p-32; }

    // The accept path is kept tiny so it always inlines into simulation
    // loops; the rejection handling (~2.3% of draws) stays out of line.
    inline __attribute__((always_inline)) double normal() {
        const detail::ZigguratTables& z = *zig_;
        const int32_t hz = static_cast<int32_t>(next_u32());
        const uint32_t iz = static_cast<uint32_t>(hz) & 127u;
        if (static_cast<uint32_t>(hz < 0 ? -hz : hz) < z.kn[iz]) return hz * z.wn[iz];
        return normal_reject(hz, iz);
    }

    // Bulk variant for simulation loops that buffer their noise.  Candidate
    // values for a whole refill block are produced in a branch-free pass
    // that the compiler can vectorize; the rare rejections are patched up
    // afterwards (their redraws therefore consume counter words after the
    // block, a fixed and documented consumption order of this method).
    void normals(double* __restrict dst, int n) {
        const detail::ZigguratTables& z = *zig_;
        int i = 0;
        while (i < n) {
            if (pos_ == BUF_WORDS) refill();
            const int avail = std::min(BUF_WORDS - pos_, n - i);
            // local copy: a rejection redraw can refill and overwrite buf_
            uint32_t src[BUF_WORDS];
            std::memcpy(src, buf_ + pos_, static_cast<size_t>(avail) * sizeof(uint32_t));
            unsigned char bad[BUF_WORDS];
            for (int k = 0; k < avail; ++k) {
                const int32_t hz = static_cast<int32_t>(src[k]);
                const uint32_t iz = static_cast<uint32_t>(hz) & 127u;
                dst[i + k] = hz * z.wn[iz];
                bad[k] = static_cast<uint32_t>(hz < 0 ? -hz : hz) >= z.kn[iz];
            }
            pos_ += avail;  // candidates consumed before any rejection redraw
            for (int k = 0; k < avail; ++k) {
                if (bad[k]) {
                    const int32_t hz = static_cast<int32_t>(src[k]);
                    dst[i + k] = normal_reject(hz, static_cast<uint32_t>(hz) & 127u);
                }
            }
            i += avail;
        }
    }

  private:
    static constexpr int BUF_BLOCKS = 256;
    static constexpr int BUF_WORDS = BUF_BLOCKS * 4;

    __attribute__((noinline, cold)) double normal_reject(int32_t hz0, uint32_t iz0) {
        const detail::ZigguratTables& z = *zig_;
        int32_t hz = hz0;
        uint32_t iz = iz0;
        for (;;) {
            if (iz == 0) {  // tail beyond x = 3.4426...
                const double r = 3.442619855899;
                double x, y;
                do {
                    x = -std::log(uniform()) / r;
                    y = -std::log(uniform());
                } while (y + y < x * x);
                return hz > 0 ? r + x : -(r + x);
            }
            const double x = hz * z.wn[iz];
            if (z.fn[iz] + uniform() * (z.fn[iz - 1] - z.fn[iz]) < std::exp(-0.5 * x * x))
                return x;
            hz = static_cast<int32_t>(next_u32());
            iz = static_cast<uint32_t>(hz) & 127u;
            if (static_cast<uint32_t>(hz < 0 ? -hz : hz) < z.kn[iz]) return hz * z.wn[iz];
        }
    }

    void refill() {
        Philox4x32::fill(rng_.k0, rng_.k1, ctr_, stream_, BUF_BLOCKS, buf_);
        ctr_ += BUF_BLOCKS;
        pos_ = 0;
    }

    Philox4x32 rng_;
    uint64_t stream_ = 0;
    const detail::ZigguratTables* zig_ = nullptr;
    uint64_t ctr_ = 0;
    int pos_ = BUF_WORDS;
    uint32_t buf_[BUF_WORDS];
};

}  // namespace qnd
