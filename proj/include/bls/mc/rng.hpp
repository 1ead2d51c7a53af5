#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace bls::mc {

// Philox4x32-10 counter-based generator. Streams are addressed by
// (master seed -> key, stream id -> high counter words), so any batch can be
// generated independently of the others and parallel runs agree bit-for-bit
// with serial ones.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          ctr2_(static_cast<std::uint32_t>(stream)),
          ctr3_(static_cast<std::uint32_t>(stream >> 32)) {}

    std::uint64_t next_u64() {
        if (pos_ >= 4) refill();
        const std::uint64_t lo = buf_[pos_], hi = buf_[pos_ + 1];
        pos_ += 2;
        return (hi << 32) | lo;
    }

    /// uniform in (0, 1]
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    }

    /// uniform in [0, 1)
    double next_unit_co() {
        return static_cast<double>(next_u64() >> 11) * 0x1p-53;
    }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit_co();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b, std::uint32_t& lo) {
        const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        lo = static_cast<std::uint32_t>(p);
        return static_cast<std::uint32_t>(p >> 32);
    }

    void refill() {
        std::uint32_t c0 = static_cast<std::uint32_t>(block_);
        std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
        std::uint32_t c2 = ctr2_, c3 = ctr3_;
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t lo0, lo1;
            const std::uint32_t hi0 = mulhi(0xD2511F53u, c0, lo0);
            const std::uint32_t hi1 = mulhi(0xCD9E8D57u, c2, lo1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        buf_ = {c0, c1, c2, c3};
        pos_ = 0;
        ++block_;
    }

    std::uint32_t key0_, key1_, ctr2_, ctr3_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace bls::mc
