#pragma once

// Counter-based Philox4x32-10 generator. A (seed, stream) pair fully
// determines the output sequence, so replications can draw from
// independent streams derived from one master seed without shared state.

#include <array>
#include <cstdint>
#include <limits>

namespace rgmv {

class Philox4x32 {
public:
    using result_type = std::uint32_t;

    explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (index_ == 4) {
            block_ = generate(counter_, key_);
            increment();
            index_ = 0;
        }
        return block_[index_++];
    }

    /// Uniform double in [0, 1) built from 53 random bits.
    double uniform() noexcept {
        const std::uint64_t hi = (*this)() >> 5;  // 27 bits
        const std::uint64_t lo = (*this)() >> 6;  // 26 bits
        return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
    }

    void discard(std::uint64_t n) noexcept {
        for (std::uint64_t i = 0; i < n; ++i) (*this)();
    }

private:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static Block round(const Block& c, const Key& k) noexcept {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }

    static Block generate(Block c, Key k) noexcept {
        for (int r = 0; r < 10; ++r) {
            c = round(c, k);
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        return c;
    }

    void increment() noexcept {
        if (++counter_[0] == 0) ++counter_[1];
    }

    Key key_;
    Block counter_;
    Block block_{};
    int index_ = 4;
};

/// Seed for replication `index` derived from a master seed (splitmix64 finalizer).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace rgmv
