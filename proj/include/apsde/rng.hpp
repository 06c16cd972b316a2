#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace apsde
{

//---------------------------------------------------------------------------//
/*!
 * Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
 *
 * The output block is a pure function of (counter, key), so any element of
 * any stream can be produced without touching shared state.
 */
class Philox4x32
{
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key)
    {
        for (int round = 0; round < 10; ++round)
        {
            if (round > 0)
            {
                key[0] += kW0;
                key[1] += kW1;
            }
            std::uint64_t const p0 = std::uint64_t{kM0} * ctr[0];
            std::uint64_t const p1 = std::uint64_t{kM1} * ctr[2];
            auto const hi0 = static_cast<std::uint32_t>(p0 >> 32);
            auto const lo0 = static_cast<std::uint32_t>(p0);
            auto const hi1 = static_cast<std::uint32_t>(p1 >> 32);
            auto const lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

  private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

//---------------------------------------------------------------------------//
//! Sub-stream tags. Jump streams are offset by component and side.
enum class StreamTag : std::uint32_t
{
    brownian_forward = 0,
    brownian_backward = 1,
    verification = 2,
    quadrature = 3,
    jumps_base = 16,
};

inline constexpr std::uint32_t
jump_stream_tag(std::size_t component, bool backward)
{
    return static_cast<std::uint32_t>(StreamTag::jumps_base)
           + 2 * static_cast<std::uint32_t>(component) + (backward ? 1 : 0);
}

//! Identifies one independent random stream.
struct StreamKey
{
    std::uint64_t seed = 0;
    std::uint32_t path = 0;
    std::uint32_t tag = 0;

    friend bool operator==(StreamKey const&, StreamKey const&) = default;
};

//---------------------------------------------------------------------------//
/*!
 * Sequential view of one Philox stream.
 *
 * Draw i of the stream is always the same value regardless of how many
 * other streams exist or in which order they are consumed.
 */
class RandomStream
{
  public:
    explicit RandomStream(StreamKey key) : key_(key) {}

    StreamKey key() const { return key_; }

    //! Next 64 random bits.
    std::uint64_t next_u64()
    {
        if (lane_ == 2)
        {
            Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                    static_cast<std::uint32_t>(block_ >> 32),
                                    key_.path,
                                    key_.tag};
            Philox4x32::Key k{static_cast<std::uint32_t>(key_.seed),
                              static_cast<std::uint32_t>(key_.seed >> 32)};
            buffer_ = Philox4x32::block(ctr, k);
            ++block_;
            lane_ = 0;
        }
        std::uint64_t const out = (std::uint64_t{buffer_[2 * lane_]} << 32)
                                  | buffer_[2 * lane_ + 1];
        ++lane_;
        return out;
    }

    //! Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform()
    {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    //! Standard normal by the Box-Muller transform (pairs are cached).
    double normal()
    {
        if (has_spare_)
        {
            has_spare_ = false;
            return spare_;
        }
        double const u1 = uniform();
        double const u2 = uniform();
        double const r = std::sqrt(-2.0 * std::log(u1));
        double const phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    //! Exponential with the given rate.
    double exponential(double rate) { return -std::log(uniform()) / rate; }

  private:
    StreamKey key_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buffer_{};
    int lane_ = 2;
    double spare_ = 0;
    bool has_spare_ = false;
};

}  // namespace apsde
