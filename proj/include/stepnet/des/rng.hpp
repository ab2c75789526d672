#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace stepnet::des {

/// SplitMix64 finaliser; used to derive substream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a over the bytes of `s`.
std::uint64_t hash_name(std::string_view s) noexcept;

/// Seed of the substream `id` under `root_seed`.
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view id) noexcept;

/// Named random stream. The engine is mt19937_64 and every conversion to
/// floating point or bounded integers is done here rather than through
/// <random> distributions, whose output is implementation-defined. Draws are
/// therefore identical across standard libraries and platforms.
class RngStream {
public:
    RngStream(std::string id, std::uint64_t seed);

    const std::string& id() const noexcept { return id_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform();

    /// Uniform in [low, high).
    double uniform(double low, double high) { return low + (high - low) * uniform(); }

    /// Uniform integer in [0, n); n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Child stream, deterministic in (this stream's seed, id).
    RngStream split(std::string_view child_id) const;

private:
    std::string id_;
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace stepnet::des
