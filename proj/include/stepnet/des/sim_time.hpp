#pragma once

#include "stepnet/errors.hpp"

#include <compare>
#include <cstdint>
#include <limits>
#include <string>

namespace stepnet::des {

/// Simulated time as an integer count of nanoseconds. Arithmetic is checked:
/// overflow and underflow throw TimeOverflow instead of wrapping.
class SimTime {
public:
    using rep = std::uint64_t;

    constexpr SimTime() noexcept = default;
    constexpr explicit SimTime(rep ns) noexcept : ns_(ns) {}

    static constexpr SimTime zero() noexcept { return SimTime{0}; }
    static constexpr SimTime max() noexcept { return SimTime{std::numeric_limits<rep>::max()}; }
    static constexpr SimTime nanoseconds(rep n) noexcept { return SimTime{n}; }
    static constexpr SimTime microseconds(rep n) { return SimTime{checked_mul(n, 1'000)}; }
    static constexpr SimTime milliseconds(rep n) { return SimTime{checked_mul(n, 1'000'000)}; }

    /// Rounds to the nearest nanosecond. Negative or non-finite input throws.
    static SimTime from_seconds(double s);

    constexpr rep ns() const noexcept { return ns_; }
    constexpr double seconds() const noexcept { return static_cast<double>(ns_) * 1e-9; }

    constexpr SimTime operator+(SimTime o) const {
        if (ns_ > std::numeric_limits<rep>::max() - o.ns_) {
            throw TimeOverflow("simulated time overflow in addition");
        }
        return SimTime{ns_ + o.ns_};
    }
    constexpr SimTime operator-(SimTime o) const {
        if (o.ns_ > ns_) {
            throw TimeOverflow("simulated time underflow in subtraction");
        }
        return SimTime{ns_ - o.ns_};
    }
    constexpr SimTime& operator+=(SimTime o) { return *this = *this + o; }
    constexpr SimTime operator*(rep k) const { return SimTime{checked_mul(ns_, k)}; }

    constexpr auto operator<=>(const SimTime&) const noexcept = default;

    std::string to_string() const { return std::to_string(ns_) + "ns"; }

private:
    static constexpr rep checked_mul(rep a, rep b) {
        if (b != 0 && a > std::numeric_limits<rep>::max() / b) {
            throw TimeOverflow("simulated time overflow in multiplication");
        }
        return a * b;
    }

    rep ns_ = 0;
};

/// Serialisation time of `bytes` on a link of `bits_per_second`, rounded to
/// the nearest nanosecond.
SimTime serialisation_time(std::uint64_t bytes, double bits_per_second);

} // namespace stepnet::des
