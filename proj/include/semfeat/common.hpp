#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace semfeat {

/// Raised for every contract violation in the pipeline. The optional stage
/// name is prefixed to the message so CLI users can tell which step failed.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    Error(std::string_view stage, const std::string& what)
        : std::runtime_error(std::string(stage) + ": " + what), stage_(stage) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Seeded generator with platform-stable reductions. std::uniform_*_distribution
/// is implementation-defined, which would break byte-identical outputs across
/// standard libraries, so the reductions are done here on top of mt19937_64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform real in [0, 1) with 53 random bits.
    double unit();

    /// Uniform real in (lo, hi].
    double open_closed(double lo, double hi) { return hi - (hi - lo) * unit(); }

    template <typename It>
    void shuffle(It first, It last) {
        auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            auto j = below(i);
            std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                           first + static_cast<std::ptrdiff_t>(j));
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

/// FNV-1a 64-bit hash, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace semfeat
