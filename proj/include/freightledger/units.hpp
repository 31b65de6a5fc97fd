#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace freightledger {

// Money is integer minor units (cents). Fractions that touch money
// (discount rates, inclusion fractions, confidences, accuracies) are stored
// as integer parts-per-million so every financial computation stays in
// integer arithmetic.
using Cents = std::int64_t;
using Ppm = std::int64_t;

inline constexpr Ppm kPpmOne = 1'000'000;

// Scenario clock: integer hours since the scenario epoch.
using Hours = std::int64_t;

inline constexpr Hours kHoursPerDay = 24;

inline std::int64_t day_of(Hours t) {
    if (t < 0) throw std::domain_error("negative scenario time");
    return t / kHoursPerDay;
}

// Ceiling day count for billing: a 25-hour dwell counts as 2 days.
inline std::int64_t ceil_days(Hours h) {
    if (h < 0) throw std::domain_error("negative duration");
    return (h + kHoursPerDay - 1) / kHoursPerDay;
}

inline Ppm ppm_from_fraction(double f) {
    if (!(f >= 0.0) || !(f <= 1.0)) throw std::domain_error("fraction outside [0,1]");
    return static_cast<Ppm>(std::llround(f * static_cast<double>(kPpmOne)));
}

inline double fraction_from_ppm(Ppm p) {
    return static_cast<double>(p) / static_cast<double>(kPpmOne);
}

// floor(amount * ppm / 1e6), exact in integers.
inline Cents mul_ppm(Cents amount, Ppm ppm) {
    if (amount < 0 || ppm < 0) throw std::domain_error("negative amount or ppm");
    using Wide = unsigned __int128;
    Wide product = static_cast<Wide>(amount) * static_cast<Wide>(ppm);
    return static_cast<Cents>(product / static_cast<Wide>(kPpmOne));
}

// floor(amount * frac_ppm * (1e6 - discount_ppm) / 1e12) with a single floor.
inline Cents mul_ppm2(Cents amount, Ppm frac_ppm, Ppm other_ppm) {
    if (amount < 0 || frac_ppm < 0 || other_ppm < 0) {
        throw std::domain_error("negative amount or ppm");
    }
    using Wide = unsigned __int128;
    Wide product = static_cast<Wide>(amount) * static_cast<Wide>(frac_ppm);
    product *= static_cast<Wide>(other_ppm);
    return static_cast<Cents>(product / (static_cast<Wide>(kPpmOne) * static_cast<Wide>(kPpmOne)));
}

inline Cents discounted(Cents amount, Ppm discount_ppm) {
    if (discount_ppm < 0 || discount_ppm >= kPpmOne) throw std::domain_error("discount outside [0,1)");
    return mul_ppm(amount, kPpmOne - discount_ppm);
}

inline std::string format_usd(Cents cents) {
    bool negative = cents < 0;
    std::uint64_t abs = negative ? static_cast<std::uint64_t>(-cents) : static_cast<std::uint64_t>(cents);
    std::string s = "$" + std::to_string(abs / 100) + ".";
    std::uint64_t frac = abs % 100;
    s += static_cast<char>('0' + frac / 10);
    s += static_cast<char>('0' + frac % 10);
    return negative ? "-" + s : s;
}

}  // namespace freightledger
