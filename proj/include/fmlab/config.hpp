#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fmlab {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr std::uint64_t default_seed = 0xC0FFEE;
inline constexpr const char* version = "0.1.0";

// Shared thresholds for every exponent fit in the library.
struct FitConfig {
    double slope_tol = 0.05;
    double r2_min = 0.9;
    // A partial-sum increment exponent below -increment_margin counts as
    // summable.  Kept below slope_tol so that increments decaying like
    // N^-0.05 are not mistaken for logarithmic growth.
    double increment_margin = 0.025;
    // Sign decisions on exact power laws (tau scans) use this floor,
    // widened to three standard errors of the fitted slope.
    double critical_margin = 0.005;
};

inline constexpr FitConfig fit_config{};

// Violated precondition: bad grid/box pairing, missing zero, uncertified tail.
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Parameter outside the mathematical domain of an operation (p < 1, s >= 1, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
}

inline void require_domain(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

}  // namespace fmlab
