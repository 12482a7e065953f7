#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>

namespace fpsim {

using cxd = std::complex<double>;
inline constexpr cxd ci{0.0, 1.0};

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// CODATA 2018
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double mu0 = 1.25663706212e-6;      // N A^-2
inline constexpr double bohr_magneton = 9.2740100783e-24; // J T^-1
inline constexpr double g_free = 2.00231930436256;

// arccos(1/sqrt(3)), the magic angle
inline const double magic_angle = std::acos(1.0 / std::sqrt(3.0));

// Gyromagnetic ratios, rad s^-1 T^-1 (signed)
struct IsotopeData {
    int multiplicity;
    double gamma;
};

inline std::optional<IsotopeData> isotope_lookup(const std::string& name) {
    if (name == "1H") return IsotopeData{2, 267.52218744e6};
    if (name == "2H") return IsotopeData{3, 41.065e6};
    if (name == "13C") return IsotopeData{2, 67.2828e6};
    if (name == "14N") return IsotopeData{3, 19.331e6};
    if (name == "15N") return IsotopeData{2, -27.116e6};
    if (name == "19F") return IsotopeData{2, 251.815e6};
    if (name == "31P") return IsotopeData{2, 108.291e6};
    if (name == "17O") return IsotopeData{6, -36.264e6};
    if (name == "23Na") return IsotopeData{4, 70.808e6};
    // free electron; g-tensor systems refine gamma via their isotropic g value
    if (name == "E") return IsotopeData{2, g_free * bohr_magneton / hbar};
    return std::nullopt;
}

} // namespace fpsim
