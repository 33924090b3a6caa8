#pragma once

namespace sqzlab {

inline constexpr double speed_of_light = 299792458.0;  // m/s

// Telecom C-band carrier used throughout: squeezing, probe and LO all sit here.
inline constexpr double carrier_wavelength_m = 1550e-9;
inline constexpr double carrier_frequency_hz = speed_of_light / carrier_wavelength_m;

}  // namespace sqzlab
