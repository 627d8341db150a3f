#pragma once

#include <numbers>

namespace hapsnav::constants {

inline constexpr double kSpeedOfLight = 299792458.0;        // m/s
inline constexpr double kEarthRotationRate = 7.2921151467e-5;  // rad/s
inline constexpr double kEarthGravParam = 3.986005e14;      // m^3/s^2

// WGS-84
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;
inline constexpr double kWgs84B = kWgs84A * (1.0 - kWgs84F);
inline constexpr double kWgs84E2 = kWgs84F * (2.0 - kWgs84F);

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

inline constexpr double kSecondsPerWeek = 604800.0;
inline constexpr double kSecondsPerDay = 86400.0;

}  // namespace hapsnav::constants
