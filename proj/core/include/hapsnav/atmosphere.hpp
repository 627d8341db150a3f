#pragma once

#include <array>

#include "hapsnav/frames.hpp"

namespace hapsnav {

/// Broadcast ionosphere coefficients. alpha in s, s/sc, s/sc^2, s/sc^3;
/// beta in s, s/sc, s/sc^2, s/sc^3 (sc = semicircles).
struct KlobucharCoefficients {
  std::array<double, 4> alpha{};
  std::array<double, 4> beta{};

  /// A representative GPS broadcast set.
  static KlobucharCoefficients representative();
};

struct AtmosphericDelays {
  double troposphere = 0.0;  // m
  double ionosphere = 0.0;   // m
};

struct Meteo {
  double pressure = 1013.25;    // hPa
  double temperature = 288.15;  // K
  double vapor_pressure = 0.0;  // hPa
};

/// Standard atmosphere reduced to `height`, with vapor pressure derived from
/// relative humidity (0..1).
Meteo standard_meteo(double height, double relative_humidity = 0.5,
                     double sea_level_pressure = 1013.25,
                     double sea_level_temperature = 288.15);

/// Saastamoinen slant delay in meters. Throws ElevationTooLow below 5 deg.
double saastamoinen_delay(const GeodeticPosition& receiver, double elevation, double pressure,
                          double temperature, double vapor_pressure);

/// GPS L1 Klobuchar slant delay in meters. `gps_time` is seconds of week
/// (only the time of day matters).
double klobuchar_delay(const GeodeticPosition& receiver, double elevation, double azimuth,
                       double gps_time, const KlobucharCoefficients& k);

}  // namespace hapsnav

#include "hapsnav/orbits.hpp"

namespace hapsnav {

/// Delay model shared by the synthesizer and the solver's correction step.
/// HAPS sources never receive atmospheric terms; elevations below the
/// Saastamoinen validity limit are evaluated at 5 deg. Receiver heights
/// outside [-100 m, 10 km] get no tropospheric delay.
struct AtmosphereModel {
  KlobucharCoefficients klobuchar = KlobucharCoefficients::representative();
  double sea_level_pressure = 1013.25;
  double sea_level_temperature = 288.15;
  double relative_humidity = 0.5;
  bool troposphere = true;
  bool ionosphere = true;

  AtmosphericDelays delays(SourceKind kind, const GeodeticPosition& receiver, double elevation,
                           double azimuth, double gps_seconds_of_week) const;
};

}  // namespace hapsnav
