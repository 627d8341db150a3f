#include "hapsnav/atmosphere.hpp"

#include <algorithm>
#include <cmath>

#include "hapsnav/constants.hpp"
#include "hapsnav/error.hpp"

namespace hapsnav {

using namespace constants;

KlobucharCoefficients KlobucharCoefficients::representative() {
  return {{0.1118e-07, -0.7451e-08, -0.5961e-07, 0.1192e-06},
          {0.1167e+06, -0.2294e+06, -0.1311e+06, 0.1049e+07}};
}

Meteo standard_meteo(double height, double relative_humidity, double sea_level_pressure,
                     double sea_level_temperature) {
  const double h = std::max(height, 0.0);
  Meteo m;
  m.pressure = sea_level_pressure * std::pow(1.0 - 2.2557e-5 * h, 5.2568);
  m.temperature = sea_level_temperature - 6.5e-3 * h;
  m.vapor_pressure = 6.108 * relative_humidity *
                     std::exp((17.15 * m.temperature - 4684.0) / (m.temperature - 38.45));
  return m;
}

double saastamoinen_delay(const GeodeticPosition& receiver, double elevation, double pressure,
                          double temperature, double vapor_pressure) {
  if (elevation < 5.0 * kDegToRad) {
    throw Error(ErrorCode::ElevationTooLow, "saastamoinen_delay: elevation below 5 deg");
  }
  const double cos_z = std::sin(elevation);
  const double h_km = std::max(receiver.height, 0.0) / 1e3;
  const double gravity_term = 1.0 - 0.00266 * std::cos(2.0 * receiver.latitude) - 0.00028 * h_km;
  const double hydrostatic = 0.0022768 * pressure / gravity_term;
  const double wet = 0.002277 * (1255.0 / temperature + 0.05) * vapor_pressure;
  return (hydrostatic + wet) / cos_z;
}

double klobuchar_delay(const GeodeticPosition& receiver, double elevation, double azimuth,
                       double gps_time, const KlobucharCoefficients& k) {
  const double el_sc = elevation / kPi;
  const double lat_sc = receiver.latitude / kPi;
  const double lon_sc = receiver.longitude / kPi;

  // Earth-centred angle and ionospheric pierce point (semicircles).
  const double psi = 0.0137 / (el_sc + 0.11) - 0.022;
  double lat_i = lat_sc + psi * std::cos(azimuth);
  lat_i = std::clamp(lat_i, -0.416, 0.416);
  const double lon_i = lon_sc + psi * std::sin(azimuth) / std::cos(lat_i * kPi);
  const double lat_m = lat_i + 0.064 * std::cos((lon_i - 1.617) * kPi);

  double t = std::fmod(43200.0 * lon_i + gps_time, kSecondsPerDay);
  if (t < 0.0) t += kSecondsPerDay;

  const double obliquity = 1.0 + 16.0 * std::pow(0.53 - el_sc, 3);

  double amp = k.alpha[0] + lat_m * (k.alpha[1] + lat_m * (k.alpha[2] + lat_m * k.alpha[3]));
  double per = k.beta[0] + lat_m * (k.beta[1] + lat_m * (k.beta[2] + lat_m * k.beta[3]));
  amp = std::max(amp, 0.0);
  per = std::max(per, 72000.0);

  const double x = 2.0 * kPi * (t - 50400.0) / per;
  double delay = 5e-9;
  if (std::fabs(x) < 1.57) {
    delay += amp * (1.0 - x * x / 2.0 + x * x * x * x / 24.0);
  }
  return kSpeedOfLight * obliquity * delay;
}

}  // namespace hapsnav

namespace hapsnav {

AtmosphericDelays AtmosphereModel::delays(SourceKind kind, const GeodeticPosition& receiver,
                                          double elevation, double azimuth,
                                          double gps_seconds_of_week) const {
  AtmosphericDelays d;
  if (kind == SourceKind::Haps) return d;
  // Outside this height band the standard atmosphere is meaningless; early
  // solver iterations can land there.
  if (troposphere && receiver.height >= -100.0 && receiver.height <= 1.0e4) {
    const double el = std::max(elevation, 5.0 * constants::kDegToRad);
    const Meteo m = standard_meteo(receiver.height, relative_humidity, sea_level_pressure,
                                   sea_level_temperature);
    d.troposphere =
        saastamoinen_delay(receiver, el, m.pressure, m.temperature, m.vapor_pressure);
  }
  if (ionosphere) {
    d.ionosphere = klobuchar_delay(receiver, std::max(elevation, 0.0), azimuth, gps_seconds_of_week, klobuchar);
  }
  return d;
}

}  // namespace hapsnav
