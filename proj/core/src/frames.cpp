#include "hapsnav/frames.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hapsnav/constants.hpp"
#include "hapsnav/error.hpp"

namespace hapsnav {

using namespace constants;

GeodeticPosition GeodeticPosition::from_degrees(double lat_deg, double lon_deg, double height_m) {
  return {lat_deg * kDegToRad, lon_deg * kDegToRad, height_m};
}

EcefPosition geodetic_to_ecef(const GeodeticPosition& g) {
  const double sin_lat = std::sin(g.latitude);
  const double cos_lat = std::cos(g.latitude);
  const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sin_lat * sin_lat);
  return {(n + g.height) * cos_lat * std::cos(g.longitude),
          (n + g.height) * cos_lat * std::sin(g.longitude),
          (n * (1.0 - kWgs84E2) + g.height) * sin_lat};
}

GeodeticPosition ecef_to_geodetic(const EcefPosition& p) {
  const double r = p.norm();
  if (!(r > 1.0)) {
    throw Error(ErrorCode::NearSingular,
                "ecef_to_geodetic: position within 1 m of the Earth center");
  }
  const double rho2 = p.x * p.x + p.y * p.y;
  const double rho = std::sqrt(rho2);

  // Fixed-point iteration on z + N e^2 sin(lat); converges to machine
  // precision in a handful of steps for any height above -1 km.
  double z = p.z;
  double n = kWgs84A;
  for (int i = 0; i < 50; ++i) {
    const double sin_lat = z / std::sqrt(rho2 + z * z);
    n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sin_lat * sin_lat);
    const double z_next = p.z + n * kWgs84E2 * sin_lat;
    const bool done = std::fabs(z_next - z) < 1e-10;
    z = z_next;
    if (done) break;
  }

  GeodeticPosition g;
  g.latitude = rho > 1e-12 ? std::atan(z / rho) : (p.z > 0.0 ? kPi / 2.0 : -kPi / 2.0);
  g.longitude = rho > 1e-12 ? std::atan2(p.y, p.x) : 0.0;
  g.height = std::sqrt(rho2 + z * z) - n;
  if (g.longitude == -kPi) g.longitude = kPi;
  return g;
}

RotationMatrix3 ned_rotation(const GeodeticPosition& g) {
  const double sl = std::sin(g.longitude), cl = std::cos(g.longitude);
  const double sp = std::sin(g.latitude), cp = std::cos(g.latitude);
  RotationMatrix3 r;
  r << -sl, cl, 0.0,
       -cl * sp, -sl * sp, cp,
       cl * cp, sl * cp, sp;
  return r;
}

Eigen::Vector3d ecef_delta_to_ned(const GeodeticPosition& g, const Eigen::Vector3d& v) {
  const Eigen::Vector3d enu = ned_rotation(g) * v;
  return {enu.y(), enu.x(), -enu.z()};
}

ElevationAzimuth elevation_azimuth(const GeodeticPosition& receiver_geo,
                                   const EcefPosition& receiver,
                                   const EcefPosition& source) {
  const Eigen::Vector3d d = source.vec() - receiver.vec();
  const double range = d.norm();
  if (range < 1.0) {
    throw Error(ErrorCode::DegenerateGeometry,
                "elevation_azimuth: source within 1 m of receiver");
  }
  const Eigen::Vector3d ned = ecef_delta_to_ned(receiver_geo, d);
  ElevationAzimuth ea;
  ea.elevation = std::asin(std::clamp(-ned.z() / range, -1.0, 1.0));
  if (std::fabs(ea.elevation - kPi / 2.0) <= 1e-9) {
    ea.azimuth = 0.0;
  } else {
    ea.azimuth = std::atan2(ned.y(), ned.x());
    if (ea.azimuth == -kPi) ea.azimuth = kPi;
  }
  return ea;
}

ElevationAzimuth elevation_azimuth(const EcefPosition& receiver, const EcefPosition& source) {
  return elevation_azimuth(ecef_to_geodetic(receiver), receiver, source);
}

RotationMatrix3 earth_rotation(double propagation_time) {
  const double theta = kEarthRotationRate * propagation_time;
  const double c = std::cos(theta), s = std::sin(theta);
  RotationMatrix3 m;
  m << c, s, 0.0,
       -s, c, 0.0,
       0.0, 0.0, 1.0;
  return m;
}

EcefPosition sagnac_correct(const EcefPosition& pos_at_emission, double propagation_time) {
  if (!(propagation_time >= 0.0 && propagation_time < 1.0)) {
    throw Error(ErrorCode::InvalidPropagationTime,
                "sagnac_correct: propagation time must lie in [0, 1) s, got " +
                    std::to_string(propagation_time));
  }
  const double theta = kEarthRotationRate * propagation_time;
  const double c = std::cos(theta), s = std::sin(theta);
  // z is carried through untouched.
  return {c * pos_at_emission.x + s * pos_at_emission.y,
          -s * pos_at_emission.x + c * pos_at_emission.y,
          pos_at_emission.z};
}

}  // namespace hapsnav
