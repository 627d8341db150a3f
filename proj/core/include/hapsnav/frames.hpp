#pragma once

#include <Eigen/Dense>

namespace hapsnav {

/// Earth-centered Earth-fixed position in meters.
struct EcefPosition {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static EcefPosition from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
  Eigen::Vector3d vec() const { return {x, y, z}; }
  double norm() const { return vec().norm(); }
};

/// WGS-84 geodetic coordinates. Angles in radians, height in meters above
/// the ellipsoid.
struct GeodeticPosition {
  double latitude = 0.0;
  double longitude = 0.0;
  double height = 0.0;

  static GeodeticPosition from_degrees(double lat_deg, double lon_deg, double height_m);
};

using RotationMatrix3 = Eigen::Matrix3d;

struct ElevationAzimuth {
  double elevation = 0.0;  // rad, [-pi/2, pi/2]
  double azimuth = 0.0;    // rad, (-pi, pi], clockwise from north
};

EcefPosition geodetic_to_ecef(const GeodeticPosition& g);

/// Throws NearSingular when |p| <= 1 m.
GeodeticPosition ecef_to_geodetic(const EcefPosition& p);

/// Rotation whose rows are the local east, north and up unit vectors
/// expressed in ECEF:
///
///   [ -sin(lon)           cos(lon)           0        ]
///   [ -cos(lon) sin(lat)  -sin(lon) sin(lat)  cos(lat) ]
///   [  cos(lon) cos(lat)   sin(lon) cos(lat)  sin(lat) ]
RotationMatrix3 ned_rotation(const GeodeticPosition& g);

/// Components of `v` (an ECEF difference vector) in the local north, east,
/// down frame at `g`.
Eigen::Vector3d ecef_delta_to_ned(const GeodeticPosition& g, const Eigen::Vector3d& v);

/// Elevation/azimuth of `source` seen from `receiver`. Azimuth is clockwise
/// from north in (-pi, pi]; zero at the zenith. Throws DegenerateGeometry
/// when the two points are closer than 1 m.
ElevationAzimuth elevation_azimuth(const EcefPosition& receiver, const EcefPosition& source);
ElevationAzimuth elevation_azimuth(const GeodeticPosition& receiver_geo,
                                   const EcefPosition& receiver,
                                   const EcefPosition& source);

/// Earth-rotation rotation about the z axis by omega_E * dt.
RotationMatrix3 earth_rotation(double propagation_time);

/// Rotates an emission-time ECEF position into the ECEF frame at reception.
/// Throws InvalidPropagationTime unless 0 <= propagation_time < 1 s.
EcefPosition sagnac_correct(const EcefPosition& pos_at_emission, double propagation_time);

}  // namespace hapsnav
