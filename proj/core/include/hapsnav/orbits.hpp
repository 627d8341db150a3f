#pragma once

#include <string>
#include <variant>
#include <vector>

#include "hapsnav/frames.hpp"

namespace hapsnav {

/// GPS broadcast ephemeris (one satellite, one issue of data). Times are GPS
/// seconds of week; angles in radians; rates in rad/s.
struct EphemerisRecord {
  int prn = 0;
  int week = 0;
  double toe = 0.0;
  double toc = 0.0;
  double sqrt_a = 0.0;
  double e = 0.0;
  double i0 = 0.0;
  double omega0 = 0.0;  // longitude of ascending node at weekly epoch
  double omega = 0.0;   // argument of perigee
  double m0 = 0.0;
  double delta_n = 0.0;
  double i_dot = 0.0;
  double omega_dot = 0.0;
  double cuc = 0.0, cus = 0.0;
  double crc = 0.0, crs = 0.0;
  double cic = 0.0, cis = 0.0;
  double af0 = 0.0, af1 = 0.0, af2 = 0.0;
  double tgd = 0.0;
  int iode = 0;
  int health = 0;

  /// sqrt_a^2 within the GPS band [2.0e7, 3.2e7] m and e < 0.1.
  bool plausible() const;
};

enum class SourceKind { Satellite, Haps };

/// Ranging source at signal emission time.
struct SourceState {
  std::string id;
  SourceKind kind = SourceKind::Satellite;
  EcefPosition position;
  double clock_offset = 0.0;  // s
};

/// A stratospheric platform loitering on a horizontal circle around `center`.
struct HapsPlatform {
  std::string id;
  GeodeticPosition center;
  double orbit_radius = 300.0;   // m
  double angular_rate = 0.0;     // rad/s, positive = clockwise seen from above
  double phase0 = 0.0;           // rad, measured from local north toward east
  double clock_offset = 0.0;     // s

  static constexpr double kDefaultLapSeconds = 600.0;
  static double default_angular_rate();
};

/// Circular Keplerian orbit used for synthetic GPS-like constellations.
struct CircularOrbit {
  int prn = 0;
  double semi_major_axis = 0.0;
  double inclination = 0.0;
  double raan = 0.0;          // at t = 0, inertial
  double mean_anomaly0 = 0.0; // at t = 0
  double clock_offset = 0.0;
};

/// ECEF position and clock offset of a broadcast-ephemeris satellite at GPS
/// seconds-of-week `t`. Throws StaleEphemeris when |t - toe| >= 4 h and
/// KeplerNonConvergence when Kepler's equation does not converge.
SourceState propagate_ephemeris(const EphemerisRecord& eph, double t);

/// Newton solution of E - e sin E = M; throws KeplerNonConvergence after 30
/// iterations without reaching 1e-13 rad.
double solve_kepler(double mean_anomaly, double eccentricity);

/// Walker-style circular constellation (even RAAN spacing, even in-plane
/// spacing, one-slot inter-plane phasing).
std::vector<CircularOrbit> walker_constellation(int n_planes, int sats_per_plane,
                                                double semi_major_axis, double inclination);

SourceState circular_orbit_state(const CircularOrbit& orbit, double t);

std::vector<SourceState> synth_constellation(int n_planes, int sats_per_plane,
                                             double semi_major_axis, double inclination,
                                             double t);

SourceState haps_position(const HapsPlatform& h, double t);

/// Platform whose position at t = 0 is seen from `receiver` at the requested
/// elevation/azimuth and geodetic height. The loiter circle is laid out so
/// the starting point is the circle point closest to the receiver. At the
/// zenith the center sits directly above the receiver. Throws BelowMask for
/// elevation <= 0.
HapsPlatform haps_from_elevation_azimuth(const GeodeticPosition& receiver, double elevation,
                                         double azimuth, double height,
                                         double orbit_radius = 300.0,
                                         double angular_rate = HapsPlatform::default_angular_rate());

/// Any object that can produce a SourceState for a given time.
using Emitter = std::variant<CircularOrbit, EphemerisRecord, HapsPlatform>;

std::string emitter_id(const Emitter& e);
SourceKind emitter_kind(const Emitter& e);
SourceState emitter_state(const Emitter& e, double t);

/// State at emission time for a signal received at `t_rx` by `receiver`,
/// solving the light-time equation including Earth rotation during flight.
struct EmissionSolution {
  SourceState state;
  double propagation_time = 0.0;
  double geometric_range = 0.0;
};
EmissionSolution emission_state(const Emitter& e, const EcefPosition& receiver, double t_rx);

}  // namespace hapsnav
