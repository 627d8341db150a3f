#include "hapsnav/orbits.hpp"

#include <cmath>
#include <cstdio>

#include "hapsnav/constants.hpp"
#include "hapsnav/error.hpp"
#include "hapsnav/gps_time.hpp"

namespace hapsnav {

using namespace constants;

namespace {

constexpr double kMaxEphemerisAge = 4.0 * 3600.0;

std::string prn_id(int prn) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "G%02d", prn);
  return buf;
}

// Local north/east unit vectors (ECEF) at a geodetic point.
void local_north_east(const GeodeticPosition& g, Eigen::Vector3d& north, Eigen::Vector3d& east) {
  const RotationMatrix3 r = ned_rotation(g);
  east = r.row(0).transpose();
  north = r.row(1).transpose();
}

}  // namespace

bool EphemerisRecord::plausible() const {
  const double a = sqrt_a * sqrt_a;
  return a >= 2.0e7 && a <= 3.2e7 && e >= 0.0 && e < 0.1;
}

double HapsPlatform::default_angular_rate() { return 2.0 * kPi / kDefaultLapSeconds; }

double solve_kepler(double mean_anomaly, double eccentricity) {
  double ecc_anomaly = mean_anomaly;
  for (int i = 0; i < 30; ++i) {
    const double f = ecc_anomaly - eccentricity * std::sin(ecc_anomaly) - mean_anomaly;
    const double step = f / (1.0 - eccentricity * std::cos(ecc_anomaly));
    ecc_anomaly -= step;
    if (std::fabs(step) < 1e-13) return ecc_anomaly;
  }
  throw Error(ErrorCode::KeplerNonConvergence,
              "solve_kepler: no convergence within 30 iterations");
}

SourceState propagate_ephemeris(const EphemerisRecord& eph, double t) {
  const double tk = wrap_week_seconds(t - eph.toe);
  if (std::fabs(tk) >= kMaxEphemerisAge) {
    throw Error(ErrorCode::StaleEphemeris,
                prn_id(eph.prn) + ": |t - toe| = " + std::to_string(std::fabs(tk)) + " s");
  }

  const double a = eph.sqrt_a * eph.sqrt_a;
  const double n = std::sqrt(kEarthGravParam / (a * a * a)) + eph.delta_n;
  const double mk = eph.m0 + n * tk;
  const double ek = solve_kepler(mk, eph.e);

  const double nu = std::atan2(std::sqrt(1.0 - eph.e * eph.e) * std::sin(ek),
                               std::cos(ek) - eph.e);
  const double phi = nu + eph.omega;
  const double s2 = std::sin(2.0 * phi), c2 = std::cos(2.0 * phi);

  const double u = phi + eph.cus * s2 + eph.cuc * c2;
  const double r = a * (1.0 - eph.e * std::cos(ek)) + eph.crs * s2 + eph.crc * c2;
  const double inc = eph.i0 + eph.cis * s2 + eph.cic * c2 + eph.i_dot * tk;

  const double xp = r * std::cos(u);
  const double yp = r * std::sin(u);
  const double node =
      eph.omega0 + (eph.omega_dot - kEarthRotationRate) * tk - kEarthRotationRate * eph.toe;

  const double cn = std::cos(node), sn = std::sin(node), ci = std::cos(inc);
  SourceState s;
  s.id = prn_id(eph.prn);
  s.kind = SourceKind::Satellite;
  s.position = {xp * cn - yp * ci * sn, xp * sn + yp * ci * cn, yp * std::sin(inc)};

  const double dtc = wrap_week_seconds(t - eph.toc);
  s.clock_offset = eph.af0 + eph.af1 * dtc + eph.af2 * dtc * dtc;
  return s;
}

std::vector<CircularOrbit> walker_constellation(int n_planes, int sats_per_plane,
                                                double semi_major_axis, double inclination) {
  if (n_planes < 1 || sats_per_plane < 1) {
    throw Error(ErrorCode::InvalidArgument, "walker_constellation: need >= 1 plane and slot");
  }
  std::vector<CircularOrbit> out;
  out.reserve(static_cast<std::size_t>(n_planes * sats_per_plane));
  const int total = n_planes * sats_per_plane;
  int prn = 1;
  for (int p = 0; p < n_planes; ++p) {
    for (int k = 0; k < sats_per_plane; ++k) {
      CircularOrbit o;
      o.prn = prn;
      o.semi_major_axis = semi_major_axis;
      o.inclination = inclination;
      o.raan = 2.0 * kPi * p / n_planes;
      o.mean_anomaly0 = 2.0 * kPi * k / sats_per_plane + 2.0 * kPi * p / total;
      // Deterministic, distinct clock offsets within +-10 us.
      o.clock_offset = 2.0e-6 * static_cast<double>((prn * 7) % 11 - 5);
      out.push_back(o);
      ++prn;
    }
  }
  return out;
}

SourceState circular_orbit_state(const CircularOrbit& orbit, double t) {
  const double a = orbit.semi_major_axis;
  const double n = std::sqrt(kEarthGravParam / (a * a * a));
  const double u = orbit.mean_anomaly0 + n * t;
  const double node = orbit.raan - kEarthRotationRate * t;
  const double xp = a * std::cos(u), yp = a * std::sin(u);
  const double cn = std::cos(node), sn = std::sin(node), ci = std::cos(orbit.inclination);
  SourceState s;
  s.id = prn_id(orbit.prn);
  s.kind = SourceKind::Satellite;
  s.position = {xp * cn - yp * ci * sn, xp * sn + yp * ci * cn,
                yp * std::sin(orbit.inclination)};
  s.clock_offset = orbit.clock_offset;
  return s;
}

std::vector<SourceState> synth_constellation(int n_planes, int sats_per_plane,
                                             double semi_major_axis, double inclination,
                                             double t) {
  std::vector<SourceState> out;
  for (const auto& o : walker_constellation(n_planes, sats_per_plane, semi_major_axis,
                                            inclination)) {
    out.push_back(circular_orbit_state(o, t));
  }
  return out;
}

SourceState haps_position(const HapsPlatform& h, double t) {
  Eigen::Vector3d north, east;
  local_north_east(h.center, north, east);
  const double theta = h.phase0 + h.angular_rate * t;
  const Eigen::Vector3d p = geodetic_to_ecef(h.center).vec() +
                            h.orbit_radius * (std::cos(theta) * north + std::sin(theta) * east);
  SourceState s;
  s.id = h.id;
  s.kind = SourceKind::Haps;
  s.position = EcefPosition::from(p);
  s.clock_offset = h.clock_offset;
  return s;
}

HapsPlatform haps_from_elevation_azimuth(const GeodeticPosition& receiver, double elevation,
                                         double azimuth, double height, double orbit_radius,
                                         double angular_rate) {
  if (!(elevation > 0.0)) {
    throw Error(ErrorCode::BelowMask, "haps_from_elevation_azimuth: elevation must be > 0");
  }
  const Eigen::Vector3d r0 = geodetic_to_ecef(receiver).vec();
  const RotationMatrix3 enu = ned_rotation(receiver);
  const Eigen::Vector3d dir_enu(std::cos(elevation) * std::sin(azimuth),
                                std::cos(elevation) * std::cos(azimuth), std::sin(elevation));
  const Eigen::Vector3d dir = enu.transpose() * dir_enu;

  // Bisection on the slant range for the requested ellipsoidal height.
  auto height_at = [&](double s) {
    return ecef_to_geodetic(EcefPosition::from(r0 + s * dir)).height;
  };
  double lo = 0.0, hi = 2.0e6;
  if (height_at(hi) < height) {
    throw Error(ErrorCode::InvalidArgument,
                "haps_from_elevation_azimuth: requested height not reachable along ray");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-7; ++i) {
    const double mid = 0.5 * (lo + hi);
    (height_at(mid) < height ? lo : hi) = mid;
  }
  const Eigen::Vector3d start = r0 + 0.5 * (lo + hi) * dir;

  HapsPlatform h;
  h.orbit_radius = orbit_radius;
  h.angular_rate = angular_rate;

  if (std::fabs(elevation - kPi / 2.0) <= 1e-9 || orbit_radius == 0.0) {
    h.center = ecef_to_geodetic(EcefPosition::from(start));
    h.center.height = height;
    h.phase0 = 0.0;
    return h;
  }

  // Push the center away from the receiver so the start point is the
  // circle point nearest to it.
  const GeodeticPosition start_geo = ecef_to_geodetic(EcefPosition::from(start));
  const Eigen::Vector3d up = ned_rotation(start_geo).row(2).transpose();
  Eigen::Vector3d away = start - r0;
  away -= away.dot(up) * up;
  away.normalize();
  GeodeticPosition center = ecef_to_geodetic(EcefPosition::from(start + orbit_radius * away));
  center.height = height;
  h.center = center;

  Eigen::Vector3d north, east;
  local_north_east(center, north, east);
  const Eigen::Vector3d offset = start - geodetic_to_ecef(center).vec();
  h.phase0 = std::atan2(offset.dot(east), offset.dot(north));
  return h;
}

std::string emitter_id(const Emitter& e) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HapsPlatform>) {
          return v.id;
        } else {
          return prn_id(v.prn);
        }
      },
      e);
}

SourceKind emitter_kind(const Emitter& e) {
  return std::holds_alternative<HapsPlatform>(e) ? SourceKind::Haps : SourceKind::Satellite;
}

SourceState emitter_state(const Emitter& e, double t) {
  return std::visit(
      [t](const auto& v) -> SourceState {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HapsPlatform>) {
          return haps_position(v, t);
        } else if constexpr (std::is_same_v<T, CircularOrbit>) {
          return circular_orbit_state(v, t);
        } else {
          return propagate_ephemeris(v, t);
        }
      },
      e);
}

EmissionSolution emission_state(const Emitter& e, const EcefPosition& receiver, double t_rx) {
  EmissionSolution sol;
  double tau = 0.0;
  for (int i = 0; i < 6; ++i) {
    sol.state = emitter_state(e, t_rx - tau);
    const EcefPosition rotated = sagnac_correct(sol.state.position, tau);
    sol.geometric_range = (rotated.vec() - receiver.vec()).norm();
    const double next = sol.geometric_range / kSpeedOfLight;
    const bool done = std::fabs(next - tau) < 1e-13;
    tau = next;
    if (done) break;
  }
  sol.state = emitter_state(e, t_rx - tau);
  sol.propagation_time = tau;
  sol.geometric_range =
      (sagnac_correct(sol.state.position, tau).vec() - receiver.vec()).norm();
  return sol;
}

}  // namespace hapsnav
