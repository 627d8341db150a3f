#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hapsnav/constants.hpp"
#include "hapsnav/error.hpp"
#include "hapsnav/orbits.hpp"
#include "oracles.hpp"

using namespace hapsnav;
using constants::kDegToRad;
using constants::kPi;

namespace {

// First record of tests/fixtures/nav_v2_valid.rnx.
EphemerisRecord fixture_record() {
  EphemerisRecord e;
  e.prn = 1;
  e.week = 2086;
  e.toe = e.toc = 388800.0;
  e.sqrt_a = 5153.882341331518;
  e.e = 0.002355697019109558;
  e.i0 = 0.9655572119718486;
  e.omega0 = -1.6846695677309715;
  e.omega = 1.0852685609477222;
  e.m0 = 1.7657159117501724;
  e.delta_n = 4.5e-9;
  e.i_dot = 1e-10;
  e.omega_dot = -8.0e-9;
  e.cuc = 1e-6;
  e.cus = 5e-6;
  e.crc = 200.0;
  e.crs = -20.0;
  e.cic = 1e-7;
  e.cis = -1e-7;
  e.af0 = 9.512347871288654e-05;
  e.af1 = 1e-12;
  e.iode = 11;
  return e;
}

}  // namespace

TEST(Orbits, EphemerisMatchesReferencePropagator) {
  const SourceState s = propagate_ephemeris(fixture_record(), 388800.0 + 1000.0);
  EXPECT_NEAR(s.position.x, -8916221.625973593, 1e-4);
  EXPECT_NEAR(s.position.y, -24856512.356819335, 1e-4);
  EXPECT_NEAR(s.position.z, 3057813.699466013, 1e-4);
  EXPECT_NEAR(s.clock_offset, 9.512447871288654e-05, 1e-17);
  EXPECT_EQ(s.id, "G01");
}

TEST(Orbits, EphemerisRadiusAndContinuity) {
  const EphemerisRecord e = fixture_record();
  const double a = e.sqrt_a * e.sqrt_a;
  SourceState prev = propagate_ephemeris(e, e.toe - 14000.0);
  for (double t = e.toe - 13999.0; t < e.toe + 14000.0; t += 1.0) {
    const SourceState s = propagate_ephemeris(e, t);
    const double r = s.position.norm();
    EXPECT_GT(r, a * (1.0 - e.e) - 500.0);
    EXPECT_LT(r, a * (1.0 + e.e) + 500.0);
    // ECEF speed of a GPS satellite stays well under 4.2 km/s.
    EXPECT_LT((s.position.vec() - prev.position.vec()).norm(), 4200.0);
    prev = s;
  }
}

TEST(Orbits, StaleEphemerisThrows) {
  const EphemerisRecord e = fixture_record();
  EXPECT_NO_THROW(propagate_ephemeris(e, e.toe + 14399.0));
  try {
    propagate_ephemeris(e, e.toe + 14400.0);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::StaleEphemeris);
  }
}

TEST(Orbits, KeplerSolvesEquation) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> m(-kPi, kPi), ecc(0.0, 0.3);
  for (int i = 0; i < 1000; ++i) {
    const double mm = m(rng), e = ecc(rng);
    const double E = solve_kepler(mm, e);
    EXPECT_NEAR(E - e * std::sin(E), mm, 1e-12);
  }
}

TEST(Orbits, PlausibleBand) {
  EphemerisRecord e = fixture_record();
  EXPECT_TRUE(e.plausible());
  e.sqrt_a = std::sqrt(1.9e7);
  EXPECT_FALSE(e.plausible());
  e = fixture_record();
  e.e = 0.2;
  EXPECT_FALSE(e.plausible());
}

TEST(Orbits, WalkerConstellationLayout) {
  const auto orbits = walker_constellation(6, 5, 26'559'700.0, 55.0 * kDegToRad);
  ASSERT_EQ(orbits.size(), 30u);
  for (std::size_t i = 0; i < orbits.size(); ++i) EXPECT_EQ(orbits[i].prn, static_cast<int>(i) + 1);
  EXPECT_NEAR(orbits[5].raan - orbits[0].raan, kPi / 3.0, 1e-15);
  EXPECT_NEAR(orbits[1].mean_anomaly0 - orbits[0].mean_anomaly0, 2 * kPi / 5.0, 1e-15);
  EXPECT_THROW(walker_constellation(0, 5, 2.6e7, 1.0), Error);
}

TEST(Orbits, CircularOrbitRadiusAndInertialSpeed) {
  const CircularOrbit o{7, 26'560'000.0, 55.0 * kDegToRad, 0.4, 1.1, 0.0};
  for (double t : {0.0, 1234.5, 40000.0}) {
    const auto p = [&](double tt) {
      // Undo Earth rotation to get the inertial position.
      const Eigen::Vector3d r = circular_orbit_state(o, tt).position.vec();
      const double th = oracle::kOmegaE * tt;
      return Eigen::Vector3d(std::cos(th) * r.x() - std::sin(th) * r.y(),
                             std::sin(th) * r.x() + std::cos(th) * r.y(), r.z());
    };
    EXPECT_NEAR(p(t).norm(), 26'560'000.0, 1e-6);
    const double v = (p(t + 0.5) - p(t - 0.5)).norm();
    EXPECT_NEAR(v, 3873.9578, 1e-3);
  }
}

TEST(Orbits, HapsLoiterCircle) {
  HapsPlatform h;
  h.id = "H1";
  h.center = GeodeticPosition::from_degrees(45.38, -75.70, 20000.0);
  h.angular_rate = HapsPlatform::default_angular_rate();
  const Eigen::Vector3d c = geodetic_to_ecef(h.center).vec();
  for (double t = 0.0; t < 600.0; t += 37.0) {
    const SourceState s = haps_position(h, t);
    EXPECT_NEAR((s.position.vec() - c).norm(), 300.0, 1e-6);
    EXPECT_NEAR(ecef_to_geodetic(s.position).height, 20000.0, 0.01);  // circle is tangent
    EXPECT_EQ(s.kind, SourceKind::Haps);
  }
  EXPECT_LT((haps_position(h, 600.0).position.vec() - haps_position(h, 0.0).position.vec()).norm(), 1e-6);
  // Phase 0 is north of the center.
  const Eigen::Vector3d d = haps_position(h, 0.0).position.vec() - c;
  EXPECT_GT(ecef_delta_to_ned(h.center, d)(0), 299.0);
}

TEST(Orbits, HapsFromElevationAzimuthRoundTrip) {
  const GeodeticPosition rx = GeodeticPosition::from_degrees(45.385, -75.6972, 70.0);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> el(10.0, 90.0), az(-180.0, 180.0);
  for (int i = 0; i < 100; ++i) {
    const double e = el(rng) * kDegToRad, a = az(rng) * kDegToRad;
    const HapsPlatform h = haps_from_elevation_azimuth(rx, e, a, 20000.0);
    const EcefPosition p = haps_position(h, 0.0).position;
    const auto ea = elevation_azimuth(geodetic_to_ecef(rx), p);
    // The loiter circle lies in the tangent plane at its center, a few mm
    // off the requested ray.
    EXPECT_NEAR(ea.elevation, e, 1e-6);
    if (e < 89.9 * kDegToRad) {
      EXPECT_NEAR(std::remainder(ea.azimuth - a, 2 * kPi), 0.0, 1e-6);
    }
    EXPECT_NEAR(ecef_to_geodetic(p).height, 20000.0, 0.01);
    // Start point is the closest point of the loiter circle.
    for (double t = 10.0; t < 600.0; t += 10.0) {
      EXPECT_GE((haps_position(h, t).position.vec() - geodetic_to_ecef(rx).vec()).norm(),
                (p.vec() - geodetic_to_ecef(rx).vec()).norm() - 1e-6);
    }
  }
  EXPECT_THROW(haps_from_elevation_azimuth(rx, 0.0, 0.0, 20000.0), Error);
}

TEST(Orbits, ZenithPlatformSitsAboveReceiver) {
  const GeodeticPosition rx = GeodeticPosition::from_degrees(10.0, 20.0, 0.0);
  const HapsPlatform h = haps_from_elevation_azimuth(rx, kPi / 2.0, 0.0, 20000.0);
  EXPECT_NEAR(h.center.latitude, rx.latitude, 1e-12);
  EXPECT_NEAR(h.center.longitude, rx.longitude, 1e-12);
}

TEST(Orbits, EmissionStateSatisfiesLightTime) {
  const EcefPosition rx = geodetic_to_ecef(GeodeticPosition::from_degrees(45.385, -75.6972, 70.0));
  const Emitter e = fixture_record();
  const EmissionSolution sol = emission_state(e, rx, 388800.0);
  // Independent fixed point: the state at t - tau, rotated, is rho = c tau away.
  const SourceState at = propagate_ephemeris(fixture_record(), 388800.0 - sol.propagation_time);
  EXPECT_NEAR(oracle::sagnac_range(rx.vec(), at.position.vec()), sol.geometric_range, 1e-5);
  EXPECT_NEAR(sol.geometric_range, oracle::kC * sol.propagation_time, 1e-5);
  EXPECT_EQ(emitter_id(e), "G01");
  EXPECT_EQ(emitter_kind(e), SourceKind::Satellite);
}
