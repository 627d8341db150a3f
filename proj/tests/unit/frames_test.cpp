#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hapsnav/constants.hpp"
#include "hapsnav/error.hpp"
#include "hapsnav/frames.hpp"
#include "oracles.hpp"

using namespace hapsnav;
using constants::kDegToRad;

TEST(Frames, GeodeticToEcefOttawa) {
  // Reference from an independent WGS-84 implementation.
  const EcefPosition p = geodetic_to_ecef(GeodeticPosition::from_degrees(45.4215, -75.6972, 70.0));
  EXPECT_NEAR(p.x, 1107853.474372, 1e-5);
  EXPECT_NEAR(p.y, -4345395.084992, 1e-5);
  EXPECT_NEAR(p.z, 4520399.686264, 1e-5);
}

TEST(Frames, PoleIsSemiMinorAxis) {
  const EcefPosition p = geodetic_to_ecef(GeodeticPosition::from_degrees(90.0, 0.0, 0.0));
  EXPECT_NEAR(p.z, 6356752.314245, 1e-6);
  EXPECT_NEAR(std::hypot(p.x, p.y), 0.0, 1e-6);
}

TEST(Frames, RoundTripProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(-89.9, 89.9), lon(-180.0, 180.0), h(-500.0, 4e7);
  for (int i = 0; i < 2000; ++i) {
    const GeodeticPosition g = GeodeticPosition::from_degrees(lat(rng), lon(rng), h(rng));
    const GeodeticPosition back = ecef_to_geodetic(geodetic_to_ecef(g));
    EXPECT_NEAR(back.latitude, g.latitude, 1e-11);
    EXPECT_NEAR(std::remainder(back.longitude - g.longitude, 2 * constants::kPi), 0.0, 1e-11);
    EXPECT_NEAR(back.height, g.height, 1e-4);
  }
}

TEST(Frames, NearCenterThrows) {
  try {
    ecef_to_geodetic(EcefPosition{0.3, 0.2, 0.1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NearSingular);
  }
}

TEST(Frames, RotationIsOrthonormalAndMatchesOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lat(-90.0, 90.0), lon(-180.0, 180.0);
  for (int i = 0; i < 200; ++i) {
    const double la = lat(rng), lo = lon(rng);
    const RotationMatrix3 r = ned_rotation(GeodeticPosition::from_degrees(la, lo, 0.0));
    EXPECT_LT((r * r.transpose() - Eigen::Matrix3d::Identity()).norm(), 1e-14);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-14);
    EXPECT_LT((r - oracle::enu(la * kDegToRad, lo * kDegToRad)).norm(), 1e-14);
  }
}

TEST(Frames, EcefDeltaToNed) {
  const GeodeticPosition g = GeodeticPosition::from_degrees(45.0, 10.0, 0.0);
  const Eigen::Matrix3d enu = oracle::enu(g.latitude, g.longitude);
  const Eigen::Vector3d v = enu.transpose() * Eigen::Vector3d(3.0, 5.0, 7.0);  // E, N, U
  const Eigen::Vector3d ned = ecef_delta_to_ned(g, v);
  EXPECT_NEAR(ned(0), 5.0, 1e-9);
  EXPECT_NEAR(ned(1), 3.0, 1e-9);
  EXPECT_NEAR(ned(2), -7.0, 1e-9);
}

TEST(Frames, ElevationAzimuthCardinal) {
  const GeodeticPosition g = GeodeticPosition::from_degrees(30.0, 50.0, 0.0);
  const EcefPosition rx = geodetic_to_ecef(g);
  const double lat = g.latitude, lon = g.longitude;

  const auto zenith = elevation_azimuth(rx, EcefPosition::from(oracle::along(rx.vec(), lat, lon, constants::kPi / 2, 0.0, 2e4)));
  EXPECT_NEAR(zenith.elevation, constants::kPi / 2, 1e-9);
  EXPECT_DOUBLE_EQ(zenith.azimuth, 0.0);

  const auto east = elevation_azimuth(rx, EcefPosition::from(oracle::along(rx.vec(), lat, lon, 0.3, constants::kPi / 2, 1e5)));
  EXPECT_NEAR(east.elevation, 0.3, 1e-12);
  EXPECT_NEAR(east.azimuth, constants::kPi / 2, 1e-12);

  const auto south = elevation_azimuth(rx, EcefPosition::from(oracle::along(rx.vec(), lat, lon, 0.5, constants::kPi, 1e5)));
  EXPECT_NEAR(std::fabs(south.azimuth), constants::kPi, 1e-12);
  EXPECT_GT(south.azimuth, 0.0);  // (-pi, pi]
}

TEST(Frames, ElevationAzimuthCoincidentThrows) {
  const EcefPosition rx = geodetic_to_ecef(GeodeticPosition::from_degrees(0.0, 0.0, 0.0));
  EcefPosition near = rx;
  near.x += 0.5;
  try {
    elevation_azimuth(rx, near);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
}

TEST(Frames, SagnacGpsRange) {
  // Satellite on the x axis at GPS radius, 75 ms of flight.
  const EcefPosition s = sagnac_correct(EcefPosition{26'560'000.0, 0.0, 0.0}, 0.075);
  EXPECT_NEAR(s.y, -145.258934, 1e-6);
  EXPECT_NEAR(26'560'000.0 - s.x, 0.000397, 1e-6);
  EXPECT_DOUBLE_EQ(s.z, 0.0);
}

TEST(Frames, SagnacPreservesNormAndZ) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(-3e7, 3e7), dt(0.0, 0.999);
  for (int i = 0; i < 100; ++i) {
    const EcefPosition p{c(rng), c(rng), c(rng)};
    const EcefPosition q = sagnac_correct(p, dt(rng));
    EXPECT_NEAR(q.norm(), p.norm(), 1e-7);
    EXPECT_DOUBLE_EQ(q.z, p.z);
  }
}

TEST(Frames, SagnacRejectsBadPropagationTime) {
  for (double dt : {-1e-3, 1.0, 2.0}) {
    try {
      sagnac_correct(EcefPosition{1.0, 2.0, 3.0}, dt);
      FAIL() << dt;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidPropagationTime);
    }
  }
}
