#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hapsnav/constants.hpp"
#include "hapsnav/error.hpp"
#include "hapsnav/solver.hpp"
#include "oracles.hpp"

using namespace hapsnav;

namespace {

EpochGeometry geometry_from(const Eigen::MatrixXd& H, const Eigen::VectorXd& b) {
  EpochGeometry g;
  g.H = H;
  g.b = b;
  return g;
}

}  // namespace

TEST(Solver, LsqStepMatchesPseudoinverse) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0.0, 10.0);
  for (int k = 0; k < 200; ++k) {
    const int n = 4 + k % 9;
    const Eigen::MatrixXd H = oracle::random_design(rng, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b(i) = nd(rng);
    const LsqResult r = lsq_step(geometry_from(H, b));
    const Eigen::VectorXd ref = oracle::pinv_solve(H, b, Eigen::VectorXd::Ones(n));
    EXPECT_LE((r.dx - ref).norm(), 1e-9 * std::max(1.0, ref.norm()));
    EXPECT_LE((r.Q - (H.transpose() * H).inverse()).norm(), 1e-9 * r.Q.norm());
    EXPECT_DOUBLE_EQ(r.clock_update, r.dx(3) / oracle::kC);
  }
}

TEST(Solver, LsqStepRejectsCollinearRows) {
  Eigen::MatrixXd H(5, 4);
  for (int i = 0; i < 5; ++i) H.row(i) << 0.0, 0.0, -1.0, 1.0;
  try {
    lsq_step(geometry_from(H, Eigen::VectorXd::Zero(5)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularGeometry);
  }
}

TEST(Solver, BuildGeometryMatchesOracle) {
  std::mt19937_64 rng(8);
  const auto g = oracle::random_geometry(rng, 7);
  std::vector<double> corrected;
  for (std::size_t i = 0; i < g.sources.size(); ++i) {
    corrected.push_back(g.observations[i].pseudorange + oracle::kC * g.sources[i].clock_offset);
  }
  const EcefPosition est = EcefPosition::from(g.receiver);
  const EpochGeometry geo = build_geometry(est, g.clock, corrected, g.sources, true);
  for (Eigen::Index i = 0; i < geo.H.rows(); ++i) {
    EXPECT_NEAR(geo.b(i), 0.0, 1e-6);  // truth is an exact fit
    EXPECT_NEAR(geo.H(i, 3), 1.0, 0.0);
    EXPECT_NEAR(geo.H.row(i).head<3>().norm(), 1.0, 1e-12);
    EXPECT_LT((geo.H.row(i).head<3>() - g.H.row(i).head<3>()).norm(), 1e-5);  // Sagnac tilt only
    EXPECT_NEAR(geo.rho(i), oracle::sagnac_range(g.receiver, g.sources[i].position.vec()), 1e-6);
  }
}

TEST(Solver, BuildGeometryRejectsCoincidentSource) {
  SourceState s;
  s.id = "G01";
  s.position = {7e6, 0.0, 0.0};
  const std::vector<SourceState> src{s};
  const std::vector<double> p{0.0};
  try {
    build_geometry(EcefPosition{7e6 + 0.2, 0.0, 0.0}, 0.0, p, src);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
}

TEST(Solver, CorrectPseudorange) {
  Observation o;
  o.pseudorange = 2.1e7;
  SourceState s;
  s.clock_offset = 1e-4;
  AtmosphericDelays d{2.5, 4.0};
  EXPECT_NEAR(correct_pseudorange(o, s, d), 2.1e7 + oracle::kC * 1e-4 - 6.5, 1e-7);
  o.kind = s.kind = SourceKind::Haps;
  s.clock_offset = 0.0;
  EXPECT_NEAR(correct_pseudorange(o, s, AtmosphericDelays{}), 2.1e7, 0.0);
  try {
    correct_pseudorange(o, s, AtmosphericDelays{0.0, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Solver, ZeroNoiseRecoversTruth) {
  std::mt19937_64 rng(31);
  SolverConfig cfg;
  for (int k = 0; k < 400; ++k) {
    const auto g = oracle::random_geometry(rng, 4 + k % 9, 16.0 * oracle::kDeg, k % 4);
    const EpochSolution sol = solve_epoch(g.observations, g.sources, no_delays(), cfg);
    ASSERT_EQ(sol.status, SolveStatus::Converged);
    EXPECT_LT((sol.position.vec() - g.receiver).norm(), 1e-3);
    EXPECT_NEAR(sol.clock_offset, g.clock, 1e-11);
    EXPECT_LE(sol.iterations, 10);
    EXPECT_EQ(sol.used_ids.size(), g.sources.size());
    for (double r : sol.residuals) EXPECT_LT(std::fabs(r), 1e-3);
  }
}

TEST(Solver, FewSatellitesStartBelowPlatforms) {
  // Fewer than four satellites: the search starts from the surface below the
  // platforms. Five or more sources keep the solution unique.
  std::mt19937_64 rng(41);
  int ok = 0;
  const int cases = 300;
  for (int k = 0; k < cases; ++k) {
    const int sats = k % 4;
    const auto g = oracle::random_geometry(rng, sats, 16.0 * oracle::kDeg, 5 - sats + k % 3);
    const EpochSolution sol = solve_epoch(g.observations, g.sources, no_delays(), SolverConfig{});
    ok += sol.converged && (sol.position.vec() - g.receiver).norm() < 1e-3;
  }
  EXPECT_GE(ok, cases * 95 / 100);
}

TEST(Solver, HapsOnlyClusterConverges) {
  // Six platforms around one receiver: from the Earth centre the cluster is
  // nearly a point, so the solver must restart from the surface.
  const GeodeticPosition rx = GeodeticPosition::from_degrees(45.385, -75.6972, 70.0);
  std::vector<SourceState> src;
  std::vector<Observation> obs;
  const double els[] = {46.67, 30.0, 60.0, 35.0, 50.0, 25.0};
  for (int i = 0; i < 6; ++i) {
    HapsPlatform h = haps_from_elevation_azimuth(rx, els[i] * oracle::kDeg, (i * 60.0 - 170.0) * oracle::kDeg, 20000.0);
    h.id = "H" + std::to_string(i + 1);
    src.push_back(haps_position(h, 0.0));
    Observation o;
    o.source_id = h.id;
    o.kind = SourceKind::Haps;
    o.pseudorange = oracle::sagnac_range(geodetic_to_ecef(rx).vec(), src.back().position.vec()) + 150.0;
    obs.push_back(o);
  }
  const EpochSolution sol = solve_epoch(obs, src, no_delays(), SolverConfig{});
  ASSERT_EQ(sol.status, SolveStatus::Converged);
  EXPECT_LT((sol.position.vec() - geodetic_to_ecef(rx).vec()).norm(), 1e-3);
  EXPECT_NEAR(sol.clock_offset * oracle::kC, 150.0, 1e-3);
}

TEST(Solver, FewerThanFourIsUnavailable) {
  std::mt19937_64 rng(2);
  const auto g = oracle::random_geometry(rng, 3);
  const EpochSolution sol = solve_epoch(g.observations, g.sources, no_delays(), SolverConfig{});
  EXPECT_EQ(sol.status, SolveStatus::Unavailable);
  EXPECT_FALSE(sol.converged);
}

TEST(Solver, MaskDropsLowSources) {
  std::mt19937_64 rng(13);
  auto g = oracle::random_geometry(rng, 6, 30.0 * oracle::kDeg);
  // Add a source at 5 degrees elevation.
  const Eigen::Vector3d dir = oracle::along(g.receiver, g.lat, g.lon, 5.0 * oracle::kDeg, 1.0, 1.0) - g.receiver;
  SourceState low;
  low.id = "G99";
  low.position = EcefPosition::from(g.receiver + oracle::range_to_sphere(g.receiver, dir, 26'560'000.0) * dir);
  Observation o;
  o.source_id = "G99";
  o.pseudorange = oracle::sagnac_range(g.receiver, low.position.vec()) + oracle::kC * g.clock;
  g.sources.push_back(low);
  g.observations.push_back(o);
  const EpochSolution sol = solve_epoch(g.observations, g.sources, no_delays(), SolverConfig{});
  ASSERT_TRUE(sol.converged);
  EXPECT_EQ(sol.used_ids.size(), 6u);
  EXPECT_EQ(std::count(sol.used_ids.begin(), sol.used_ids.end(), "G99"), 0);
}

TEST(Solver, UnknownSourceIdThrows) {
  std::mt19937_64 rng(4);
  auto g = oracle::random_geometry(rng, 5);
  g.observations[2].source_id = "nope";
  EXPECT_THROW(solve_epoch(g.observations, g.sources, no_delays(), SolverConfig{}), Error);
}

TEST(Solver, NedCovarianceAndDop) {
  // Independent NED rotation: rows north, east, down.
  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    const auto g = oracle::random_geometry(rng, 8);
    const Eigen::Matrix4d Q = (g.H.transpose() * g.H).inverse();
    const Eigen::Matrix3d enu = oracle::enu(g.lat, g.lon);
    Eigen::Matrix3d ned;
    ned << enu.row(1), enu.row(0), -enu.row(2);
    const Eigen::Matrix3d ref = ned * Q.topLeftCorner<3, 3>() * ned.transpose();
    const GeodeticPosition geo{g.lat, g.lon, 0.0};
    const Eigen::Matrix3d got = ned_covariance(Q, geo);
    EXPECT_LT((got - ref).norm(), 1e-12 * ref.norm());
    const double spatial_trace = Q.topLeftCorner<3, 3>().trace();
    EXPECT_NEAR(got.trace(), spatial_trace, 1e-12 * spatial_trace);
    const Dop d = dop_from_covariance(got);
    EXPECT_NEAR(d.hdop, std::sqrt(ref(0, 0) + ref(1, 1)), 1e-12);
    EXPECT_NEAR(d.vdop, std::sqrt(ref(2, 2)), 1e-12);
  }
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(2, 2) = -1.0;
  try {
    dop_from_covariance(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidCovariance);
  }
}

TEST(Solver, DopNeverIncreasesWithExtraSource) {
  std::mt19937_64 rng(19);
  for (int k = 0; k < 200; ++k) {
    const Eigen::MatrixXd H = oracle::random_design(rng, 5 + k % 6);
    const GeodeticPosition geo = GeodeticPosition::from_degrees(10.0, 20.0, 0.0);
    const Eigen::MatrixXd Hs = H.topRows(H.rows() - 1);
    const Dop all = dop_from_covariance(ned_covariance(lsq_step(geometry_from(H, Eigen::VectorXd::Zero(H.rows()))).Q, geo));
    const Dop sub = dop_from_covariance(ned_covariance(lsq_step(geometry_from(Hs, Eigen::VectorXd::Zero(Hs.rows()))).Q, geo));
    EXPECT_LE(all.hdop, sub.hdop + 1e-9);
    EXPECT_LE(all.vdop, sub.vdop + 1e-9);
  }
}
