#pragma once

// Reference computations for tests. Nothing here calls into the solver;
// geometry, light time and least squares are recomputed from first
// principles so the library can be checked against them.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hapsnav/frames.hpp"
#include "hapsnav/orbits.hpp"
#include "hapsnav/scenario.hpp"

namespace oracle {

inline constexpr double kC = 299792458.0;
inline constexpr double kOmegaE = 7.2921151467e-5;
inline constexpr double kA = 6378137.0;
inline constexpr double kF = 1.0 / 298.257223563;
inline constexpr double kE2 = kF * (2.0 - kF);
inline constexpr double kDeg = 3.14159265358979323846 / 180.0;

inline Eigen::Vector3d lla_to_ecef(double lat, double lon, double h) {
  const double n = kA / std::sqrt(1.0 - kE2 * std::sin(lat) * std::sin(lat));
  return {(n + h) * std::cos(lat) * std::cos(lon), (n + h) * std::cos(lat) * std::sin(lon),
          (n * (1.0 - kE2) + h) * std::sin(lat)};
}

/// Rows east, north, up.
inline Eigen::Matrix3d enu(double lat, double lon) {
  Eigen::Matrix3d m;
  m << -std::sin(lon), std::cos(lon), 0.0,
      -std::sin(lat) * std::cos(lon), -std::sin(lat) * std::sin(lon), std::cos(lat),
      std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat);
  return m;
}

/// Point at slant range `range` from the receiver along (el, az).
inline Eigen::Vector3d along(const Eigen::Vector3d& rx, double lat, double lon, double el,
                             double az, double range) {
  const Eigen::Vector3d dir_enu(std::cos(el) * std::sin(az), std::cos(el) * std::cos(az),
                                std::sin(el));
  return rx + range * enu(lat, lon).transpose() * dir_enu;
}

/// Slant range from `rx` to a sphere of radius `r` centred on the Earth
/// centre along a unit direction.
inline double range_to_sphere(const Eigen::Vector3d& rx, const Eigen::Vector3d& dir, double r) {
  const double b = rx.dot(dir);
  return -b + std::sqrt(b * b - rx.squaredNorm() + r * r);
}

/// Light-time range with Earth rotation: |Rz(-w tau) s - rx| solved by
/// fixed-point iteration. `s` is the emitter position at emission.
inline double sagnac_range(const Eigen::Vector3d& rx, const Eigen::Vector3d& s) {
  double tau = (s - rx).norm() / kC;
  for (int i = 0; i < 10; ++i) {
    const double th = kOmegaE * tau;
    const Eigen::Vector3d rot(std::cos(th) * s.x() + std::sin(th) * s.y(),
                              -std::sin(th) * s.x() + std::cos(th) * s.y(), s.z());
    tau = (rot - rx).norm() / kC;
  }
  return tau * kC;
}

struct Geometry {
  Eigen::Vector3d receiver;
  double lat = 0.0, lon = 0.0;
  double clock = 0.0;  // s
  std::vector<hapsnav::SourceState> sources;
  std::vector<hapsnav::Observation> observations;  // error-free
  Eigen::MatrixXd H;                               // at truth, without Sagnac
};

/// Random receiver near the surface with `n_sats` sources on a GPS shell and
/// `n_haps` at 20 km altitude, all above `min_el`.
inline Geometry random_geometry(std::mt19937_64& rng, int n_sats, double min_el = 16.0 * kDeg,
                                int n_haps = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Geometry g;
  g.lat = (u(rng) * 160.0 - 80.0) * kDeg;
  g.lon = (u(rng) * 360.0 - 180.0) * kDeg;
  const double h = u(rng) * 1000.0;
  g.receiver = lla_to_ecef(g.lat, g.lon, h);
  g.clock = (u(rng) * 2.0 - 1.0) * 1e-3;
  const int n = n_sats + n_haps;
  g.H.resize(n, 4);
  for (int i = 0; i < n; ++i) {
    const double el = min_el + u(rng) * (90.0 * kDeg - min_el);
    const double az = (u(rng) * 360.0 - 180.0) * kDeg;
    const bool haps = i >= n_sats;
    const Eigen::Vector3d dir = (along(g.receiver, g.lat, g.lon, el, az, 1.0) - g.receiver);
    const double shell = haps ? g.receiver.norm() - h + 20000.0 : 26'560'000.0;
    const Eigen::Vector3d pos = g.receiver + range_to_sphere(g.receiver, dir, shell) * dir;
    hapsnav::SourceState s;
    s.id = (haps ? "H" : "G") + std::to_string(i + 1);
    s.kind = haps ? hapsnav::SourceKind::Haps : hapsnav::SourceKind::Satellite;
    s.position = hapsnav::EcefPosition::from(pos);
    s.clock_offset = haps ? 0.0 : (u(rng) * 2.0 - 1.0) * 1e-4;
    g.sources.push_back(s);

    hapsnav::Observation o;
    o.source_id = s.id;
    o.kind = s.kind;
    o.pseudorange = sagnac_range(g.receiver, pos) + kC * (g.clock - s.clock_offset);
    o.cn0 = 45.0;
    g.observations.push_back(o);

    g.H.row(i) << -dir.transpose(), 1.0;
  }
  return g;
}

/// Minimum-norm weighted least squares through an SVD pseudoinverse.
inline Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& b,
                                  const Eigen::VectorXd& weights) {
  const Eigen::VectorXd sw = weights.cwiseSqrt();
  const Eigen::MatrixXd A = sw.asDiagonal() * H;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  Eigen::VectorXd sinv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-14 * s(0)) sinv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose() * (sw.asDiagonal() * b);
}

/// Random full-rank pseudorange-shaped design matrix: rows [-u, 1].
inline Eigen::MatrixXd random_design(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd H(n, 4);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d v(nd(rng), nd(rng), std::abs(nd(rng)) + 0.2);
    v.normalize();
    H.row(i) << -v.transpose(), 1.0;
  }
  return H;
}

inline double condition_number(const Eigen::MatrixXd& M) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

}  // namespace oracle
