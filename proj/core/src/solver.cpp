#include "hapsnav/solver.hpp"

#include <cmath>
#include <unordered_map>

#include "hapsnav/constants.hpp"
#include "hapsnav/error.hpp"

namespace hapsnav {

using namespace constants;

std::string_view to_string(SolveStatus s) noexcept {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::Unavailable: return "unavailable";
    case SolveStatus::Diverged: return "diverged";
    case SolveStatus::SingularGeometry: return "singular_geometry";
  }
  return "unknown";
}

int EpochSolution::count(SourceKind kind) const {
  int n = 0;
  for (auto k : used_kinds) n += k == kind;
  return n;
}

DelaysProvider make_delays_provider(AtmosphereModel model, double gps_seconds_of_week) {
  return [model = std::move(model), gps_seconds_of_week](
             const SourceState& src, const GeodeticPosition& rx, const ElevationAzimuth& ea) {
    return model.delays(src.kind, rx, ea.elevation, ea.azimuth, gps_seconds_of_week);
  };
}

DelaysProvider no_delays() {
  return [](const SourceState&, const GeodeticPosition&, const ElevationAzimuth&) {
    return AtmosphericDelays{};
  };
}

double correct_pseudorange(const Observation& obs, const SourceState& src,
                           const AtmosphericDelays& delays) {
  if (src.kind == SourceKind::Haps) {
    if (delays.ionosphere != 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "correct_pseudorange: HAPS " + src.id + " carries an ionospheric delay");
    }
    return obs.pseudorange + kSpeedOfLight * src.clock_offset;
  }
  return obs.pseudorange + kSpeedOfLight * src.clock_offset - delays.troposphere -
         delays.ionosphere;
}

namespace {

template <typename SourceAt>
EpochGeometry build_geometry_impl(const EcefPosition& est_pos, double est_clock,
                                  std::span<const double> corrected, std::size_t n,
                                  SourceAt&& source_at, bool sagnac) {
  EpochGeometry g;
  g.H.resize(static_cast<Eigen::Index>(n), 4);
  g.b.resize(static_cast<Eigen::Index>(n));
  g.rho.resize(static_cast<Eigen::Index>(n));
  g.los.resize(static_cast<Eigen::Index>(n), 3);
  g.ids.reserve(n);
  g.propagation_times.reserve(n);

  const Eigen::Vector3d r = est_pos.vec();
  for (std::size_t k = 0; k < n; ++k) {
    const SourceState& src = source_at(k);
    const auto i = static_cast<Eigen::Index>(k);

    Eigen::Vector3d p = src.position.vec();
    double range = (p - r).norm();
    double tau = 0.0;
    if (sagnac) {
      // Light time from geometry, refined once through the rotated position.
      for (int it = 0; it < 2; ++it) {
        tau = std::clamp(range / kSpeedOfLight, 0.0, 0.999);
        p = sagnac_correct(src.position, tau).vec();
        range = (p - r).norm();
      }
    }
    if (range < 1.0) {
      throw Error(ErrorCode::DegenerateGeometry,
                  "build_geometry: source " + src.id + " within 1 m of the estimate");
    }
    const Eigen::Vector3d u = (p - r) / range;
    g.los.row(i) = u.transpose();
    g.H.row(i) << -u.x(), -u.y(), -u.z(), 1.0;
    g.rho(i) = range;
    g.b(i) = corrected[k] - range - kSpeedOfLight * est_clock;
    g.ids.push_back(src.id);
    g.propagation_times.push_back(tau);
  }
  return g;
}

}  // namespace

EpochGeometry build_geometry(const EcefPosition& est_pos, double est_clock,
                             std::span<const double> corrected_pseudoranges,
                             std::span<const SourceState> sources, bool sagnac) {
  if (sources.empty() || corrected_pseudoranges.size() != sources.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "build_geometry: need one corrected pseudorange per source");
  }
  return build_geometry_impl(est_pos, est_clock, corrected_pseudoranges, sources.size(),
                             [&](std::size_t k) -> const SourceState& { return sources[k]; },
                             sagnac);
}

namespace detail {

void check_conditioning(const Eigen::Matrix4d& normal) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxConditionNumber) {
    throw Error(ErrorCode::SingularGeometry,
                "normal matrix is singular or ill-conditioned (collinear observations?)");
  }
}

std::vector<const SourceState*> match_sources(std::span<const Observation> observations,
                                              std::span<const SourceState> sources) {
  std::unordered_map<std::string_view, const SourceState*> by_id;
  for (const auto& s : sources) by_id.emplace(s.id, &s);
  std::vector<const SourceState*> out;
  out.reserve(observations.size());
  for (const auto& o : observations) {
    auto it = by_id.find(o.source_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::InvalidArgument, "no source state for observation " + o.source_id);
    }
    out.push_back(it->second);
  }
  return out;
}

EcefPosition fallback_start(std::span<const SourceState* const> sources) {
  const bool any_haps = std::any_of(sources.begin(), sources.end(),
                                    [](const SourceState* s) { return s->kind == SourceKind::Haps; });
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  int n = 0;
  for (const auto* s : sources) {
    if (any_haps && s->kind != SourceKind::Haps) continue;
    mean += s->position.vec();
    ++n;
  }
  mean /= static_cast<double>(n);
  GeodeticPosition g = ecef_to_geodetic(EcefPosition::from(mean));
  g.height = 0.0;
  return geodetic_to_ecef(g);
}

bool near_surface(const EcefPosition& p) {
  const double r = p.norm();
  return r > 5.0e6 && r < 8.0e6;
}

Linearization linearize(std::span<const Observation> observations,
                        std::span<const SourceState* const> sources,
                        const EcefPosition& est_pos, double est_clock,
                        const DelaysProvider& delays, const SolverConfig& cfg,
                        std::vector<bool>& accepted, bool update_membership,
                        bool satellites_only) {
  const bool surface = near_surface(est_pos);
  GeodeticPosition geo;
  if (surface) geo = ecef_to_geodetic(est_pos);

  Linearization lin;
  std::vector<double> corrected;
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const SourceState& src = *sources[k];
    AtmosphericDelays d;
    if (surface) {
      const ElevationAzimuth ea = elevation_azimuth(geo, est_pos, src.position);
      if (update_membership && cfg.apply_mask) accepted[k] = ea.elevation >= cfg.elevation_mask;
      if (!accepted[k]) continue;
      d = delays(src, geo, ea);
    } else if (!accepted[k]) {
      continue;
    }
    if (satellites_only && src.kind == SourceKind::Haps) continue;
    corrected.push_back(correct_pseudorange(observations[k], src, d));
    lin.rows.push_back(k);
  }
  if (lin.rows.empty()) return lin;
  lin.geometry = build_geometry_impl(
      est_pos, est_clock, corrected, lin.rows.size(),
      [&](std::size_t j) -> const SourceState& { return *sources[lin.rows[j]]; }, cfg.sagnac);
  return lin;
}

}  // namespace detail

LsqResult lsq_step(const EpochGeometry& g) {
  if (g.H.rows() < 4) {
    throw Error(ErrorCode::InvalidArgument, "lsq_step: at least four observations required");
  }
  const Eigen::Matrix4d normal = g.H.transpose() * g.H;
  detail::check_conditioning(normal);
  const Eigen::LLT<Eigen::Matrix4d> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularGeometry, "lsq_step: Cholesky factorization failed");
  }
  LsqResult r;
  r.Q = llt.solve(Eigen::Matrix4d::Identity());
  r.dx = llt.solve(g.H.transpose() * g.b);
  r.clock_update = r.dx(3) / kSpeedOfLight;
  return r;
}

Eigen::Matrix3d ned_covariance(const Eigen::Matrix4d& Q, const GeodeticPosition& receiver) {
  const RotationMatrix3 enu = ned_rotation(receiver);
  Eigen::Matrix3d ned;
  ned.row(0) = enu.row(1);
  ned.row(1) = enu.row(0);
  ned.row(2) = -enu.row(2);
  const Eigen::Matrix3d spatial = Q.topLeftCorner<3, 3>();
  Eigen::Matrix3d out = ned * spatial * ned.transpose();
  return 0.5 * (out + out.transpose());
}

Dop dop_from_covariance(const Eigen::Matrix3d& q_ned) {
  for (int i = 0; i < 3; ++i) {
    if (q_ned(i, i) < 0.0) {
      throw Error(ErrorCode::InvalidCovariance, "dop_from_covariance: negative variance");
    }
  }
  return {std::sqrt(q_ned(0, 0) + q_ned(1, 1)), std::sqrt(q_ned(2, 2))};
}

EpochSolution solve_epoch(std::span<const Observation> observations,
                          std::span<const SourceState> sources, const DelaysProvider& delays,
                          const SolverConfig& cfg) {
  EpochSolution sol;
  if (observations.size() <= 3) {
    sol.status = SolveStatus::Unavailable;
    return sol;
  }
  const std::vector<const SourceState*> matched = detail::match_sources(observations, sources);

  std::vector<bool> accepted(observations.size(), true);
  bool frozen = false;
  bool settled = false;  // current estimate reached by a step below freeze_threshold
  Eigen::Vector3d x = Eigen::Vector3d::Zero();

  // Ranges to platforms a few tens of km above the receiver cannot be
  // linearized from the Earth centre. With enough satellites they join once
  // the estimate has settled; without, the search starts below them.
  const auto n_haps = std::count_if(matched.begin(), matched.end(),
                                    [](const SourceState* s) { return s->kind == SourceKind::Haps; });
  const auto n_sats = static_cast<std::ptrdiff_t>(matched.size()) - n_haps;
  bool staged = n_haps > 0 && n_sats >= 4;
  if (n_haps > 0 && n_sats < 4) x = detail::fallback_start(matched).vec();
  double clock = 0.0;
  detail::Linearization lin;
  LsqResult step;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    sol.iterations = iter;
    const EcefPosition est = EcefPosition::from(x);
    try {
      lin = detail::linearize(observations, matched, est, clock, delays, cfg, accepted, !frozen,
                              staged);
      if (lin.rows.size() <= 3 && !frozen && !settled) {
        // A mask evaluated at an unsettled estimate says little about the
        // receiver; keep every source until the iteration homes in.
        std::fill(accepted.begin(), accepted.end(), true);
        lin = detail::linearize(observations, matched, est, clock, delays, cfg, accepted, false,
                                staged);
      }
      if (lin.rows.size() <= 3 && staged) {
        staged = false;
        lin = detail::linearize(observations, matched, est, clock, delays, cfg, accepted, false);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateGeometry) throw;
      sol.status = SolveStatus::SingularGeometry;
      return sol;
    }
    if (lin.rows.size() <= 3) {
      sol.status = SolveStatus::Unavailable;
      sol.position = est;
      sol.clock_offset = clock;
      return sol;
    }
    try {
      step = lsq_step(lin.geometry);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularGeometry) throw;
      if (iter == 1 && x.isZero()) {
        x = detail::fallback_start(matched).vec();
        continue;
      }
      sol.status = SolveStatus::SingularGeometry;
      sol.position = est;
      sol.clock_offset = clock;
      return sol;
    }
    if (iter == 1 && x.isZero() &&
        !detail::near_surface(EcefPosition::from(Eigen::Vector3d(step.dx.head<3>())))) {
      x = detail::fallback_start(matched).vec();
      continue;
    }
    x += step.dx.head<3>();
    clock += step.clock_update;

    const double moved = step.dx.head<3>().norm();
    if (moved < cfg.freeze_threshold && detail::near_surface(est)) frozen = true;
    settled = moved < cfg.freeze_threshold;
    if (staged && settled && detail::near_surface(EcefPosition::from(x))) {
      staged = false;  // the platforms join from the next iteration
      continue;
    }
    if (moved <= cfg.convergence_threshold) {
      sol.converged = true;
      break;
    }
  }

  sol.status = sol.converged ? SolveStatus::Converged : SolveStatus::Diverged;
  sol.position = EcefPosition::from(x);
  sol.clock_offset = clock;
  sol.Q = step.Q;

  const Eigen::VectorXd post = lin.geometry.b - lin.geometry.H * step.dx;
  for (std::size_t j = 0; j < lin.rows.size(); ++j) {
    const auto& obs = observations[lin.rows[j]];
    sol.used_ids.push_back(obs.source_id);
    sol.used_kinds.push_back(matched[lin.rows[j]]->kind);
    sol.residuals.push_back(post(static_cast<Eigen::Index>(j)));
  }
  if (detail::near_surface(sol.position)) {
    const Dop dop = dop_from_covariance(ned_covariance(sol.Q, ecef_to_geodetic(sol.position)));
    sol.hdop = dop.hdop;
    sol.vdop = dop.vdop;
  }
  return sol;
}

}  // namespace hapsnav
