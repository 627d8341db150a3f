#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hapsnav/atmosphere.hpp"
#include "hapsnav/frames.hpp"
#include "hapsnav/orbits.hpp"
#include "hapsnav/scenario.hpp"

namespace hapsnav {

/// Linearized pseudorange geometry at one estimate. Row i of `H` is
/// [-los_i, 1] (derivative of the range w.r.t. receiver position, clock in
/// meters); `b` is the a-priori residual p^c - rho - c*dt_est.
struct EpochGeometry {
  Eigen::MatrixXd H;
  Eigen::VectorXd b;
  Eigen::VectorXd rho;
  Eigen::MatrixXd los;  // N x 3 unit vectors receiver -> source
  std::vector<std::string> ids;
  std::vector<double> propagation_times;
};

/// dx = (dx, dy, dz, d(c dt)) in meters; `clock_update` = dx(3) / c.
struct LsqResult {
  Eigen::Vector4d dx = Eigen::Vector4d::Zero();
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  double clock_update = 0.0;
};

enum class SolveStatus { Converged, Unavailable, Diverged, SingularGeometry };

std::string_view to_string(SolveStatus s) noexcept;

struct EpochSolution {
  SolveStatus status = SolveStatus::Unavailable;
  bool converged = false;
  EcefPosition position;
  double clock_offset = 0.0;  // s
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  int iterations = 0;
  double hdop = 0.0;
  double vdop = 0.0;
  std::vector<std::string> used_ids;
  std::vector<SourceKind> used_kinds;
  std::vector<double> residuals;  // post-fit, m, aligned with used_ids
  bool raim_applied = false;

  int count(SourceKind kind) const;
};

struct SolverConfig {
  double elevation_mask = 15.0 * 3.14159265358979323846 / 180.0;
  int max_iterations = 20;
  double convergence_threshold = 0.01;  // m on |dx(1:3)|
  double freeze_threshold = 1000.0;     // m; mask membership frozen below this step
  bool sagnac = true;
  bool apply_mask = true;
  double default_cn0 = 35.0;            // dB-Hz when an observation has none
};

/// Supplies atmospheric delays for a source seen from the current receiver
/// estimate.
using DelaysProvider = std::function<AtmosphericDelays(
    const SourceState& source, const GeodeticPosition& receiver, const ElevationAzimuth& ea)>;

DelaysProvider make_delays_provider(AtmosphereModel model, double gps_seconds_of_week);
DelaysProvider no_delays();

/// Satellites: p + c dT - d_trop - d_ion. HAPS: p + c dT_HAPS only; a HAPS
/// with a nonzero ionospheric delay is rejected with InvalidArgument.
double correct_pseudorange(const Observation& obs, const SourceState& src,
                           const AtmosphericDelays& delays);

/// Throws DegenerateGeometry when a source lies within 1 m of `est_pos`.
EpochGeometry build_geometry(const EcefPosition& est_pos, double est_clock,
                             std::span<const double> corrected_pseudoranges,
                             std::span<const SourceState> sources, bool sagnac = true);

/// Unweighted normal-equation solve through a Cholesky factorization.
/// Throws SingularGeometry when cond(H'H) > 1e12.
LsqResult lsq_step(const EpochGeometry& g);

/// Iterative single point positioning from an Earth-center start (see
/// detail::fallback_start for the exceptions). When platforms accompany at
/// least four satellites, the satellites alone drive the iteration until the
/// estimate settles near the surface; the platforms join after that.
EpochSolution solve_epoch(std::span<const Observation> observations,
                          std::span<const SourceState> sources,
                          const DelaysProvider& delays, const SolverConfig& cfg);

/// Spatial block of Q rotated into local north/east/down.
Eigen::Matrix3d ned_covariance(const Eigen::Matrix4d& Q, const GeodeticPosition& receiver);

struct Dop {
  double hdop = 0.0;
  double vdop = 0.0;
};

/// Throws InvalidCovariance on a negative diagonal entry.
Dop dop_from_covariance(const Eigen::Matrix3d& q_ned);

/// Condition number threshold defining a singular normal matrix.
inline constexpr double kMaxConditionNumber = 1e12;

namespace detail {
/// Matches observations to sources by id; throws InvalidArgument on a miss.
std::vector<const SourceState*> match_sources(std::span<const Observation> observations,
                                              std::span<const SourceState> sources);
/// Checks conditioning of a symmetric normal matrix.
void check_conditioning(const Eigen::Matrix4d& normal);

/// Per-iteration preparation shared by SPP and RAIM: elevation mask (when
/// `update_membership`), atmospheric delays, pseudorange correction and the
/// linearized geometry for the accepted observations. Index vector maps
/// geometry rows back to `observations`.
struct Linearization {
  EpochGeometry geometry;
  std::vector<std::size_t> rows;
};
Linearization linearize(std::span<const Observation> observations,
                        std::span<const SourceState* const> sources,
                        const EcefPosition& est_pos, double est_clock,
                        const DelaysProvider& delays, const SolverConfig& cfg,
                        std::vector<bool>& accepted, bool update_membership,
                        bool satellites_only = false);

/// True once an estimate is close enough to the surface for elevation
/// masks and atmospheric models to be meaningful.
bool near_surface(const EcefPosition& p);

/// Surface point below the mean platform position (mean of all sources when
/// there are no platforms). Used instead of the Earth centre when fewer than
/// four satellites accompany the platforms, and when the first Earth-centre
/// step is singular or does not land near the surface: seen from the centre
/// a tight cluster of sources leaves radial position and clock nearly
/// inseparable.
EcefPosition fallback_start(std::span<const SourceState* const> sources);
}  // namespace detail

}  // namespace hapsnav
