#include "hapsnav/raim.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

#include <boost/math/distributions/normal.hpp>

#include "hapsnav/constants.hpp"
#include "hapsnav/error.hpp"

namespace hapsnav {

using namespace constants;

ObservationWeights ObservationWeights::identity(Eigen::Index n) {
  return {Eigen::VectorXd::Ones(n)};
}

double RaimConfig::critical_value() const { return normal_quantile(1.0 - alpha0 / 2.0); }

double RaimDiagnostics::weight(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return 1.0 / final_variances(static_cast<Eigen::Index>(i));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double cn0_variance(double cn0) { return 10.0 + 150.0 * 150.0 * std::pow(10.0, -cn0 / 10.0); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "normal_quantile: p must lie in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

LsqResult wls_step(const EpochGeometry& g, const ObservationWeights& w) {
  if (g.H.rows() < 4) {
    throw Error(ErrorCode::InvalidArgument, "wls_step: at least four observations required");
  }
  if (w.variances.size() != g.H.rows() || (w.variances.array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "wls_step: need one positive variance per row");
  }
  const Eigen::VectorXd wt = w.weights();
  const Eigen::MatrixXd htw = g.H.transpose() * wt.asDiagonal();
  const Eigen::Matrix4d normal = htw * g.H;
  detail::check_conditioning(normal);
  const Eigen::LLT<Eigen::Matrix4d> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularGeometry, "wls_step: Cholesky factorization failed");
  }
  LsqResult r;
  r.Q = llt.solve(Eigen::Matrix4d::Identity());
  r.dx = llt.solve(htw * g.b);
  r.clock_update = r.dx(3) / kSpeedOfLight;
  return r;
}

ResidualCovariance residual_covariance(const EpochGeometry& g, const ObservationWeights& w,
                                       const Eigen::Vector4d& dx) {
  const Eigen::MatrixXd htw = g.H.transpose() * w.weights().asDiagonal();
  const Eigen::Matrix4d q = (htw * g.H).llt().solve(Eigen::Matrix4d::Identity());
  ResidualCovariance rc;
  rc.residuals = g.H * dx - g.b;
  rc.covariance = Eigen::MatrixXd(w.variances.asDiagonal()) - g.H * q * g.H.transpose();
  return rc;
}

double danish_update(double normalized_residual, double apriori_variance, double critical,
                     double t) {
  const double a = std::fabs(normalized_residual);
  return a > critical ? apriori_variance * std::exp(a / t) : apriori_variance;
}

RaimSolution solve_epoch_raim(std::span<const Observation> observations,
                              std::span<const SourceState> sources,
                              const DelaysProvider& delays, const SolverConfig& cfg,
                              const RaimConfig& raim) {
  RaimSolution out;
  out.solution = solve_epoch(observations, sources, delays, cfg);
  out.diagnostics.alpha0 = raim.alpha0;
  out.diagnostics.critical = raim.critical_value();
  if (!out.solution.converged || out.solution.used_ids.size() < 5) return out;

  const std::vector<const SourceState*> matched = detail::match_sources(observations, sources);
  const std::unordered_set<std::string> used(out.solution.used_ids.begin(),
                                             out.solution.used_ids.end());
  std::vector<bool> accepted(observations.size());
  for (std::size_t k = 0; k < observations.size(); ++k) {
    accepted[k] = used.count(observations[k].source_id) != 0;
  }

  const double critical = out.diagnostics.critical;
  const double temperature = raim.temperature();
  const bool latching = raim.latching();

  Eigen::Vector3d x = out.solution.position.vec();
  double clock = out.solution.clock_offset;

  detail::Linearization lin = detail::linearize(observations, matched, EcefPosition::from(x),
                                                clock, delays, cfg, accepted, false);
  const auto n = static_cast<Eigen::Index>(lin.rows.size());
  Eigen::VectorXd apriori(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& obs = observations[lin.rows[static_cast<std::size_t>(i)]];
    apriori(i) = cn0_variance(obs.cn0.value_or(cfg.default_cn0));
  }

  ObservationWeights w{apriori};
  Eigen::VectorXd first_std;
  LsqResult step;
  ResidualCovariance rc;
  Eigen::VectorXd wbar(n);
  std::vector<bool> latched(static_cast<std::size_t>(n), false);
  bool converged = false;
  int enabled = 0;
  int iter = 0;

  for (iter = 1; iter <= raim.max_iterations; ++iter) {
    if (iter > 1) {
      lin = detail::linearize(observations, matched, EcefPosition::from(x), clock, delays, cfg,
                              accepted, false);
    }
    try {
      step = wls_step(lin.geometry, w);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularGeometry) throw;
      out.solution.status = SolveStatus::SingularGeometry;
      out.solution.converged = false;
      return out;
    }
    x += step.dx.head<3>();
    clock += step.clock_update;

    rc = residual_covariance(lin.geometry, w, step.dx);
    const Eigen::VectorXd cur_std = rc.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    if (iter == 1) first_std = cur_std;
    const Eigen::VectorXd& denom =
        raim.residual_std_mode == ResidualStdMode::FirstIteration ? first_std : cur_std;

    Eigen::VectorXd next(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      wbar(i) = denom(i) > 1e-9 ? rc.residuals(i) / denom(i) : 0.0;
      const auto ui = static_cast<std::size_t>(i);
      if (std::fabs(wbar(i)) > critical) {
        ++enabled;
        latched[ui] = latching;
      }
      next(i) = latched[ui] ? apriori(i) * std::exp(std::fabs(wbar(i)) / temperature)
                            : danish_update(wbar(i), apriori(i), critical, temperature);
    }

    if (step.dx.head<3>().norm() <= raim.convergence_threshold) {
      converged = true;
      break;
    }
    if (latching && raim.residual_std_mode == ResidualStdMode::Recompute) {
      // For a downweighted observation |w| scales like 1/sqrt(variance), so
      // the log-variance map has slope -l/2 at log inflation l. Stepping
      // 1/(1 + l/2) of the way is Newton on that term: same fixed point,
      // no see-saw between over- and under-weighted solutions.
      for (Eigen::Index i = 0; i < n; ++i) {
        const double l = std::log(next(i) / apriori(i));
        next(i) = w.variances(i) * std::pow(next(i) / w.variances(i), 1.0 / (1.0 + 0.5 * l));
      }
    }
    w.variances = next;
  }

  RaimDiagnostics& d = out.diagnostics;
  d.residuals = rc.residuals;
  d.residual_covariance = rc.covariance;
  d.normalized_residuals = wbar;
  d.apriori_variances = apriori;
  d.final_variances = w.variances;
  d.weighted_Q = step.Q;
  d.enabled_count = enabled;
  d.iterations = std::min(iter, raim.max_iterations);
  d.ids = lin.geometry.ids;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (apriori(i) / w.variances(i) < raim.exclusion_ratio) {
      d.excluded_ids.push_back(d.ids[static_cast<std::size_t>(i)]);
    }
  }

  EpochSolution& sol = out.solution;
  sol.raim_applied = true;
  sol.converged = converged;
  sol.status = converged ? SolveStatus::Converged : SolveStatus::Diverged;
  sol.position = EcefPosition::from(x);
  sol.clock_offset = clock;
  sol.iterations += d.iterations;
  sol.residuals.assign(rc.residuals.data(), rc.residuals.data() + n);
  for (double& r : sol.residuals) r = -r;  // report observed-minus-computed like SPP

  const Eigen::Matrix4d normal = lin.geometry.H.transpose() * lin.geometry.H;
  sol.Q = normal.llt().solve(Eigen::Matrix4d::Identity());
  const Dop dop = dop_from_covariance(ned_covariance(sol.Q, ecef_to_geodetic(sol.position)));
  sol.hdop = dop.hdop;
  sol.vdop = dop.vdop;
  return out;
}

}  // namespace hapsnav
