#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hapsnav/solver.hpp"

namespace hapsnav {

/// Diagonal observation variances (m^2); the weight matrix is the inverse.
struct ObservationWeights {
  Eigen::VectorXd variances;

  static ObservationWeights identity(Eigen::Index n);
  Eigen::VectorXd weights() const { return variances.cwiseInverse(); }
};

enum class ResidualStdMode { Recompute, FirstIteration };

struct RaimConfig {
  double alpha0 = 0.005;
  std::optional<double> danish_t;  // unset: use the critical value
  // First-iteration std keeps |w| from shrinking as a faulty observation's
  // variance grows, so faults end up far below the median weight.
  ResidualStdMode residual_std_mode = ResidualStdMode::FirstIteration;
  int max_iterations = 20;
  double convergence_threshold = 0.01;
  // Once flagged within an epoch, an observation keeps the inflated branch
  // sigma0^2 exp(|w|/T) even when |w| later drops below the critical value.
  // With recomputed std the plain rule alternates between two weight sets
  // forever, so unset means: latch in recompute mode only.
  std::optional<bool> latch_flags;
  double exclusion_ratio = 1e-3;  // final/a-priori weight below this is reported as excluded

  double critical_value() const;
  double temperature() const { return danish_t.value_or(critical_value()); }
  bool latching() const {
    return latch_flags.value_or(residual_std_mode == ResidualStdMode::Recompute);
  }
};

struct RaimDiagnostics {
  Eigen::VectorXd residuals;             // v-hat, m
  Eigen::MatrixXd residual_covariance;   // C_v-hat, m^2
  Eigen::VectorXd normalized_residuals;  // w-bar at the last iteration
  Eigen::VectorXd apriori_variances;     // s_i
  Eigen::VectorXd final_variances;       // variances used by the final solve
  Eigen::Matrix4d weighted_Q = Eigen::Matrix4d::Zero();
  std::vector<std::string> ids;
  std::vector<std::string> excluded_ids;
  double critical = 0.0;
  double alpha0 = 0.0;
  int enabled_count = 0;
  int iterations = 0;

  /// Final weight of observation `id` (1 / variance); NaN if unknown.
  double weight(const std::string& id) const;
};

struct RaimSolution {
  EpochSolution solution;
  RaimDiagnostics diagnostics;
};

/// s = 10 + 150^2 * 10^(-cn0/10), m^2.
double cn0_variance(double cn0);

/// Inverse standard normal CDF.
double normal_quantile(double p);

/// Weighted solve Q = (H'WH)^-1, dx = Q H'W b.
LsqResult wls_step(const EpochGeometry& g, const ObservationWeights& w);

/// v-hat = H dx - b and C = Sigma - H (H' Sigma^-1 H)^-1 H'.
struct ResidualCovariance {
  Eigen::VectorXd residuals;
  Eigen::MatrixXd covariance;
};
ResidualCovariance residual_covariance(const EpochGeometry& g, const ObservationWeights& w,
                                       const Eigen::Vector4d& dx);

/// Modified Danish variance for the next iteration: the a-priori variance,
/// inflated by exp(|w|/T) only when |w| exceeds the critical value.
double danish_update(double normalized_residual, double apriori_variance, double critical,
                     double t);

/// SPP followed by C/N0-weighted iterative reweighting. Fewer than five
/// usable observations return the plain SPP result with raim_applied unset.
RaimSolution solve_epoch_raim(std::span<const Observation> observations,
                              std::span<const SourceState> sources,
                              const DelaysProvider& delays, const SolverConfig& cfg,
                              const RaimConfig& raim);

}  // namespace hapsnav
