#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hapsnav/atmosphere.hpp"
#include "hapsnav/frames.hpp"
#include "hapsnav/orbits.hpp"

namespace hapsnav {

// ---------------------------------------------------------------------------
// First-order Gauss-Markov error process
// ---------------------------------------------------------------------------

struct GaussMarkovState {
  double x = 0.0;      // current error, m
  double tau = 10.0;   // correlation time, s
  double sigma = 6.0;  // stationary standard deviation, m
};

/// Exact discretization of dx/dt = -x/tau + w over `dt`:
///   x' = exp(-dt/tau) x + sigma sqrt(1 - exp(-2 dt/tau)) * noise
/// so the stationary autocorrelation sigma^2 exp(-|dt|/tau) holds for any
/// step size. `noise` is a standard normal draw.
GaussMarkovState gauss_markov_step(const GaussMarkovState& state, double dt, double noise);

/// One Gauss-Markov process per satellite id, advanced together.
class GaussMarkovBank {
 public:
  GaussMarkovBank() = default;
  GaussMarkovBank(double tau, double sigma) : tau_(tau), sigma_(sigma) {}

  /// Advances every tracked process by `dt`, registering ids that are not
  /// yet tracked with a draw from the stationary distribution. Ids are
  /// processed in sorted order so draws are reproducible.
  void advance(std::span<const std::string> ids, double dt, std::mt19937_64& rng);

  void set_parameters(double tau, double sigma) { tau_ = tau; sigma_ = sigma; }
  double value(const std::string& id) const;
  bool contains(const std::string& id) const { return states_.count(id) != 0; }

 private:
  double tau_ = 10.0;
  double sigma_ = 6.0;
  std::map<std::string, GaussMarkovState> states_;
};

// ---------------------------------------------------------------------------
// Environments
// ---------------------------------------------------------------------------

enum class EnvironmentKind { Open, Suburban, DenseUrban };

/// LOS probability versus elevation: 1 / (1 + exp(-slope (el - el50))),
/// elevation in degrees, forced to 1 at the zenith. `open` curves are 1
/// everywhere.
struct LosCurve {
  bool open = true;
  double slope_per_deg = 0.0;
  double el50_deg = 0.0;
};

struct EnvironmentModel {
  std::string name = "open";
  EnvironmentKind kind = EnvironmentKind::Open;
  LosCurve los;
  double sat_error_tau = 10.0;    // s
  double sat_error_sigma = 6.0;   // m
  double haps_error_std = 2.0;    // m
  int sat_cap = 0;                // 0 = unlimited

  static EnvironmentModel open();
  static EnvironmentModel suburban();
  static EnvironmentModel dense_urban();
};

double los_probability(double elevation, const EnvironmentModel& env);

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

/// Truth decomposition of a synthetic pseudorange:
///   pseudorange = geometric_range + clock_term + error_term
/// where error_term = ionosphere + troposphere + random_error.
struct ObservationTruth {
  double geometric_range = 0.0;
  double clock_term = 0.0;
  double error_term = 0.0;
  double ionosphere = 0.0;
  double troposphere = 0.0;
  double random_error = 0.0;
};

struct Observation {
  std::string source_id;
  SourceKind kind = SourceKind::Satellite;
  double epoch = 0.0;        // s
  double pseudorange = 0.0;  // m
  std::optional<double> cn0; // dB-Hz
  std::optional<ObservationTruth> truth;
};

struct Cn0Preset {
  double low_elevation_deg = 15.0;
  double low_cn0 = 30.0;
  double high_cn0 = 50.0;
  double jitter_std = 0.0;  // dB-Hz
};

/// Satellite: linear in elevation between the preset endpoints plus
/// `jitter_draw` (already scaled, dB-Hz). HAPS: max of the visible
/// satellite values; throws NoSatelliteReference when that list is empty.
double cn0_assign(double elevation, SourceKind kind, std::span<const double> visible_sat_cn0s,
                  const Cn0Preset& preset = {}, double jitter_draw = 0.0);

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

enum class LosTargets { None, Haps, All };

struct SynthesisOptions {
  double elevation_mask = 15.0 * 3.14159265358979323846 / 180.0;
  LosTargets los_targets = LosTargets::Haps;
  Cn0Preset cn0;
  AtmosphereModel atmosphere;
  double gps_time_offset = 0.0;      // seconds of week at scenario t = 0
  double haps_clock_noise_std = 0.0; // m, receiver-clock estimation error on HAPS ranges
};

struct EpochTruth {
  double t = 0.0;  // scenario time, s
  EcefPosition position;
  double clock_offset = 0.0;  // s
};

/// Geometric range from an emission-time position, including Earth rotation
/// during flight (light-time fixed point).
double sagnac_range(const EcefPosition& receiver, const EcefPosition& emitter_at_emission);

/// Synthesizes one epoch of observations. `sat_errors` supplies the current
/// Gauss-Markov value per satellite id (missing ids contribute zero).
std::vector<Observation> synthesize_epoch(const EpochTruth& truth,
                                          std::span<const SourceState> sources,
                                          const EnvironmentModel& env,
                                          const SynthesisOptions& opts,
                                          const GaussMarkovBank& sat_errors,
                                          std::mt19937_64& rng);

/// Independent RNG stream for (seed, epoch, stream).
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t stream);

}  // namespace hapsnav
