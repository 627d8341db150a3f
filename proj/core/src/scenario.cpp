#include "hapsnav/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hapsnav/constants.hpp"
#include "hapsnav/error.hpp"

namespace hapsnav {

using namespace constants;

GaussMarkovState gauss_markov_step(const GaussMarkovState& state, double dt, double noise) {
  const double phi = std::exp(-dt / state.tau);
  GaussMarkovState next = state;
  next.x = phi * state.x + noise * state.sigma * std::sqrt(1.0 - phi * phi);
  return next;
}

void GaussMarkovBank::advance(std::span<const std::string> ids, double dt,
                              std::mt19937_64& rng) {
  std::vector<std::string> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& id : sorted) {
    auto it = states_.find(id);
    const double z = normal(rng);
    if (it == states_.end()) {
      states_.emplace(id, GaussMarkovState{sigma_ * z, tau_, sigma_});
    } else {
      it->second.tau = tau_;
      it->second.sigma = sigma_;
      it->second = gauss_markov_step(it->second, dt, z);
    }
  }
}

double GaussMarkovBank::value(const std::string& id) const {
  auto it = states_.find(id);
  return it == states_.end() ? 0.0 : it->second.x;
}

EnvironmentModel EnvironmentModel::open() { return {}; }

EnvironmentModel EnvironmentModel::suburban() {
  EnvironmentModel e;
  e.name = "suburban";
  e.kind = EnvironmentKind::Suburban;
  e.los = {false, 0.15, 12.0};
  e.haps_error_std = 2.0;
  return e;
}

EnvironmentModel EnvironmentModel::dense_urban() {
  EnvironmentModel e;
  e.name = "dense_urban";
  e.kind = EnvironmentKind::DenseUrban;
  e.los = {false, 0.12, 35.0};
  e.haps_error_std = 5.0;
  e.sat_cap = 4;
  return e;
}

double los_probability(double elevation, const EnvironmentModel& env) {
  if (env.los.open) return 1.0;
  const double el_deg = elevation * kRadToDeg;
  if (el_deg >= 90.0 - 1e-9) return 1.0;
  return 1.0 / (1.0 + std::exp(-env.los.slope_per_deg * (el_deg - env.los.el50_deg)));
}

double cn0_assign(double elevation, SourceKind kind, std::span<const double> visible_sat_cn0s,
                  const Cn0Preset& preset, double jitter_draw) {
  if (kind == SourceKind::Haps) {
    if (visible_sat_cn0s.empty()) {
      throw Error(ErrorCode::NoSatelliteReference,
                  "cn0_assign: HAPS C/N0 needs at least one visible satellite");
    }
    return *std::max_element(visible_sat_cn0s.begin(), visible_sat_cn0s.end());
  }
  const double el_deg = std::clamp(elevation * kRadToDeg, preset.low_elevation_deg, 90.0);
  const double frac = (el_deg - preset.low_elevation_deg) / (90.0 - preset.low_elevation_deg);
  return preset.low_cn0 + frac * (preset.high_cn0 - preset.low_cn0) + jitter_draw;
}

double sagnac_range(const EcefPosition& receiver, const EcefPosition& emitter_at_emission) {
  double tau = (emitter_at_emission.vec() - receiver.vec()).norm() / kSpeedOfLight;
  double range = 0.0;
  for (int i = 0; i < 4; ++i) {
    range = (sagnac_correct(emitter_at_emission, tau).vec() - receiver.vec()).norm();
    tau = range / kSpeedOfLight;
  }
  return (sagnac_correct(emitter_at_emission, tau).vec() - receiver.vec()).norm();
}

std::vector<Observation> synthesize_epoch(const EpochTruth& truth,
                                          std::span<const SourceState> sources,
                                          const EnvironmentModel& env,
                                          const SynthesisOptions& opts,
                                          const GaussMarkovBank& sat_errors,
                                          std::mt19937_64& rng) {
  struct Candidate {
    const SourceState* src;
    ElevationAzimuth ea;
    double range;
  };

  const GeodeticPosition geo = ecef_to_geodetic(truth.position);

  std::vector<Candidate> visible;
  for (const auto& s : sources) {
    const ElevationAzimuth ea = elevation_azimuth(geo, truth.position, s.position);
    if (ea.elevation < opts.elevation_mask) continue;
    visible.push_back({&s, ea, sagnac_range(truth.position, s.position)});
  }

  // Line-of-sight draws, one uniform per candidate in source order.
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Candidate> los;
  for (const auto& c : visible) {
    const bool applies = opts.los_targets == LosTargets::All ||
                         (opts.los_targets == LosTargets::Haps && c.src->kind == SourceKind::Haps);
    const double u = uniform(rng);
    if (applies && u >= los_probability(c.ea.elevation, env)) continue;
    los.push_back(c);
  }

  // Satellite cap: keep a uniformly random subset of the visible satellites.
  std::vector<std::size_t> sat_idx;
  for (std::size_t i = 0; i < los.size(); ++i) {
    if (los[i].src->kind == SourceKind::Satellite) sat_idx.push_back(i);
  }
  std::vector<bool> keep(los.size(), true);
  if (env.sat_cap > 0 && sat_idx.size() > static_cast<std::size_t>(env.sat_cap)) {
    for (std::size_t i = 0; i + 1 < sat_idx.size(); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, sat_idx.size() - 1);
      std::swap(sat_idx[i], sat_idx[pick(rng)]);
    }
    for (std::size_t i = static_cast<std::size_t>(env.sat_cap); i < sat_idx.size(); ++i) {
      keep[sat_idx[i]] = false;
    }
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Observation> out;
  std::vector<double> sat_cn0s;
  for (std::size_t i = 0; i < los.size(); ++i) {
    if (!keep[i] || los[i].src->kind != SourceKind::Satellite) continue;
    const double jitter = opts.cn0.jitter_std * normal(rng);
    Observation o;
    o.source_id = los[i].src->id;
    o.kind = SourceKind::Satellite;
    o.epoch = truth.t;
    o.cn0 = cn0_assign(los[i].ea.elevation, SourceKind::Satellite, {}, opts.cn0, jitter);
    sat_cn0s.push_back(*o.cn0);

    const AtmosphericDelays d =
        opts.atmosphere.delays(SourceKind::Satellite, geo, los[i].ea.elevation,
                               los[i].ea.azimuth, opts.gps_time_offset + truth.t);
    ObservationTruth t;
    t.geometric_range = los[i].range;
    t.clock_term = kSpeedOfLight * (truth.clock_offset - los[i].src->clock_offset);
    t.ionosphere = d.ionosphere;
    t.troposphere = d.troposphere;
    t.random_error = sat_errors.value(o.source_id);
    t.error_term = t.ionosphere + t.troposphere + t.random_error;
    o.pseudorange = t.geometric_range + t.clock_term + t.error_term;
    o.truth = t;
    out.push_back(std::move(o));
  }

  double haps_cn0 = 50.0;
  try {
    haps_cn0 = cn0_assign(kPi / 2.0, SourceKind::Haps, sat_cn0s, opts.cn0);
  } catch (const Error&) {
    haps_cn0 = opts.cn0.high_cn0;
  }

  for (std::size_t i = 0; i < los.size(); ++i) {
    if (los[i].src->kind != SourceKind::Haps) continue;
    Observation o;
    o.source_id = los[i].src->id;
    o.kind = SourceKind::Haps;
    o.epoch = truth.t;
    o.cn0 = haps_cn0;
    ObservationTruth t;
    t.geometric_range = los[i].range;
    t.clock_term = kSpeedOfLight * (truth.clock_offset - los[i].src->clock_offset);
    t.random_error = env.haps_error_std * normal(rng);
    if (opts.haps_clock_noise_std > 0.0) t.random_error += opts.haps_clock_noise_std * normal(rng);
    t.error_term = t.random_error;  // no ionospheric term for HAPS
    o.pseudorange = t.geometric_range + t.clock_term + t.error_term;
    o.truth = t;
    out.push_back(std::move(o));
  }
  return out;
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace hapsnav
