#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hapsnav/atmosphere.hpp"
#include "hapsnav/constants.hpp"
#include "hapsnav/frames.hpp"
#include "hapsnav/orbits.hpp"
#include "hapsnav/raim.hpp"
#include "hapsnav/scenario.hpp"

namespace hapsnav {

struct ConstellationConfig {
  int planes = 6;
  int sats_per_plane = 5;
  double semi_major_axis = 26'559'700.0;  // m
  double inclination_deg = 55.0;
};

/// One platform, either placed by elevation/azimuth from the trajectory
/// anchor (first waypoint) or by explicit geodetic center.
struct HapsConfig {
  std::string id;
  std::optional<double> elevation_deg;
  std::optional<double> azimuth_deg;
  std::optional<double> latitude_deg;
  std::optional<double> longitude_deg;
  double height = 20'000.0;        // m
  double orbit_radius = 300.0;     // m
  double lap_seconds = HapsPlatform::kDefaultLapSeconds;
  double clock_offset = 0.0;       // s
};

struct Waypoint {
  double t = 0.0;  // s
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double height = 0.0;
};

struct ReceiverConfig {
  std::vector<Waypoint> waypoints;
  double epoch_interval = 1.0;  // s
  int n_epochs = 700;
  double clock_offset = 0.0;  // s
  double clock_drift = 0.0;   // s/s
  double start_gps_sow = 0.0;
};

struct ScheduleEntry {
  double start = 0.0;  // s
  std::string environment;
};

struct ErrorsConfig {
  double cn0_jitter_std = 1.0;  // dB-Hz
  bool troposphere = true;
  bool ionosphere = true;
  KlobucharCoefficients klobuchar = KlobucharCoefficients::representative();
  double relative_humidity = 0.5;
  LosTargets los_targets = LosTargets::Haps;
  double haps_clock_noise_std = 0.0;  // m
};

struct ScenarioConfig {
  ConstellationConfig constellation;
  std::vector<HapsConfig> haps;
  ReceiverConfig receiver;
  std::map<std::string, EnvironmentModel> environments;
  std::vector<ScheduleEntry> schedule;
  ErrorsConfig errors;
  RaimConfig raim;
  double elevation_mask = 15.0 * constants::kDegToRad;  // rad
  std::uint64_t seed = 1;

  /// Built-in defaults: 6x5 constellation, the six-platform layout, a
  /// Carleton-to-Rideau trajectory, suburban environment throughout.
  static ScenarioConfig defaults();

  /// Throws ConfigError naming the offending field.
  void validate() const;

  EcefPosition truth_position(double t) const;
  double truth_clock(double t) const;
  const EnvironmentModel& environment_at(double t) const;
  std::vector<HapsPlatform> haps_platforms() const;
  std::vector<CircularOrbit> satellites() const;
  SynthesisOptions synthesis_options() const;
  AtmosphereModel atmosphere() const;
};

/// Parses TOML text over the defaults. Unknown keys are rejected.
ScenarioConfig parse_config(std::string_view toml_text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Elevation/azimuth pairs (degrees) for the six reference platforms.
struct ReferenceAngles {
  double elevation_deg;
  double azimuth_deg;
};
std::vector<ReferenceAngles> reference_haps_angles();

}  // namespace hapsnav
