#include "hapsnav/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hapsnav/error.hpp"
#include "toml_lite.hpp"

namespace hapsnav {

using namespace constants;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, path + ": " + msg);
}

/// Typed access to one TOML table that remembers which keys were read so
/// leftovers can be reported as unknown.
class Section {
 public:
  Section(const toml::Table& t, std::string path) : t_(t), path_(std::move(path)) {}

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const toml::Value* find(const std::string& key) {
    seen_.insert(key);
    auto it = t_.find(key);
    return it == t_.end() ? nullptr : &it->second;
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) config_error(field(key), "expected a number, got " + toml::type_name(*v));
      out = v->as_number();
    }
  }
  void number(const std::string& key, std::optional<double>& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) config_error(field(key), "expected a number, got " + toml::type_name(*v));
      out = v->as_number();
    }
  }
  void integer(const std::string& key, int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_int()) config_error(field(key), "expected an integer, got " + toml::type_name(*v));
      out = static_cast<int>(std::get<std::int64_t>(v->data));
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_bool()) config_error(field(key), "expected a boolean, got " + toml::type_name(*v));
      out = std::get<bool>(v->data);
    }
  }
  void boolean(const std::string& key, std::optional<bool>& out) {
    bool b = false;
    if (find(key)) {
      boolean(key, b);
      out = b;
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) config_error(field(key), "expected a string, got " + toml::type_name(*v));
      out = v->as_string();
    }
  }
  void numbers4(const std::string& key, std::array<double, 4>& out) {
    if (const auto* v = find(key)) {
      if (!v->is_array() || v->as_array().size() != 4) {
        config_error(field(key), "expected an array of 4 numbers");
      }
      for (std::size_t i = 0; i < 4; ++i) {
        const auto& e = v->as_array()[i];
        if (!e.is_number()) config_error(field(key) + "[" + std::to_string(i) + "]", "expected a number");
        out[i] = e.as_number();
      }
    }
  }

  void reject_unknown() const {
    for (const auto& [k, v] : t_) {
      if (seen_.count(k) == 0) config_error(field(k), "unknown key");
    }
  }

 private:
  const toml::Table& t_;
  std::string path_;
  std::set<std::string> seen_;
};

const toml::Table& as_table(const toml::Value& v, const std::string& path) {
  if (!v.is_table()) config_error(path, "expected a table, got " + toml::type_name(v));
  return v.as_table();
}

void read_environment(Section& parent, const std::string& key, EnvironmentModel& env) {
  const toml::Value* v = parent.find(key);
  if (v == nullptr) return;
  const std::string path = parent.field(key);
  Section s(as_table(*v, path), path);
  bool open = env.los.open;
  s.boolean("los_open", open);
  env.los.open = open;
  s.number("los_slope_per_deg", env.los.slope_per_deg);
  s.number("los_el50_deg", env.los.el50_deg);
  s.number("sat_error_tau_s", env.sat_error_tau);
  s.number("sat_error_sigma_m", env.sat_error_sigma);
  s.number("haps_error_std_m", env.haps_error_std);
  s.integer("sat_cap", env.sat_cap);
  s.reject_unknown();
  if (env.sat_error_tau <= 0.0) config_error(path + ".sat_error_tau_s", "must be > 0");
  if (env.sat_error_sigma < 0.0) config_error(path + ".sat_error_sigma_m", "must be >= 0");
  if (env.haps_error_std < 0.0) config_error(path + ".haps_error_std_m", "must be >= 0");
  if (env.sat_cap < 0) config_error(path + ".sat_cap", "must be >= 0");
}

LosTargets parse_los_targets(const std::string& s, const std::string& path) {
  if (s == "none") return LosTargets::None;
  if (s == "haps") return LosTargets::Haps;
  if (s == "all") return LosTargets::All;
  config_error(path, "expected one of none, haps, all");
}

ResidualStdMode parse_std_mode(const std::string& s, const std::string& path) {
  if (s == "recompute") return ResidualStdMode::Recompute;
  if (s == "first_iteration") return ResidualStdMode::FirstIteration;
  config_error(path, "expected recompute or first_iteration");
}

}  // namespace

std::vector<ReferenceAngles> reference_haps_angles() {
  return {{81.087, -14.210}, {24.054, -128.878}, {27.952, 68.022},
          {32.450, 171.477}, {36.554, 2.204},    {33.805, -57.884}};
}

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig c;
  int n = 1;
  for (const auto& a : reference_haps_angles()) {
    HapsConfig h;
    h.id = "H" + std::to_string(n++);
    h.elevation_deg = a.elevation_deg;
    h.azimuth_deg = a.azimuth_deg;
    c.haps.push_back(h);
  }
  c.receiver.waypoints = {{0.0, 45.3850, -75.6972, 70.0}, {699.0, 45.4275, -75.6920, 70.0}};
  c.environments = {{"open", EnvironmentModel::open()},
                    {"suburban", EnvironmentModel::suburban()},
                    {"dense_urban", EnvironmentModel::dense_urban()}};
  c.schedule = {{0.0, "suburban"}};
  return c;
}

void ScenarioConfig::validate() const {
  if (!(elevation_mask >= 0.0 && elevation_mask <= 30.0 * kDegToRad + 1e-12)) {
    config_error("elevation_mask_deg", "must lie in [0, 30]");
  }
  if (!(receiver.epoch_interval > 0.0)) config_error("receiver.epoch_interval_s", "must be > 0");
  if (receiver.n_epochs < 0) config_error("receiver.n_epochs", "must be >= 0");
  if (receiver.waypoints.empty()) config_error("receiver.waypoints", "at least one waypoint required");
  for (std::size_t i = 1; i < receiver.waypoints.size(); ++i) {
    if (!(receiver.waypoints[i].t > receiver.waypoints[i - 1].t)) {
      config_error("receiver.waypoints[" + std::to_string(i) + "]", "times must increase strictly");
    }
  }
  if (constellation.planes < 1 || constellation.sats_per_plane < 1) {
    config_error("constellation", "planes and sats_per_plane must be >= 1");
  }
  if (!(constellation.semi_major_axis > kWgs84A)) {
    config_error("constellation.semi_major_axis_m", "must exceed the Earth radius");
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < haps.size(); ++i) {
    const std::string path = "haps[" + std::to_string(i) + "]";
    const HapsConfig& h = haps[i];
    if (h.id.empty()) config_error(path + ".id", "must not be empty");
    if (!ids.insert(h.id).second) config_error(path + ".id", "duplicate id " + h.id);
    const bool by_angles = h.elevation_deg.has_value() || h.azimuth_deg.has_value();
    const bool by_center = h.latitude_deg.has_value() || h.longitude_deg.has_value();
    if (by_angles == by_center) {
      config_error(path, "give either elevation_deg/azimuth_deg or latitude_deg/longitude_deg");
    }
    if (by_angles && !(h.elevation_deg && h.azimuth_deg)) {
      config_error(path, "elevation_deg and azimuth_deg must both be set");
    }
    if (by_center && !(h.latitude_deg && h.longitude_deg)) {
      config_error(path, "latitude_deg and longitude_deg must both be set");
    }
    if (h.elevation_deg && !(*h.elevation_deg > 0.0 && *h.elevation_deg <= 90.0)) {
      config_error(path + ".elevation_deg", "must lie in (0, 90]");
    }
    if (h.orbit_radius < 0.0) config_error(path + ".orbit_radius_m", "must be >= 0");
    if (!(h.lap_seconds > 0.0)) config_error(path + ".lap_s", "must be > 0");
  }
  if (schedule.empty()) config_error("environment.schedule", "at least one entry required");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const std::string path = "environment.schedule[" + std::to_string(i) + "]";
    if (environments.count(schedule[i].environment) == 0) {
      config_error(path + ".environment", "unknown environment " + schedule[i].environment);
    }
    if (i > 0 && !(schedule[i].start > schedule[i - 1].start)) {
      config_error(path + ".start_s", "start times must increase strictly");
    }
  }
  if (!(raim.alpha0 > 0.0 && raim.alpha0 < 1.0)) config_error("raim.alpha0", "must lie in (0, 1)");
  if (raim.danish_t && !(*raim.danish_t > 0.0)) config_error("raim.danish_t", "must be > 0");
  if (raim.max_iterations < 1) config_error("raim.max_iterations", "must be >= 1");
}

EcefPosition ScenarioConfig::truth_position(double t) const {
  const auto& w = receiver.waypoints;
  auto ecef = [](const Waypoint& p) {
    return geodetic_to_ecef(GeodeticPosition::from_degrees(p.latitude_deg, p.longitude_deg, p.height));
  };
  if (w.size() == 1 || t <= w.front().t) return ecef(w.front());
  if (t >= w.back().t) return ecef(w.back());
  const auto it = std::upper_bound(w.begin(), w.end(), t,
                                   [](double v, const Waypoint& p) { return v < p.t; });
  const Waypoint& b = *it;
  const Waypoint& a = *(it - 1);
  const double f = (t - a.t) / (b.t - a.t);
  return EcefPosition::from(ecef(a).vec() + f * (ecef(b).vec() - ecef(a).vec()));
}

double ScenarioConfig::truth_clock(double t) const {
  return receiver.clock_offset + receiver.clock_drift * t;
}

const EnvironmentModel& ScenarioConfig::environment_at(double t) const {
  const ScheduleEntry* active = &schedule.front();
  for (const auto& s : schedule) {
    if (t >= s.start) active = &s;
  }
  return environments.at(active->environment);
}

std::vector<HapsPlatform> ScenarioConfig::haps_platforms() const {
  const Waypoint& a = receiver.waypoints.front();
  const GeodeticPosition anchor = GeodeticPosition::from_degrees(a.latitude_deg, a.longitude_deg, a.height);
  std::vector<HapsPlatform> out;
  for (const auto& h : haps) {
    const double rate = 2.0 * kPi / h.lap_seconds;
    HapsPlatform p;
    if (h.elevation_deg) {
      p = haps_from_elevation_azimuth(anchor, *h.elevation_deg * kDegToRad,
                                      *h.azimuth_deg * kDegToRad, h.height, h.orbit_radius, rate);
    } else {
      p.center = GeodeticPosition::from_degrees(*h.latitude_deg, *h.longitude_deg, h.height);
      p.orbit_radius = h.orbit_radius;
      p.angular_rate = rate;
    }
    p.id = h.id;
    p.clock_offset = h.clock_offset;
    out.push_back(p);
  }
  return out;
}

std::vector<CircularOrbit> ScenarioConfig::satellites() const {
  return walker_constellation(constellation.planes, constellation.sats_per_plane,
                              constellation.semi_major_axis,
                              constellation.inclination_deg * kDegToRad);
}

AtmosphereModel ScenarioConfig::atmosphere() const {
  AtmosphereModel m;
  m.klobuchar = errors.klobuchar;
  m.relative_humidity = errors.relative_humidity;
  m.troposphere = errors.troposphere;
  m.ionosphere = errors.ionosphere;
  return m;
}

SynthesisOptions ScenarioConfig::synthesis_options() const {
  SynthesisOptions o;
  o.elevation_mask = elevation_mask;
  o.los_targets = errors.los_targets;
  o.cn0.jitter_std = errors.cn0_jitter_std;
  o.atmosphere = atmosphere();
  o.gps_time_offset = receiver.start_gps_sow;
  o.haps_clock_noise_std = errors.haps_clock_noise_std;
  return o;
}

ScenarioConfig parse_config(std::string_view toml_text) {
  const toml::Table root = toml::parse(toml_text);
  ScenarioConfig c = ScenarioConfig::defaults();
  Section top(root, "");

  std::optional<double> seed;
  top.number("seed", seed);
  if (seed) {
    if (*seed < 0.0 || std::floor(*seed) != *seed) config_error("seed", "must be a non-negative integer");
    c.seed = static_cast<std::uint64_t>(*seed);
  }
  double mask_deg = c.elevation_mask * kRadToDeg;
  top.number("elevation_mask_deg", mask_deg);
  c.elevation_mask = mask_deg * kDegToRad;

  if (const auto* v = top.find("constellation")) {
    Section s(as_table(*v, "constellation"), "constellation");
    s.integer("planes", c.constellation.planes);
    s.integer("sats_per_plane", c.constellation.sats_per_plane);
    s.number("semi_major_axis_m", c.constellation.semi_major_axis);
    s.number("inclination_deg", c.constellation.inclination_deg);
    s.reject_unknown();
  }

  if (const auto* v = top.find("haps")) {
    if (!v->is_array()) config_error("haps", "expected an array of tables ([[haps]])");
    c.haps.clear();
    const auto& arr = v->as_array();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "haps[" + std::to_string(i) + "]";
      Section s(as_table(arr[i], path), path);
      HapsConfig h;
      h.id = "H" + std::to_string(i + 1);
      s.string("id", h.id);
      s.number("elevation_deg", h.elevation_deg);
      s.number("azimuth_deg", h.azimuth_deg);
      s.number("latitude_deg", h.latitude_deg);
      s.number("longitude_deg", h.longitude_deg);
      s.number("height_m", h.height);
      s.number("orbit_radius_m", h.orbit_radius);
      s.number("lap_s", h.lap_seconds);
      s.number("clock_offset_s", h.clock_offset);
      s.reject_unknown();
      c.haps.push_back(h);
    }
  }

  if (const auto* v = top.find("receiver")) {
    Section s(as_table(*v, "receiver"), "receiver");
    s.number("epoch_interval_s", c.receiver.epoch_interval);
    s.integer("n_epochs", c.receiver.n_epochs);
    s.number("clock_offset_s", c.receiver.clock_offset);
    s.number("clock_drift", c.receiver.clock_drift);
    s.number("start_gps_sow", c.receiver.start_gps_sow);
    if (const auto* w = s.find("waypoints")) {
      const std::string path = s.field("waypoints");
      if (!w->is_array()) config_error(path, "expected an array of [t_s, lat_deg, lon_deg, height_m]");
      c.receiver.waypoints.clear();
      const auto& arr = w->as_array();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        if (!arr[i].is_array() || arr[i].as_array().size() != 4) {
          config_error(p, "expected [t_s, lat_deg, lon_deg, height_m]");
        }
        double vals[4];
        for (std::size_t k = 0; k < 4; ++k) {
          const auto& e = arr[i].as_array()[k];
          if (!e.is_number()) config_error(p + "[" + std::to_string(k) + "]", "expected a number");
          vals[k] = e.as_number();
        }
        c.receiver.waypoints.push_back({vals[0], vals[1], vals[2], vals[3]});
      }
    }
    s.reject_unknown();
  }

  if (const auto* v = top.find("environment")) {
    Section s(as_table(*v, "environment"), "environment");
    read_environment(s, "open", c.environments["open"]);
    read_environment(s, "suburban", c.environments["suburban"]);
    read_environment(s, "dense_urban", c.environments["dense_urban"]);
    std::string single;
    s.string("active", single);
    if (!single.empty()) c.schedule = {{0.0, single}};
    if (const auto* sch = s.find("schedule")) {
      if (!single.empty()) config_error("environment", "give either active or schedule, not both");
      const std::string path = s.field("schedule");
      if (!sch->is_array()) config_error(path, "expected an array of {start_s, environment}");
      c.schedule.clear();
      const auto& arr = sch->as_array();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        Section e(as_table(arr[i], p), p);
        ScheduleEntry entry;
        e.number("start_s", entry.start);
        e.string("environment", entry.environment);
        e.reject_unknown();
        c.schedule.push_back(entry);
      }
    }
    s.reject_unknown();
  }

  if (const auto* v = top.find("errors")) {
    Section s(as_table(*v, "errors"), "errors");
    s.number("cn0_jitter_std_dbhz", c.errors.cn0_jitter_std);
    s.boolean("troposphere", c.errors.troposphere);
    s.boolean("ionosphere", c.errors.ionosphere);
    s.numbers4("klobuchar_alpha", c.errors.klobuchar.alpha);
    s.numbers4("klobuchar_beta", c.errors.klobuchar.beta);
    s.number("relative_humidity", c.errors.relative_humidity);
    std::string los;
    s.string("los_targets", los);
    if (!los.empty()) c.errors.los_targets = parse_los_targets(los, "errors.los_targets");
    s.number("haps_clock_noise_std_m", c.errors.haps_clock_noise_std);
    s.reject_unknown();
    if (c.errors.cn0_jitter_std < 0.0) config_error("errors.cn0_jitter_std_dbhz", "must be >= 0");
    if (c.errors.relative_humidity < 0.0 || c.errors.relative_humidity > 1.0) {
      config_error("errors.relative_humidity", "must lie in [0, 1]");
    }
    if (c.errors.haps_clock_noise_std < 0.0) config_error("errors.haps_clock_noise_std_m", "must be >= 0");
  }

  if (const auto* v = top.find("raim")) {
    Section s(as_table(*v, "raim"), "raim");
    s.number("alpha0", c.raim.alpha0);
    s.number("danish_t", c.raim.danish_t);
    std::string mode;
    s.string("residual_std", mode);
    if (!mode.empty()) c.raim.residual_std_mode = parse_std_mode(mode, "raim.residual_std");
    s.integer("max_iterations", c.raim.max_iterations);
    s.boolean("latch_flags", c.raim.latch_flags);
    s.reject_unknown();
  }

  top.reject_unknown();
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace hapsnav
