#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "hapsnav/constants.hpp"
#include "hapsnav/rinex.hpp"
#include "hapsnav/scenario.hpp"

namespace hapsnav {

using namespace constants;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> to_double(const std::string& s) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first < last && *first == '+') ++first;
  double v = 0.0;
  auto [p, ec] = std::from_chars(first, last, v);
  if (first == last || ec != std::errc() || p != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

[[noreturn]] void schema_error(int row, const std::string& msg) {
  throw Error(ErrorCode::SchemaError, "row " + std::to_string(row) + ": " + msg);
}

}  // namespace

std::size_t HapsSidecar::row_count() const {
  std::size_t n = 0;
  for (const auto& e : epochs) n += e.rows.size();
  return n;
}

const SidecarEpoch* HapsSidecar::find(double t, double tolerance) const {
  auto it = std::lower_bound(epochs.begin(), epochs.end(), t - tolerance,
                             [](const SidecarEpoch& e, double v) { return e.t < v; });
  if (it != epochs.end() && std::fabs(it->t - t) <= tolerance) return &*it;
  return nullptr;
}

HapsSidecar load_haps_sidecar(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "empty sidecar (missing header row)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSidecarHeader) {
    throw Error(ErrorCode::SchemaError,
                std::string("header must be exactly '") + kSidecarHeader + "'");
  }
  HapsSidecar s;
  int row = 0;  // data rows, 1-based
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cols = split_csv(line);
    if (cols.size() != 7) schema_error(row, "expected 7 columns, got " + std::to_string(cols.size()));
    SidecarRow r;
    const auto t = to_double(cols[0]);
    const auto x = to_double(cols[2]);
    const auto y = to_double(cols[3]);
    const auto z = to_double(cols[4]);
    const auto pr = to_double(cols[5]);
    const auto cn = to_double(cols[6]);
    if (!t) schema_error(row, "bad t_gps_s");
    if (cols[1].empty()) schema_error(row, "empty haps_id");
    if (!x || !y || !z) schema_error(row, "bad position");
    if (!pr) schema_error(row, "bad pseudorange_m");
    if (!(*pr > 0.0)) schema_error(row, "pseudorange_m must be positive");
    if (!cn || *cn < 0.0) schema_error(row, "bad cn0_dbhz");
    r.t = *t;
    r.haps_id = cols[1];
    r.position = {*x, *y, *z};
    r.pseudorange = *pr;
    r.cn0 = *cn;
    if (!s.epochs.empty() && r.t == s.epochs.back().t) {
      s.epochs.back().rows.push_back(r);
    } else {
      if (!s.epochs.empty() && r.t < s.epochs.back().t) schema_error(row, "timestamps must not decrease");
      s.epochs.push_back({r.t, {r}});
    }
  }
  return s;
}

std::string serialize_haps_sidecar(const HapsSidecar& s) {
  std::string out = kSidecarHeader;
  out += '\n';
  char buf[512];
  for (const auto& e : s.epochs) {
    for (const auto& r : e.rows) {
      std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t,
                    r.haps_id.c_str(), r.position.x, r.position.y, r.position.z, r.pseudorange,
                    r.cn0);
      out += buf;
    }
  }
  return out;
}

void check_sidecar_alignment(const HapsSidecar& s, const ObsFile& obs) {
  if (s.epochs.empty()) return;
  if (obs.epochs.empty()) {
    throw Error(ErrorCode::TimestampMisaligned, "sidecar has rows but the observation file has no epochs");
  }
  double interval = 1.0;
  if (obs.epochs.size() > 1) {
    interval = 1e300;
    for (std::size_t i = 1; i < obs.epochs.size(); ++i) {
      interval = std::min(interval, obs.epochs[i].gps_seconds() - obs.epochs[i - 1].gps_seconds());
    }
  }
  const double tol = 0.5 * interval;
  for (const auto& e : s.epochs) {
    auto it = std::lower_bound(obs.epochs.begin(), obs.epochs.end(), e.t,
                               [](const ObsEpoch& o, double v) { return o.gps_seconds() < v; });
    double best = 1e300;
    if (it != obs.epochs.end()) best = std::fabs(it->gps_seconds() - e.t);
    if (it != obs.epochs.begin()) best = std::min(best, std::fabs((it - 1)->gps_seconds() - e.t));
    if (best > tol) {
      throw Error(ErrorCode::TimestampMisaligned,
                  "sidecar epoch t = " + std::to_string(e.t) + " is " + std::to_string(best) +
                      " s from the nearest observation epoch (tolerance " + std::to_string(tol) + " s)");
    }
  }
}

std::vector<TruthSample> load_truth_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "empty truth file");
  std::vector<TruthSample> out;
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cols = split_csv(line);
    if (cols.size() != 4 && cols.size() != 5) schema_error(row, "expected t_gps_s,x_m,y_m,z_m[,clock_s]");
    double v[5] = {0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto d = to_double(cols[i]);
      if (!d) schema_error(row, "bad number in column " + std::to_string(i + 1));
      v[i] = *d;
    }
    if (!out.empty() && !(v[0] > out.back().t)) schema_error(row, "timestamps must increase");
    out.push_back({v[0], {v[1], v[2], v[3]}, v[4]});
  }
  return out;
}

HapsSidecar synthesize_sidecar(std::span<const TruthSample> truth,
                               std::span<const HapsPlatform> platforms, double sigma,
                               std::uint64_t seed, double elevation_mask, double cn0) {
  HapsSidecar s;
  if (truth.empty()) return s;
  const double t0 = truth.front().t;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const TruthSample& ts = truth[k];
    std::mt19937_64 rng = substream(seed, k, 7);
    std::normal_distribution<double> normal(0.0, 1.0);
    SidecarEpoch e;
    e.t = ts.t;
    const GeodeticPosition geo = ecef_to_geodetic(ts.position);
    for (const auto& p : platforms) {
      const EmissionSolution em = emission_state(Emitter{p}, ts.position, ts.t - t0);
      const ElevationAzimuth ea = elevation_azimuth(geo, ts.position, em.state.position);
      const double noise = sigma * normal(rng);
      if (ea.elevation < elevation_mask) continue;
      SidecarRow r;
      r.t = ts.t;
      r.haps_id = p.id;
      r.position = em.state.position;
      r.pseudorange = sagnac_range(ts.position, em.state.position) +
                      kSpeedOfLight * (ts.clock_offset - em.state.clock_offset) + noise;
      r.cn0 = cn0;
      e.rows.push_back(r);
    }
    s.epochs.push_back(std::move(e));
  }
  return s;
}

}  // namespace hapsnav
