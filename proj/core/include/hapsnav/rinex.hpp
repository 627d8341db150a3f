#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hapsnav/atmosphere.hpp"
#include "hapsnav/error.hpp"
#include "hapsnav/orbits.hpp"

namespace hapsnav {

/// One recoverable problem found while parsing; parsing continues.
struct ParseIssue {
  ErrorCode code = ErrorCode::MalformedRecord;
  int line = 0;  // 1-based
  std::string message;
};

struct NavHeader {
  double version = 0.0;
  int leap_seconds = 0;
  std::optional<KlobucharCoefficients> klobuchar;
};

struct NavFile {
  NavHeader header;
  /// Keyed by (prn, toe as absolute GPS seconds since the GPS epoch).
  std::map<std::pair<int, double>, EphemerisRecord> records;
  std::vector<ParseIssue> issues;
  int skipped_other_systems = 0;
};

struct ObsHeader {
  double version = 0.0;
  std::optional<EcefPosition> approx_position;
  /// Observation types per system letter ('G' for GPS).
  std::map<char, std::vector<std::string>> obs_types;
};

struct RinexObservation {
  int prn = 0;
  double pseudorange = 0.0;   // m
  std::optional<double> cn0;  // dB-Hz
  bool valid = true;          // pseudorange within (1e6, 5e7) m
};

struct ObsEpoch {
  int line = 0;
  int week = 0;
  double sow = 0.0;
  std::vector<RinexObservation> observations;

  double gps_seconds() const { return week * 604800.0 + sow; }
};

struct ObsFile {
  ObsHeader header;
  std::vector<ObsEpoch> epochs;
  std::vector<ParseIssue> issues;
  int skipped_other_systems = 0;
};

/// RINEX 2.11 / 3.0x GPS navigation. Throws MalformedHeader for an unusable
/// header; bad records are listed in `issues` and skipped.
NavFile parse_nav(std::istream& in);

/// RINEX 2.11 / 3.0x observations, keeping C1/C1C and S1/S1C for GPS.
/// Throws MalformedHeader; bad epochs are listed in `issues` and skipped.
ObsFile parse_obs(std::istream& in);

/// Record for `prn` with minimal |t - toe| (ties go to the later record).
/// `t` is absolute GPS seconds. Throws NoEphemeris beyond 4 h.
const EphemerisRecord& select_ephemeris(const NavFile& nav, int prn, double t);

/// Parses one RINEX floating-point field ("D" exponents accepted; blank is
/// zero). Returns nullopt for malformed text.
std::optional<double> parse_rinex_double(std::string_view field);

// ---------------------------------------------------------------------------
// HAPS sidecar CSV: t_gps_s,haps_id,x_m,y_m,z_m,pseudorange_m,cn0_dbhz
// ---------------------------------------------------------------------------

struct SidecarRow {
  double t = 0.0;  // absolute GPS seconds
  std::string haps_id;
  EcefPosition position;
  double pseudorange = 0.0;
  double cn0 = 0.0;
};

struct SidecarEpoch {
  double t = 0.0;
  std::vector<SidecarRow> rows;
};

struct HapsSidecar {
  std::vector<SidecarEpoch> epochs;  // sorted by time

  std::size_t row_count() const;
  /// Rows whose time is within `tolerance` of `t`; nullptr if none.
  const SidecarEpoch* find(double t, double tolerance) const;
};

inline constexpr const char* kSidecarHeader = "t_gps_s,haps_id,x_m,y_m,z_m,pseudorange_m,cn0_dbhz";

/// Throws SchemaError naming the row on bad input.
HapsSidecar load_haps_sidecar(std::istream& in);

/// Round-trippable CSV (17 significant digits).
std::string serialize_haps_sidecar(const HapsSidecar& s);

/// Checks every sidecar epoch lies within 0.5 * interval of an observation
/// epoch. Throws TimestampMisaligned.
void check_sidecar_alignment(const HapsSidecar& s, const ObsFile& obs);

/// Truth sample for sidecar synthesis.
struct TruthSample {
  double t = 0.0;  // absolute GPS seconds
  EcefPosition position;
  double clock_offset = 0.0;  // s
};

/// Reads `t_gps_s,x_m,y_m,z_m[,clock_s]` with a header row.
std::vector<TruthSample> load_truth_csv(std::istream& in);

/// Pseudoranges p = rho + c (dt - dT) + N(0, sigma) for each platform above
/// `elevation_mask` at each truth sample. Platform time is measured from the
/// first sample. C/N0 is fixed at `cn0`.
HapsSidecar synthesize_sidecar(std::span<const TruthSample> truth,
                               std::span<const HapsPlatform> platforms, double sigma,
                               std::uint64_t seed, double elevation_mask, double cn0 = 45.0);

}  // namespace hapsnav
