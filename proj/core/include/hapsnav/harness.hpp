#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hapsnav/config.hpp"
#include "hapsnav/raim.hpp"
#include "hapsnav/rinex.hpp"
#include "hapsnav/solver.hpp"

namespace hapsnav {

/// A positioning system under test. Names: "gps", "gps+<k>haps", "<k>haps",
/// each optionally suffixed with "+raim".
struct SystemVariant {
  std::string name;
  bool use_gps = true;
  int n_haps = 0;
  bool raim = false;

  /// Throws ConfigError for unknown names.
  static SystemVariant parse(std::string_view text);
  /// Throws ConfigError when the variant cannot be built from the
  /// configured platform count or has no ranging sources.
  void validate(int available_haps) const;
};

/// Comma-separated variant names.
std::vector<SystemVariant> parse_variants(std::string_view list);

struct EpochRow {
  double t = 0.0;
  EcefPosition truth{NAN, NAN, NAN};
  EcefPosition estimate{NAN, NAN, NAN};
  double error_3d = NAN;  // m, NaN when no converged fix or no truth
  double hdop = NAN;
  double vdop = NAN;
  int n_sat = 0;   // sources accepted by the solver
  int n_haps = 0;
  bool converged = false;
  bool raim_applied = false;
  int raim_enabled_events = 0;
  SolveStatus status = SolveStatus::Unavailable;

  bool available() const { return converged && n_sat + n_haps >= 4; }
};

struct CampaignSummary {
  std::size_t epochs = 0;
  std::size_t available_epochs = 0;
  std::optional<double> availability_pct;  // unset for zero epochs
  std::optional<double> p50, p90, p95;     // unset without any error samples
  long raim_enabled_events = 0;
};

struct CampaignResult {
  SystemVariant variant;
  std::uint64_t seed = 0;
  std::vector<EpochRow> rows;

  /// Finite 3D errors of available epochs, in epoch order.
  std::vector<double> errors() const;
  long raim_enabled_events() const;
  CampaignSummary summary() const;
};

struct CampaignOptions {
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Runs every variant over every seed. All variants of one seed share the
/// truth trajectory and the synthesized observations; variants only filter
/// them. Results are ordered variant-major, then seed, regardless of
/// threading.
std::vector<CampaignResult> run_campaign(const ScenarioConfig& cfg,
                                         std::span<const SystemVariant> variants,
                                         std::span<const std::uint64_t> seeds,
                                         const CampaignOptions& opts = {});

/// Nearest-rank percentile: the value at rank ceil(q/100 * n) (minimum 1)
/// of the sorted input. Throws EmptyInput.
double percentile(std::span<const double> values, double q);

/// Percentage of rows with a converged fix from at least four sources.
/// Throws EmptyInput.
double availability(std::span<const EpochRow> rows);

/// Enabled-event count of `a` over that of `b`. Throws DivisionByZero when
/// `b` has none.
double raim_enabled_ratio(const CampaignResult& a, const CampaignResult& b);
double raim_enabled_ratio(long a, long b);

// ---------------------------------------------------------------------------
// DOP maps
// ---------------------------------------------------------------------------

struct DopGridSpec {
  double lat_min_deg = 0.0;
  double lat_max_deg = 0.0;
  double lon_min_deg = 0.0;
  double lon_max_deg = 0.0;
  double step_deg = 0.01;
  double height = 0.0;  // m

  /// "latmin,latmax,lonmin,lonmax,step". Throws ConfigError.
  static DopGridSpec parse(std::string_view text);
};

struct DopGridNode {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  int n_visible = 0;
  double hdop = NAN;  // NaN when fewer than four sources or singular
  double vdop = NAN;
};

/// DOP over the grid for the given emitters at their listed positions.
std::vector<DopGridNode> dop_grid(std::span<const SourceState> sources, const DopGridSpec& spec,
                                  double elevation_mask);

/// DOP of the configured platforms at t = 0 (optionally with satellites).
std::vector<DopGridNode> dop_grid(const ScenarioConfig& cfg, const DopGridSpec& spec,
                                  bool include_satellites = false);

// ---------------------------------------------------------------------------
// RINEX pipeline
// ---------------------------------------------------------------------------

struct RinexRunOptions {
  bool raim = false;
  SolverConfig solver;
  RaimConfig raim_config;
};

/// Solves every observation epoch with broadcast ephemerides and, when
/// given, the aligned sidecar HAPS ranges. Truth columns stay NaN.
CampaignResult run_rinex(const ObsFile& obs, const NavFile& nav, const HapsSidecar* sidecar,
                         const RinexRunOptions& opts);

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

std::string epochs_csv(const CampaignResult& r);
/// Pooled empirical CDF of the given results' errors: error_m,cdf.
std::string cdf_csv(std::span<const CampaignResult> results);
std::string summary_json(std::span<const CampaignResult> results);
std::string dopgrid_csv(std::span<const DopGridNode> nodes);

/// Writes epochs_<variant>_<seed>.csv, cdf_<variant>.csv and summary.json.
void write_campaign_outputs(const std::filesystem::path& dir,
                            std::span<const CampaignResult> results);

}  // namespace hapsnav
