#include "hapsnav/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "hapsnav/constants.hpp"
#include "hapsnav/error.hpp"

namespace hapsnav {

using namespace constants;

namespace {

constexpr std::uint64_t kStreamErrors = 1;
constexpr std::uint64_t kStreamSynthesis = 2;
constexpr std::uint64_t kStreamHapsSubset = 1000;

[[noreturn]] void bad_variant(std::string_view text, const std::string& why) {
  throw Error(ErrorCode::ConfigError, "variants: '" + std::string(text) + "' " + why);
}

std::optional<int> leading_int(std::string_view& s) {
  std::size_t n = 0;
  while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
  if (n == 0) return std::nullopt;
  int v = 0;
  std::from_chars(s.data(), s.data() + n, v);
  s.remove_prefix(n);
  return v;
}

EpochRow make_row(double t, const EcefPosition& truth, const EpochSolution& sol, int enabled) {
  EpochRow row;
  row.t = t;
  row.truth = truth;
  row.status = sol.status;
  row.converged = sol.converged;
  row.raim_applied = sol.raim_applied;
  row.raim_enabled_events = enabled;
  row.n_sat = sol.count(SourceKind::Satellite);
  row.n_haps = sol.count(SourceKind::Haps);
  if (sol.converged) {
    row.estimate = sol.position;
    row.hdop = sol.hdop;
    row.vdop = sol.vdop;
    row.error_3d = (sol.position.vec() - truth.vec()).norm();
  }
  return row;
}

EpochRow solve_row(double t, const EcefPosition& truth, std::span<const Observation> obs,
                   std::span<const SourceState> sources, const DelaysProvider& delays,
                   const SolverConfig& scfg, const RaimConfig& rcfg, bool raim) {
  if (raim) {
    const RaimSolution r = solve_epoch_raim(obs, sources, delays, scfg, rcfg);
    return make_row(t, truth, r.solution, r.diagnostics.enabled_count);
  }
  return make_row(t, truth, solve_epoch(obs, sources, delays, scfg), 0);
}

/// Epoch-by-epoch simulation of one seed for all variants.
std::vector<CampaignResult> run_seed(const ScenarioConfig& cfg,
                                     std::span<const SystemVariant> variants,
                                     std::uint64_t seed) {
  std::vector<CampaignResult> out(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    out[v].variant = variants[v];
    out[v].seed = seed;
    out[v].rows.reserve(static_cast<std::size_t>(cfg.receiver.n_epochs));
  }

  std::vector<Emitter> emitters;
  for (const auto& s : cfg.satellites()) emitters.emplace_back(s);
  const std::vector<HapsPlatform> platforms = cfg.haps_platforms();
  for (const auto& h : platforms) emitters.emplace_back(h);
  std::vector<std::string> sat_ids;
  for (const auto& e : emitters) {
    if (emitter_kind(e) == SourceKind::Satellite) sat_ids.push_back(emitter_id(e));
  }
  std::vector<std::string> haps_ids;
  for (const auto& h : platforms) haps_ids.push_back(h.id);

  const SynthesisOptions synth = cfg.synthesis_options();
  const AtmosphereModel atmosphere = cfg.atmosphere();
  SolverConfig scfg;
  scfg.elevation_mask = cfg.elevation_mask;

  GaussMarkovBank bank;
  std::vector<SourceState> sources(emitters.size());
  std::vector<Observation> filtered;

  for (int k = 0; k < cfg.receiver.n_epochs; ++k) {
    const double t = k * cfg.receiver.epoch_interval;
    const EpochTruth truth{t, cfg.truth_position(t), cfg.truth_clock(t)};
    const EnvironmentModel& env = cfg.environment_at(t);

    for (std::size_t i = 0; i < emitters.size(); ++i) {
      sources[i] = emission_state(emitters[i], truth.position, t).state;
    }

    bank.set_parameters(env.sat_error_tau, env.sat_error_sigma);
    std::mt19937_64 err_rng = substream(seed, static_cast<std::uint64_t>(k), kStreamErrors);
    bank.advance(sat_ids, cfg.receiver.epoch_interval, err_rng);

    std::mt19937_64 syn_rng = substream(seed, static_cast<std::uint64_t>(k), kStreamSynthesis);
    const std::vector<Observation> obs = synthesize_epoch(truth, sources, env, synth, bank, syn_rng);
    const DelaysProvider delays = make_delays_provider(atmosphere, cfg.receiver.start_gps_sow + t);

    for (std::size_t v = 0; v < variants.size(); ++v) {
      const SystemVariant& var = variants[v];
      std::unordered_set<std::string> chosen;
      if (var.n_haps >= static_cast<int>(haps_ids.size())) {
        chosen.insert(haps_ids.begin(), haps_ids.end());
      } else if (var.n_haps > 0) {
        // Same subset for every variant with this HAPS count at this epoch.
        std::vector<std::string> pool = haps_ids;
        std::mt19937_64 pick_rng = substream(seed, static_cast<std::uint64_t>(k),
                                             kStreamHapsSubset + static_cast<std::uint64_t>(var.n_haps));
        for (std::size_t i = 0; i + 1 < pool.size(); ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
          std::swap(pool[i], pool[pick(pick_rng)]);
        }
        chosen.insert(pool.begin(), pool.begin() + var.n_haps);
      }
      filtered.clear();
      for (const auto& o : obs) {
        if (o.kind == SourceKind::Satellite ? var.use_gps : chosen.count(o.source_id) != 0) {
          filtered.push_back(o);
        }
      }
      out[v].rows.push_back(
          solve_row(t, truth.position, filtered, sources, delays, scfg, cfg.raim, var.raim));
    }
  }
  return out;
}

}  // namespace

SystemVariant SystemVariant::parse(std::string_view text) {
  SystemVariant v;
  v.name = std::string(text);
  std::string_view s = text;
  constexpr std::string_view kRaim = "+raim";
  if (s.size() >= kRaim.size() && s.substr(s.size() - kRaim.size()) == kRaim) {
    v.raim = true;
    s.remove_suffix(kRaim.size());
  }
  if (s.substr(0, 3) == "gps") {
    v.use_gps = true;
    s.remove_prefix(3);
    if (s.empty()) return v;
    if (s.front() != '+') bad_variant(text, "is not a known system");
    s.remove_prefix(1);
  } else {
    v.use_gps = false;
  }
  const auto n = leading_int(s);
  if (!n || s != "haps") bad_variant(text, "is not a known system (expected gps, gps+<k>haps or <k>haps)");
  v.n_haps = *n;
  return v;
}

void SystemVariant::validate(int available_haps) const {
  if (n_haps < 0 || n_haps > available_haps) {
    bad_variant(name, "needs " + std::to_string(n_haps) + " HAPS but " +
                          std::to_string(available_haps) + " are configured");
  }
  if (!use_gps && n_haps < 4) bad_variant(name, "a HAPS-only system needs at least 4 platforms");
}

std::vector<SystemVariant> parse_variants(std::string_view list) {
  std::vector<SystemVariant> out;
  while (!list.empty()) {
    const std::size_t comma = list.find(',');
    const std::string_view item = list.substr(0, comma);
    if (item.empty()) bad_variant(list, "contains an empty entry");
    out.push_back(SystemVariant::parse(item));
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "variants: list is empty");
  return out;
}

std::vector<double> CampaignResult::errors() const {
  std::vector<double> e;
  for (const auto& r : rows) {
    if (r.available() && std::isfinite(r.error_3d)) e.push_back(r.error_3d);
  }
  return e;
}

long CampaignResult::raim_enabled_events() const {
  long n = 0;
  for (const auto& r : rows) n += r.raim_enabled_events;
  return n;
}

CampaignSummary CampaignResult::summary() const {
  CampaignSummary s;
  s.epochs = rows.size();
  for (const auto& r : rows) s.available_epochs += r.available() ? 1 : 0;
  if (!rows.empty()) s.availability_pct = availability(rows);
  const std::vector<double> e = errors();
  if (!e.empty()) {
    s.p50 = percentile(e, 50.0);
    s.p90 = percentile(e, 90.0);
    s.p95 = percentile(e, 95.0);
  }
  s.raim_enabled_events = raim_enabled_events();
  return s;
}

std::vector<CampaignResult> run_campaign(const ScenarioConfig& cfg,
                                         std::span<const SystemVariant> variants,
                                         std::span<const std::uint64_t> seeds,
                                         const CampaignOptions& opts) {
  cfg.validate();
  for (const auto& v : variants) v.validate(static_cast<int>(cfg.haps.size()));

  std::vector<std::vector<CampaignResult>> per_seed(seeds.size());
  unsigned threads = opts.threads != 0 ? opts.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(seeds.size())));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        per_seed[i] = run_seed(cfg, variants, seeds[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<CampaignResult> out;
  out.reserve(variants.size() * seeds.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t s = 0; s < seeds.size(); ++s) out.push_back(std::move(per_seed[s][v]));
  }
  return out;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "percentile: empty input");
  if (!(q >= 0.0 && q <= 100.0)) throw Error(ErrorCode::InvalidArgument, "percentile: q must lie in [0, 100]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  // Small tolerance so q/100 * n landing on an integer is not pushed up by rounding.
  auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

double availability(std::span<const EpochRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "availability: no epochs");
  std::size_t ok = 0;
  for (const auto& r : rows) ok += r.available() ? 1 : 0;
  return 100.0 * static_cast<double>(ok) / static_cast<double>(rows.size());
}

double raim_enabled_ratio(long a, long b) {
  if (b == 0) throw Error(ErrorCode::DivisionByZero, "raim_enabled_ratio: reference count is zero");
  return static_cast<double>(a) / static_cast<double>(b);
}

double raim_enabled_ratio(const CampaignResult& a, const CampaignResult& b) {
  return raim_enabled_ratio(a.raim_enabled_events(), b.raim_enabled_events());
}

DopGridSpec DopGridSpec::parse(std::string_view text) {
  double v[5];
  std::string_view s = text;
  for (int i = 0; i < 5; ++i) {
    const std::size_t comma = s.find(',');
    if ((i < 4) == (comma == std::string_view::npos)) {
      throw Error(ErrorCode::ConfigError, "grid: expected latmin,latmax,lonmin,lonmax,step");
    }
    const std::string_view item = s.substr(0, comma);
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v[i]);
    if (ec != std::errc() || p != item.data() + item.size()) {
      throw Error(ErrorCode::ConfigError, "grid: bad number '" + std::string(item) + "'");
    }
    if (i < 4) s.remove_prefix(comma + 1);
  }
  DopGridSpec g{v[0], v[1], v[2], v[3], v[4], 0.0};
  if (!(g.step_deg > 0.0)) throw Error(ErrorCode::ConfigError, "grid: step must be > 0");
  if (g.lat_max_deg < g.lat_min_deg || g.lon_max_deg < g.lon_min_deg) {
    throw Error(ErrorCode::ConfigError, "grid: max must not be below min");
  }
  if (g.lat_min_deg < -90.0 || g.lat_max_deg > 90.0) {
    throw Error(ErrorCode::ConfigError, "grid: latitude outside [-90, 90]");
  }
  return g;
}

std::vector<DopGridNode> dop_grid(std::span<const SourceState> sources, const DopGridSpec& spec,
                                  double elevation_mask) {
  const auto count = [&](double lo, double hi) {
    return static_cast<int>(std::floor((hi - lo) / spec.step_deg + 1e-9)) + 1;
  };
  const int n_lat = count(spec.lat_min_deg, spec.lat_max_deg);
  const int n_lon = count(spec.lon_min_deg, spec.lon_max_deg);
  std::vector<DopGridNode> out;
  out.reserve(static_cast<std::size_t>(n_lat) * static_cast<std::size_t>(n_lon));
  for (int i = 0; i < n_lat; ++i) {
    for (int j = 0; j < n_lon; ++j) {
      DopGridNode node;
      node.lat_deg = spec.lat_min_deg + i * spec.step_deg;
      node.lon_deg = spec.lon_min_deg + j * spec.step_deg;
      const GeodeticPosition geo =
          GeodeticPosition::from_degrees(node.lat_deg, node.lon_deg, spec.height);
      const EcefPosition rx = geodetic_to_ecef(geo);
      std::vector<Eigen::Vector3d> los;
      for (const auto& s : sources) {
        const ElevationAzimuth ea = elevation_azimuth(geo, rx, s.position);
        if (ea.elevation < elevation_mask) continue;
        los.push_back((s.position.vec() - rx.vec()).normalized());
      }
      node.n_visible = static_cast<int>(los.size());
      if (los.size() >= 4) {
        Eigen::MatrixXd H(static_cast<Eigen::Index>(los.size()), 4);
        for (std::size_t k = 0; k < los.size(); ++k) {
          H.row(static_cast<Eigen::Index>(k)) << -los[k].transpose(), 1.0;
        }
        const Eigen::Matrix4d normal = H.transpose() * H;
        try {
          detail::check_conditioning(normal);
          const Eigen::Matrix4d Q = normal.llt().solve(Eigen::Matrix4d::Identity());
          const Dop d = dop_from_covariance(ned_covariance(Q, geo));
          node.hdop = d.hdop;
          node.vdop = d.vdop;
        } catch (const Error&) {
          // Singular geometry stays NaN.
        }
      }
      out.push_back(node);
    }
  }
  return out;
}

std::vector<DopGridNode> dop_grid(const ScenarioConfig& cfg, const DopGridSpec& spec,
                                  bool include_satellites) {
  std::vector<SourceState> sources;
  for (const auto& h : cfg.haps_platforms()) sources.push_back(haps_position(h, 0.0));
  if (include_satellites) {
    for (const auto& s : cfg.satellites()) sources.push_back(circular_orbit_state(s, 0.0));
  }
  return dop_grid(sources, spec, cfg.elevation_mask);
}

CampaignResult run_rinex(const ObsFile& obs, const NavFile& nav, const HapsSidecar* sidecar,
                         const RinexRunOptions& opts) {
  CampaignResult result;
  result.variant.name = sidecar != nullptr ? "gps+haps" : "gps";
  result.variant.use_gps = true;
  result.variant.raim = opts.raim;
  if (opts.raim) result.variant.name += "+raim";
  if (sidecar != nullptr) {
    check_sidecar_alignment(*sidecar, obs);
    std::unordered_set<std::string> ids;
    for (const auto& e : sidecar->epochs) {
      for (const auto& r : e.rows) ids.insert(r.haps_id);
    }
    result.variant.n_haps = static_cast<int>(ids.size());
  }

  double interval = 1.0;
  if (obs.epochs.size() > 1) {
    interval = 1e300;
    for (std::size_t i = 1; i < obs.epochs.size(); ++i) {
      interval = std::min(interval, obs.epochs[i].gps_seconds() - obs.epochs[i - 1].gps_seconds());
    }
  }

  AtmosphereModel atmosphere;
  if (nav.header.klobuchar) atmosphere.klobuchar = *nav.header.klobuchar;

  for (const auto& ep : obs.epochs) {
    const double t = ep.gps_seconds();
    std::vector<Observation> observations;
    std::vector<SourceState> sources;
    for (const auto& o : ep.observations) {
      if (!o.valid) continue;
      const EphemerisRecord* eph = nullptr;
      try {
        eph = &select_ephemeris(nav, o.prn, t);
      } catch (const Error&) {
        continue;
      }
      if (eph->health != 0) continue;
      // Emission time from the pseudorange, refined once with the satellite clock.
      SourceState st;
      try {
        double t_tx = ep.sow - o.pseudorange / kSpeedOfLight;
        st = propagate_ephemeris(*eph, t_tx);
        t_tx -= st.clock_offset;
        st = propagate_ephemeris(*eph, t_tx);
      } catch (const Error&) {
        continue;
      }
      Observation ob;
      ob.source_id = st.id;
      ob.kind = SourceKind::Satellite;
      ob.epoch = t;
      ob.pseudorange = o.pseudorange;
      ob.cn0 = o.cn0;
      observations.push_back(ob);
      sources.push_back(st);
    }
    if (sidecar != nullptr) {
      if (const SidecarEpoch* se = sidecar->find(t, 0.5 * interval)) {
        for (const auto& r : se->rows) {
          SourceState st{r.haps_id, SourceKind::Haps, r.position, 0.0};
          Observation ob;
          ob.source_id = r.haps_id;
          ob.kind = SourceKind::Haps;
          ob.epoch = t;
          ob.pseudorange = r.pseudorange;
          ob.cn0 = r.cn0;
          observations.push_back(ob);
          sources.push_back(st);
        }
      }
    }
    const DelaysProvider delays = make_delays_provider(atmosphere, ep.sow);
    EpochRow row = solve_row(t, EcefPosition{NAN, NAN, NAN}, observations, sources, delays,
                             opts.solver, opts.raim_config, opts.raim);
    row.error_3d = NAN;
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace hapsnav
