// hapsnav command-line driver: sim, rinex, dopmap, sidecar.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hapsnav/config.hpp"
#include "hapsnav/error.hpp"
#include "hapsnav/harness.hpp"
#include "hapsnav/rinex.hpp"

namespace fs = std::filesystem;
using namespace hapsnav;

namespace {

int report(std::string_view code, const std::string& message, int exit_code) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
  return exit_code;
}

/// "1,2,5-8" -> {1,2,5,6,7,8}.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::string_view s = text;
  auto number = [&](std::string_view item) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size()) {
      throw Error(ErrorCode::ConfigError, "seeds: bad value '" + std::string(item) + "'");
    }
    return v;
  };
  while (!s.empty()) {
    const std::size_t comma = s.find(',');
    const std::string_view item = s.substr(0, comma);
    const std::size_t dash = item.find('-');
    if (dash == std::string_view::npos) {
      out.push_back(number(item));
    } else {
      const std::uint64_t a = number(item.substr(0, dash));
      const std::uint64_t b = number(item.substr(dash + 1));
      if (b < a) throw Error(ErrorCode::ConfigError, "seeds: empty range '" + std::string(item) + "'");
      for (std::uint64_t v = a; v <= b; ++v) out.push_back(v);
    }
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "seeds: list is empty");
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return in;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << text;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void print_issues(const std::vector<ParseIssue>& issues, const std::string& file) {
  for (const auto& i : issues) {
    nlohmann::ordered_json j;
    j["warning"] = to_string(i.code);
    j["file"] = file;
    j["line"] = i.line;
    j["message"] = i.message;
    std::cerr << j.dump() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HAPS-aided GPS positioning toolkit"};
  app.require_subcommand(1);

  std::string config_path, seeds_text = "1", variants_text = "gps,gps+6haps", out_dir;
  unsigned threads = 0;
  auto* sim = app.add_subcommand("sim", "Run a simulated campaign");
  sim->add_option("--config", config_path, "Scenario TOML file")->required();
  sim->add_option("--seeds", seeds_text, "Seeds, e.g. 1,2,5-8");
  sim->add_option("--variants", variants_text, "Systems, e.g. gps,gps+6haps,4haps,gps+6haps+raim");
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::string obs_path, nav_path, haps_path;
  bool raim = false;
  auto* rinex = app.add_subcommand("rinex", "Solve RINEX observations");
  rinex->add_option("--obs", obs_path, "RINEX observation file")->required();
  rinex->add_option("--nav", nav_path, "RINEX navigation file")->required();
  rinex->add_option("--haps", haps_path, "HAPS sidecar CSV");
  rinex->add_flag("--raim", raim, "Apply C/N0-weighted RAIM");
  rinex->add_option("--out", out_dir, "Output directory")->required();

  std::string grid_text;
  bool with_sats = false;
  auto* dopmap = app.add_subcommand("dopmap", "DOP over a latitude/longitude grid");
  dopmap->add_option("--config", config_path, "Scenario TOML file")->required();
  dopmap->add_option("--grid", grid_text, "latmin,latmax,lonmin,lonmax,step (degrees)")->required();
  dopmap->add_flag("--with-satellites", with_sats, "Include the satellite constellation");
  dopmap->add_option("--out", out_dir, "Output directory")->required();

  std::string truth_path, sidecar_out;
  double sigma = 2.0;
  std::uint64_t seed = 1;
  auto* sidecar = app.add_subcommand("sidecar", "Synthesize a HAPS sidecar from a truth trajectory");
  sidecar->add_option("--config", config_path, "Scenario TOML file (platform layout)")->required();
  sidecar->add_option("--truth", truth_path, "CSV t_gps_s,x_m,y_m,z_m[,clock_s]")->required();
  sidecar->add_option("--sigma", sigma, "HAPS range noise std, m");
  sidecar->add_option("--seed", seed, "Noise seed");
  sidecar->add_option("--out", sidecar_out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("UsageError", e.what(), 2);
  }

  try {
    if (*sim) {
      const ScenarioConfig cfg = load_config(config_path);
      const auto seeds = parse_seeds(seeds_text);
      const auto variants = parse_variants(variants_text);
      const auto results = run_campaign(cfg, variants, seeds, CampaignOptions{threads});
      write_campaign_outputs(out_dir, results);
    } else if (*rinex) {
      auto obs_in = open_input(obs_path);
      const ObsFile obs = parse_obs(obs_in);
      auto nav_in = open_input(nav_path);
      const NavFile nav = parse_nav(nav_in);
      print_issues(obs.issues, obs_path);
      print_issues(nav.issues, nav_path);
      std::optional<HapsSidecar> haps;
      if (!haps_path.empty()) {
        auto in = open_input(haps_path);
        haps = load_haps_sidecar(in);
      }
      RinexRunOptions opts;
      opts.raim = raim;
      const CampaignResult r = run_rinex(obs, nav, haps ? &*haps : nullptr, opts);
      write_campaign_outputs(out_dir, std::span<const CampaignResult>(&r, 1));
    } else if (*dopmap) {
      const ScenarioConfig cfg = load_config(config_path);
      const DopGridSpec spec = DopGridSpec::parse(grid_text);
      const auto nodes = dop_grid(cfg, spec, with_sats);
      make_dir(out_dir);
      write_text(fs::path(out_dir) / "dopgrid.csv", dopgrid_csv(nodes));
    } else if (*sidecar) {
      const ScenarioConfig cfg = load_config(config_path);
      auto in = open_input(truth_path);
      const auto truth = load_truth_csv(in);
      const auto platforms = cfg.haps_platforms();
      const HapsSidecar s = synthesize_sidecar(truth, platforms, sigma, seed, cfg.elevation_mask);
      write_text(sidecar_out, serialize_haps_sidecar(s));
    }
  } catch (const Error& e) {
    return report(to_string(e.code()), e.what(), 1);
  } catch (const std::exception& e) {
    return report("InternalError", e.what(), 1);
  }
  return 0;
}
