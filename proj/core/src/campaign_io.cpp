#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "hapsnav/error.hpp"
#include "hapsnav/harness.hpp"

namespace hapsnav {

namespace {

void append_fixed(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  // Avoid "-0.000000" so equal values print identically.
  if (std::string_view(buf) == "-0.000000") {
    out += "0.000000";
  } else {
    out += buf;
  }
}

/// Rounded to 6 decimals so the JSON text matches the CSV precision.
nlohmann::ordered_json fixed_or_null(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return std::round(*v * 1e6) / 1e6;
}

nlohmann::ordered_json summary_object(const CampaignSummary& s) {
  nlohmann::ordered_json j;
  j["epochs"] = s.epochs;
  j["available_epochs"] = s.available_epochs;
  j["availability_pct"] = fixed_or_null(s.availability_pct);
  j["p50_m"] = fixed_or_null(s.p50);
  j["p90_m"] = fixed_or_null(s.p90);
  j["p95_m"] = fixed_or_null(s.p95);
  j["raim_enabled_events"] = s.raim_enabled_events;
  return j;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + p.string());
}

/// Variant names in first-appearance order with their results.
std::vector<std::pair<std::string, std::vector<const CampaignResult*>>> group_by_variant(
    std::span<const CampaignResult> results) {
  std::vector<std::pair<std::string, std::vector<const CampaignResult*>>> groups;
  for (const auto& r : results) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == r.variant.name; });
    if (it == groups.end()) {
      groups.push_back({r.variant.name, {}});
      it = groups.end() - 1;
    }
    it->second.push_back(&r);
  }
  return groups;
}

}  // namespace

std::string epochs_csv(const CampaignResult& r) {
  std::string out =
      "t_s,truth_x_m,truth_y_m,truth_z_m,est_x_m,est_y_m,est_z_m,error_3d_m,hdop,vdop,n_sat,"
      "n_haps,converged,raim_applied,raim_enabled_events,status\n";
  for (const auto& row : r.rows) {
    for (double v : {row.t, row.truth.x, row.truth.y, row.truth.z, row.estimate.x, row.estimate.y,
                     row.estimate.z, row.error_3d, row.hdop, row.vdop}) {
      append_fixed(out, v);
      out += ',';
    }
    out += std::to_string(row.n_sat) + ',' + std::to_string(row.n_haps) + ',' +
           (row.converged ? "1" : "0") + ',' + (row.raim_applied ? "1" : "0") + ',' +
           std::to_string(row.raim_enabled_events) + ',' + std::string(to_string(row.status)) +
           '\n';
  }
  return out;
}

std::string cdf_csv(std::span<const CampaignResult> results) {
  std::vector<double> all;
  for (const auto& r : results) {
    const auto e = r.errors();
    all.insert(all.end(), e.begin(), e.end());
  }
  std::sort(all.begin(), all.end());
  std::string out = "error_m,cdf\n";
  const double n = static_cast<double>(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    append_fixed(out, all[i]);
    out += ',';
    append_fixed(out, static_cast<double>(i + 1) / n);
    out += '\n';
  }
  return out;
}

std::string summary_json(std::span<const CampaignResult> results) {
  nlohmann::ordered_json root;
  root["percentile_rule"] = "nearest-rank";
  nlohmann::ordered_json variants = nlohmann::ordered_json::array();
  for (const auto& [name, group] : group_by_variant(results)) {
    nlohmann::ordered_json v;
    v["name"] = name;
    v["use_gps"] = group.front()->variant.use_gps;
    v["n_haps"] = group.front()->variant.n_haps;
    v["raim"] = group.front()->variant.raim;
    nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
    CampaignResult pooled;
    for (const CampaignResult* r : group) {
      nlohmann::ordered_json s = summary_object(r->summary());
      s["seed"] = r->seed;
      seeds.push_back(std::move(s));
      pooled.rows.insert(pooled.rows.end(), r->rows.begin(), r->rows.end());
    }
    v["seeds"] = std::move(seeds);
    v["pooled"] = summary_object(pooled.summary());
    variants.push_back(std::move(v));
  }
  root["variants"] = std::move(variants);
  return root.dump(2) + "\n";
}

std::string dopgrid_csv(std::span<const DopGridNode> nodes) {
  std::string out = "lat_deg,lon_deg,n_visible,hdop,vdop\n";
  for (const auto& n : nodes) {
    append_fixed(out, n.lat_deg);
    out += ',';
    append_fixed(out, n.lon_deg);
    out += ',' + std::to_string(n.n_visible) + ',';
    append_fixed(out, n.hdop);
    out += ',';
    append_fixed(out, n.vdop);
    out += '\n';
  }
  return out;
}

void write_campaign_outputs(const std::filesystem::path& dir,
                            std::span<const CampaignResult> results) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& r : results) {
    write_file(dir / ("epochs_" + r.variant.name + "_" + std::to_string(r.seed) + ".csv"),
               epochs_csv(r));
  }
  for (const auto& [name, group] : group_by_variant(results)) {
    std::vector<CampaignResult> copies;
    copies.reserve(group.size());
    for (const auto* r : group) copies.push_back(*r);
    write_file(dir / ("cdf_" + name + ".csv"), cdf_csv(copies));
  }
  write_file(dir / "summary.json", summary_json(results));
}

}  // namespace hapsnav
