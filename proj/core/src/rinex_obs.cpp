#include <cmath>
#include <string>
#include <vector>

#include "hapsnav/gps_time.hpp"
#include "hapsnav/rinex.hpp"
#include "rinex_common.hpp"

namespace hapsnav {

using namespace rinex_detail;

namespace {

struct EpochHeader {
  GpsTime time;
  int flag = 0;
  int count = 0;
  std::vector<std::string> sats;  // v2 only
};

void split_types(std::string_view text, std::vector<std::string>& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
}

ObsHeader parse_header(const std::vector<std::string>& lines, std::size_t& idx, char& file_system) {
  ObsHeader h;
  bool saw_version = false;
  char pending_sys = 0;
  int pending_count = 0;
  while (idx < lines.size()) {
    const std::string& line = lines[idx++];
    const int line_no = static_cast<int>(idx);
    const std::string_view lab = label(line);
    if (lab == "RINEX VERSION / TYPE") {
      const auto v = parse_rinex_double(field(line, 0, 9));
      if (!v || *v < 2.0 || *v >= 4.0) {
        throw Error(ErrorCode::MalformedHeader,
                    "line " + std::to_string(line_no) + ": unsupported RINEX version");
      }
      if (line.size() <= 20 || line[20] != 'O') {
        throw Error(ErrorCode::MalformedHeader,
                    "line " + std::to_string(line_no) + ": not an observation file");
      }
      h.version = *v;
      file_system = line.size() > 40 && line[40] != ' ' ? line[40] : 'G';
      saw_version = true;
    } else if (lab == "APPROX POSITION XYZ") {
      const auto x = parse_rinex_double(field(line, 0, 14));
      const auto y = parse_rinex_double(field(line, 14, 14));
      const auto z = parse_rinex_double(field(line, 28, 14));
      if (x && y && z) h.approx_position = EcefPosition{*x, *y, *z};
    } else if (lab == "# / TYPES OF OBSERV") {
      const auto n = parse_int(field(line, 0, 6));
      if (n) pending_count = *n;
      split_types(field(line, 6, 54), h.obs_types['G']);
    } else if (lab == "SYS / # / OBS TYPES") {
      if (line[0] != ' ') {
        pending_sys = line[0];
        const auto n = parse_int(field(line, 3, 3));
        if (!n) {
          throw Error(ErrorCode::MalformedHeader,
                      "line " + std::to_string(line_no) + ": bad observation type count");
        }
        h.obs_types[pending_sys].clear();
      }
      if (pending_sys != 0) split_types(field(line, 7, 53), h.obs_types[pending_sys]);
    } else if (lab == "END OF HEADER") {
      if (!saw_version) throw Error(ErrorCode::MalformedHeader, "missing RINEX VERSION / TYPE line");
      if (h.version < 3.0 && pending_count != static_cast<int>(h.obs_types['G'].size())) {
        throw Error(ErrorCode::MalformedHeader, "# / TYPES OF OBSERV count does not match the list");
      }
      return h;
    }
  }
  throw Error(ErrorCode::MalformedHeader, "missing END OF HEADER");
}

/// Like parse_rinex_double but a blank field is an error.
std::optional<double> required_double(std::string_view f) {
  if (trim(f).empty()) return std::nullopt;
  return parse_rinex_double(f);
}

std::optional<EpochHeader> parse_epoch_v2(const std::string& line) {
  const auto y = parse_int(field(line, 1, 2));
  const auto mo = parse_int(field(line, 4, 2));
  const auto d = parse_int(field(line, 7, 2));
  const auto h = parse_int(field(line, 10, 2));
  const auto mi = parse_int(field(line, 13, 2));
  const auto s = required_double(field(line, 15, 11));
  const auto flag = parse_int(field(line, 28, 1));
  const auto n = parse_int(field(line, 29, 3));
  if (!y || !mo || !d || !h || !mi || !s || !flag || !n) return std::nullopt;
  if (*mo < 1 || *mo > 12 || *d < 1 || *d > 31 || *h > 23 || *mi > 59 || *s < 0 || *s >= 61) {
    return std::nullopt;
  }
  EpochHeader e;
  e.time = gps_time_from_calendar(expand_year(*y), *mo, *d, *h, *mi, *s);
  e.flag = *flag;
  e.count = *n;
  return e;
}

std::optional<EpochHeader> parse_epoch_v3(const std::string& line) {
  if (line.empty() || line[0] != '>') return std::nullopt;
  const auto y = parse_int(field(line, 2, 4));
  const auto mo = parse_int(field(line, 7, 2));
  const auto d = parse_int(field(line, 10, 2));
  const auto h = parse_int(field(line, 13, 2));
  const auto mi = parse_int(field(line, 16, 2));
  const auto s = required_double(field(line, 18, 11));
  const auto flag = parse_int(field(line, 31, 1));
  const auto n = parse_int(field(line, 32, 3));
  if (!y || !mo || !d || !h || !mi || !s || !flag || !n) return std::nullopt;
  if (*mo < 1 || *mo > 12 || *d < 1 || *d > 31 || *h > 23 || *mi > 59 || *s < 0 || *s >= 61) {
    return std::nullopt;
  }
  EpochHeader e;
  e.time = gps_time_from_calendar(*y, *mo, *d, *h, *mi, *s);
  e.flag = *flag;
  e.count = *n;
  return e;
}

int type_index(const std::vector<std::string>& types, std::string_view a, std::string_view b) {
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (types[i] == a || types[i] == b) return static_cast<int>(i);
  }
  return -1;
}

/// Reads observation `k` from a 16-character-per-value layout starting at
/// `col0`. Returns nullopt for malformed text and 0 for blank fields.
std::optional<std::optional<double>> read_value(std::string_view text, std::size_t col0, int k) {
  if (k < 0) return std::optional<double>{};
  const std::string_view f = field(text, col0 + static_cast<std::size_t>(k) * 16, 14);
  if (trim(f).empty()) return std::optional<double>{};
  const auto v = parse_rinex_double(f);
  if (!v) return std::nullopt;
  return std::optional<double>{*v};
}

bool add_observation(ObsEpoch& ep, int prn, std::optional<double> pr, std::optional<double> cn0) {
  if (!pr) return false;
  RinexObservation o;
  o.prn = prn;
  o.pseudorange = *pr;
  if (cn0 && *cn0 > 0.0) o.cn0 = cn0;
  o.valid = *pr > 1e6 && *pr < 5e7;
  ep.observations.push_back(o);
  return true;
}

}  // namespace

ObsFile parse_obs(std::istream& in) {
  std::vector<std::string> lines;
  {
    std::string line;
    int n = 0;
    while (read_line(in, line, n)) lines.push_back(line);
  }
  ObsFile out;
  std::size_t idx = 0;
  char file_system = 'G';
  out.header = parse_header(lines, idx, file_system);
  const bool v3 = out.header.version >= 3.0;

  const std::vector<std::string>& gtypes = out.header.obs_types['G'];
  const int c1 = type_index(gtypes, v3 ? "C1C" : "C1", v3 ? "C1C" : "C1");
  const int s1 = type_index(gtypes, v3 ? "S1C" : "S1", v3 ? "S1C" : "S1");
  const std::size_t ntypes_g = gtypes.size();
  const std::size_t lines_per_sat_v2 = std::max<std::size_t>(1, (ntypes_g + 4) / 5);

  double last_t = -1e300;
  bool resync = false;
  while (idx < lines.size()) {
    const std::string& line = lines[idx];
    const int line_no = static_cast<int>(idx) + 1;
    if (trim(line).empty()) {
      ++idx;
      continue;
    }
    const auto hdr = v3 ? parse_epoch_v3(line) : parse_epoch_v2(line);
    if (!hdr) {
      if (!resync) {
        out.issues.push_back({ErrorCode::MalformedEpoch, line_no, "unparseable epoch header"});
        resync = true;
      }
      ++idx;
      continue;
    }
    resync = false;
    ++idx;

    if (hdr->flag > 1) {
      // Event records: `count` header-style lines follow (flag 6 carries
      // cycle-slip observations and is skipped the same way).
      idx += static_cast<std::size_t>(hdr->count);
      continue;
    }

    ObsEpoch ep;
    ep.line = line_no;
    ep.week = hdr->time.week;
    ep.sow = hdr->time.sow;
    bool bad = false;
    std::string why;
    int bad_line = line_no;

    if (v3) {
      for (int k = 0; k < hdr->count; ++k) {
        if (idx >= lines.size()) {
          bad = true;
          why = "truncated epoch: " + std::to_string(k) + " of " + std::to_string(hdr->count) +
                " satellites present";
          break;
        }
        const std::string& row = lines[idx];
        const int row_no = static_cast<int>(idx) + 1;
        if (!row.empty() && row[0] == '>') {
          bad = true;
          why = "truncated epoch: next epoch header reached early";
          break;
        }
        ++idx;
        const char sys = row.empty() ? ' ' : row[0];
        if (sys != 'G') {
          ++out.skipped_other_systems;
          continue;
        }
        const auto prn = parse_int(field(row, 1, 2));
        const auto pr = read_value(row, 3, c1);
        const auto cn = read_value(row, 3, s1);
        if (!prn || !pr || !cn) {
          if (!bad) bad_line = row_no;
          bad = true;
          why = "malformed observation row";
          continue;
        }
        add_observation(ep, *prn, *pr, *cn);
      }
    } else {
      // Satellite list: 12 per line from column 32, continued on later lines.
      std::vector<std::string> sats;
      std::string sat_line = line;
      while (static_cast<int>(sats.size()) < hdr->count) {
        const std::size_t in_line = sats.size() % 12;
        if (in_line == 0 && !sats.empty()) {
          if (idx >= lines.size()) break;
          sat_line = lines[idx++];
        }
        std::string id(field(sat_line, 32 + in_line * 3, 3));
        if (trim(id).empty()) break;
        if (id[0] == ' ') id[0] = file_system == 'M' ? 'G' : file_system;
        sats.push_back(id);
      }
      if (static_cast<int>(sats.size()) != hdr->count) {
        bad = true;
        why = "satellite list shorter than declared count";
      }
      const bool list_ok = !bad;
      for (std::size_t k = 0; list_ok && k < sats.size(); ++k) {
        if (idx + lines_per_sat_v2 > lines.size()) {
          bad = true;
          why = "truncated epoch: " + std::to_string(k) + " of " + std::to_string(sats.size()) +
                " satellites present";
          idx = lines.size();  // the partial record runs to end of file
          break;
        }
        std::string joined;
        for (std::size_t l = 0; l < lines_per_sat_v2; ++l) {
          std::string part = lines[idx + l];
          part.resize(80, ' ');
          joined += part;
        }
        const int row_no = static_cast<int>(idx) + 1;
        idx += lines_per_sat_v2;
        if (bad) continue;  // keep consuming the epoch's lines
        if (sats[k][0] != 'G') {
          ++out.skipped_other_systems;
          continue;
        }
        // Each continuation line holds five values; map index k to the joined layout.
        auto value_at = [&](int t) -> std::optional<std::optional<double>> {
          if (t < 0) return std::optional<double>{};
          const auto line_i = static_cast<std::size_t>(t / 5);
          const auto slot = t % 5;
          return read_value(std::string_view(joined).substr(line_i * 80), 0, slot);
        };
        const auto prn = parse_int(field(sats[k], 1, 2));
        const auto pr = value_at(c1);
        const auto cn = value_at(s1);
        if (!prn || !pr || !cn) {
          if (!bad) bad_line = row_no;
          bad = true;
          why = "malformed observation row";
          continue;
        }
        add_observation(ep, *prn, *pr, *cn);
      }
    }

    if (bad) {
      out.issues.push_back({ErrorCode::MalformedEpoch, bad_line, why});
      continue;
    }
    if (!(ep.gps_seconds() > last_t)) {
      out.issues.push_back({ErrorCode::MalformedEpoch, line_no, "timestamp not strictly increasing"});
      continue;
    }
    last_t = ep.gps_seconds();
    out.epochs.push_back(std::move(ep));
  }
  return out;
}

}  // namespace hapsnav
