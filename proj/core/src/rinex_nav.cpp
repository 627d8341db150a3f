#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "hapsnav/gps_time.hpp"
#include "hapsnav/rinex.hpp"
#include "rinex_common.hpp"

namespace hapsnav {

namespace rinex_detail {

std::string_view field(std::string_view line, std::size_t pos, std::size_t len) {
  if (pos >= line.size()) return {};
  return line.substr(pos, std::min(len, line.size() - pos));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view label(std::string_view line) { return trim(field(line, 60, 20)); }

std::optional<int> parse_int(std::string_view f) {
  f = trim(f);
  if (f.empty()) return std::nullopt;
  int v = 0;
  auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || p != f.data() + f.size()) return std::nullopt;
  return v;
}

bool read_line(std::istream& in, std::string& line, int& line_no) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ++line_no;
  return true;
}

int expand_year(int y) {
  if (y >= 100) return y;
  return y < 80 ? 2000 + y : 1900 + y;
}

}  // namespace rinex_detail

using namespace rinex_detail;

std::optional<double> parse_rinex_double(std::string_view f) {
  f = trim(f);
  if (f.empty()) return 0.0;
  std::string s(f);
  for (char& c : s) {
    if (c == 'D' || c == 'd') c = 'E';
  }
  const char* first = s.data();
  if (*first == '+') ++first;
  double v = 0.0;
  auto [p, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

namespace {

struct NavLayout {
  bool v3 = false;
  std::size_t data_col = 3;   // first data column on continuation lines
  std::size_t clock_col = 22; // first clock field on the record line
};

bool is_record_start(const std::string& line, const NavLayout& lay) {
  if (line.empty()) return false;
  if (lay.v3) return !std::isspace(static_cast<unsigned char>(line[0]));
  return trim(field(line, 0, 2)).size() > 0;
}

void parse_header(std::istream& in, int& line_no, NavFile& nav, NavLayout& lay) {
  std::string line;
  bool saw_version = false;
  KlobucharCoefficients k;
  bool have_a = false;
  bool have_b = false;
  auto read4 = [&](std::string_view text, std::size_t col, std::size_t width,
                   std::array<double, 4>& out) {
    for (std::size_t i = 0; i < 4; ++i) {
      const auto v = parse_rinex_double(field(text, col + i * width, width));
      if (!v) {
        throw Error(ErrorCode::MalformedHeader,
                    "line " + std::to_string(line_no) + ": bad ionosphere coefficient");
      }
      out[i] = *v;
    }
  };
  while (read_line(in, line, line_no)) {
    const std::string_view lab = label(line);
    if (lab == "RINEX VERSION / TYPE") {
      const auto v = parse_rinex_double(field(line, 0, 9));
      if (!v || *v < 2.0 || *v >= 4.0) {
        throw Error(ErrorCode::MalformedHeader,
                    "line " + std::to_string(line_no) + ": unsupported RINEX version");
      }
      nav.header.version = *v;
      const char type = line.size() > 20 ? line[20] : ' ';
      if (type != 'N') {
        throw Error(ErrorCode::MalformedHeader,
                    "line " + std::to_string(line_no) + ": not a GPS/mixed navigation file");
      }
      lay.v3 = *v >= 3.0;
      lay.data_col = lay.v3 ? 4 : 3;
      lay.clock_col = lay.v3 ? 23 : 22;
      saw_version = true;
    } else if (lab == "ION ALPHA") {
      read4(line, 2, 12, k.alpha);
      have_a = true;
    } else if (lab == "ION BETA") {
      read4(line, 2, 12, k.beta);
      have_b = true;
    } else if (lab == "IONOSPHERIC CORR") {
      const std::string_view kind = trim(field(line, 0, 4));
      if (kind == "GPSA") {
        read4(line, 5, 12, k.alpha);
        have_a = true;
      } else if (kind == "GPSB") {
        read4(line, 5, 12, k.beta);
        have_b = true;
      }
    } else if (lab == "LEAP SECONDS") {
      if (auto v = parse_int(field(line, 0, 6))) nav.header.leap_seconds = *v;
    } else if (lab == "END OF HEADER") {
      if (!saw_version) {
        throw Error(ErrorCode::MalformedHeader, "missing RINEX VERSION / TYPE line");
      }
      if (have_a && have_b) nav.header.klobuchar = k;
      return;
    }
  }
  throw Error(ErrorCode::MalformedHeader, "missing END OF HEADER");
}

/// Fills `eph` from the record's 8 lines. Returns an error message, or empty.
std::string decode_record(const std::vector<std::string>& lines, const NavLayout& lay,
                          EphemerisRecord& eph, std::size_t& bad_line) {
  const std::string& first = lines[0];
  int year = 0, month = 0, day = 0, hour = 0, minute = 0;
  double second = 0.0;
  std::optional<int> prn, y, mo, d, h, mi;
  std::optional<double> sec;
  if (lay.v3) {
    prn = parse_int(field(first, 1, 2));
    y = parse_int(field(first, 4, 4));
    mo = parse_int(field(first, 9, 2));
    d = parse_int(field(first, 12, 2));
    h = parse_int(field(first, 15, 2));
    mi = parse_int(field(first, 18, 2));
    sec = parse_rinex_double(field(first, 21, 2));
  } else {
    prn = parse_int(field(first, 0, 2));
    y = parse_int(field(first, 3, 2));
    mo = parse_int(field(first, 6, 2));
    d = parse_int(field(first, 9, 2));
    h = parse_int(field(first, 12, 2));
    mi = parse_int(field(first, 15, 2));
    sec = parse_rinex_double(field(first, 17, 5));
  }
  bad_line = 0;
  if (!prn || !y || !mo || !d || !h || !mi || !sec || *mo < 1 || *mo > 12 || *d < 1 || *d > 31) {
    return "bad PRN or epoch fields";
  }
  year = expand_year(*y);
  month = *mo;
  day = *d;
  hour = *h;
  minute = *mi;
  second = *sec;

  double v[8][4] = {};
  for (std::size_t li = 0; li < 8; ++li) {
    const std::string& l = lines[li];
    for (std::size_t k = 0; k < 4; ++k) {
      if (li == 0 && k == 0) continue;  // epoch occupies the first slot
      const std::size_t col = li == 0 ? lay.clock_col + (k - 1) * 19 : lay.data_col + k * 19;
      const auto val = parse_rinex_double(field(l, col, 19));
      if (!val) {
        bad_line = li;
        return "malformed numeric field '" + std::string(trim(field(l, col, 19))) + "'";
      }
      v[li][k] = *val;
    }
  }

  const GpsTime toc = gps_time_from_calendar(year, month, day, hour, minute, second);
  eph.prn = *prn;
  eph.toc = toc.sow;
  eph.af0 = v[0][1];
  eph.af1 = v[0][2];
  eph.af2 = v[0][3];
  eph.iode = static_cast<int>(v[1][0]);
  eph.crs = v[1][1];
  eph.delta_n = v[1][2];
  eph.m0 = v[1][3];
  eph.cuc = v[2][0];
  eph.e = v[2][1];
  eph.cus = v[2][2];
  eph.sqrt_a = v[2][3];
  eph.toe = v[3][0];
  eph.cic = v[3][1];
  eph.omega0 = v[3][2];
  eph.cis = v[3][3];
  eph.i0 = v[4][0];
  eph.crc = v[4][1];
  eph.omega = v[4][2];
  eph.omega_dot = v[4][3];
  eph.i_dot = v[5][0];
  eph.week = static_cast<int>(v[5][2]);
  eph.health = static_cast<int>(v[6][1]);
  eph.tgd = v[6][2];
  if (eph.week == 0) eph.week = toc.week;
  if (!eph.plausible()) return "implausible orbit (sqrt_a or eccentricity out of range)";
  return {};
}

}  // namespace

NavFile parse_nav(std::istream& in) {
  NavFile nav;
  NavLayout lay;
  int line_no = 0;
  parse_header(in, line_no, nav, lay);

  std::string line;
  bool have_pending = read_line(in, line, line_no);
  while (have_pending) {
    if (trim(line).empty()) {
      have_pending = read_line(in, line, line_no);
      continue;
    }
    if (!is_record_start(line, lay)) {
      nav.issues.push_back({ErrorCode::MalformedRecord, line_no, "unexpected continuation line"});
      have_pending = read_line(in, line, line_no);
      continue;
    }
    const int start_line = line_no;
    const char sys = lay.v3 ? line[0] : 'G';
    std::vector<std::string> lines{line};
    // Collect continuation lines until the next record start.
    have_pending = false;
    while (read_line(in, line, line_no)) {
      if (is_record_start(line, lay)) {
        have_pending = true;
        break;
      }
      lines.push_back(line);
    }
    if (sys != 'G') {
      ++nav.skipped_other_systems;
      continue;
    }
    if (lines.size() < 8) {
      nav.issues.push_back({ErrorCode::MalformedRecord, start_line,
                            "truncated record: " + std::to_string(lines.size()) +
                                " of 8 lines"});
      continue;
    }
    if (lines.size() > 8) {
      // Trailing blank lines are harmless; anything else is not.
      bool extra = false;
      for (std::size_t i = 8; i < lines.size(); ++i) extra |= !trim(lines[i]).empty();
      if (extra) {
        nav.issues.push_back({ErrorCode::MalformedRecord, start_line + 8,
                              "record has more than 8 lines"});
        continue;
      }
    }
    EphemerisRecord eph;
    std::size_t bad = 0;
    const std::string err = decode_record(lines, lay, eph, bad);
    if (!err.empty()) {
      nav.issues.push_back({ErrorCode::MalformedRecord, start_line + static_cast<int>(bad), err});
      continue;
    }
    nav.records[{eph.prn, eph.week * 604800.0 + eph.toe}] = eph;
  }
  return nav;
}

const EphemerisRecord& select_ephemeris(const NavFile& nav, int prn, double t) {
  const EphemerisRecord* best = nullptr;
  double best_dt = 0.0;
  for (auto it = nav.records.lower_bound({prn, -1e300}); it != nav.records.end() && it->first.first == prn;
       ++it) {
    const double dt = std::fabs(t - it->first.second);
    // Keys ascend in toe, so "<=" keeps the later record on ties.
    if (best == nullptr || dt <= best_dt) {
      best = &it->second;
      best_dt = dt;
    }
  }
  if (best == nullptr || best_dt >= 4.0 * 3600.0) {
    throw Error(ErrorCode::NoEphemeris, "no ephemeris for G" + std::to_string(prn) +
                                            " within 4 h of t = " + std::to_string(t));
  }
  return *best;
}

}  // namespace hapsnav
