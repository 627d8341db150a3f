#pragma once

namespace hapsnav {

/// GPS week number and seconds of week.
struct GpsTime {
  int week = 0;
  double sow = 0.0;

  /// Continuous seconds since the GPS epoch (1980-01-06 00:00:00).
  double seconds() const;
  static GpsTime from_seconds(double t);
};

/// Converts a GPS-timescale calendar date (no leap-second handling; RINEX
/// GPS epochs are already in GPS time) to GPS week/seconds.
GpsTime gps_time_from_calendar(int year, int month, int day, int hour, int minute,
                               double second);

/// Difference a - b in seconds, folded into [-302400, 302400) for
/// quantities expressed in seconds of week.
double wrap_week_seconds(double dt);

}  // namespace hapsnav
