#include "hapsnav/gps_time.hpp"

#include <cmath>

#include "hapsnav/constants.hpp"

namespace hapsnav {

namespace {

// Howard Hinnant's days_from_civil.
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

const long long kGpsEpochDays = days_from_civil(1980, 1, 6);

}  // namespace

double GpsTime::seconds() const { return week * constants::kSecondsPerWeek + sow; }

GpsTime GpsTime::from_seconds(double t) {
  const double week = std::floor(t / constants::kSecondsPerWeek);
  return {static_cast<int>(week), t - week * constants::kSecondsPerWeek};
}

GpsTime gps_time_from_calendar(int year, int month, int day, int hour, int minute,
                               double second) {
  const long long days = days_from_civil(year, static_cast<unsigned>(month),
                                         static_cast<unsigned>(day)) - kGpsEpochDays;
  const double t = static_cast<double>(days) * constants::kSecondsPerDay + hour * 3600.0 +
                   minute * 60.0 + second;
  return GpsTime::from_seconds(t);
}

double wrap_week_seconds(double dt) {
  const double half = constants::kSecondsPerWeek / 2.0;
  if (dt >= half) dt -= constants::kSecondsPerWeek;
  if (dt < -half) dt += constants::kSecondsPerWeek;
  return dt;
}

}  // namespace hapsnav
