#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hapsnav/constants.hpp"
#include "hapsnav/error.hpp"
#include "hapsnav/orbits.hpp"
#include "hapsnav/scenario.hpp"
#include "oracles.hpp"

using namespace hapsnav;
using constants::kDegToRad;

TEST(GaussMarkov, DeterministicDecay) {
  GaussMarkovState s{1.0, 10.0, 6.0};
  EXPECT_NEAR(gauss_markov_step(s, 1.0, 0.0).x, 0.904837418, 1e-9);
  // Two half steps equal one full step without noise.
  EXPECT_NEAR(gauss_markov_step(gauss_markov_step(s, 0.5, 0.0), 0.5, 0.0).x,
              gauss_markov_step(s, 1.0, 0.0).x, 1e-15);
}

TEST(GaussMarkov, NoiseScaleKeepsStationaryVariance) {
  const GaussMarkovState s{0.0, 10.0, 6.0};
  const double phi = std::exp(-0.1);
  EXPECT_NEAR(gauss_markov_step(s, 1.0, 1.0).x, 6.0 * std::sqrt(1.0 - phi * phi), 1e-12);
}

TEST(GaussMarkov, BankIsOrderIndependent) {
  GaussMarkovBank a(10.0, 6.0), b(10.0, 6.0);
  std::mt19937_64 ra(4), rb(4);
  const std::vector<std::string> ids1{"G03", "G01", "G02"};
  const std::vector<std::string> ids2{"G02", "G03", "G01"};
  for (int i = 0; i < 20; ++i) {
    a.advance(ids1, 1.0, ra);
    b.advance(ids2, 1.0, rb);
  }
  for (const auto& id : ids1) EXPECT_DOUBLE_EQ(a.value(id), b.value(id));
  EXPECT_TRUE(a.contains("G01"));
  EXPECT_EQ(a.value("G09"), 0.0);
}

TEST(Environment, LosProbability) {
  const auto open = EnvironmentModel::open();
  const auto dense = EnvironmentModel::dense_urban();
  EXPECT_EQ(los_probability(0.1, open), 1.0);
  EXPECT_NEAR(los_probability(35.0 * kDegToRad, dense), 0.5, 1e-12);
  EXPECT_EQ(los_probability(90.0 * kDegToRad, dense), 1.0);
  double prev = 0.0;
  for (double el = 0.0; el < 90.0; el += 1.0) {
    const double p = los_probability(el * kDegToRad, dense);
    EXPECT_GT(p, prev);
    EXPECT_LE(p, 1.0);
    prev = p;
  }
  EXPECT_EQ(dense.sat_cap, 4);
  EXPECT_EQ(dense.haps_error_std, 5.0);
  EXPECT_EQ(EnvironmentModel::suburban().haps_error_std, 2.0);
}

TEST(Cn0, LinearInElevation) {
  EXPECT_DOUBLE_EQ(cn0_assign(15.0 * kDegToRad, SourceKind::Satellite, {}), 30.0);
  EXPECT_DOUBLE_EQ(cn0_assign(90.0 * kDegToRad, SourceKind::Satellite, {}), 50.0);
  EXPECT_NEAR(cn0_assign(52.5 * kDegToRad, SourceKind::Satellite, {}), 40.0, 1e-12);
  EXPECT_NEAR(cn0_assign(52.5 * kDegToRad, SourceKind::Satellite, {}, {}, 1.5), 41.5, 1e-12);
}

TEST(Cn0, HapsTakesBestSatellite) {
  const std::vector<double> sats{31.0, 44.5, 38.0};
  EXPECT_DOUBLE_EQ(cn0_assign(0.3, SourceKind::Haps, sats), 44.5);
  try {
    cn0_assign(0.3, SourceKind::Haps, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSatelliteReference);
  }
}

TEST(Synthesis, SagnacRangeMatchesOracle) {
  const EcefPosition rx = geodetic_to_ecef(GeodeticPosition::from_degrees(45.0, -75.0, 100.0));
  for (const auto& s : synth_constellation(6, 5, 26'559'700.0, 55.0 * kDegToRad, 300.0)) {
    EXPECT_NEAR(sagnac_range(rx, s.position), oracle::sagnac_range(rx.vec(), s.position.vec()), 1e-6);
  }
}

TEST(Synthesis, PseudorangeDecomposition) {
  const GeodeticPosition g = GeodeticPosition::from_degrees(45.385, -75.6972, 70.0);
  EpochTruth truth{12.0, geodetic_to_ecef(g), 3e-6};
  std::vector<SourceState> sources = synth_constellation(6, 5, 26'559'700.0, 55.0 * kDegToRad, 12.0);
  for (int i = 0; i < 3; ++i) {
    HapsPlatform h = haps_from_elevation_azimuth(g, (40.0 + 15 * i) * kDegToRad, i * 2.0, 20000.0);
    h.id = "H" + std::to_string(i + 1);
    sources.push_back(haps_position(h, 12.0));
  }
  SynthesisOptions opts;
  opts.los_targets = LosTargets::None;
  GaussMarkovBank bank(10.0, 6.0);
  std::mt19937_64 init(1);
  std::vector<std::string> ids;
  for (const auto& s : sources) ids.push_back(s.id);
  bank.advance(ids, 1.0, init);
  std::mt19937_64 rng(2);
  const auto obs = synthesize_epoch(truth, sources, EnvironmentModel::suburban(), opts, bank, rng);

  int haps = 0;
  std::vector<double> sat_cn0;
  for (const auto& o : obs) {
    ASSERT_TRUE(o.truth.has_value());
    const auto& t = *o.truth;
    EXPECT_NEAR(o.pseudorange, t.geometric_range + t.clock_term + t.error_term, 1e-6);
    EXPECT_NEAR(t.error_term, t.ionosphere + t.troposphere + t.random_error, 1e-9);
    const auto& src = *std::find_if(sources.begin(), sources.end(), [&](const SourceState& s) { return s.id == o.source_id; });
    EXPECT_NEAR(t.clock_term, oracle::kC * (3e-6 - src.clock_offset), 1e-6);
    EXPECT_NEAR(t.geometric_range, oracle::sagnac_range(truth.position.vec(), src.position.vec()), 1e-6);
    EXPECT_GE(elevation_azimuth(truth.position, src.position).elevation, opts.elevation_mask);
    if (o.kind == SourceKind::Haps) {
      ++haps;
      EXPECT_EQ(t.ionosphere, 0.0);
      EXPECT_EQ(t.troposphere, 0.0);
    } else {
      EXPECT_DOUBLE_EQ(t.random_error, bank.value(o.source_id));
      EXPECT_GT(t.troposphere, 0.0);
      sat_cn0.push_back(*o.cn0);
    }
  }
  EXPECT_EQ(haps, 3);
  for (const auto& o : obs) {
    if (o.kind == SourceKind::Haps) {
      EXPECT_DOUBLE_EQ(*o.cn0, *std::max_element(sat_cn0.begin(), sat_cn0.end()));
    }
  }
}

TEST(Synthesis, SatelliteCapDrawsSubset) {
  const GeodeticPosition g = GeodeticPosition::from_degrees(45.385, -75.6972, 70.0);
  EpochTruth truth{0.0, geodetic_to_ecef(g), 0.0};
  const auto sources = synth_constellation(6, 5, 26'559'700.0, 55.0 * kDegToRad, 0.0);
  SynthesisOptions opts;
  opts.los_targets = LosTargets::None;
  std::set<std::string> seen;
  for (int k = 0; k < 50; ++k) {
    std::mt19937_64 rng = substream(7, static_cast<std::uint64_t>(k), 0);
    const auto obs = synthesize_epoch(truth, sources, EnvironmentModel::dense_urban(), opts, GaussMarkovBank{}, rng);
    EXPECT_EQ(obs.size(), 4u);
    for (const auto& o : obs) seen.insert(o.source_id);
  }
  EXPECT_GT(seen.size(), 4u);  // redrawn each epoch
}

TEST(Synthesis, SubstreamsAreReproducibleAndDistinct) {
  auto a = substream(1, 2, 3), b = substream(1, 2, 3), c = substream(1, 2, 4), d = substream(1, 3, 3);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}
