#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "qudash/error.hpp"
#include "qudash/trace.hpp"

using namespace qudash;

namespace {

ThroughputTrace parse(const std::string& text) {
  std::istringstream in(text);
  return load_csv(in, "mem");
}

std::string parse_error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    return e.what();
  }
  ADD_FAILURE() << "expected parse error";
  return {};
}

double stddev(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST(LoadCsv, Examples) {
  const auto t = parse("t,mbps\n0,10\n1,12");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.samples()[0], 10.0);
  EXPECT_EQ(t.samples()[1], 12.0);
  EXPECT_EQ(t.name(), "mem");

  const auto neg = parse_error_of("t,mbps\n0,10\n1,-3\n");
  EXPECT_NE(neg.find("mem:3"), std::string::npos) << neg;

  const auto gap = parse_error_of("t,mbps\n0,10\n2,12\n");
  EXPECT_NE(gap.find("non-uniform spacing"), std::string::npos) << gap;
}

TEST(LoadCsv, RejectsMalformedInput) {
  EXPECT_NE(parse_error_of("").find("empty"), std::string::npos);
  EXPECT_NE(parse_error_of("time,rate\n0,1\n").find("header"), std::string::npos);
  EXPECT_NE(parse_error_of("t,mbps\n0,abc\n").find("mem:2"), std::string::npos);
  EXPECT_NE(parse_error_of("t,mbps\n0,1,2\n").find("mem:2"), std::string::npos);
  EXPECT_NE(parse_error_of("t,mbps\n1,5\n").find("non-uniform"), std::string::npos);
  EXPECT_NE(parse_error_of("t,mbps\n").find("no samples"), std::string::npos);
}

TEST(LoadCsv, AcceptsCrlfAndTrailingNewline) {
  const auto t = parse("t,mbps\r\n0,1.5\r\n1,2.25\r\n");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.samples()[1], 2.25);
}

TEST(LoadCsv, MissingFileIsIoError) {
  try {
    load_csv(std::filesystem::path("/nonexistent/trace.csv"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/trace.csv"), std::string::npos);
  }
}

TEST(ThroughputAt, Examples) {
  ThroughputTrace t("x", {10.0, 12.0});
  EXPECT_EQ(t.throughput_at(0.7), 10.0);
  EXPECT_EQ(t.throughput_at(1.0), 12.0);
  EXPECT_THROW(t.throughput_at(2.0), Error);
  EXPECT_THROW(t.throughput_at(-0.5), Error);
  t.set_wraparound(true);
  EXPECT_EQ(t.throughput_at(3.5), 12.0);
  EXPECT_EQ(t.throughput_at(4.0), 10.0);
}

TEST(ThroughputTrace, ValidatesSamples) {
  EXPECT_THROW(ThroughputTrace("e", {}), Error);
  EXPECT_THROW(ThroughputTrace("n", {1.0, -0.1}), Error);
  EXPECT_THROW(ThroughputTrace("i", {INFINITY}), Error);
  EXPECT_NO_THROW(ThroughputTrace("z", {0.0}));
}

TEST(WriteCsv, FormatAndRoundTrip) {
  EXPECT_EQ(format_mbps(10.0), "10");
  EXPECT_EQ(format_mbps(2.5), "2.5");
  EXPECT_EQ(format_mbps(0.1234564), "0.123456");
  EXPECT_EQ(format_mbps(0.0), "0");

  std::ostringstream out;
  write_csv(out, ThroughputTrace("x", {10.0, 2.5}));
  EXPECT_EQ(out.str(), "t,mbps\n0,10\n1,2.5\n");

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<long long> micro(0, 100'000'000);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(1 + rng() % 200);
    for (auto& x : v) x = static_cast<double>(micro(rng)) / 1e6;
    const ThroughputTrace t("r", v);
    std::ostringstream o;
    write_csv(o, t);
    std::istringstream in(o.str());
    EXPECT_EQ(load_csv(in, "r").samples(), v);
  }
}

TEST(Synth, ConstantWhenNoNoise) {
  ScenarioProfile p;
  p.mean = 12.5;
  p.stddev = 0.0;
  p.drop_rate = 0.0;
  p.duration = 50;
  const auto t = synth_trace(p);
  ASSERT_EQ(t.size(), 50u);
  for (double x : t.samples()) EXPECT_EQ(x, 12.5);
}

TEST(Synth, DeterministicAndRoundTrips) {
  for (auto kind : {ScenarioKind::kStatic, ScenarioKind::kWalk, ScenarioKind::kBus}) {
    const auto p = ScenarioProfile::defaults(kind, 300, 42);
    const auto a = synth_trace(p);
    const auto b = synth_trace(p);
    EXPECT_EQ(a.samples(), b.samples());
    std::ostringstream o;
    write_csv(o, a);
    std::istringstream in(o.str());
    EXPECT_EQ(load_csv(in, "s").samples(), a.samples());
    for (double x : a.samples()) EXPECT_GE(x, kSynthFloorMbps);
  }
  const auto c = synth_trace(ScenarioProfile::defaults(ScenarioKind::kBus, 300, 43));
  const auto d = synth_trace(ScenarioProfile::defaults(ScenarioKind::kBus, 300, 42));
  EXPECT_NE(c.samples(), d.samples());
}

TEST(Synth, BusFluctuatesMoreThanStatic) {
  int larger = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto bus = synth_trace(ScenarioProfile::defaults(ScenarioKind::kBus, 100, seed));
    const auto st = synth_trace(ScenarioProfile::defaults(ScenarioKind::kStatic, 100, seed));
    if (stddev(bus.samples()) > stddev(st.samples())) ++larger;
  }
  EXPECT_EQ(larger, 10);
}

TEST(Synth, ProfileDefaultsAndValidation) {
  const auto s = ScenarioProfile::defaults(ScenarioKind::kStatic);
  EXPECT_EQ(s.mean, 40.0);
  EXPECT_EQ(s.stddev, 2.0);
  EXPECT_EQ(s.drop_rate, 0.0);
  const auto w = ScenarioProfile::defaults(ScenarioKind::kWalk);
  EXPECT_EQ(w.mean, 30.0);
  EXPECT_EQ(w.stddev, 6.0);
  EXPECT_EQ(w.drop_rate, 0.02);
  const auto b = ScenarioProfile::defaults(ScenarioKind::kBus);
  EXPECT_EQ(b.mean, 25.0);
  EXPECT_EQ(b.stddev, 12.0);
  EXPECT_EQ(b.drop_rate, 0.05);

  ScenarioProfile bad;
  bad.mean = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = {};
  bad.stddev = -1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = {};
  bad.drop_rate = 1.5;
  EXPECT_THROW(bad.validate(), Error);

  EXPECT_EQ(parse_scenario_kind("walk"), ScenarioKind::kWalk);
  EXPECT_EQ(to_string(ScenarioKind::kBus), "bus");
  EXPECT_THROW(parse_scenario_kind("train"), Error);
}
