#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "crgate/csv.hpp"
#include "crgate/errors.hpp"
#include "crgate/io.hpp"

using namespace crgate;
using namespace crgate::io;

namespace {

std::vector<std::string> header_of(const std::string& text) {
  std::istringstream in(text);
  return csv::parse(in).front();
}

}  // namespace

TEST(Csv, QuotingRoundTrip) {
  const csv::Row row{"plain", "with,comma", "say \"hi\"", "two\r\nlines", ""};
  std::ostringstream out;
  csv::Writer(out).row(row);
  EXPECT_EQ(out.str(), "plain,\"with,comma\",\"say \"\"hi\"\"\",\"two\r\nlines\",\r\n");
  std::istringstream in(out.str());
  const auto rows = csv::parse(in);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], row);
}

TEST(Csv, UnterminatedQuoteThrows) {
  std::istringstream in("a,\"b\r\n");
  EXPECT_THROW(csv::parse(in), Error);
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, -2.5e-17, 1.0 / 3.0, 6.283185307179586}) {
    EXPECT_EQ(std::stod(csv::number(v)), v);
  }
}

TEST(GoldenHeaders, Pulse) {
  EXPECT_EQ(pulse_header({"X1", "Y1", "X2", "Y2"}),
            (std::vector<std::string>{"t_ns", "dt_ns", "X1_GHz", "Y1_GHz", "X2_GHz", "Y2_GHz"}));
}

TEST(GoldenHeaders, Sweeps) {
  EXPECT_EQ(qsl_header(), (std::vector<std::string>{"duration_ns", "restarts", "mean", "log_mean", "median",
                                                    "best", "max", "converged", "target_reached", "max_iter",
                                                    "line_search_failure", "null_gradient", "error"}));
  EXPECT_EQ(miscalibration_header(), (std::vector<std::string>{"eps1_MHz", "eps2_MHz", "infidelity"}));
  EXPECT_EQ(dissipation_header(), (std::vector<std::string>{"T1_us", "F_avg", "infidelity"}));
  EXPECT_EQ(leakage_header(), (std::vector<std::string>{"level", "resonator_max", "transmon_max"}));
}

TEST(GoldenHeaders, WrittenFilesStartWithHeader) {
  std::ostringstream a, b, c, d, e;
  write_qsl_csv(a, {});
  EXPECT_EQ(header_of(a.str()), qsl_header());
  write_miscalibration_csv(b, {{ghz_to_angular(1e-3), 0.0, 0.5}});
  EXPECT_EQ(b.str(), "eps1_MHz,eps2_MHz,infidelity\r\n1,0,0.5\r\n");
  write_dissipation_csv(c, {{1000.0, 0.99, 0.01, {}}});
  EXPECT_EQ(c.str(), "T1_us,F_avg,infidelity\r\n1,0.99,0.01\r\n");
  analysis::Spectrum s;
  s.freq_ghz = {0.0, 0.5};
  s.magnitude = RMat::Zero(2, 1);
  write_spectrum_csv(d, s, {"X1"});
  EXPECT_EQ(header_of(d.str()), (std::vector<std::string>{"freq_GHz", "X1_GHz"}));
  analysis::LeakageReport r;
  r.resonator_max = {1.0, 0.1};
  r.transmon_max = {1.0, 0.2, 0.01};
  write_leakage_csv(e, r);
  EXPECT_EQ(e.str(), "level,resonator_max,transmon_max\r\n1,1,1\r\n2,0.1,0.2\r\n3,,0.01\r\n");
}

TEST(PulseCsv, RoundTripInGhz) {
  controls::PwcPulse p = controls::PwcPulse::uniform(2.0, 4, 2);
  p.amplitudes << 0.1, -0.2, 0.3, 0.0, ghz_to_angular(0.4), 1e-3, 0.0, 2.0;
  std::ostringstream out;
  write_pulse_csv(out, p, {"X2", "Y2"});
  EXPECT_EQ(out.str().substr(0, out.str().find('\n') + 1), "t_ns,dt_ns,X2_GHz,Y2_GHz\r\n");
  EXPECT_NE(out.str().find("\r\n1,0.5,0.4,"), std::string::npos);
  std::istringstream in(out.str());
  std::vector<std::string> names;
  const auto q = read_pulse_csv(in, &names);
  EXPECT_EQ(names, (std::vector<std::string>{"X2", "Y2"}));
  EXPECT_EQ(q.durations, p.durations);
  EXPECT_LE((q.amplitudes - p.amplitudes).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PulseCsv, RejectsMalformedInput) {
  std::istringstream bad_header("time,dt_ns,X_GHz\r\n0,1,0\r\n");
  EXPECT_THROW(read_pulse_csv(bad_header), Error);
  std::istringstream bad_number("t_ns,dt_ns,X_GHz\r\n0,1,abc\r\n");
  EXPECT_THROW(read_pulse_csv(bad_number), Error);
}

TEST(ParamRecord, JsonRoundTrip) {
  ParamRecord rec;
  rec.ansatz = "fourier";
  rec.duration_ns = 70.0;
  rec.params = {0.1, 1.0 / 3.0, -2.0};
  rec.offsets = {0.01, 0.6};
  rec.metadata = {{"bound", 2.5}};
  const auto back = param_record_from_json(to_json(rec));
  EXPECT_EQ(back.ansatz, rec.ansatz);
  EXPECT_EQ(back.params, rec.params);
  EXPECT_EQ(back.offsets, rec.offsets);
  EXPECT_EQ(back.metadata, rec.metadata);
  EXPECT_THROW(param_record_from_json("{\"ansatz\": 3}"), Error);
}

TEST(DeviceJson, ValuesAreGhz) {
  const auto p = device_from_json(R"({"Delta": 0.5, "g": 0.05, "delta2": -0.6, "levels": {"resonator": 4}})");
  EXPECT_DOUBLE_EQ(p.delta_cavity, ghz_to_angular(0.5));
  EXPECT_DOUBLE_EQ(p.g[0], ghz_to_angular(0.05));
  EXPECT_DOUBLE_EQ(p.g[1], ghz_to_angular(0.05));
  EXPECT_DOUBLE_EQ(p.delta_q[1], ghz_to_angular(-0.6));
  EXPECT_DOUBLE_EQ(p.alpha[0], ghz_to_angular(-0.32));
  EXPECT_EQ(p.levels.resonator, 4);
  const auto again = device_from_json(device_to_json(p));
  EXPECT_DOUBLE_EQ(again.delta_cavity, p.delta_cavity);
  EXPECT_EQ(again.levels, p.levels);
}

TEST(DeviceJson, UnknownKeyIsNamed) {
  try {
    device_from_json(R"({"Delta": 0.4, "gamma": 1.0})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "gamma");
  }
  try {
    device_from_json(R"({"levels": {"transmon1": 1}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "levels.transmon1");
  }
}
