#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "ovlab/error.hpp"
#include "ovlab/trace_io.hpp"

namespace ovlab {
namespace {

Trace sample_trace() {
  Trace t;
  TraceRow a;
  a.epoch = 1;
  a.train_ce = 0.1 + 0.2;
  a.test_ce = 1.0 / 3.0;
  a.test_mse = 1e-300;
  a.test_zo = 0.25;
  a.test_acc = 0.75;
  a.ov = 0.123456789012345678;
  a.v_g = 5e-7;
  TraceRow b;
  b.epoch = 2;
  b.train_ce = 2.0;
  b.ov = std::nextafter(0.5, 1.0);
  b.bias = 0.01;
  b.variance = -0.0625;
  t.rows = {a, b};
  return t;
}

TEST(TraceCsv, RoundTripIsBitExact) {
  const Trace t = sample_trace();
  const std::string text = format_trace_csv(t);
  EXPECT_EQ(text.substr(0, kTraceHeader.size()), kTraceHeader);
  EXPECT_EQ(parse_trace_csv(text), t);
  EXPECT_EQ(format_trace_csv(parse_trace_csv(text)), text);
}

TEST(TraceCsv, MissingValuesAreEmptyFields) {
  const std::string text = format_trace_csv(sample_trace());
  const auto second = text.substr(text.find("\n2,"));
  EXPECT_NE(second.find(",,"), std::string::npos);
  EXPECT_NE(second.find("2,2,,,,,"), std::string::npos);
}

TEST(TraceCsv, AcceptsCrLf) {
  const std::string text = std::string(kTraceHeader) + "\r\n1,0.5,,,,,,,,\r\n";
  const Trace t = parse_trace_csv(text);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].train_ce, 0.5);
  EXPECT_FALSE(t.rows[0].ov.has_value());
}

TEST(TraceCsv, ErrorsNameTheLine) {
  const std::string header(kTraceHeader);
  const std::string text = header + "\n1,0.5,,,,,,,,\n2,0.4,,,,,,,,\n3,0.3,,,,,x1,,,\n";
  try {
    parse_trace_csv(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_trace_csv("epoch,loss\n"), ParseError);
  EXPECT_THROW(parse_trace_csv(header + "\n1,0.5,,\n"), ParseError);
  EXPECT_THROW(parse_trace_csv(header + "\n1,,,,,,,,,\n"), ParseError);
}

TEST(TraceCsv, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "ovlab_trace_io_test.csv";
  write_trace_csv(sample_trace(), path);
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  EXPECT_EQ(read_trace_csv(path), sample_trace());
  std::filesystem::remove(path);
  EXPECT_THROW(read_trace_csv(path), IoError);
}

TEST(Trace, ColumnRequiresEveryValue) {
  const Trace t = sample_trace();
  EXPECT_EQ(t.column(&TraceRow::ov).size(), 2u);
  EXPECT_THROW(t.column(&TraceRow::bias), InvalidArgument);
}

}  // namespace
}  // namespace ovlab
