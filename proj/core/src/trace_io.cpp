#include "ovlab/trace_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "ovlab/error.hpp"
#include "text.hpp"

namespace ovlab {

namespace {

void put_optional(std::ostringstream& os, const std::optional<double>& v) {
  os << ',';
  if (v) os << detail::format_double(*v);
}

std::optional<double> get_optional(std::string_view field, std::size_t line_no,
                                   std::string_view column) {
  if (field.empty()) return std::nullopt;
  const auto v = detail::parse_double(field);
  if (!v) {
    throw ParseError("line " + std::to_string(line_no) + ": malformed " + std::string(column) +
                     " value '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string format_trace_csv(const Trace& trace) {
  std::ostringstream os;
  os << kTraceHeader << '\n';
  for (const auto& row : trace.rows) {
    os << row.epoch << ',' << detail::format_double(row.train_ce);
    put_optional(os, row.test_ce);
    put_optional(os, row.test_mse);
    put_optional(os, row.test_zo);
    put_optional(os, row.test_acc);
    put_optional(os, row.ov);
    put_optional(os, row.v_g);
    put_optional(os, row.bias);
    put_optional(os, row.variance);
    os << '\n';
  }
  return os.str();
}

Trace parse_trace_csv(std::string_view text) {
  static constexpr std::string_view kColumns[] = {"epoch",    "train_ce", "test_ce", "test_mse",
                                                  "test_zo",  "test_acc", "ov",      "v_g",
                                                  "bias",     "variance"};
  Trace trace;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = detail::trim_cr(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!saw_header) {
      if (line != kTraceHeader) throw ParseError("line 1: unexpected trace header");
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != std::size(kColumns)) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 10 fields, got " +
                       std::to_string(fields.size()));
    }
    TraceRow row;
    const auto epoch = detail::parse_int<std::size_t>(fields[0]);
    if (!epoch) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed epoch value '" +
                       std::string(fields[0]) + "'");
    }
    row.epoch = *epoch;
    const auto train_ce = get_optional(fields[1], line_no, kColumns[1]);
    if (!train_ce) throw ParseError("line " + std::to_string(line_no) + ": missing train_ce");
    row.train_ce = *train_ce;
    row.test_ce = get_optional(fields[2], line_no, kColumns[2]);
    row.test_mse = get_optional(fields[3], line_no, kColumns[3]);
    row.test_zo = get_optional(fields[4], line_no, kColumns[4]);
    row.test_acc = get_optional(fields[5], line_no, kColumns[5]);
    row.ov = get_optional(fields[6], line_no, kColumns[6]);
    row.v_g = get_optional(fields[7], line_no, kColumns[7]);
    row.bias = get_optional(fields[8], line_no, kColumns[8]);
    row.variance = get_optional(fields[9], line_no, kColumns[9]);
    trace.rows.push_back(row);
  }
  if (!saw_header) throw ParseError("line 1: missing trace header");
  return trace;
}

void write_text_atomic(std::string_view text, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  write_text_atomic(format_trace_csv(trace), path);
}

std::string format_width_sweep_csv(std::span<const WidthRow> rows) {
  std::ostringstream os;
  os << kWidthSweepHeader << '\n';
  for (const auto& row : rows) {
    os << row.width << ',' << detail::format_double(row.final_test_acc) << ','
       << detail::format_double(row.final_ov) << '\n';
  }
  return os.str();
}

Trace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string text(std::istreambuf_iterator<char>(in), {});
  return parse_trace_csv(text);
}

}  // namespace ovlab
