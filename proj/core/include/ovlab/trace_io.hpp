#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "ovlab/training.hpp"

namespace ovlab {

inline constexpr std::string_view kTraceHeader =
    "epoch,train_ce,test_ce,test_mse,test_zo,test_acc,ov,v_g,bias,variance";

// Doubles use shortest round-trip formatting; missing values are empty fields.
std::string format_trace_csv(const Trace& trace);
// Throws ParseError naming the 1-based line (header is line 1).
Trace parse_trace_csv(std::string_view text);

inline constexpr std::string_view kWidthSweepHeader = "width,final_test_acc,final_ov";

std::string format_width_sweep_csv(std::span<const WidthRow> rows);

// Writes to "<path>.tmp" and renames over `path`.
void write_text_atomic(std::string_view text, const std::filesystem::path& path);
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);
Trace read_trace_csv(const std::filesystem::path& path);

}  // namespace ovlab
