#pragma once

#include <string>
#include <vector>

#include "mslocal/experiments.hpp"

namespace mslocal {

/// Shortest round-trip decimal rendering; locale-free and deterministic.
std::string format_double(double value);

/// CSV with a single '#' comment line carrying the resolved config as JSON.
void write_report_csv(const std::string& path, const nlohmann::json& header,
                      const ReportTable& table);

/// Whole CSV document as a string (what write_report_csv writes).
std::string render_report_csv(const nlohmann::json& header, const ReportTable& table);

/// One JSON object per line.
void write_trace_jsonl(const std::string& path, const std::vector<std::string>& lines);

}  // namespace mslocal
