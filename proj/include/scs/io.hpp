#pragma once

// File formats.
//
// Input streams are long-format CSV with the exact header `t,arm,value`:
// one row per observed (time, arm) pair, absent rows mean missing values.
// Arms are indexed in order of first appearance; times are processed in
// ascending order.
//
// Results are emitted as JSON (full trace or report, with metadata) or as
// plot-ready CSV. Floating-point values are written with 12 significant
// digits; infinite bounds are written as the strings "inf" / "-inf" in JSON
// and as inf / -inf in CSV.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "scs/psi.hpp"
#include "scs/screening.hpp"
#include "scs/simharness.hpp"

namespace scs::io {

using nlohmann::ordered_json;

inline constexpr const char* kFormatVersion = "0.1.0";

enum class Format { json, csv };
Format parse_format(const std::string& text);

ObservationStream parse_csv(std::istream& in, const std::string& source = "<input>");
ObservationStream ingest_csv(const std::filesystem::path& path);

/// "%.12g", with inf / -inf / nan spelled out.
std::string format_number(double x);
/// The value that format_number(x) denotes.
double round_to_serialized(double x);

ordered_json trace_to_json(const ScreeningTrace& trace, const std::vector<std::string>& labels,
                           const ordered_json& metadata = ordered_json::object());

struct TraceDocument {
  ScreeningTrace trace;  // records and header fields; no state snapshots
  std::vector<std::string> labels;
  ordered_json metadata;
};
TraceDocument trace_from_json(const ordered_json& doc);

/// Columns T,arm,lower,upper,center,selected,threshold; one row per arm per record.
void write_trace_csv(std::ostream& out, const ScreeningTrace& trace,
                     const std::vector<std::string>& labels);

ordered_json psi_report_to_json(const PsiReport& report, const std::vector<std::string>& labels,
                                const ordered_json& metadata = ordered_json::object());
/// Columns arm,lower,upper,center,screening_lower,screening_upper,level.
void write_psi_csv(std::ostream& out, const PsiReport& report,
                   const std::vector<std::string>& labels);

ordered_json experiment_to_json(const ExperimentReport& report,
                                const ordered_json& metadata = ordered_json::object());
/// One row per checkpoint.
void write_experiment_csv(std::ostream& out, const ExperimentReport& report);

ordered_json levels_to_json(const LevelComparison& cmp, std::size_t k, std::size_t m,
                            std::size_t selected, double alpha);

/// Writes `content` to `path`, creating parent directories; throws IoError on failure.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace scs::io
