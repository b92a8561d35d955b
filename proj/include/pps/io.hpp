#pragma once

// File formats.
//
// Stream, binary (all little-endian):
//     "PPS1" | u64 N | f64 duration | N x f64 time | u64 L | L bytes of JSON meta
// Stream, text:
//     # pps-stream v1 duration=<T>
//     one timestamp per line
// Histogram / curve CSV:
//     # pps-hist v1 kind=<g2|waiting|analytic> [formula_id=<id>] params=<json>
//     bin_lo,bin_hi,count,value,stderr
// Analytic curves write one row per grid point with bin_lo = bin_hi = tau;
// a jump is written as two rows at the same tau, left limit first.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pps/analytics.hpp"
#include "pps/estimators.hpp"
#include "pps/stream.hpp"

namespace pps {

std::string hash_file(const std::filesystem::path& path);

// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

std::string encode_stream_binary(const EventStream& stream);
EventStream decode_stream_binary(std::string_view bytes);
std::string encode_stream_text(const EventStream& stream);
EventStream decode_stream_text(std::string_view text);

enum class StreamFormat { binary, text };

// Text when the extension is .txt, binary otherwise.
StreamFormat format_for(const std::filesystem::path& path);
void write_stream(const std::filesystem::path& path, const EventStream& stream);
// Detects the format from the leading bytes.
EventStream read_stream(const std::filesystem::path& path);

struct HistogramTable {
    std::string kind;
    std::optional<FormulaId> formula_id;
    nlohmann::json params = nlohmann::json::object();
    std::vector<double> bin_lo;
    std::vector<double> bin_hi;
    std::vector<std::uint64_t> count;
    std::vector<double> value;
    std::vector<double> std_error;
};

std::string encode_histogram(const CorrelationHistogram& hist, const nlohmann::json& extra = nlohmann::json::object());
std::string encode_histogram(const WaitingHistogram& hist, const nlohmann::json& extra = nlohmann::json::object());
std::string encode_curve(const AnalyticCurve& curve, const nlohmann::json& extra = nlohmann::json::object());
HistogramTable decode_histogram(std::string_view text);

CorrelationHistogram to_correlation_histogram(const HistogramTable& table);
WaitingHistogram to_waiting_histogram(const HistogramTable& table);
AnalyticCurve to_curve(const HistogramTable& table);

}  // namespace pps
