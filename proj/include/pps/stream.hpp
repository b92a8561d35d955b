#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pps/error.hpp"
#include "pps/rng.hpp"

namespace pps {

// Events per second; strictly positive and finite.
class Rate {
public:
    explicit Rate(double value);
    double value() const { return value_; }

private:
    double value_;
};

// A finite, strictly increasing list of detection times (seconds) observed
// over [0, duration]. Immutable once built; `meta` is provenance only and is
// never read by any estimator.
class EventStream {
public:
    EventStream() = default;
    // Does not check the invariants; use validate_stream or make_stream.
    EventStream(std::vector<double> times, double duration, nlohmann::json meta = nlohmann::json::object());

    std::span<const double> times() const { return times_; }
    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }
    double duration() const { return duration_; }
    const nlohmann::json& meta() const { return meta_; }

    double operator[](std::size_t i) const { return times_[i]; }

    // Same times and duration; meta ignored.
    bool same_events(const EventStream& other) const;

    // Consumes the stream, handing back its buffer.
    std::vector<double> release_times() && { return std::move(times_); }

private:
    std::vector<double> times_;
    double duration_ = 1.0;
    nlohmann::json meta_ = nlohmann::json::object();
};

enum class ViolationKind {
    non_positive_duration,
    non_finite_time,
    negative_time,
    out_of_order,
    exceeds_duration,
};

struct Violation {
    // Offending event index; 0 for stream-level problems such as the duration.
    std::size_t index = 0;
    ViolationKind kind{};

    bool operator==(const Violation&) const = default;
};

std::string to_string(ViolationKind kind);

std::vector<Violation> validate_stream(const EventStream& stream);

// Throws ParameterError naming the first violation.
void require_valid(const EventStream& stream);

// Builds a stream and checks every invariant.
EventStream make_stream(std::vector<double> times, double duration, nlohmann::json meta = nlohmann::json::object());

// Homogeneous Poisson process on [0, duration] built from cumulative
// exponential gaps.
EventStream gen_poisson(Rate rate, double duration, Seed seed);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t h = 0xCBF29CE484222325ULL);

// FNV-1a 64 over the duration and timestamps (little-endian IEEE-754 bytes),
// rendered as 16 hex digits. Stable across runs and platforms.
std::string content_hash(const EventStream& stream);

// Smallest double strictly above `prev` that is not below `candidate`.
// Used where accumulated rounding could otherwise produce tied timestamps.
inline double strictly_after(double prev, double candidate) {
    return candidate > prev ? candidate : std::nextafter(prev, std::numeric_limits<double>::infinity());
}

}  // namespace pps
