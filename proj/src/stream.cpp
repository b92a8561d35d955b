#include "pps/stream.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include <fmt/format.h>

namespace pps {

Rate::Rate(double value) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw ParameterError(fmt::format("rate must be positive and finite, got {}", value));
    }
}

EventStream::EventStream(std::vector<double> times, double duration, nlohmann::json meta)
    : times_(std::move(times)), duration_(duration), meta_(std::move(meta)) {}

bool EventStream::same_events(const EventStream& other) const {
    if (duration_ != other.duration_ || times_.size() != other.times_.size()) return false;
    return std::memcmp(times_.data(), other.times_.data(), times_.size() * sizeof(double)) == 0;
}

std::string to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::non_positive_duration: return "non-positive duration";
        case ViolationKind::non_finite_time: return "non-finite time";
        case ViolationKind::negative_time: return "negative time";
        case ViolationKind::out_of_order: return "out-of-order";
        case ViolationKind::exceeds_duration: return "time exceeds duration";
    }
    return "unknown";
}

std::vector<Violation> validate_stream(const EventStream& stream) {
    std::vector<Violation> out;
    const double duration = stream.duration();
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        out.push_back({0, ViolationKind::non_positive_duration});
    }
    const auto times = stream.times();
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        if (!std::isfinite(t)) {
            out.push_back({i, ViolationKind::non_finite_time});
            continue;
        }
        if (t < 0.0) out.push_back({i, ViolationKind::negative_time});
        if (i > 0 && !(t > times[i - 1])) out.push_back({i, ViolationKind::out_of_order});
        if (t > duration) out.push_back({i, ViolationKind::exceeds_duration});
    }
    return out;
}

void require_valid(const EventStream& stream) {
    const auto violations = validate_stream(stream);
    if (!violations.empty()) {
        const auto& v = violations.front();
        throw ParameterError(fmt::format("invalid event stream: {} at index {} ({} violation(s))",
                                         to_string(v.kind), v.index, violations.size()));
    }
}

EventStream make_stream(std::vector<double> times, double duration, nlohmann::json meta) {
    EventStream s(std::move(times), duration, std::move(meta));
    require_valid(s);
    return s;
}

EventStream gen_poisson(Rate rate, double duration, Seed seed) {
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw ParameterError(fmt::format("duration must be positive and finite, got {}", duration));
    }
    Rng rng(seed);
    std::vector<double> times;
    const double expected = rate.value() * duration;
    if (expected < 1e9) times.reserve(static_cast<std::size_t>(expected + 6.0 * std::sqrt(expected) + 16.0));
    double t = 0.0;
    for (;;) {
        const double next = t + rng.exponential(rate.value());
        if (next > duration) break;
        // A gap below half an ulp would tie with the previous event.
        t = times.empty() ? next : strictly_after(t, next);
        if (t > duration) break;
        times.push_back(t);
    }
    nlohmann::json meta = {
        {"generator", "poisson"},
        {"rate", rate.value()},
        {"duration", duration},
        {"seed", seed.value},
        {"rng", Rng::kName},
    };
    return EventStream(std::move(times), duration, std::move(meta));
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string content_hash(const EventStream& stream) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](double x) {
        const auto bits = std::bit_cast<std::uint64_t>(x);
        unsigned char le[8];
        for (int b = 0; b < 8; ++b) le[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFFU);
        h = fnv1a64(le, h);
    };
    mix(stream.duration());
    for (double t : stream.times()) mix(t);
    return fmt::format("{:016x}", h);
}

}  // namespace pps
