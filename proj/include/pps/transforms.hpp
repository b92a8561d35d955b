#pragma once

// Stream-to-stream constructions: gapping by removal or insertion,
// probabilistic gapping, random delay insertion, and pulsed trains.
// Every transform is a pure function of (input, parameters, seed).

#include <cstddef>
#include <string>
#include <variant>

#include "pps/stream.hpp"

namespace pps {

// Minimum separation t_gap >= 0 enforced between consecutive events.
class GapSpec {
public:
    explicit GapSpec(double t_gap);
    double t_gap() const { return t_gap_; }

private:
    double t_gap_;
};

class RemovalProbability {
public:
    explicit RemovalProbability(double p);
    double value() const { return p_; }

private:
    double p_;
};

namespace delay {
struct Constant {
    double t_gap;
};
struct Exponential {
    double rate;
};
// Density proportional to tau^2 exp(-tau^2 / (2 scale^2)), tau >= 0.
struct MaxwellType {
    double scale;
};
}  // namespace delay

using DelaySpec = std::variant<delay::Constant, delay::Exponential, delay::MaxwellType>;

namespace jitter {
struct None {};
struct Gaussian {
    double sigma;
};
// One-sided: D(t) = rate * exp(-rate t), t >= 0.
struct Exponential {
    double rate;
};
}  // namespace jitter

using JitterSpec = std::variant<jitter::None, jitter::Gaussian, jitter::Exponential>;

// Throw ParameterError unless every scale / rate parameter is positive.
void validate(const DelaySpec& spec);
void validate(const JitterSpec& spec);

// Parse "const:T", "exp:RATE", "maxwell:A".
DelaySpec parse_delay(const std::string& text);
// Parse "none", "gaussian:SIGMA", "exponential:RATE".
JitterSpec parse_jitter(const std::string& text);
std::string to_string(const DelaySpec& spec);
std::string to_string(const JitterSpec& spec);

// Non-paralyzable gapping: keep the first event, drop every event closer
// than t_gap to the most recently kept one.
EventStream gap_remove(const EventStream& stream, GapSpec gap);

// Shift the k-th event (0-based) by k * t_gap; duration grows by N * t_gap.
EventStream gap_insert(const EventStream& stream, GapSpec gap);

// Gapping that only takes hold with probability p. The first event that
// violates the gap of the current reference decides the reference's fate:
// with probability p it is dropped and the gap is enforced for that
// reference (every later violator is dropped too); with probability 1 - p
// it is kept and becomes the new reference. p = 1 is gap_remove and p = 0
// the identity.
EventStream gap_remove_probabilistic(const EventStream& stream, GapSpec gap, RemovalProbability p, Seed seed);

// Shift the k-th event by the sum of k i.i.d. delays; the duration grows by
// the total of N delays. The constant kind is exactly gap_insert.
EventStream delay_insert(const EventStream& stream, const DelaySpec& delay, Seed seed);

// One event per pulse at n * period + jitter_n, n = 0 .. n_pulses - 1, over
// duration n_pulses * period. Events pushed outside [0, duration] are
// dropped and counted in meta["dropped"].
EventStream gen_pulsed(double period, std::size_t n_pulses, const JitterSpec& jitter, Seed seed);

// Independent loss: keep each event with probability keep.
EventStream thin(const EventStream& stream, double keep, Seed seed);

}  // namespace pps
