#include "pps/transforms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

namespace pps {

namespace {

nlohmann::json derived_meta(const EventStream& parent, std::string generator) {
    return nlohmann::json{
        {"generator", std::move(generator)},
        {"parent_hash", content_hash(parent)},
        {"parent", parent.meta()},
    };
}

double parse_positive(const std::string& text, const std::string& what) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !(value > 0.0) || !std::isfinite(value)) {
        throw ParameterError(fmt::format("{} must be a positive number, got '{}'", what, text));
    }
    return value;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

GapSpec::GapSpec(double t_gap) : t_gap_(t_gap) {
    if (!(t_gap >= 0.0) || !std::isfinite(t_gap)) {
        throw ParameterError(fmt::format("t_gap must be non-negative and finite, got {}", t_gap));
    }
}

RemovalProbability::RemovalProbability(double p) : p_(p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(fmt::format("removal probability must lie in [0, 1], got {}", p));
}

void validate(const DelaySpec& spec) {
    const double param = std::visit(
        overloaded{[](const delay::Constant& c) { return c.t_gap; },
                   [](const delay::Exponential& e) { return e.rate; },
                   [](const delay::MaxwellType& m) { return m.scale; }},
        spec);
    if (!(param > 0.0) || !std::isfinite(param)) {
        throw ParameterError(fmt::format("delay parameter must be positive, got {} for {}", param, to_string(spec)));
    }
}

void validate(const JitterSpec& spec) {
    std::visit(overloaded{[](const jitter::None&) {},
                          [](const jitter::Gaussian& g) {
                              if (!(g.sigma > 0.0) || !std::isfinite(g.sigma))
                                  throw ParameterError(fmt::format("jitter sigma must be positive, got {}", g.sigma));
                          },
                          [](const jitter::Exponential& e) {
                              if (!(e.rate > 0.0) || !std::isfinite(e.rate))
                                  throw ParameterError(fmt::format("jitter rate must be positive, got {}", e.rate));
                          }},
               spec);
}

DelaySpec parse_delay(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParameterError(fmt::format("delay spec '{}' is not KIND:VALUE", text));
    const std::string kind = text.substr(0, colon);
    const std::string value = text.substr(colon + 1);
    if (kind == "const") return delay::Constant{parse_positive(value, "constant delay")};
    if (kind == "exp") return delay::Exponential{parse_positive(value, "exponential delay rate")};
    if (kind == "maxwell") return delay::MaxwellType{parse_positive(value, "maxwell delay scale")};
    throw ParameterError(fmt::format("unknown delay kind '{}' (const, exp, maxwell)", kind));
}

JitterSpec parse_jitter(const std::string& text) {
    if (text == "none") return jitter::None{};
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParameterError(fmt::format("jitter spec '{}' is not KIND:VALUE", text));
    const std::string kind = text.substr(0, colon);
    const std::string value = text.substr(colon + 1);
    if (kind == "gaussian") return jitter::Gaussian{parse_positive(value, "gaussian jitter sigma")};
    if (kind == "exponential") return jitter::Exponential{parse_positive(value, "exponential jitter rate")};
    throw ParameterError(fmt::format("unknown jitter kind '{}' (none, gaussian, exponential)", kind));
}

std::string to_string(const DelaySpec& spec) {
    return std::visit(overloaded{[](const delay::Constant& c) { return fmt::format("const:{}", c.t_gap); },
                                 [](const delay::Exponential& e) { return fmt::format("exp:{}", e.rate); },
                                 [](const delay::MaxwellType& m) { return fmt::format("maxwell:{}", m.scale); }},
                      spec);
}

std::string to_string(const JitterSpec& spec) {
    return std::visit(overloaded{[](const jitter::None&) { return std::string("none"); },
                                 [](const jitter::Gaussian& g) { return fmt::format("gaussian:{}", g.sigma); },
                                 [](const jitter::Exponential& e) { return fmt::format("exponential:{}", e.rate); }},
                      spec);
}

EventStream gap_remove(const EventStream& stream, GapSpec gap) {
    require_valid(stream);
    const double tg = gap.t_gap();
    const auto in = stream.times();
    std::vector<double> out;
    out.reserve(in.size());
    for (double t : in) {
        if (out.empty() || t - out.back() >= tg) out.push_back(t);
    }
    auto meta = derived_meta(stream, "gap_remove");
    meta["t_gap"] = tg;
    return EventStream(std::move(out), stream.duration(), std::move(meta));
}

EventStream gap_insert(const EventStream& stream, GapSpec gap) {
    require_valid(stream);
    const double tg = gap.t_gap();
    const auto in = stream.times();
    std::vector<double> out;
    out.reserve(in.size());
    for (std::size_t k = 0; k < in.size(); ++k) {
        double t = in[k] + static_cast<double>(k) * tg;
        // Rounding at large t can leave a separation a few ulps short of t_gap.
        if (k > 0 && tg > 0.0) {
            while (t - out.back() < tg) t = std::nextafter(t, std::numeric_limits<double>::infinity());
        }
        out.push_back(t);
    }
    double duration = stream.duration() + static_cast<double>(in.size()) * tg;
    if (!out.empty()) duration = std::max(duration, out.back());
    auto meta = derived_meta(stream, "gap_insert");
    meta["t_gap"] = tg;
    return EventStream(std::move(out), duration, std::move(meta));
}

EventStream gap_remove_probabilistic(const EventStream& stream, GapSpec gap, RemovalProbability p, Seed seed) {
    require_valid(stream);
    const double tg = gap.t_gap();
    const double prob = p.value();
    Rng rng(seed);
    const auto in = stream.times();
    std::vector<double> out;
    out.reserve(in.size());
    bool gap_enforced = false;  // decided for the current reference
    for (double t : in) {
        if (out.empty() || t - out.back() >= tg) {
            out.push_back(t);
            gap_enforced = false;
            continue;
        }
        if (gap_enforced) continue;
        if (rng.uniform() < prob) {
            gap_enforced = true;
        } else {
            out.push_back(t);
        }
    }
    auto meta = derived_meta(stream, "gap_remove_probabilistic");
    meta["t_gap"] = tg;
    meta["p"] = prob;
    meta["seed"] = seed.value;
    return EventStream(std::move(out), stream.duration(), std::move(meta));
}

EventStream delay_insert(const EventStream& stream, const DelaySpec& spec, Seed seed) {
    validate(spec);
    if (const auto* c = std::get_if<delay::Constant>(&spec)) {
        auto s = gap_insert(stream, GapSpec(c->t_gap));
        auto meta = s.meta();
        meta["generator"] = "delay_insert";
        meta["delay"] = to_string(spec);
        return EventStream(std::move(s).release_times(), s.duration(), std::move(meta));
    }
    require_valid(stream);
    Rng rng(seed);
    auto draw = [&]() -> double {
        if (const auto* e = std::get_if<delay::Exponential>(&spec)) return rng.exponential(e->rate);
        return rng.maxwell(std::get<delay::MaxwellType>(spec).scale);
    };
    const auto in = stream.times();
    std::vector<double> out;
    out.reserve(in.size());
    double shift = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
        if (k > 0) shift += draw();
        const double t = in[k] + shift;
        out.push_back(out.empty() ? t : strictly_after(out.back(), t));
    }
    if (!in.empty()) shift += draw();  // spacer after the last event
    double duration = stream.duration() + shift;
    if (!out.empty()) duration = std::max(duration, out.back());
    auto meta = derived_meta(stream, "delay_insert");
    meta["delay"] = to_string(spec);
    meta["seed"] = seed.value;
    return EventStream(std::move(out), duration, std::move(meta));
}

EventStream gen_pulsed(double period, std::size_t n_pulses, const JitterSpec& spec, Seed seed) {
    if (!(period > 0.0) || !std::isfinite(period)) throw ParameterError(fmt::format("period must be positive, got {}", period));
    if (n_pulses < 1) throw ParameterError("n_pulses must be at least 1");
    validate(spec);
    Rng rng(seed);
    const double duration = static_cast<double>(n_pulses) * period;
    std::vector<double> out;
    out.reserve(n_pulses);
    std::size_t dropped = 0;
    for (std::size_t n = 0; n < n_pulses; ++n) {
        double j = 0.0;
        if (const auto* g = std::get_if<jitter::Gaussian>(&spec)) j = g->sigma * rng.normal();
        else if (const auto* e = std::get_if<jitter::Exponential>(&spec)) j = rng.exponential(e->rate);
        const double t = static_cast<double>(n) * period + j;
        if (t < 0.0 || t > duration) {
            ++dropped;
            continue;
        }
        out.push_back(t);
    }
    std::sort(out.begin(), out.end());
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = strictly_after(out[i - 1], out[i]);
    // Nudged ties at the very end may cross the boundary.
    while (!out.empty() && out.back() > duration) {
        out.pop_back();
        ++dropped;
    }
    nlohmann::json meta = {
        {"generator", "pulsed"}, {"period", period},      {"n_pulses", n_pulses},
        {"jitter", to_string(spec)}, {"seed", seed.value}, {"dropped", dropped},
        {"rng", Rng::kName},
    };
    return EventStream(std::move(out), duration, std::move(meta));
}

EventStream thin(const EventStream& stream, double keep, Seed seed) {
    if (!(keep >= 0.0 && keep <= 1.0)) throw ParameterError(fmt::format("keep probability must lie in [0, 1], got {}", keep));
    require_valid(stream);
    Rng rng(seed);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(static_cast<double>(stream.size()) * keep) + 16);
    for (double t : stream.times()) {
        if (rng.uniform() < keep) out.push_back(t);
    }
    auto meta = derived_meta(stream, "thin");
    meta["keep"] = keep;
    meta["seed"] = seed.value;
    return EventStream(std::move(out), stream.duration(), std::move(meta));
}

}  // namespace pps
