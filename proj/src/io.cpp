#include "pps/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

namespace pps {

namespace {

constexpr std::string_view kMagic = "PPS1";
constexpr std::string_view kStreamHeader = "# pps-stream v1 duration=";
constexpr std::string_view kHistHeader = "# pps-hist v1 ";
constexpr std::string_view kColumns = "bin_lo,bin_hi,count,value,stderr";

void put_u64(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 64; b += 8) out.push_back(static_cast<char>((v >> b) & 0xFFU));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
        pos_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string_view take(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError("truncated binary stream file");
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::string fmt_double(double v) { return fmt::format("{}", v); }

double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError(fmt::format("malformed {} '{}'", what, s));
    return v;
}

std::uint64_t parse_u64(std::string_view s, std::string_view what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError(fmt::format("malformed {} '{}'", what, s));
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        fn(trim(text.substr(start, end - start)));
        start = end + 1;
    }
}

nlohmann::json base_params(const nlohmann::json& extra) {
    nlohmann::json p = nlohmann::json::object();
    if (!extra.is_null()) p.update(extra);
    return p;
}

void append_row(std::string& out, double lo, double hi, std::uint64_t count, double value, double err) {
    out += fmt::format("{},{},{},{},{}\n", fmt_double(lo), fmt_double(hi), count, fmt_double(value), fmt_double(err));
}

std::string encode_binned(std::string_view kind, const nlohmann::json& params, const HistogramView& h) {
    std::string out = fmt::format("{}kind={} params={}\n{}\n", kHistHeader, kind, params.dump(), kColumns);
    for (std::size_t b = 0; b < h.size(); ++b) append_row(out, h.edges[b], h.edges[b + 1], h.counts[b], h.values[b], h.errors[b]);
    return out;
}

std::vector<double> edges_of(const HistogramTable& t) {
    if (t.bin_lo.empty()) throw FormatError("histogram has no bins");
    std::vector<double> edges(t.bin_lo.begin(), t.bin_lo.end());
    edges.push_back(t.bin_hi.back());
    for (std::size_t b = 0; b + 1 < t.bin_lo.size(); ++b) {
        if (t.bin_hi[b] != t.bin_lo[b + 1]) throw FormatError(fmt::format("histogram bins are not contiguous at row {}", b));
    }
    return edges;
}

double number_param(const nlohmann::json& params, const char* key) {
    if (!params.contains(key) || !params[key].is_number()) throw FormatError(fmt::format("histogram params lack '{}'", key));
    return params[key].get<double>();
}

}  // namespace

std::string hash_file(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    return fmt::format("{:016x}", fnv1a64({reinterpret_cast<const unsigned char*>(data.data()), data.size()}));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    std::random_device rd;
    auto tmp = path;
    tmp += fmt::format(".tmp-{:08x}", rd());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw FormatError(fmt::format("cannot open '{}' for writing", tmp.string()));
        f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!f) throw FormatError(fmt::format("write to '{}' failed", tmp.string()));
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw FormatError(fmt::format("cannot move output into place at '{}': {}", path.string(), ec.message()));
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << f.rdbuf();
    return std::move(ss).str();
}

std::string encode_stream_binary(const EventStream& stream) {
    const std::string meta = stream.meta().dump();
    std::string out;
    out.reserve(kMagic.size() + 16 + 8 * stream.size() + 8 + meta.size());
    out += kMagic;
    put_u64(out, stream.size());
    put_f64(out, stream.duration());
    for (double t : stream.times()) put_f64(out, t);
    put_u64(out, meta.size());
    out += meta;
    return out;
}

EventStream decode_stream_binary(std::string_view bytes) {
    if (bytes.substr(0, kMagic.size()) != kMagic) throw FormatError("not a PPS1 binary stream");
    Reader r(bytes.substr(kMagic.size()));
    const std::uint64_t n = r.u64();
    const double duration = r.f64();
    if (n > r.remaining() / 8) throw FormatError("binary stream count exceeds file size");
    std::vector<double> times(n);
    for (auto& t : times) t = r.f64();
    const std::uint64_t len = r.u64();
    if (len > r.remaining()) throw FormatError("binary stream meta length exceeds file size");
    const auto blob = r.take(len);
    if (r.remaining() != 0) throw FormatError("trailing bytes after binary stream meta");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(blob);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("binary stream meta is not valid JSON: {}", e.what()));
    }
    return EventStream(std::move(times), duration, std::move(meta));
}

std::string encode_stream_text(const EventStream& stream) {
    std::string out = fmt::format("{}{}\n", kStreamHeader, fmt_double(stream.duration()));
    for (double t : stream.times()) {
        out += fmt_double(t);
        out += '\n';
    }
    return out;
}

EventStream decode_stream_text(std::string_view text) {
    std::optional<double> duration;
    std::vector<double> times;
    std::size_t line_no = 0;
    for_each_line(text, [&](std::string_view line) {
        ++line_no;
        if (line_no == 1) {
            if (line.substr(0, kStreamHeader.size()) != kStreamHeader) throw FormatError("missing '# pps-stream v1' header");
            duration = parse_double(line.substr(kStreamHeader.size()), "duration");
            return;
        }
        if (line.empty() || line.front() == '#') return;
        times.push_back(parse_double(line, "timestamp"));
    });
    if (!duration) throw FormatError("empty stream file");
    return EventStream(std::move(times), *duration, nlohmann::json{{"source", "text"}});
}

StreamFormat format_for(const std::filesystem::path& path) {
    return path.extension() == ".txt" ? StreamFormat::text : StreamFormat::binary;
}

void write_stream(const std::filesystem::path& path, const EventStream& stream) {
    write_file_atomic(path, format_for(path) == StreamFormat::text ? encode_stream_text(stream) : encode_stream_binary(stream));
}

EventStream read_stream(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    if (std::string_view(data).substr(0, kMagic.size()) == kMagic) return decode_stream_binary(data);
    return decode_stream_text(data);
}

std::string encode_histogram(const CorrelationHistogram& hist, const nlohmann::json& extra) {
    auto params = base_params(extra);
    params["rate_hat"] = hist.rate_hat;
    params["duration"] = hist.duration;
    return encode_binned("g2", params, hist.view());
}

std::string encode_histogram(const WaitingHistogram& hist, const nlohmann::json& extra) {
    auto params = base_params(extra);
    params["order"] = hist.order;
    params["total"] = hist.total;
    params["duration"] = hist.duration;
    return encode_binned("waiting", params, hist.view());
}

std::string encode_curve(const AnalyticCurve& curve, const nlohmann::json& extra) {
    auto params = base_params(extra);
    params.update(curve.params);
    params["discontinuities"] = curve.discontinuities;
    std::string out = fmt::format("{}kind=analytic formula_id={} params={}\n{}\n", kHistHeader, to_string(curve.formula_id),
                                  params.dump(), kColumns);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double tau = curve.tau_grid[i];
        if (curve.left_limit(i) != curve.values[i]) append_row(out, tau, tau, 0, curve.left_limit(i), 0.0);
        append_row(out, tau, tau, 0, curve.values[i], 0.0);
    }
    return out;
}

HistogramTable decode_histogram(std::string_view text) {
    HistogramTable t;
    std::size_t line_no = 0;
    for_each_line(text, [&](std::string_view line) {
        ++line_no;
        if (line_no == 1) {
            if (line.substr(0, kHistHeader.size()) != kHistHeader) throw FormatError("missing '# pps-hist v1' header");
            auto rest = line.substr(kHistHeader.size());
            const auto pidx = rest.find("params=");
            if (pidx == std::string_view::npos) throw FormatError("histogram header lacks params=");
            try {
                t.params = nlohmann::json::parse(rest.substr(pidx + 7));
            } catch (const nlohmann::json::exception& e) {
                throw FormatError(fmt::format("histogram params are not valid JSON: {}", e.what()));
            }
            std::istringstream head{std::string(rest.substr(0, pidx))};
            std::string token;
            while (head >> token) {
                if (token.starts_with("kind=")) t.kind = token.substr(5);
                else if (token.starts_with("formula_id=")) t.formula_id = formula_from_string(token.substr(11));
            }
            if (t.kind != "g2" && t.kind != "waiting" && t.kind != "analytic") {
                throw FormatError(fmt::format("unknown histogram kind '{}'", t.kind));
            }
            return;
        }
        if (line.empty() || line.front() == '#') return;
        if (line == kColumns) return;
        std::string_view fields[5];
        std::size_t start = 0;
        for (int f = 0; f < 5; ++f) {
            const auto comma = line.find(',', start);
            if ((f < 4) == (comma == std::string_view::npos)) throw FormatError(fmt::format("histogram row {} needs 5 columns", line_no));
            fields[f] = line.substr(start, f < 4 ? comma - start : std::string_view::npos);
            start = comma + 1;
        }
        t.bin_lo.push_back(parse_double(fields[0], "bin_lo"));
        t.bin_hi.push_back(parse_double(fields[1], "bin_hi"));
        t.count.push_back(parse_u64(fields[2], "count"));
        t.value.push_back(parse_double(fields[3], "value"));
        t.std_error.push_back(parse_double(fields[4], "stderr"));
    });
    if (line_no == 0) throw FormatError("empty histogram file");
    return t;
}

CorrelationHistogram to_correlation_histogram(const HistogramTable& table) {
    if (table.kind != "g2") throw FormatError(fmt::format("expected a g2 histogram, got kind={}", table.kind));
    CorrelationHistogram h;
    try {
        h.bins = BinGrid::from_edges(edges_of(table));
    } catch (const ParameterError& e) {
        throw FormatError(e.what());
    }
    h.pair_counts = table.count;
    h.g2 = table.value;
    h.std_error = table.std_error;
    h.rate_hat = number_param(table.params, "rate_hat");
    h.duration = number_param(table.params, "duration");
    h.count_scale.resize(h.bins.size());
    for (std::size_t b = 0; b < h.bins.size(); ++b) {
        h.count_scale[b] = 1.0 / (h.rate_hat * h.rate_hat * (h.duration - h.bins.center(b)) * h.bins.width(b));
    }
    return h;
}

WaitingHistogram to_waiting_histogram(const HistogramTable& table) {
    if (table.kind != "waiting") throw FormatError(fmt::format("expected a waiting histogram, got kind={}", table.kind));
    WaitingHistogram h;
    try {
        h.bins = BinGrid::from_edges(edges_of(table));
    } catch (const ParameterError& e) {
        throw FormatError(e.what());
    }
    h.order = static_cast<std::size_t>(number_param(table.params, "order"));
    h.total = static_cast<std::uint64_t>(number_param(table.params, "total"));
    h.duration = number_param(table.params, "duration");
    h.counts = table.count;
    h.density = table.value;
    h.std_error = table.std_error;
    h.count_scale.resize(h.bins.size());
    for (std::size_t b = 0; b < h.bins.size(); ++b) h.count_scale[b] = 1.0 / (static_cast<double>(h.total) * h.bins.width(b));
    return h;
}

AnalyticCurve to_curve(const HistogramTable& table) {
    if (table.kind != "analytic") throw FormatError(fmt::format("expected an analytic curve, got kind={}", table.kind));
    AnalyticCurve c;
    c.formula_id = table.formula_id.value_or(FormulaId::constant);
    c.params = table.params;
    if (c.params.contains("discontinuities")) {
        c.discontinuities = c.params["discontinuities"].get<std::vector<double>>();
        c.params.erase("discontinuities");
    }
    bool has_jump = false;
    std::vector<double> left;
    for (std::size_t r = 0; r < table.bin_lo.size(); ++r) {
        const double tau = table.bin_lo[r];
        if (!c.tau_grid.empty() && tau == c.tau_grid.back()) {
            // second row at the same tau: the first one was the left limit
            left.back() = c.values.back();
            c.values.back() = table.value[r];
            has_jump = true;
            continue;
        }
        if (!c.tau_grid.empty() && !(tau > c.tau_grid.back())) throw FormatError("curve grid is not increasing");
        c.tau_grid.push_back(tau);
        c.values.push_back(table.value[r]);
        left.push_back(table.value[r]);
    }
    if (has_jump) c.left_limits = std::move(left);
    return c;
}

}  // namespace pps
