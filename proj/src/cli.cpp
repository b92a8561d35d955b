#include "pps/cli.hpp"

#include <cmath>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pps/analytics.hpp"
#include "pps/compare.hpp"
#include "pps/estimators.hpp"
#include "pps/io.hpp"
#include "pps/reproduce.hpp"
#include "pps/transforms.hpp"

namespace pps {

namespace {

// Effective options of the subcommand chain that ran, echoed into outputs.
nlohmann::json effective_config(const CLI::App& app) {
    nlohmann::json cfg = nlohmann::json::object();
    std::string command;
    if (const CLI::Option* c = app.get_config_ptr(); c && c->count() > 0) cfg["--config"] = c->as<std::string>();
    const CLI::App* cur = &app;
    while (true) {
        auto subs = cur->get_subcommands();
        if (subs.empty()) break;
        cur = subs.front();
        command += command.empty() ? cur->get_name() : " " + cur->get_name();
        for (const CLI::Option* opt : cur->get_options()) {
            if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
            std::string value;
            if (opt->count() > 0) {
                value = opt->as<std::string>();
            } else if (!opt->get_default_str().empty()) {
                value = opt->get_default_str();
            } else {
                continue;
            }
            cfg[opt->get_name(false, true)] = value;
        }
    }
    return {{"command", command}, {"options", cfg}};
}

std::vector<std::string> selected_path(const CLI::App& app) {
    std::vector<std::string> path;
    const CLI::App* cur = &app;
    while (true) {
        auto subs = cur->get_subcommands();
        if (subs.empty()) break;
        cur = subs.front();
        path.push_back(cur->get_name());
    }
    return path;
}

// TOML reader that files top-level keys under the subcommand being run, so
// a flat `rate = 4` reaches `generate poisson --rate`.
class LeafConfig : public CLI::ConfigTOML {
public:
    explicit LeafConfig(const CLI::App* root) : root_(root) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        auto items = CLI::ConfigTOML::from_config(input);
        const auto path = selected_path(*root_);
        for (auto& item : items) {
            if (item.parents.empty()) item.parents = path;
        }
        return items;
    }

private:
    const CLI::App* root_;
};

std::size_t bins_per_gap(double t_gap, double bin_width) {
    const double ratio = t_gap / bin_width;
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(ratio - k) > 1e-9 * ratio) {
        throw ParameterError(fmt::format("bin width {} must divide t_G = {} into a whole number of bins", bin_width, t_gap));
    }
    return static_cast<std::size_t>(k);
}

struct Options {
    // generate
    double rate = 0.0, duration = 0.0, period = 0.0;
    std::size_t pulses = 0;
    std::string jitter = "none";
    std::uint64_t seed = 1;
    std::string in, out;
    // transform
    std::optional<double> tg;
    double p = 1.0;
    std::string delay;
    // estimate
    double bin_width = 0.0, tau_max = 0.0, window = 0.0;
    std::size_t order = 1;
    unsigned threads = 0;
    // analytic
    double gamma = 1.0, gamma_2ls = 0.0, gamma_exp = 0.0, step = 0.0;
    std::size_t n = 1, n_peaks = 10, terms = 0;
    // compare
    std::string sim, analytic, report;
    double threshold = 5.0;
    std::optional<double> tau_lo, tau_hi;
    // reproduce
    std::string recipe, out_dir = "reproduce_out";
};

}  // namespace

int run_cli(int argc, const char* const* argv) {
    return run_cli(std::vector<std::string>(argv, argv + argc));
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"pps: point-process photon-stream laboratory"};
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<LeafConfig>(&app));
    app.set_config("--config", "", "read options from a TOML/INI file (command-line flags win)");
    Options o;
    int exit_code = kExitOk;
    std::function<void()> action;

    // generate ------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "synthesize an event stream")->require_subcommand(1);
    auto* gen_poisson_cmd = gen->add_subcommand("poisson", "homogeneous Poisson stream");
    gen_poisson_cmd->add_option("--rate", o.rate, "events per second")->required()->check(CLI::PositiveNumber);
    gen_poisson_cmd->add_option("--duration", o.duration, "observation window (s)")->required()->check(CLI::PositiveNumber);
    gen_poisson_cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    gen_poisson_cmd->add_option("--out", o.out, "output stream (.txt for text)")->required();
    gen_poisson_cmd->callback([&] {
        action = [&] {
            auto s = gen_poisson(Rate(o.rate), o.duration, Seed{o.seed});
            auto meta = s.meta();
            meta["config"] = effective_config(app);
            write_stream(o.out, EventStream(std::move(s).release_times(), o.duration, meta));
        };
    });

    auto* gen_pulsed_cmd = gen->add_subcommand("pulsed", "pulse train with jitter");
    gen_pulsed_cmd->add_option("--period", o.period, "pulse period (s)")->required()->check(CLI::PositiveNumber);
    gen_pulsed_cmd->add_option("--pulses", o.pulses, "number of pulses")->required()->check(CLI::PositiveNumber);
    gen_pulsed_cmd->add_option("--jitter", o.jitter, "none | gaussian:SIGMA | exponential:RATE")->capture_default_str();
    gen_pulsed_cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    gen_pulsed_cmd->add_option("--out", o.out, "output stream")->required();
    gen_pulsed_cmd->callback([&] {
        action = [&] {
            auto s = gen_pulsed(o.period, o.pulses, parse_jitter(o.jitter), Seed{o.seed});
            auto meta = s.meta();
            meta["config"] = effective_config(app);
            const double d = s.duration();
            write_stream(o.out, EventStream(std::move(s).release_times(), d, meta));
        };
    });

    // transform -----------------------------------------------------------
    auto* tr = app.add_subcommand("transform", "apply a stream transform")->require_subcommand(1);
    auto add_io = [&](CLI::App* c) {
        c->add_option("--in", o.in, "input stream")->required()->check(CLI::ExistingFile);
        c->add_option("--out", o.out, "output stream")->required();
    };
    auto finish_transform = [&](EventStream s) {
        auto meta = s.meta();
        meta["config"] = effective_config(app);
        const double d = s.duration();
        write_stream(o.out, EventStream(std::move(s).release_times(), d, meta));
    };
    auto* tr_remove = tr->add_subcommand("gap-remove", "drop events within t_G of the last kept one");
    add_io(tr_remove);
    tr_remove->add_option("--tg", o.tg, "time gap (s)")->required()->check(CLI::NonNegativeNumber);
    tr_remove->callback([&] { action = [&] { finish_transform(gap_remove(read_stream(o.in), GapSpec(*o.tg))); }; });

    auto* tr_insert = tr->add_subcommand("gap-insert", "insert t_G after every event");
    add_io(tr_insert);
    tr_insert->add_option("--tg", o.tg, "time gap (s)")->required()->check(CLI::NonNegativeNumber);
    tr_insert->callback([&] { action = [&] { finish_transform(gap_insert(read_stream(o.in), GapSpec(*o.tg))); }; });

    auto* tr_prob = tr->add_subcommand("gap-remove-prob", "gap removal that holds with probability p");
    add_io(tr_prob);
    tr_prob->add_option("--tg", o.tg, "time gap (s)")->required()->check(CLI::NonNegativeNumber);
    tr_prob->add_option("--p", o.p, "removal probability")->required()->check(CLI::Range(0.0, 1.0));
    tr_prob->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    tr_prob->callback([&] {
        action = [&] {
            finish_transform(gap_remove_probabilistic(read_stream(o.in), GapSpec(*o.tg), RemovalProbability(o.p), Seed{o.seed}));
        };
    });

    auto* tr_delay = tr->add_subcommand("delay-insert", "insert random delays between events");
    add_io(tr_delay);
    tr_delay->add_option("--delay", o.delay, "const:T | exp:RATE | maxwell:A")->required();
    tr_delay->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    tr_delay->callback([&] {
        action = [&] { finish_transform(delay_insert(read_stream(o.in), parse_delay(o.delay), Seed{o.seed})); };
    });

    // estimate ------------------------------------------------------------
    auto* est = app.add_subcommand("estimate", "estimate statistics of a stream")->require_subcommand(1);
    auto* est_g2 = est->add_subcommand("g2", "binned second-order correlation");
    est_g2->add_option("--in", o.in, "input stream")->required()->check(CLI::ExistingFile);
    est_g2->add_option("--bin-width", o.bin_width, "bin width (s)")->required()->check(CLI::PositiveNumber);
    est_g2->add_option("--tau-max", o.tau_max, "largest delay (s)")->required()->check(CLI::PositiveNumber);
    est_g2->add_option("--tg", o.tg, "align bin edges to multiples of this gap")->check(CLI::PositiveNumber);
    est_g2->add_option("--threads", o.threads, "worker threads (0: all, capped by PPS_THREADS)")->capture_default_str();
    est_g2->add_option("--out", o.out, "output CSV")->required();
    est_g2->callback([&] {
        action = [&] {
            if (!(o.tau_max > o.bin_width)) throw ParameterError("tau_max must exceed the bin width");
            const auto bins = o.tg ? BinGrid::aligned(*o.tg, bins_per_gap(*o.tg, o.bin_width), o.tau_max)
                                   : BinGrid::uniform(o.bin_width, o.tau_max);
            const auto s = read_stream(o.in);
            const auto h = estimate_g2(s, bins, {o.threads});
            write_file_atomic(o.out, encode_histogram(h, {{"config", effective_config(app)}, {"stream", content_hash(s)}}));
        };
    });

    auto* est_w = est->add_subcommand("waiting", "n-th order waiting-time density");
    est_w->add_option("--in", o.in, "input stream")->required()->check(CLI::ExistingFile);
    est_w->add_option("--order", o.order, "waiting-time order n")->capture_default_str()->check(CLI::PositiveNumber);
    est_w->add_option("--bin-width", o.bin_width, "bin width (s)")->required()->check(CLI::PositiveNumber);
    est_w->add_option("--tau-max", o.tau_max, "largest delay (s)")->required()->check(CLI::PositiveNumber);
    est_w->add_option("--out", o.out, "output CSV")->required();
    est_w->callback([&] {
        action = [&] {
            const auto s = read_stream(o.in);
            const auto h = estimate_waiting(s, o.order, o.bin_width, o.tau_max);
            write_file_atomic(o.out, encode_histogram(h, {{"config", effective_config(app)}, {"stream", content_hash(s)}}));
        };
    });

    auto* est_rate = est->add_subcommand("rate", "events per second");
    est_rate->add_option("--in", o.in, "input stream")->required()->check(CLI::ExistingFile);
    est_rate->add_option("--out", o.out, "optional JSON output");
    est_rate->callback([&] {
        action = [&] {
            const auto s = read_stream(o.in);
            const double r = estimate_rate(s).value();
            nlohmann::json j = {{"schema", 1}, {"rate", r}, {"events", s.size()}, {"duration", s.duration()},
                                {"config", effective_config(app)}};
            if (!o.out.empty()) write_file_atomic(o.out, j.dump(2) + "\n");
            std::cout << fmt::format("{}\n", r);
        };
    });

    auto* est_c = est->add_subcommand("coincidences", "k-fold coincidences within a window");
    est_c->add_option("--in", o.in, "input stream")->required()->check(CLI::ExistingFile);
    est_c->add_option("--window", o.window, "window width (s)")->required()->check(CLI::PositiveNumber);
    est_c->add_option("--order", o.order, "k")->required()->check(CLI::Range(std::size_t{2}, std::size_t{64}));
    est_c->add_option("--out", o.out, "optional JSON output");
    est_c->callback([&] {
        action = [&] {
            const auto s = read_stream(o.in);
            const auto c = count_coincidences(s, o.window, o.order);
            nlohmann::json j = {{"schema", 1}, {"coincidences", c}, {"window", o.window}, {"order", o.order},
                                {"config", effective_config(app)}};
            if (!o.out.empty()) write_file_atomic(o.out, j.dump(2) + "\n");
            std::cout << c << "\n";
        };
    });

    // analytic ------------------------------------------------------------
    auto* an = app.add_subcommand("analytic", "evaluate a closed-form curve")->require_subcommand(1);
    auto add_grid = [&](CLI::App* c) {
        c->add_option("--tau-max", o.tau_max, "grid end (s)")->required()->check(CLI::PositiveNumber);
        c->add_option("--step", o.step, "grid step (s)")->required()->check(CLI::PositiveNumber);
        c->add_option("--out", o.out, "output CSV")->required();
    };
    auto write_curve = [&](const AnalyticCurve& c) {
        write_file_atomic(o.out, encode_curve(c, {{"config", effective_config(app)}}));
    };
    auto grid = [&] { return uniform_grid(o.tau_max, o.step); };

    auto* an_g2 = an->add_subcommand("g2-gapped", "g2 of the gapped coherent state");
    an_g2->add_option("--gamma", o.gamma, "backbone Poisson rate")->required()->check(CLI::PositiveNumber);
    an_g2->add_option("--tg", o.tg, "time gap")->required()->check(CLI::NonNegativeNumber);
    add_grid(an_g2);
    an_g2->callback([&] { action = [&] { write_curve(g2_gapped(grid(), Rate(o.gamma), GapSpec(*o.tg))); }; });

    auto* an_wn = an->add_subcommand("wn", "n-th waiting-time density of the gapped state");
    an_wn->add_option("--n", o.n, "order")->required()->check(CLI::PositiveNumber);
    an_wn->add_option("--gamma", o.gamma, "backbone Poisson rate")->required()->check(CLI::PositiveNumber);
    an_wn->add_option("--tg", o.tg, "time gap")->required()->check(CLI::NonNegativeNumber);
    add_grid(an_wn);
    an_wn->callback([&] { action = [&] { write_curve(wn_gapped(grid(), o.n, Rate(o.gamma), GapSpec(*o.tg))); }; });

    auto* an_2ls = an->add_subcommand("g2-2ls", "two-level-system g2, 1 - exp(-gamma_2ls |tau|)");
    auto* opt_2ls = an_2ls->add_option("--gamma-2ls", o.gamma_2ls, "coherence rate")->check(CLI::PositiveNumber);
    auto* opt_gexp = an_2ls->add_option("--gamma-exp", o.gamma_exp, "inserted delay rate (with --gamma)")->check(CLI::PositiveNumber);
    an_2ls->add_option("--gamma", o.gamma, "backbone Poisson rate (with --gamma-exp)")->check(CLI::PositiveNumber);
    opt_2ls->excludes(opt_gexp);
    add_grid(an_2ls);
    an_2ls->callback([&] {
        action = [&] {
            if (o.gamma_2ls <= 0.0 && o.gamma_exp <= 0.0) throw ParameterError("need --gamma-2ls or --gamma with --gamma-exp");
            const Rate g2ls = o.gamma_2ls > 0.0 ? Rate(o.gamma_2ls) : two_level_coherence_rate(Rate(o.gamma), Rate(o.gamma_exp));
            write_curve(g2_two_level(grid(), g2ls));
        };
    });

    auto* an_prob = an->add_subcommand("g2-prob", "g2 of probabilistic gap removal");
    an_prob->add_option("--gamma", o.gamma, "backbone Poisson rate")->required()->check(CLI::PositiveNumber);
    an_prob->add_option("--tg", o.tg, "time gap")->required()->check(CLI::NonNegativeNumber);
    an_prob->add_option("--p", o.p, "removal probability")->required()->check(CLI::Range(0.0, 1.0));
    add_grid(an_prob);
    an_prob->callback([&] {
        action = [&] { write_curve(g2_prob_removal(grid(), Rate(o.gamma), GapSpec(*o.tg), RemovalProbability(o.p))); };
    });

    auto* an_pulsed = an->add_subcommand("g2-pulsed", "g2 of a jittered pulse train");
    an_pulsed->add_option("--period", o.period, "pulse period")->required()->check(CLI::PositiveNumber);
    an_pulsed->add_option("--jitter", o.jitter, "gaussian:SIGMA | exponential:RATE")->required();
    an_pulsed->add_option("--n-peaks", o.n_peaks, "peaks on each side")->capture_default_str()->check(CLI::PositiveNumber);
    add_grid(an_pulsed);
    an_pulsed->callback([&] { action = [&] { write_curve(g2_pulsed(grid(), o.period, parse_jitter(o.jitter), o.n_peaks)); }; });

    auto* an_kim = an->add_subcommand("kim-oracle", "g2 of the gapped state rebuilt from its waiting time");
    an_kim->add_option("--gamma", o.gamma, "backbone Poisson rate")->required()->check(CLI::PositiveNumber);
    an_kim->add_option("--tg", o.tg, "time gap")->required()->check(CLI::NonNegativeNumber);
    an_kim->add_option("--terms", o.terms, "series terms (default: enough to cover tau-max)");
    add_grid(an_kim);
    an_kim->callback([&] {
        action = [&] {
            const Rate gamma(o.gamma);
            const GapSpec gap(*o.tg);
            std::size_t terms = o.terms;
            if (terms == 0) {
                if (gap.t_gap() == 0.0) throw ParameterError("--terms is required when t_G = 0");
                terms = static_cast<std::size_t>(std::ceil(o.tau_max / gap.t_gap())) + 1;
            }
            write_curve(kim_g2_from_w(wn_gapped(grid(), 1, gamma, gap), gapped_rate(gamma, gap), terms));
        };
    });

    // compare -------------------------------------------------------------
    auto* cmp = app.add_subcommand("compare", "z-score a histogram against an analytic curve");
    cmp->add_option("--sim", o.sim, "histogram CSV (kind g2 or waiting)")->required()->check(CLI::ExistingFile);
    cmp->add_option("--analytic", o.analytic, "curve CSV (kind analytic)")->required()->check(CLI::ExistingFile);
    cmp->add_option("--threshold", o.threshold, "max |z| for a pass")->capture_default_str()->check(CLI::PositiveNumber);
    cmp->add_option("--tau-lo", o.tau_lo, "ignore bins below");
    cmp->add_option("--tau-hi", o.tau_hi, "ignore bins above");
    cmp->add_option("--report", o.report, "report JSON")->required();
    cmp->callback([&] {
        action = [&] {
            const auto sim_table = decode_histogram(read_file(o.sim));
            const auto curve = to_curve(decode_histogram(read_file(o.analytic)));
            CompareOptions opt;
            opt.threshold = o.threshold;
            if (o.tau_lo) opt.tau_lo = *o.tau_lo;
            if (o.tau_hi) opt.tau_hi = *o.tau_hi;
            ComparisonReport rep;
            if (sim_table.kind == "g2") {
                rep = compare(to_correlation_histogram(sim_table).view(), curve, opt);
            } else if (sim_table.kind == "waiting") {
                rep = compare(to_waiting_histogram(sim_table).view(), curve, opt);
            } else {
                throw FormatError("--sim must be a g2 or waiting histogram");
            }
            rep.inputs = {{"sim", hash_file(o.sim)}, {"analytic", hash_file(o.analytic)}, {"config", effective_config(app)}};
            const auto j = rep.to_json();
            write_file_atomic(o.report, j.dump(2) + "\n");
            std::cout << fmt::format("{} max|z|={:.3f} rms_z={:.3f} bins={} excluded={} zero_mismatches={}\n",
                                     rep.pass ? "PASS" : "FAIL", rep.max_abs_z, rep.rms_z, rep.n_bins, rep.excluded_bins,
                                     rep.zero_mismatches);
            exit_code = rep.pass ? kExitOk : kExitFail;
        };
    });

    // reproduce -----------------------------------------------------------
    auto* rep = app.add_subcommand("reproduce", "run a pinned end-to-end recipe");
    std::vector<std::string> choices = recipe_names();
    choices.emplace_back("all");
    rep->add_option("recipe", o.recipe, "fig1b | fig3 | fig4c | all")->required()->check(CLI::IsMember(choices));
    rep->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
    rep->add_option("--threads", o.threads, "worker threads")->capture_default_str();
    rep->callback([&] {
        action = [&] {
            std::vector<std::string> todo = o.recipe == "all" ? recipe_names() : std::vector<std::string>{o.recipe};
            bool all_pass = true;
            for (const auto& name : todo) {
                const auto r = run_recipe(name, o.out_dir, o.threads);
                std::cout << fmt::format("{} {} ({:.1f} s) max|z|={}\n", r.pass ? "PASS" : "FAIL", r.name, r.seconds,
                                         r.summary.value("max_abs_z", nlohmann::json()).dump());
                all_pass = all_pass && r.pass;
            }
            exit_code = all_pass ? kExitOk : kExitFail;
        };
    });

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    try {
        if (action) action();
    } catch (const ParameterError& e) {
        std::cerr << "precondition violated: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DegenerateInputError& e) {
        std::cerr << "degenerate input: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return exit_code;
}

}  // namespace pps
