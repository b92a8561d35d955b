#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pps/analytics.hpp"
#include "pps/cli.hpp"
#include "pps/io.hpp"

using namespace pps;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("pps_cli_") + info->name() + "_" + std::to_string(::getpid()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string p(const std::string& name) const { return (dir_ / name).string(); }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "pps");
        return run_cli(args);
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run({"--help"}), kExitOk);
    EXPECT_EQ(run({}), kExitUsage);
    EXPECT_EQ(run({"frobnicate"}), kExitUsage);
    EXPECT_EQ(run({"generate", "poisson", "--rate", "1", "--duration", "10", "--out", p("a.pps"), "--bogus"}), kExitUsage);
    EXPECT_EQ(run({"generate", "poisson", "--rate", "-1", "--duration", "10", "--out", p("a.pps")}), kExitUsage);
    EXPECT_EQ(run({"transform", "gap-remove", "--in", p("missing.pps"), "--out", p("b.pps"), "--tg", "1"}), kExitUsage);
}

TEST_F(Cli, AnalyticGappedCurve) {
    ASSERT_EQ(run({"analytic", "g2-gapped", "--gamma", "1", "--tg", "3", "--tau-max", "30", "--step", "0.001", "--out", p("a.csv")}), kExitOk);
    const auto table = decode_histogram(read_file(p("a.csv")));
    EXPECT_EQ(table.formula_id, FormulaId::g2_gapped);
    const auto c = to_curve(table);
    EXPECT_EQ(c.at(1.5), 0.0);
    EXPECT_NEAR(c.at(3.001), 4.0, 0.01);
    EXPECT_EQ(table.params.at("config").at("command"), "analytic g2-gapped");
    EXPECT_EQ(table.params.at("config").at("options").at("--gamma"), "1");
}

TEST_F(Cli, EveryAnalyticFormula) {
    const std::vector<std::vector<std::string>> cmds = {
        {"wn", "--n", "2", "--gamma", "1", "--tg", "1"},
        {"g2-2ls", "--gamma-2ls", "2"},
        {"g2-2ls", "--gamma", "1", "--gamma-exp", "1"},
        {"g2-prob", "--gamma", "1", "--tg", "3", "--p", "0.3333333333"},
        {"g2-pulsed", "--period", "1", "--jitter", "gaussian:0.05"},
        {"kim-oracle", "--gamma", "1", "--tg", "1"},
    };
    for (const auto& c : cmds) {
        std::vector<std::string> args{"analytic"};
        args.insert(args.end(), c.begin(), c.end());
        for (const char* a : {"--tau-max", "5", "--step", "0.01", "--out"}) args.emplace_back(a);
        args.push_back(p("c.csv"));
        EXPECT_EQ(run(args), kExitOk) << c[0];
        EXPECT_NO_THROW(to_curve(decode_histogram(read_file(p("c.csv")))));
    }
    EXPECT_EQ(run({"analytic", "g2-2ls", "--tau-max", "5", "--step", "0.01", "--out", p("c.csv")}), kExitUsage);
    EXPECT_EQ(run({"analytic", "g2-pulsed", "--period", "1", "--jitter", "none", "--tau-max", "5", "--step", "0.01", "--out", p("c.csv")}),
              kExitUsage);
    EXPECT_EQ(run({"analytic", "wn", "--n", "0", "--gamma", "1", "--tg", "1", "--tau-max", "5", "--step", "0.01", "--out", p("c.csv")}),
              kExitUsage);
}

TEST_F(Cli, PipelinePassesAndNegativeControlFails) {
    ASSERT_EQ(run({"generate", "poisson", "--rate", "1", "--duration", "1e6", "--seed", "5", "--out", p("raw.pps")}), kExitOk);
    ASSERT_EQ(run({"transform", "gap-remove", "--in", p("raw.pps"), "--out", p("gap.pps"), "--tg", "3"}), kExitOk);
    ASSERT_EQ(run({"estimate", "g2", "--in", p("gap.pps"), "--bin-width", "0.3", "--tau-max", "30", "--tg", "3", "--out", p("h.csv")}), kExitOk);
    ASSERT_EQ(run({"analytic", "g2-gapped", "--gamma", "1", "--tg", "3", "--tau-max", "30", "--step", "0.001", "--out", p("a.csv")}), kExitOk);
    EXPECT_EQ(run({"compare", "--sim", p("h.csv"), "--analytic", p("a.csv"), "--threshold", "5", "--report", p("r.json")}), kExitOk);
    const auto rep = nlohmann::json::parse(read_file(p("r.json")));
    EXPECT_EQ(rep.at("schema"), 1);
    EXPECT_EQ(rep.at("verdict"), "pass");
    EXPECT_EQ(rep.at("inputs").at("sim"), hash_file(p("h.csv")));

    ASSERT_EQ(run({"analytic", "g2-gapped", "--gamma", "1", "--tg", "2", "--tau-max", "30", "--step", "0.001", "--out", p("w.csv")}), kExitOk);
    EXPECT_EQ(run({"compare", "--sim", p("h.csv"), "--analytic", p("w.csv"), "--report", p("r2.json")}), kExitFail);
    EXPECT_EQ(nlohmann::json::parse(read_file(p("r2.json"))).at("verdict"), "fail");

    // Bin width that does not divide t_G.
    EXPECT_EQ(run({"estimate", "g2", "--in", p("gap.pps"), "--bin-width", "0.7", "--tau-max", "30", "--tg", "3", "--out", p("x.csv")}), kExitUsage);
    EXPECT_EQ(run({"compare", "--sim", p("a.csv"), "--analytic", p("a.csv"), "--report", p("r3.json")}), kExitUsage);
}

TEST_F(Cli, PoissonAgainstFlatCurve) {
    ASSERT_EQ(run({"generate", "poisson", "--rate", "1", "--duration", "1e6", "--seed", "6", "--out", p("raw.txt")}), kExitOk);
    ASSERT_EQ(run({"estimate", "g2", "--in", p("raw.txt"), "--bin-width", "0.1", "--tau-max", "10", "--out", p("h.csv")}), kExitOk);
    ASSERT_EQ(run({"analytic", "g2-gapped", "--gamma", "1", "--tg", "0", "--tau-max", "10", "--step", "0.01", "--out", p("one.csv")}), kExitOk);
    EXPECT_EQ(run({"compare", "--sim", p("h.csv"), "--analytic", p("one.csv"), "--report", p("r.json")}), kExitOk);
}

TEST_F(Cli, TransformsAndEstimators) {
    ASSERT_EQ(run({"generate", "poisson", "--rate", "1", "--duration", "1e5", "--out", p("raw.pps")}), kExitOk);
    EXPECT_EQ(run({"transform", "gap-insert", "--in", p("raw.pps"), "--out", p("ins.pps"), "--tg", "1"}), kExitOk);
    EXPECT_EQ(run({"transform", "gap-remove-prob", "--in", p("raw.pps"), "--out", p("pr.pps"), "--tg", "1", "--p", "0.5", "--seed", "2"}), kExitOk);
    EXPECT_EQ(run({"transform", "delay-insert", "--in", p("raw.pps"), "--out", p("d.pps"), "--delay", "exp:1"}), kExitOk);
    EXPECT_EQ(run({"transform", "delay-insert", "--in", p("raw.pps"), "--out", p("d.pps"), "--delay", "lognormal:1"}), kExitUsage);
    EXPECT_EQ(run({"transform", "gap-remove-prob", "--in", p("raw.pps"), "--out", p("pr.pps"), "--tg", "1", "--p", "1.5"}), kExitUsage);
    EXPECT_EQ(run({"generate", "pulsed", "--period", "1", "--pulses", "1000", "--jitter", "exponential:20", "--out", p("pl.pps")}), kExitOk);
    EXPECT_EQ(run({"estimate", "rate", "--in", p("ins.pps"), "--out", p("rate.json")}), kExitOk);
    EXPECT_NEAR(nlohmann::json::parse(read_file(p("rate.json"))).at("rate").get<double>(), 0.5, 0.02);
    EXPECT_EQ(run({"estimate", "coincidences", "--in", p("ins.pps"), "--window", "0.999", "--order", "2", "--out", p("c.json")}), kExitOk);
    EXPECT_EQ(nlohmann::json::parse(read_file(p("c.json"))).at("coincidences"), 0);
    EXPECT_EQ(run({"estimate", "waiting", "--in", p("ins.pps"), "--order", "2", "--bin-width", "0.1", "--tau-max", "8", "--out", p("w.csv")}), kExitOk);
    EXPECT_EQ(decode_histogram(read_file(p("w.csv"))).kind, "waiting");
    EXPECT_EQ(run({"analytic", "wn", "--n", "2", "--gamma", "1", "--tg", "1", "--tau-max", "8", "--step", "0.001", "--out", p("wa.csv")}), kExitOk);
    EXPECT_EQ(run({"compare", "--sim", p("w.csv"), "--analytic", p("wa.csv"), "--report", p("wr.json")}), kExitOk);
    const auto meta = read_stream(p("d.pps")).meta();
    EXPECT_EQ(meta.at("generator"), "delay_insert");
    EXPECT_EQ(meta.at("config").at("command"), "transform delay-insert");
}

TEST_F(Cli, ConfigFileWithFlagPrecedence) {
    {
        std::ofstream f(p("run.toml"));
        f << "rate = 4\nduration = 1000\nseed = 9\n";
    }
    ASSERT_EQ(run({"generate", "poisson", "--config", p("run.toml"), "--out", p("a.pps")}), kExitOk);
    ASSERT_EQ(run({"generate", "poisson", "--config", p("run.toml"), "--rate", "2", "--out", p("b.pps")}), kExitOk);
    const auto a = read_stream(p("a.pps"));
    const auto b = read_stream(p("b.pps"));
    EXPECT_EQ(a.meta().at("rate"), 4.0);
    EXPECT_EQ(a.meta().at("seed"), 9u);
    EXPECT_EQ(b.meta().at("rate"), 2.0);
    EXPECT_EQ(b.meta().at("config").at("options").at("--rate"), "2");
}
