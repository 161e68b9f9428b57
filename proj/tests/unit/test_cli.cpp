#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(TAILRISK_CLI) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

json run_json(const std::string& args) {
    const auto r = run(args);
    EXPECT_EQ(r.code, 0) << args;
    return json::parse(r.out);
}

std::string data(const std::string& f) { return std::string(TAILRISK_DATA_DIR) + "/" + f; }

const std::string kUniverse = "--assets " + data("msci_table1.csv") + " --correlations " + data("msci_table1_correlations.csv");

std::string write_temp(const std::string& name, const std::string& text) {
    const auto p = fs::temp_directory_path() / ("tailrisk_cli_" + name);
    std::ofstream(p) << text;
    return p.string();
}

}  // namespace

TEST(CliDist, BpoeAtMeanIsOne) {
    const auto j = run_json("dist --family exponential --lambda 1 --metric bpoe --x 1");
    EXPECT_EQ(j["metric"], "bpoe");
    EXPECT_EQ(j["value"].get<double>(), 1.0);
    EXPECT_TRUE(j.contains("alpha_star") && j.contains("quantile_star"));
}

TEST(CliDist, WeibullCvar) {
    const auto j = run_json("dist --family weibull --lambda 0.5 --k 1.4 --metric cvar --alpha 0.9");
    EXPECT_NEAR(j["value"].get<double>(), 1.1644124410455372, 1e-10);
}

TEST(CliDist, InfiniteMeanPrintsInf) {
    const auto j = run_json("dist --family pareto --a 0.5 --xm 1 --metric cvar --alpha 0.9");
    EXPECT_EQ(j["value"], "inf");
}

TEST(CliDist, SpecJsonAndEngines) {
    const auto a = run_json("dist --spec '{\"family\":\"normal\",\"params\":{\"mu\":0,\"sigma\":1}}' --metric bpoe --x 1 --engine minimization");
    const auto b = run_json("dist --family normal --mu 0 --sigma 1 --metric bpoe --x 1 --engine root");
    EXPECT_NEAR(a["value"].get<double>(), b["value"].get<double>(), 1e-8);
}

TEST(CliDist, CsvFormat) {
    const auto r = run("--format csv dist --family normal --mu 0 --sigma 1 --metric cvar --alpha 0.5");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "alpha_star,metric,quantile_star,value");
}

TEST(CliDist, OutFile) {
    const auto path = (fs::temp_directory_path() / "tailrisk_cli_out.json").string();
    const auto r = run("--out " + path + " dist --family normal --mu 0 --sigma 1 --metric mean");
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(path);
    EXPECT_EQ(json::parse(in)["value"].get<double>(), 0.0);
}

TEST(CliExitCodes, InputErrorsAreOne) {
    EXPECT_EQ(run("dist --family normal --mu 0 --sigma -1 --metric mean").code, 1);
    EXPECT_EQ(run("dist --family normal --mu 0 --metric mean").code, 1);
    EXPECT_EQ(run("dist --family nosuch --metric mean").code, 1);
    EXPECT_EQ(run("dist --family normal --mu 0 --sigma 1 --metric cvar").code, 1);
    EXPECT_EQ(run("dist --family normal --mu 0 --sigma 1 --metric bogus").code, 1);
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("fit --family weibull --sample " + write_temp("empty.csv", "") + " --levels 0.5,0.9").code, 1);
}

TEST(CliExitCodes, DomainErrorsAreTwo) {
    EXPECT_EQ(run("dist --family normal --mu 0 --sigma 1 --metric cvar --alpha 1.5").code, 2);
    EXPECT_EQ(run("dist --family normal --mu 0 --sigma 1 --metric quantile --alpha 0").code, 2);
    EXPECT_EQ(run("portfolio " + kUniverse + " --alpha 0.9 --lower 0.5").code, 2);
    EXPECT_EQ(run("portfolio " + kUniverse + " --alpha 0.9 --family student_t --nu 2").code, 2);
}

TEST(CliOracle, QuadratureAndMonteCarlo) {
    const auto q = run_json("oracle --family gev --mu 0 --s 1 --xi 0.3 --alpha 0.9");
    EXPECT_NEAR(q["value"].get<double>(), q["closed_form"].get<double>(), 1e-8);
    EXPECT_TRUE(q.contains("error_estimate"));
    const auto m = run_json("--seed 5 oracle --family normal --mu 0 --sigma 1 --alpha 0.95 --mc --samples 100000");
    EXPECT_NEAR(m["value"].get<double>(), m["closed_form"].get<double>(), 4 * m["error_estimate"].get<double>());
    EXPECT_EQ(m["seed"], 5);
    const auto m2 = run_json("--seed 5 oracle --family normal --mu 0 --sigma 1 --alpha 0.95 --mc --samples 100000");
    EXPECT_EQ(m["value"], m2["value"]);
    const auto b = run_json("oracle --family exponential --lambda 1 --x 2");
    EXPECT_NEAR(b["value"].get<double>(), std::exp(-1.0), 1e-6);
}

TEST(CliOracle, SeedFromEnvironment) {
    const auto r = run("oracle --family normal --mu 0 --sigma 1 --alpha 0.5 --mc --samples 2000");
    const auto e = run("oracle --family normal --mu 0 --sigma 1 --alpha 0.5 --mc --samples 2000 ; true");
    (void)e;
    setenv("TAILRISK_SEED", "77", 1);
    const auto a = json::parse(run("oracle --family normal --mu 0 --sigma 1 --alpha 0.5 --mc --samples 2000").out);
    unsetenv("TAILRISK_SEED");
    EXPECT_EQ(a["seed"], 77);
    EXPECT_EQ(json::parse(r.out)["seed"], 20240611);
}

TEST(CliPortfolio, BpoeThresholdSixteen) {
    const auto j = run_json("portfolio " + kUniverse + " --objective bpoe --x 0.16 --family normal");
    EXPECT_NEAR(j["objective"].get<double>(), 0.0513, 1e-3);
    EXPECT_EQ(j["assets"][0], "MXUS");
    EXPECT_EQ(j["weights"].size(), 6u);
    EXPECT_TRUE(j["bpoe_by_family"].contains("student_t(3)"));
}

TEST(CliPortfolio, CvarLaplaceNinetyFive) {
    const auto j = run_json("portfolio " + kUniverse + " --objective cvar --alpha 0.95 --family laplace");
    const double ref[] = {65.05, 8.97, 0, 1.94, 0, 24.04};
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(100 * j["weights"][i].get<double>(), ref[i], 0.5);
    EXPECT_LT(j["markowitz_gap"].get<double>(), 5e-3);
}

TEST(CliPortfolio, SingleAsset) {
    const auto a = write_temp("one.csv", "name,expected_return,stdev\nX,0.05,0.1\n");
    const auto c = write_temp("one_c.csv", ",X\nX,1\n");
    for (const auto& obj : {"--objective cvar --alpha 0.9", "--objective bpoe --x 0.1"}) {
        const auto j = run_json("portfolio --assets " + a + " --correlations " + c + " " + obj);
        EXPECT_DOUBLE_EQ(j["weights"][0].get<double>(), 1.0);
    }
}

TEST(CliPortfolio, DimensionMismatchIsInputError) {
    const auto c = write_temp("two_c.csv", ",A,B\nA,1,0\nB,0,1\n");
    EXPECT_EQ(run("portfolio --assets " + data("msci_table1.csv") + " --correlations " + c + " --alpha 0.9").code, 1);
}

TEST(CliPortfolio, FrontierCsv) {
    const auto path = (fs::temp_directory_path() / "tailrisk_frontier.csv").string();
    const auto j = run_json("portfolio " + kUniverse + " --objective bpoe --sweep 0.12,0.16,0.25 --frontier-csv " + path);
    EXPECT_EQ(j["frontier"].size(), 3u);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "x,return,stdev,objective,MXUS,MXJP,MXGB,MXDE,MXFR,MXCH");
}

TEST(CliFit, SelfTestRecoversParameters) {
    const auto j = run_json("fit --family weibull --lambda 0.5 --k 1.4 --self-test --levels 0.15,0.75 --exact");
    EXPECT_NEAR(j["params"]["lambda"].get<double>(), 0.5, 1e-6);
    EXPECT_NEAR(j["params"]["k"].get<double>(), 1.4, 1e-6);
}

TEST(CliFit, SampleWithBaselines) {
    const auto pdf = (fs::temp_directory_path() / "tailrisk_fit_pdf.csv").string();
    const auto j = run_json("fit --family weibull --lambda 0.5 --k 1.4 --simulate 50 --levels 0.5,0.75,0.95 --baselines --pdf-csv " + pdf);
    EXPECT_EQ(j["residuals"].size(), 3u);
    EXPECT_TRUE(j["baselines"].contains("method_of_moments"));
    EXPECT_TRUE(j["baselines"].contains("maximum_likelihood"));
    std::ifstream in(pdf);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "x,fitted_pdf,mm_pdf,ml_pdf");
}

TEST(CliFit, SampleFile) {
    const auto s = write_temp("sample.csv", "x\n0.2\n0.5\n0.1\n0.9\n1.7\n0.3\n0.4\n0.25\n");
    const auto j = run_json("fit --family weibull --sample " + s + " --levels 0.15,0.75");
    EXPECT_GT(j["params"]["k"].get<double>(), 0.0);
}

TEST(CliFit, FailureReportsResiduals) {
    const auto r = run("fit --family normal --targets 3,1 --levels 0.2,0.9 --exact");
    EXPECT_EQ(r.code, 2);
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["residuals"].size(), 2u);
}
