// Exercises the installed binary: exit-code taxonomy and output files.
// The CLI path arrives as the last program argument (wired by ctest).

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string g_cli;

int run_cli(const std::string& args) {
    const std::string cmd = '"' + g_cli + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return status < 0 ? status : WEXITSTATUS(status);
}

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "classdiag_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run_cli("no-such-subcommand") == 2);
    CHECK(run_cli("bayes-curve --no-such-flag") == 2);
    CHECK(run_cli("") == 2); // a subcommand is required
}

TEST_CASE("config errors exit with code 2") {
    const fs::path dir = scratch();
    // no seed anywhere
    CHECK(run_cli("bayes-curve --out \"" + (dir / "out").string() + "\"") == 2);
    // malformed config file
    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK(run_cli("bayes-curve --config \"" + (dir / "bad.json").string() + "\" --seed 1") == 2);
}

TEST_CASE("data errors exit with code 3") {
    const fs::path dir = scratch();
    CHECK(run_cli("learning-curve --input \"" + (dir / "absent.csv").string() +
                  "\" --seed 1 --out \"" + (dir / "out").string() + "\"") == 3);

    std::ofstream(dir / "bad.csv") << "f1,label\nNaN,a\n1,b\n";
    CHECK(run_cli("corr-heatmap --input \"" + (dir / "bad.csv").string() +
                  "\" --seed 1 --out \"" + (dir / "out").string() + "\"") == 3);
}

TEST_CASE("confusion over the reference prediction fixture") {
    const fs::path dir = scratch();
    const char* names[7] = {"Bareland", "Forest",      "Idle",  "Industry",
                            "Orchard",  "Residential", "Water"};
    const int counts[7][7] = {
        {42, 0, 0, 2, 0, 0, 0},  {0, 73, 1, 0, 9, 0, 0},  {0, 1, 44, 0, 0, 0, 0},
        {2, 0, 1, 66, 0, 2, 0},  {0, 0, 0, 0, 48, 0, 0},  {0, 0, 0, 1, 0, 89, 1},
        {0, 0, 0, 0, 0, 0, 41},
    };
    {
        std::ofstream preds(dir / "preds.csv");
        preds << "true,predicted\n";
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j)
                for (int k = 0; k < counts[i][j]; ++k) preds << names[i] << ',' << names[j] << '\n';
    }
    const fs::path out = dir / "out";
    CHECK(run_cli("confusion --pred-file \"" + (dir / "preds.csv").string() + "\" --seed 1 --out \"" +
                  out.string() + "\"") == 0);

    std::ifstream in(out / "report.json");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string report = buffer.str();
    // total 423, 20 misclassified
    CHECK(report.find("\"total\": 423") != std::string::npos);
    const double want = 20.0 / 423.0;
    const auto pos = report.find("\"overall_error\": ");
    REQUIRE(pos != std::string::npos);
    const double got = std::stod(report.substr(pos + 17));
    CHECK(std::abs(got - want) <= 1e-12);
}

TEST_CASE("a successful run exits 0 and writes its artifacts") {
    const fs::path dir = scratch();
    const fs::path out = dir / "out";
    CHECK(run_cli("bayes-curve --seed 7 --d-max 4 --d-step 1 --out \"" + out.string() + "\"") == 0);
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "bayes_curve.curve.csv"));

    const fs::path out2 = dir / "synth_out";
    CHECK(run_cli("synth --seed 7 --mu 1,0 --n 40 --out \"" + out2.string() + "\"") == 0);
    CHECK(fs::exists(out2 / "synthetic.csv"));
}

int main(int argc, char** argv) {
    doctest::Context context;
    int keep = 1;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg.rfind("--cli=", 0) == 0) {
            g_cli = arg.substr(6);
        } else {
            argv[keep++] = argv[i];
        }
    }
    context.applyCommandLine(keep, argv);
    if (g_cli.empty()) {
        std::fprintf(stderr, "missing --cli=<path>\n");
        return 1;
    }
    return context.run();
}
