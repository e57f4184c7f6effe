#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "testutil.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

// Run the installed binary with shell-level redirection and collect the result.
CmdResult run_cli(const std::string& args, const fs::path& scratch) {
    const fs::path out_file = scratch / "stdout.txt";
    const fs::path err_file = scratch / "stderr.txt";
    const std::string cmd = std::string("\"") + EMBAUG_CLI_PATH + "\" " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int raw = std::system(cmd.c_str());
    CmdResult result;
    result.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -2;
    result.out = embaug::testutil::slurp(out_file);
    result.err = embaug::testutil::slurp(err_file);
    return result;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

// Small enough to keep every subcommand under a second or two.
const char* kTinyConfig =
    "[dataset]\n"
    "d = 8\n"
    "k = 2\n"
    "n_bags = 12\n"
    "sigma = 0.2\n"
    "mean_bag_size = 8\n"
    "min_bag_size = 6\n"
    "max_bag_size = 10\n"
    "[gan]\n"
    "variant = ind\n"
    "epochs = 1\n"
    "batch_size = 16\n"
    "[mil]\n"
    "epochs = 2\n"
    "d_att = 8\n"
    "[experiment]\n"
    "arms = no-aug\n"
    "mil_seeds = 1\n"
    "n_augs = 2\n"
    "max_gan_pairs = 64\n";

}  // namespace

TEST_CASE("help and version exit cleanly") {
    auto dir = embaug::testutil::fresh_dir("cli_help");
    CmdResult help = run_cli("--help", dir);
    CHECK(help.code == 0);
    CHECK(help.out.find("gen-data") != std::string::npos);
    CHECK(help.out.find("report") != std::string::npos);

    CmdResult version = run_cli("--version", dir);
    CHECK(version.code == 0);
    CHECK(version.out.find("0.1.0") != std::string::npos);
}

TEST_CASE("usage errors exit 2 with a categorized line") {
    auto dir = embaug::testutil::fresh_dir("cli_usage");
    CmdResult unknown_cmd = run_cli("frobnicate", dir);
    CHECK(unknown_cmd.code == 2);
    CHECK(unknown_cmd.err.rfind("error: usage:", 0) == 0);

    CmdResult unknown_flag = run_cli("gen-data --frobnicate", dir);
    CHECK(unknown_flag.code == 2);
    CHECK(unknown_flag.err.rfind("error: usage:", 0) == 0);

    CmdResult missing_required = run_cli("train-gan", dir);
    CHECK(missing_required.code == 2);
    CHECK(missing_required.err.rfind("error: usage:", 0) == 0);

    CmdResult no_subcommand = run_cli("", dir);
    CHECK(no_subcommand.code == 2);
}

TEST_CASE("gen-data is byte-reproducible and leaves a manifest") {
    auto dir = embaug::testutil::fresh_dir("cli_gen");
    write_file(dir / "tiny.ini", kTinyConfig);
    const std::string base =
        "gen-data --config " + (dir / "tiny.ini").string() + " --seed 7 --out ";

    CmdResult first = run_cli(base + (dir / "a").string(), dir);
    REQUIRE_MESSAGE(first.code == 0, first.err);
    CmdResult second = run_cli(base + (dir / "b").string(), dir);
    REQUIRE(second.code == 0);

    const std::string data_a = embaug::testutil::slurp(dir / "a" / "dataset.bin");
    CHECK_FALSE(data_a.empty());
    CHECK(data_a == embaug::testutil::slurp(dir / "b" / "dataset.bin"));
    CHECK(embaug::testutil::slurp(dir / "a" / "dataset.bin.meta.json") ==
          embaug::testutil::slurp(dir / "b" / "dataset.bin.meta.json"));

    nlohmann::json manifest =
        nlohmann::json::parse(embaug::testutil::slurp(dir / "a" / "manifest.gen-data.json"));
    CHECK(manifest["command"] == "gen-data");
    CHECK(manifest["version"] == "0.1.0");
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["config"]["dataset"]["d"] == 8);
    CHECK(manifest["config"]["dataset"]["n_bags"] == 12);
    CHECK(embaug::testutil::slurp(dir / "a" / "manifest.gen-data.json") ==
          embaug::testutil::slurp(dir / "b" / "manifest.gen-data.json"));
}

TEST_CASE("full pipeline: data, augmenter, classifier, evaluation") {
    auto dir = embaug::testutil::fresh_dir("cli_pipeline");
    write_file(dir / "tiny.ini", kTinyConfig);
    const std::string cfg = " --config " + (dir / "tiny.ini").string() + " --seed 5 ";
    const std::string data = (dir / "data" / "dataset.bin").string();

    REQUIRE(run_cli("gen-data" + cfg + "--out " + (dir / "data").string(), dir).code == 0);

    CmdResult gan = run_cli(
        "train-gan" + cfg + "--data " + data + " --fold 0 --out " + (dir / "gan").string(), dir);
    REQUIRE_MESSAGE(gan.code == 0, gan.err);
    CHECK(gan.out.find("augmenter") != std::string::npos);
    CHECK(fs::exists(dir / "gan" / "gan.bin"));

    CmdResult mil = run_cli("train-mil" + cfg + "--data " + data +
                                " --fold 0 --mode gan --gan " + (dir / "gan" / "gan.bin").string() +
                                " --out " + (dir / "mil").string(),
                            dir);
    REQUIRE_MESSAGE(mil.code == 0, mil.err);
    CHECK(fs::exists(dir / "mil" / "mil.bin"));
    nlohmann::json mil_manifest =
        nlohmann::json::parse(embaug::testutil::slurp(dir / "mil" / "manifest.train-mil.json"));
    CHECK(mil_manifest["config"]["mode"] == "gan");
    CHECK(mil_manifest["inputs"]["generator"] == (dir / "gan" / "gan.bin").string());

    CmdResult eval = run_cli("evaluate" + cfg + "--data " + data + " --model " +
                                 (dir / "mil" / "mil.bin").string() + " --fold 0 --out " +
                                 (dir / "eval").string(),
                             dir);
    REQUIRE_MESSAGE(eval.code == 0, eval.err);
    nlohmann::json result =
        nlohmann::json::parse(embaug::testutil::slurp(dir / "eval" / "eval.json"));
    CHECK(result["fold"] == 0);
    CHECK(result["n"].get<std::size_t>() > 0);
    CHECK(result["accuracy"].is_number());
    CHECK(result["kappa2"].is_number());
    CHECK(result["nll"].is_number());
    CHECK(result["confusion"].size() == 2);

    // Patch-mode training works without a checkpoint.
    CmdResult patch = run_cli("train-mil" + cfg + "--data " + data +
                                  " --fold 1 --mode patch --out " + (dir / "milp").string(),
                              dir);
    REQUIRE_MESSAGE(patch.code == 0, patch.err);
}

TEST_CASE("bench writes both cost ratios") {
    auto dir = embaug::testutil::fresh_dir("cli_bench");
    write_file(dir / "bench.ini",
               "[bench]\nbatch = 16\nmin_batches = 2\nmin_seconds = 0.02\n");
    CmdResult bench = run_cli("bench --config " + (dir / "bench.ini").string() +
                                  " --variant ind --d 8 --seed 3 --out " + dir.string(),
                              dir);
    REQUIRE_MESSAGE(bench.code == 0, bench.err);
    nlohmann::json result = nlohmann::json::parse(embaug::testutil::slurp(dir / "bench.json"));
    CHECK(result["variant"] == "ind");
    CHECK(result["d"] == 8);
    CHECK(result["generator_macs"] == 12 * 8);
    CHECK(result["reference_macs"] == 5'340'348'416ull);
    CHECK(result["analytic_ratio"].get<double>() > 300.0);
    CHECK(result["measured_ratio"].get<double>() > 0.0);
    CHECK(result["seconds_per_aug"].get<double>() > 0.0);
    CHECK(bench.out.find("analytic") != std::string::npos);
}

TEST_CASE("report runs the experiment and reproduces byte-identical results") {
    auto dir = embaug::testutil::fresh_dir("cli_report");
    write_file(dir / "tiny.ini", kTinyConfig);
    const std::string base = "report --config " + (dir / "tiny.ini").string() + " --seed 9 --out ";

    CmdResult first = run_cli(base + (dir / "r1").string(), dir);
    REQUIRE_MESSAGE(first.code == 0, first.err);
    CHECK(first.out.find("no-aug") != std::string::npos);

    CmdResult second = run_cli(base + (dir / "r2").string(), dir);
    REQUIRE(second.code == 0);

    const std::string report = embaug::testutil::slurp(dir / "r1" / "report.json");
    CHECK_FALSE(report.empty());
    CHECK(report == embaug::testutil::slurp(dir / "r2" / "report.json"));
    CHECK(embaug::testutil::slurp(dir / "r1" / "manifest.report.json") ==
          embaug::testutil::slurp(dir / "r2" / "manifest.report.json"));
    CHECK(fs::exists(dir / "r1" / "report.txt"));
    CHECK(fs::exists(dir / "r1" / "timing.json"));

    nlohmann::json parsed = nlohmann::json::parse(report);
    CHECK(parsed["arms"].size() == 1);
    CHECK(parsed["arms"][0]["arm"] == "no-aug");
}

TEST_CASE("config and input failures exit 2 by category") {
    auto dir = embaug::testutil::fresh_dir("cli_errors");

    // Malformed settings text.
    write_file(dir / "broken.ini", "[unterminated\n");
    CmdResult bad_parse = run_cli("gen-data --config " + (dir / "broken.ini").string(), dir);
    CHECK(bad_parse.code == 2);
    CHECK(bad_parse.err.rfind("error: parse:", 0) == 0);

    // Schema violation.
    write_file(dir / "unknown.ini", "[dataset]\ndd = 3\n");
    CmdResult bad_schema = run_cli("gen-data --config " + (dir / "unknown.ini").string(), dir);
    CHECK(bad_schema.code == 2);
    CHECK(bad_schema.err.rfind("error: config:", 0) == 0);
    CHECK(bad_schema.err.find("unknown key") != std::string::npos);

    // Missing input file.
    CmdResult missing = run_cli("train-mil --data " + (dir / "nope.bin").string(), dir);
    CHECK(missing.code == 2);
    CHECK(missing.err.rfind("error: config:", 0) == 0);

    // Garbage where a dataset should be.
    write_file(dir / "garbage.bin", "this is not a dataset");
    CmdResult corrupt = run_cli("evaluate --data " + (dir / "garbage.bin").string() +
                                    " --model also-missing.bin",
                                dir);
    CHECK(corrupt.code == 2);
    CHECK(corrupt.err.rfind("error: parse:", 0) == 0);

    // A flag constraint: fold index out of range.
    write_file(dir / "tiny.ini", kTinyConfig);
    CmdResult bad_fold = run_cli("train-mil --data x --fold 7", dir);
    CHECK(bad_fold.code == 2);
    CHECK(bad_fold.err.rfind("error: usage:", 0) == 0);

    // gan mode without a checkpoint is a configuration error.
    REQUIRE(run_cli("gen-data --config " + (dir / "tiny.ini").string() + " --seed 1 --out " +
                        (dir / "data").string(),
                    dir)
                .code == 0);
    CmdResult no_gan = run_cli("train-mil --config " + (dir / "tiny.ini").string() + " --data " +
                                   (dir / "data" / "dataset.bin").string() + " --mode gan",
                               dir);
    CHECK(no_gan.code == 2);
    CHECK(no_gan.err.rfind("error: config:", 0) == 0);
    CHECK(no_gan.err.find("--gan") != std::string::npos);
}

TEST_CASE("training failures exit 1 as runtime errors") {
    auto dir = embaug::testutil::fresh_dir("cli_runtime");
    // Astronomical noise overflows 32-bit storage to infinity; training then
    // aborts on the first non-finite loss.
    write_file(dir / "inf.ini",
               "[dataset]\nd = 8\nk = 2\nn_bags = 12\nsigma = 1e308\n"
               "mean_bag_size = 8\nmin_bag_size = 6\nmax_bag_size = 10\n"
               "[mil]\nepochs = 1\nd_att = 8\n");
    const std::string cfg = " --config " + (dir / "inf.ini").string() + " --seed 2 ";
    REQUIRE(run_cli("gen-data" + cfg + "--out " + dir.string(), dir).code == 0);
    CmdResult blowup = run_cli(
        "train-mil" + cfg + "--data " + (dir / "dataset.bin").string() + " --out " + dir.string(),
        dir);
    CHECK(blowup.code == 1);
    CHECK(blowup.err.rfind("error: runtime:", 0) == 0);
}
