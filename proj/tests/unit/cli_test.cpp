#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "doctest.h"

namespace fs = std::filesystem;

#ifdef LTREE_CLI_PATH

namespace
{

struct Result
{
    int code = -1;
    std::string out;
};

Result run(const std::string& args)
{
    const std::string cmd = "LTREE_LOG=quiet '" + std::string(LTREE_CLI_PATH) + "' " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe))
        r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("ltree_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

}

TEST_SUITE("cli")
{
    TEST_CASE("usage errors exit with status 2")
    {
        CHECK(run("--help").code == 0);
        CHECK(run("no-such-command").code == 2);
        CHECK(run("generate --profile huge --out " + scratch("bad").string()).code == 2);
        CHECK(run("train --set epochs=0 --data /nonexistent").code == 2);
        CHECK(run("train --set nonsense=1").code == 2);
        CHECK(run("eval").code == 2);
        CHECK(run("bench --lengths 0").code == 2);
    }

    TEST_CASE("generate, train, eval and parse end to end")
    {
        const fs::path data = scratch("data");
        const fs::path runs = scratch("run");
        REQUIRE(run("generate --profile tiny --seed 3 --out " + data.string()).code == 0);
        CHECK(fs::exists(data / "manifest.json"));

        const Result train = run(
            "train --data " + data.string() + " --out " + runs.string()
            + " --set epochs=2 --set updates_per_epoch=2 --set batch_size=4 --set structure=gold"
        );
        REQUIRE(train.code == 0);
        CHECK(train.out.find("best epoch") != std::string::npos);
        const fs::path ckpt = runs / "best.ckpt";
        REQUIRE(fs::exists(ckpt));

        const Result eval = run("eval --checkpoint " + ckpt.string() + " --split dev --json");
        REQUIRE(eval.code == 0);
        const auto metrics = nlohmann::json::parse(eval.out);
        CHECK(metrics["attachment"] == 1.0);
        CHECK(metrics.contains("tagging_accuracy"));

        const fs::path input = data / "sentences.txt";
        std::ofstream(input) << "[max 3 [min 4 5 ] 2 ]\n* [sm 1 2 ]\n";
        const Result parsed = run("parse --checkpoint " + ckpt.string() + " --input " + input.string() + " --dump-chart");
        REQUIRE(parsed.code == 0);
        CHECK(parsed.out.find("# sentence 1") != std::string::npos);
        CHECK(parsed.out.find("tree (* ([max") != std::string::npos);
        CHECK(parsed.out.find("chart (i j direction completeness weight contribution)") != std::string::npos);

        CHECK(run("eval --checkpoint " + (runs / "missing.ckpt").string()).code == 2);
        std::ofstream(runs / "garbage.ckpt") << "not a checkpoint";
        CHECK(run("eval --checkpoint " + (runs / "garbage.ckpt").string()).code == 1);

        fs::remove_all(data);
        fs::remove_all(runs);
    }

    TEST_CASE("gradcheck and bench")
    {
        const Result gc = run("gradcheck --cases 3");
        CHECK(gc.code == 0);
        CHECK(gc.out.find("PASS") != std::string::npos);
        const Result bench = run("bench --lengths 5,10 --trials 1");
        CHECK(bench.code == 0);
        CHECK(bench.out.find("log-log slope") != std::string::npos);
    }
}

#else

TEST_SUITE("cli")
{
    TEST_CASE("command-line tool not built")
    {
        MESSAGE("LTREE_BUILD_TOOLS is off; skipping command-line tests");
    }
}

#endif
