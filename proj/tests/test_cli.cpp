#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "scanleak/cli_runner.hpp"

using namespace scanleak;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

struct RunResult {
    int code = 0;
    std::string out;
    std::string err;
};

RunResult run(std::vector<std::string> args) {
    std::ostringstream out, err;
    RunResult r;
    r.code = run_cli(std::move(args), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "scanleak_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kPipelineBench = R"(# four-stage toy pipeline
INPUT(a)
INPUT(b)
INPUT(c)
OUTPUT(y)
OUTPUT(z)
s0 = DFF(d0)
s1 = DFF(d1)
s2 = DFF(d2)
n1 = AND(a, b)
n2 = XOR(n1, s0)
d0 = OR(n2, c)
n3 = NAND(s0, s1)
d1 = XOR(n3, a)
n4 = NOR(s1, s2)
d2 = AND(n4, n2)
y = OR(n3, n4)
z = XOR(n2, s2)
)";

// Lock + stitch a fresh copy of the pipeline fixture into `dir`.
void prepare_instance(const fs::path& dir) {
    write_file(dir / "pipe.bench", kPipelineBench);
    RunResult lock = run({"lock", "--bench", (dir / "pipe.bench").string(), "--key-bits", "4",
                          "--seed-lock", "1", "--out", dir.string()});
    REQUIRE(lock.code == 0);
    RunResult stitch = run({"stitch", "--locked", (dir / "locked.bench").string(), "--key",
                            (dir / "key.txt").string(), "--chains", "1", "--seed-stitch", "1",
                            "--out", dir.string()});
    REQUIRE(stitch.code == 0);
}

} // namespace

TEST_CASE("help exits zero and names every subcommand") {
    RunResult r = run({"--help"});
    CHECK(r.code == 0);
    for (const char* name : {"lock", "stitch", "attack", "report"})
        CHECK(r.out.find(name) != std::string::npos);
}

TEST_CASE("usage and input mistakes exit one with a reason") {
    fs::path dir = fresh_dir("errors");

    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"lock"}).code == 1); // --bench is required

    RunResult missing = run({"lock", "--bench", (dir / "nope.bench").string()});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("cannot open") != std::string::npos);

    write_file(dir / "broken.bench", "INPUT(a)\nOUTPUT(y)\ny = FOO(a)\n");
    RunResult broken =
        run({"lock", "--bench", (dir / "broken.bench").string(), "--out", dir.string()});
    CHECK(broken.code == 1);
    CHECK(broken.err.find("parse error at line 3") != std::string::npos);

    write_file(dir / "tiny.bench", "INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n");
    RunResult greedy = run({"lock", "--bench", (dir / "tiny.bench").string(), "--key-bits", "50",
                            "--out", dir.string()});
    CHECK(greedy.code == 1);
    CHECK(greedy.err.find("error:") != std::string::npos);
    CHECK(greedy.err.find("50") != std::string::npos);

    prepare_instance(dir);
    RunResult bad_defense =
        run({"attack", "--locked", (dir / "locked.bench").string(), "--key",
             (dir / "key.txt").string(), "--layout", (dir / "layout.txt").string(), "--defense",
             "fortress", "--out", dir.string()});
    CHECK(bad_defense.code == 1);

    write_file(dir / "junk.key", "2\n");
    RunResult junk_key =
        run({"stitch", "--locked", (dir / "locked.bench").string(), "--key",
             (dir / "junk.key").string(), "--out", dir.string()});
    CHECK(junk_key.code == 1);
    CHECK(junk_key.err.find("error:") != std::string::npos);

    write_file(dir / "short.key", "1\n");
    RunResult short_key =
        run({"attack", "--locked", (dir / "locked.bench").string(), "--key",
             (dir / "short.key").string(), "--layout", (dir / "layout.txt").string(), "--out",
             dir.string()});
    CHECK(short_key.code == 1);
    CHECK(short_key.err.find("key inputs") != std::string::npos);
}

TEST_CASE("the pipeline recovers the planted key end to end") {
    fs::path dir = fresh_dir("pipeline");
    prepare_instance(dir);

    CHECK(read_file(dir / "key.txt") == "0\n1\n0\n1\n");
    CHECK(read_file(dir / "layout.txt") ==
          "# scanleak layout v1\n"
          "chain 0: RC:s0 SC:0 SC:1 RC:s1 SC:2 SC:3 RC:s2\n");

    RunResult attack = run({"attack", "--locked", (dir / "locked.bench").string(), "--key",
                            (dir / "key.txt").string(), "--layout", (dir / "layout.txt").string(),
                            "--defense", "dfs", "--out", dir.string()});
    CHECK(attack.code == 0);
    CHECK(attack.out == "recovered 4/4 key bits under dfs (26 pin operations)\n");
    CHECK(attack.err.find("timings: preprocess ") != std::string::npos);

    std::string report = read_file(dir / "attack_report.txt");
    CHECK(report.find("recovered: 4/4 (preprocessed 2, leaked 2)") != std::string::npos);
    CHECK(report.find("audit: 4/4 recovered bits correct") != std::string::npos);
    CHECK(report.find("timings:") == std::string::npos); // only --timings embeds them

    // Byte-stable on a rerun into a fresh directory.
    fs::path dir2 = fresh_dir("pipeline_rerun");
    RunResult again = run({"attack", "--locked", (dir / "locked.bench").string(), "--key",
                           (dir / "key.txt").string(), "--layout", (dir / "layout.txt").string(),
                           "--defense", "dfs", "--out", dir2.string()});
    CHECK(again.code == 0);
    std::string report2 = read_file(dir2 / "attack_report.txt");
    // The config echo names the output directory's inputs, identical here.
    CHECK(report2 == report);
}

TEST_CASE("the strict defense concedes nothing through the same pipeline") {
    fs::path dir = fresh_dir("mssd");
    prepare_instance(dir);

    RunResult attack = run({"attack", "--locked", (dir / "locked.bench").string(), "--key",
                            (dir / "key.txt").string(), "--layout", (dir / "layout.txt").string(),
                            "--defense", "mssd", "--out", dir.string()});
    CHECK(attack.code == 0);
    CHECK(attack.out == "recovered 0/4 key bits under mssd (0 pin operations)\n");

    std::string report = read_file(dir / "attack_report.txt");
    CHECK(report.find("recovered: 0/4 (preprocessed 0, leaked 0)") != std::string::npos);
    CHECK(report.find("bit 0: unrecovered") != std::string::npos);
    CHECK(report.find("audit: 0/0 recovered bits correct") != std::string::npos);
}

TEST_CASE("report writes overhead and coverage files for both defenses") {
    fs::path dir = fresh_dir("report");
    prepare_instance(dir);

    RunResult rep = run({"report", "--locked", (dir / "locked.bench").string(), "--key",
                         (dir / "key.txt").string(), "--layout", (dir / "layout.txt").string(),
                         "--budget", "2000", "--out", dir.string()});
    CHECK(rep.code == 0);
    for (const char* f : {"overhead_dfs.txt", "overhead_mssd.txt", "coverage.txt", "summary.txt"})
        CHECK(fs::exists(dir / f));

    std::string summary = read_file(dir / "summary.txt");
    // One chain: the per-chain masking of dfs stays cheaper than the fixed
    // mask blocks of mssd.
    CHECK(summary.find("mssd adds fewer primitives than dfs: no") != std::string::npos);
    CHECK(summary.find("dfs           18  112.50  1.000000") != std::string::npos);
    CHECK(summary.find("mssd          21  131.25  1.000000") != std::string::npos);

    std::string coverage = read_file(dir / "coverage.txt");
    CHECK(coverage.find("original: 1.000000") != std::string::npos);
    CHECK(coverage.find("dfs: 1.000000") != std::string::npos);
    CHECK(coverage.find("mssd: 1.000000") != std::string::npos);
}

TEST_CASE("config files supply defaults that explicit flags override") {
    fs::path dir = fresh_dir("config");
    write_file(dir / "pipe.bench", kPipelineBench);
    write_file(dir / "cfg.ini", "[lock]\nbench=" + (dir / "pipe.bench").string() +
                                    "\nkey-bits=3\nout=" + dir.string() + "\n");

    RunResult from_cfg = run({"--config", (dir / "cfg.ini").string(), "lock"});
    CHECK(from_cfg.code == 0);
    std::string cfg_key = read_file(dir / "key.txt");
    CHECK(std::count(cfg_key.begin(), cfg_key.end(), '\n') == 3);

    RunResult overridden = run({"--config", (dir / "cfg.ini").string(), "lock", "--key-bits", "5"});
    CHECK(overridden.code == 0);
    std::string key = read_file(dir / "key.txt");
    CHECK(std::count(key.begin(), key.end(), '\n') == 5);
}

TEST_CASE("the interference-guided scheme reports its score") {
    fs::path dir = fresh_dir("sll");
    write_file(dir / "pipe.bench", kPipelineBench);
    RunResult lock = run({"lock", "--bench", (dir / "pipe.bench").string(), "--key-bits", "4",
                          "--scheme", "sll", "--seed-lock", "2", "--out", dir.string()});
    CHECK(lock.code == 0);
    CHECK(lock.out.find("(sll)") != std::string::npos);
    std::string report = read_file(dir / "lock_report.txt");
    CHECK(report.find("scheme=sll") != std::string::npos);
    CHECK(report.find("interference score: ") != std::string::npos);
}

TEST_SUITE_END();
