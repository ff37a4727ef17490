#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Scratch directory shared by all cases in this binary.
const fs::path& workdir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / ("ifs_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Result run(const std::string& args, const std::string& env = "") {
    const fs::path out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
    const std::string cmd = "cd '" + workdir().string() + "' && " + env + (env.empty() ? "" : " ") + "'" IFS_CLI "' " +
                            args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

nlohmann::json load(const std::string& name) { return nlohmann::json::parse(slurp(workdir() / name)); }

// Parameters and certificate shared by later cases.
void ensure_inputs() {
    static const bool done = [] {
        REQUIRE(run("construct --dim 2 --out p.json").code == 0);
        REQUIRE(run("certify p.json --out c.json").code == 0);
        return true;
    }();
    (void)done;
}

}  // namespace

TEST_CASE("construct and check") {
    ensure_inputs();
    CHECK(load("p.json").dump() == oracle::read_json(oracle::golden("params_m2.json")).dump());
    const auto manifest = load("p.json.manifest.json");
    CHECK(manifest["command"] == "construct");
    CHECK(manifest["config"]["dim"] == 2);
    CHECK(manifest.contains("version"));
    CHECK(run("check p.json").code == 0);

    auto broken = load("p.json");
    broken["params"]["r"] = 0.5;
    std::ofstream(workdir() / "broken.json") << broken.dump();
    const auto r = run("check broken.json");
    CHECK(r.code == 1);
    CHECK(r.err.find("r > v_2") != std::string::npos);
}

TEST_CASE("certify reproduces the frozen certificate") {
    ensure_inputs();
    CHECK(load("c.json").dump() == oracle::read_json(oracle::golden("certificate_m2.json")).dump());
    const auto manifest = load("c.json.manifest.json");
    REQUIRE(manifest["inputs"].size() == 1);
    CHECK(manifest["inputs"][0]["path"] == "p.json");
    CHECK(manifest["inputs"][0]["fnv1a64"].get<std::string>().size() == 16);
}

TEST_CASE("branch output is deterministic and replays into the target") {
    ensure_inputs();
    const std::string args = "branch c.json --from 0,0 --target 0.5,0.5,0.05 --eps 0.01 --seed 7 --out ";
    REQUIRE(run(args + "plan1.json").code == 0);
    REQUIRE(run("--threads 1 " + args + "plan2.json").code == 0);
    CHECK(slurp(workdir() / "plan1.json") == slurp(workdir() / "plan2.json"));
    const auto plan = load("plan1.json");
    CHECK(plan["passed"] == true);
    CHECK(plan["replay"]["inside"] == plan["replay"]["sample"]);
    CHECK(plan["word"].size() == plan["length"].get<std::size_t>());
    CHECK(plan["endpoints"].size() == plan["word"].size());
}

TEST_CASE("IFS_SEED overrides --seed") {
    ensure_inputs();
    REQUIRE(run("--seed 3 branch c.json --from 0,0 --target 0.5,0.5,0.05 --eps 0.01 --out plan3.json", "IFS_SEED=9").code == 0);
    CHECK(load("plan3.json.manifest.json")["config"]["seed"] == 9);
    CHECK(run("check p.json", "IFS_SEED=abc").code == 2);
}

TEST_CASE("fixed points to stdout") {
    ensure_inputs();
    const auto r = run("fixed-points p.json --n 3");
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "word,x1,x2");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 8);
}

TEST_CASE("verification failures exit 1") {
    ensure_inputs();
    const auto trial = run("trial c.json --eps 0.5 --trials 2");
    CHECK(trial.code == 1);
    CHECK(trial.err.find("eps too large") != std::string::npos);
    const auto blender = run("blender c.json --nmax 5 --out b.json");
    CHECK(blender.code == 1);
    CHECK(load("b.json")["passed"] == false);
}

TEST_CASE("usage errors exit 2") {
    CHECK(run("").code == 2);
    CHECK(run("check missing.json").code == 2);
    ensure_inputs();
    CHECK(run("check p.json --bogus").code == 2);
    CHECK(run("branch c.json --from 0 --target 0.5,0.5,0.05").code != 0);
    CHECK(run("--version").code == 0);
}
