// End-to-end tests of the command-line tool: artifact layout, determinism,
// config/flag precedence, and exit codes. Each test spawns the real binary.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#ifndef PTSCAT_CLI_PATH
#error "PTSCAT_CLI_PATH must point at the built binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "ptscat_cli_tests";

struct Workspace {
    Workspace() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
} const workspace;

fs::path wpath(const std::string& name) { return kWork / name; }

int run(const std::string& args, const std::string& stdout_to = "", const std::string& env = "") {
    std::string cmd = env.empty() ? std::string() : env + " ";
    cmd += std::string(PTSCAT_CLI_PATH) + " " + args;
    if (!stdout_to.empty()) cmd += " > " + (kWork / stdout_to).string();
    cmd += " 2> " + (kWork / "stderr.txt").string();
    const int ret = std::system(cmd.c_str());
    REQUIRE(ret != -1);
    return WIFEXITED(ret) ? WEXITSTATUS(ret) : -2;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

json jload(const fs::path& p) { return json::parse(slurp(p)); }

const char* kScene = R"({
  "scatterers": [{"pos": [0.25, -0.25, 0.0], "alpha": 0.6}],
  "sensors": [[2, 0, 0], [-2, 0, 0], [0, 2, 0], [0, 0, 2]]
})";

std::string scene_file() {
    const auto p = wpath("scene.json");
    spit(p, kScene);
    return p.string();
}

} // namespace

TEST_CASE("spectrum reports the singleton threshold") {
    const auto p = wpath("singleton.json");
    spit(p, R"({"scatterers": [{"pos": [0,0,0], "alpha": -0.07957747154594767}],
               "sensors": [[1,0,0]]})");
    REQUIRE(run("spectrum --scene " + p.string(), "spectrum.json") == 0);
    const json rep = jload(wpath("spectrum.json"));
    CHECK(rep.at("sup_estimate").get<double>() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.at("lambda_bound").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.at("discrete_eigs").size() == 1);
    CHECK(rep.contains("resolved_config"));

    // --out writes the same report to disk
    REQUIRE(run("spectrum --scene " + p.string() + " --out " + wpath("spec2.json").string()) == 0);
    CHECK(jload(wpath("spec2.json")) == rep);
}

TEST_CASE("forward writes a well-formed, deterministic trace table") {
    const auto scene = scene_file();
    REQUIRE(run("forward --scene " + scene + " --out " + wpath("a.csv").string()) == 0);
    REQUIRE(run("forward --scene " + scene + " --out " + wpath("b.csv").string()) == 0);
    const std::string a = slurp(wpath("a.csv"));
    CHECK(a == slurp(wpath("b.csv"))); // byte-identical reruns
    CHECK(a.rfind("t,s1,s2,s3,s4\n", 0) == 0);

    // every row has 5 fields and time moves monotonically
    std::istringstream lines(a);
    std::string line;
    std::getline(lines, line);
    double prev = -1.0;
    int rows = 0;
    while (std::getline(lines, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 4);
        const double t = std::stod(line);
        CHECK(t >= prev);
        prev = t;
        ++rows;
    }
    CHECK(rows > 100);
}

TEST_CASE("data-op routes agree and obey config/flag precedence") {
    const auto scene = scene_file();
    const auto closed = wpath("closed.json").string();
    const auto sim = wpath("sim.json").string();
    REQUIRE(run("data-op --scene " + scene + " --mode closed --out " + closed) == 0);
    REQUIRE(run("data-op --scene " + scene + " --mode simulated --out " + sim) == 0);

    const json jc = jload(closed), js = jload(sim);
    CHECK(jc.at("lambda") == js.at("lambda"));
    CHECK(jc.at("provenance").at("kind") == "closed_form");
    CHECK(js.at("provenance").at("kind") == "simulated");
    CHECK(js.at("provenance").at("horizon").get<double>() > 0.0);
    const auto mc = jc.at("matrix"), ms = js.at("matrix");
    REQUIRE(mc.size() == 4);
    double rel = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double c = mc[i][j].get<double>(), s = ms[i][j].get<double>();
            rel = std::max(rel, std::abs(c - s) / std::abs(c));
        }
    CHECK(rel <= 1e-3);

    // config supplies lambda; an explicit flag overrides it
    spit(wpath("cfg.json"), R"({"scene": ")" + scene + R"(", "lambda": 2.0})");
    const auto from_cfg = wpath("cfg_op.json").string();
    REQUIRE(run("data-op --config " + wpath("cfg.json").string() + " --out " + from_cfg) == 0);
    CHECK(jload(from_cfg).at("lambda") == 2.0);
    REQUIRE(run("data-op --config " + wpath("cfg.json").string() + " --lambda 4.0 --out " +
                from_cfg) == 0);
    CHECK(jload(from_cfg).at("lambda") == 4.0);

    // the thread cap can come from the environment
    REQUIRE(run("data-op --scene " + scene + " --out " + from_cfg, "",
                "PTSCAT_THREADS=2") == 0);
    CHECK(jload(from_cfg).at("resolved_config").at("threads") == 2);
}

TEST_CASE("noise perturbation is seeded and reproducible") {
    const auto scene = scene_file();
    const auto a = wpath("n1.json").string(), b = wpath("n2.json").string(),
               c = wpath("n3.json").string();
    REQUIRE(run("data-op --scene " + scene + " --noise 0.02 --seed 7 --out " + a) == 0);
    REQUIRE(run("data-op --scene " + scene + " --noise 0.02 --seed 7 --out " + b) == 0);
    REQUIRE(run("data-op --scene " + scene + " --noise 0.02 --seed 8 --out " + c) == 0);
    CHECK(slurp(a) == slurp(b)); // byte-identical with the same seed
    CHECK(slurp(a) != slurp(c));
    const json ja = jload(a);
    CHECK(ja.at("provenance").at("kind") == "perturbed");
    CHECK(ja.at("provenance").at("noise_level") == 0.02);
    CHECK(ja.at("provenance").at("seed") == 7);
}

TEST_CASE("invert recovers the scatterer from the closed-form operator") {
    const auto scene = scene_file();
    const auto op = wpath("inv_op.json").string();
    REQUIRE(run("data-op --scene " + scene + " --mode closed --out " + op) == 0);
    const auto field = wpath("field.csv").string(), peaks = wpath("peaks.json").string();
    REQUIRE(run("invert --operator " + op + " --scene " + scene +
                " --grid-lower -1 -1 -1 --grid-upper 1 1 1 --spacing 0.25 --peak-count 1" +
                " --field " + field + " --peaks " + peaks) == 0);

    const json jp = jload(peaks);
    REQUIRE(jp.at("peaks").size() == 1);
    const auto pos = jp.at("peaks")[0].at("pos");
    CHECK(pos[0].get<double>() == 0.25);
    CHECK(pos[1].get<double>() == -0.25);
    CHECK(pos[2].get<double>() == 0.0);
    CHECK(jp.at("rank") == 1);
    CHECK(jp.at("singular_values").size() == 4);
    CHECK(jp.at("peak_residuals")[0].get<double>() <= 1e-10);
    CHECK(jp.at("resolved_config").at("min_separation") == 0.5);

    const std::string f = slurp(field);
    CHECK(f.rfind("x,y,z,value\n", 0) == 0);
    CHECK(std::count(f.begin(), f.end(), '\n') == 9 * 9 * 9 + 1);

    // a sensors-only scene file works for inversion
    spit(wpath("sensors_only.json"), R"({"sensors": [[2,0,0],[-2,0,0],[0,2,0],[0,0,2]]})");
    REQUIRE(run("invert --operator " + op + " --scene " + wpath("sensors_only.json").string() +
                " --grid-lower -1 -1 -1 --grid-upper 1 1 1 --spacing 0.25 --peak-count 1" +
                " --peaks " + peaks) == 0);
    CHECK(jload(peaks).at("peaks")[0].at("pos")[0].get<double>() == 0.25);

    // grid can come from a config block
    spit(wpath("grid_cfg.json"),
         R"({"grid": {"lower": [-1,-1,-1], "upper": [1,1,1], "spacing": 0.25}})");
    REQUIRE(run("invert --operator " + op + " --scene " + scene + " --config " +
                wpath("grid_cfg.json").string() + " --peak-count 1 --peaks " + peaks) == 0);
    CHECK(jload(peaks).at("peaks")[0].at("pos")[1].get<double>() == -0.25);
}

TEST_CASE("failures exit with code 2 and leave no partial artifacts") {
    const auto out = wpath("never.json").string();

    spit(wpath("bad.json"), "{\"scatterers\": [");
    CHECK(run("data-op --scene " + wpath("bad.json").string() + " --out " + out) == 2);
    CHECK(!fs::exists(out));

    CHECK(run("data-op --scene " + wpath("does_not_exist.json").string() + " --out " + out) == 2);
    CHECK(!fs::exists(out));

    // an in-spectrum lambda is rejected by the operator stage
    CHECK(run("data-op --scene " + scene_file() + " --lambda -1 --out " + out) == 2);
    CHECK(!fs::exists(out));

    // missing required flags and unknown subcommands are input errors
    CHECK(run("data-op --scene " + scene_file()) == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("invert --operator " + out + " --scene " + scene_file() + " --peaks x.json") == 2);

    // the error stream carries a single-line diagnostic
    CHECK(run("data-op --scene " + wpath("bad.json").string() + " --out " + out) == 2);
    const std::string err = slurp(wpath("stderr.txt"));
    CHECK(err.rfind("error: ", 0) == 0);
    CHECK(std::count(err.begin(), err.end(), '\n') == 1);

    // no temp files anywhere in the workspace
    for (const auto& entry : fs::directory_iterator(kWork))
        CHECK(entry.path().extension() != ".tmp");

    CHECK(run("--help") == 0);
}

TEST_CASE("validate runs a single check and reports its verdict") {
    REQUIRE(run("validate --check 3", "check3.txt") == 0);
    const std::string text = slurp(wpath("check3.txt"));
    CHECK(text.rfind("[PASS] 3. ", 0) == 0);
    CHECK(run("validate --check 99") == 2); // out of range
}
