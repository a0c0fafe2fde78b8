#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = IMPISS_CLI;
const fs::path kWork = IMPISS_WORK_DIR;
const std::string kScenarios = IMPISS_SCENARIO_DIR;

int run(const std::string& args, const std::string& env = {}) {
    const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + kCli + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path out_dir(const std::string& name) {
    const fs::path p = kWork / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        if (!line.empty() && line.back() == ',') row.emplace_back();
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> pre_jump_times(const fs::path& csv, std::size_t column) {
    const auto rows = read_csv(csv);
    std::vector<double> t;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k][column] == "1") t.push_back(std::stod(rows[k][0]));
    }
    return t;
}

// Bracket of theta - delta around the pass/fail boundary, as {below, above}.
std::pair<double, double> sweep_gap(const fs::path& csv, bool pass_when_large) {
    double below = -1e9;
    double above = 1e9;
    const auto rows = read_csv(csv);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const double gap = std::stod(rows[k][0]) - std::stod(rows[k][1]);
        if (gap <= 0.0) continue;
        const bool large_side = (rows[k][2] == "1") == pass_when_large;
        if (large_side) above = std::min(above, gap);
        else below = std::max(below, gap);
    }
    return {below, above};
}

}  // namespace

TEST_CASE("simulate writes duplicate rows at impulse times") {
    const auto heat = out_dir("sim_heat");
    REQUIRE(run("simulate --scenario heat --out " + heat.string()) == 0);
    const auto rows = read_csv(heat / "trajectory.csv");
    REQUIRE(rows.size() > 1);
    CHECK(rows[0][0] == "t");
    CHECK(rows[0][3] == "pre_jump");
    CHECK(rows[0].size() == 4 + 201);
    const auto t = pre_jump_times(heat / "trajectory.csv", 3);
    REQUIRE(t.size() == 3);
    CHECK(t[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t[2] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(fs::exists(heat / "grid.csv"));
    const json m = read_json(heat / "manifest.json");
    CHECK(m["command"] == "simulate");
    CHECK(m["scenario"] == "heat");
    CHECK(m["deterministic"] == true);

    const auto rot = out_dir("sim_rot");
    REQUIRE(run("simulate --scenario rotation2d --out " + rot.string()) == 0);
    const auto tr = pre_jump_times(rot / "trajectory.csv", 3);
    REQUIRE(tr.size() == 4);
    for (std::size_t i = 0; i < tr.size(); ++i) CHECK(tr[i] == doctest::Approx(M_PI / 2.0 * (i + 1)).epsilon(1e-12));
}

TEST_CASE("repeated runs are byte-identical") {
    const auto a = out_dir("det_a");
    const auto b = out_dir("det_b");
    REQUIRE(run("simulate --scenario heat --horizon 0.7 --out " + a.string()) == 0);
    REQUIRE(run("simulate --scenario heat --horizon 0.7 --out " + b.string()) == 0);
    CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
    CHECK(slurp(a / "grid.csv") == slurp(b / "grid.csv"));
}

TEST_CASE("verify exit codes") {
    const auto heat = out_dir("ver_heat");
    CHECK(run("verify --scenario heat --which def3 --out " + heat.string()) == 0);
    const json rep = read_json(heat / "report.json");
    CHECK(rep["verdict"] == "pass");
    const auto ly = read_csv(heat / "lyapunov.csv");
    CHECK(ly[0] == std::vector<std::string>{"t", "V", "chi_level", "pre_jump"});
    CHECK(std::stod(ly[1][2]) == doctest::Approx(5.9365).epsilon(2e-4));

    CHECK(run("verify --scenario rotation2d --out " + out_dir("ver_rot").string()) == 0);
    const auto bad = out_dir("ver_rot_bad");
    CHECK(run("verify --scenario rotation2d --drop-discount --out " + bad.string()) == 1);
    CHECK(read_json(bad / "report.json")["verdict"] == "fail");
    CHECK(run("verify --scenario " + kScenarios + "/heat.json --out " + out_dir("ver_file").string()) == 0);
    CHECK(run("verify --scenario scalar-sfuj --which def2 --out " + out_dir("ver_d2").string()) == 0);
}

TEST_CASE("configuration errors exit 3") {
    CHECK(run("simulate --scenario " + (kWork / "missing.json").string() + " --out " + out_dir("missing").string()) == 3);
    CHECK(run("verify --scenario scalar-sfuj --which def3 --out " + out_dir("no_ly").string()) == 3);
    CHECK(run("verify --scenario heat --which def9 --out " + out_dir("bad_which").string()) == 3);
    CHECK(run("frobnicate") == 3);
}

TEST_CASE("blow-up exits 2 with the last finite time") {
    fs::create_directories(kWork);
    const fs::path cfg = kWork / "explode.json";
    std::ofstream(cfg) << R"({"system": {"dim": 1, "flow": {"kind": "diagonal", "diag": [10]},
        "jumps": {"kind": "diagonal", "diag": [1]}, "impulses": {"periodic": 1}},
        "x0": [1], "run": {"horizon": 5, "step": 0.001}})";
    const auto out = out_dir("explode");
    CHECK(run("simulate --scenario " + cfg.string() + " --out " + out.string()) == 2);
    const json m = read_json(out / "manifest.json");
    CHECK(m["exit_code"] == 2);
    CHECK(m["last_finite_time"].get<double>() == doctest::Approx(1.2 * std::log(10.0)).epsilon(1e-2));
}

TEST_CASE("construct") {
    const auto ok = out_dir("con_sfuj");
    CHECK(run("construct --scenario scalar-sfuj --out " + ok.string()) == 0);
    const json prov = read_json(ok / "provenance.json");
    CHECK(prov["regime"] == "sfuj");
    CHECK(prov["theta"].get<double>() == 1.0);
    CHECK(read_json(ok / "report.json")["verdict"] == "pass");

    const auto dwell = out_dir("con_dwell");
    CHECK(run("construct --scenario scalar-sfuj --theta 1 --delta 0.7 --out " + dwell.string()) == 4);
    const json rep = read_json(dwell / "report.json");
    CHECK(rep["dwell"]["margin"].get<double>() == doctest::Approx(0.3 - std::log(2.0) / 2.0).epsilon(1e-9));

    CHECK(run("construct --scenario scalar-ufsj --out " + out_dir("con_ufsj").string()) == 0);
    CHECK(run("construct --scenario scalar-ufsj --theta 0.4 --delta 0.05 --out " + out_dir("con_gap").string()) == 4);
    CHECK(run("construct --scenario " + kScenarios + "/scalar_sfuj.json --out " + out_dir("con_file").string()) == 0);
}

TEST_CASE("sweep locates the ln 2 boundary") {
    const double ln2 = std::log(2.0);
    const auto sf = out_dir("sweep_sfuj");
    REQUIRE(run("sweep --regime sfuj --rho linear:1 --alpha linear:2 --theta-min 1 --theta-max 2 --theta-n 11"
                " --delta-min 0.05 --delta-max 0.95 --delta-n 19 --out " + sf.string()) == 0);
    auto [lo, hi] = sweep_gap(sf / "region.csv", true);
    CHECK(lo < ln2);
    CHECK(hi >= ln2);
    CHECK(hi - lo <= 0.1 + 1e-9);
    CHECK(read_csv(sf / "region.csv").size() == 1 + 11 * 19);

    const auto uf = out_dir("sweep_ufsj");
    REQUIRE(run("sweep --regime ufsj --rho linear:-1 --alpha linear:0.5 --theta-min 0.5 --theta-max 1.5 --theta-n 11"
                " --delta-min 0.05 --delta-max 0.45 --delta-n 9 --out " + uf.string()) == 0);
    auto [ulo, uhi] = sweep_gap(uf / "region.csv", false);
    CHECK(ulo <= ln2);
    CHECK(uhi > ln2);
    CHECK(uhi - ulo <= 0.1 + 1e-9);

    const auto one = out_dir("sweep_one");
    REQUIRE(run("sweep --theta-min 2 --theta-max 2 --theta-n 1 --delta-min 1 --delta-max 1 --delta-n 1 --out " +
                one.string(), "IMPULSIVE_ISS_THREADS=1") == 0);
    const auto rows = read_csv(one / "region.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][2] == "1");
    CHECK(read_json(one / "manifest.json")["threads"] == 1);
}
