#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::current_path() / "cli_work";

int run(const std::string& args, const std::string& log = "last.log") {
    fs::create_directories(kDir);
    const std::string cmd = "cd '" + kDir.string() + "' && '" GENCALC_BIN "' " + args + " > " + log + " 2> err_" + log;
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const std::string& name) {
    std::ifstream in(kDir / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load(const std::string& name) { return json::parse(slurp(name)); }

void put(const std::string& name, const std::string& text) {
    fs::create_directories(kDir);
    std::ofstream(kDir / name) << text;
}

json strip_time(json j) {
    j.erase("timestamp");
    j["run_config"].erase("out");
    return j;
}

}  // namespace

TEST_CASE("mollifier writes a certificate") {
    REQUIRE(run("mollifier --q 4 --radius 1 --out m.json") == 0);
    const json m = load("m.json");
    CHECK(m["moment_order"] == 4);
    for (const auto& r : m["certificate"]["moment_residuals"]) CHECK(r.get<double>() < 1e-10);
}

TEST_CASE("classify a smooth net: Moderate(0), exit 0") {
    REQUIRE(run("embed --function 'sin(x)' --out sin.json") == 0);
    CHECK(run("classify --net sin.json --out r.json --csv r.csv") == 0);
    const json r = load("r.json");
    CHECK(r["verdict_label"] == "Moderate(0)");
    CHECK(r.contains("timestamp"));
    CHECK(r["run_config"]["alpha_max"] == 3);
    CHECK(slurp("r.csv").rfind("alpha,eps,sup\n", 0) == 0);
}

TEST_CASE("classify the embedded delta for negligibility: exit 3") {
    put("delta.json", R"({"kind":"delta","point":[0]})");
    REQUIRE(run("embed --spec delta.json --out d.json") == 0);
    CHECK(run("classify --net d.json --test negligible --alpha-max 0 --out r.json") == 3);
    CHECK(load("r.json")["verdict"] == "NotNegligible");
}

TEST_CASE("associate the squared delta: Divergent, exit 3") {
    put("delta.json", R"({"kind":"delta","point":[0]})");
    REQUIRE(run("embed --spec delta.json --compose 'u^2' --out d2.json") == 0);
    CHECK(run("associate --net d2.json --out a.json --csv a.csv") == 3);
    CHECK(load("a.json")["verdict"] == "Divergent");
    CHECK(slurp("a.csv").rfind("index,eps,pairing,extrapolant\n", 0) == 0);
}

TEST_CASE("associate with a candidate: match exit 0, mismatch exit 3") {
    put("heav.json", R"({"kind":"heaviside","dimension":1,"axis":0})");
    put("delta.json", R"({"kind":"delta","point":[0]})");
    REQUIRE(run("embed --spec heav.json --compose 'u^2 - u' --out hh.json") == 0);
    put("zero.json", R"({"kind":"regular","dimension":1,"expression":"0"})");
    CHECK(run("associate --net hh.json --candidate zero.json --out a.json") == 0);
    CHECK(load("a.json")["match"]["match"] == true);
    CHECK(run("associate --net hh.json --candidate delta.json --out a.json") == 3);
}

TEST_CASE("verify-testobject: canonical passes, mass-0.9 fails") {
    CHECK(run("verify-testobject --out t.json") == 0);
    CHECK(run("verify-testobject --amplitude 0.9 --out t.json") == 3);
}

TEST_CASE("geodesic CSV and report") {
    put("init.json", R"({"u0":-1,"v0":0,"x0":1,"y0":1,"dv0":0,"dx0":0,"dy0":0})");
    REQUIRE(run("geodesic --profile 'x^2-y^2' --init init.json --eps-grid default --out sol.csv --report g.json") == 0);
    const std::string csv = slurp("sol.csv");
    CHECK(csv.rfind("eps,u,v,x,y,du_v,du_x,du_y\n", 0) == 0);
    const json g = load("g.json");
    CHECK(g["solutions"].size() == 14);
    const auto& x = g["limits"][0]["coordinates"][1];
    CHECK(x["coordinate"] == "x");
    CHECK(std::abs(x["velocity_jump"].get<double>() - 1.0) < 1e-2);
}

TEST_CASE("geodesic completeness scan") {
    CHECK(run("geodesic --profile 'x^2+y^2' --scan --out s.json") == 0);
    CHECK(run("geodesic --profile 'x^4' --init-values=-1,0,3,0,0,0,0 --scan --out s.json") == 3);
}

TEST_CASE("curvature and gtcheck") {
    CHECK(run("curvature --profile 'x^2+y^2' --associate --points '1,0' --out c.json") == 0);
    const json c = load("c.json");
    CHECK(c["checks"]["max_bianchi_residual"].get<double>() <= 1e-10);
    CHECK(run("gtcheck --metric brinkmann --profile 'x^2+y^2' --out gt.json") == 3);
    CHECK(load("gt.json")["verdict"] == "fails-boundedness");
    CHECK(run("gtcheck --metric kink --out gt.json") == 0);
    put("sphere.json", R"({"kind":"general","labels":["t","p"],"components":[[1,0],[0,"sin(t)^2 + 2"]]})");
    CHECK(run("gtcheck --metric sphere.json --box '[0.5,2.5]x[0,6]' --out gt.json") == 0);
}

TEST_CASE("config files: round trip, determinism, path-qualified errors") {
    REQUIRE(run("embed --function 'x^2' --out sq.json") == 0);
    REQUIRE(run("classify --net sq.json --seed 7 --alpha-max 2 --save-config cfg.json --out r1.json") == 0);
    REQUIRE(run("classify --config cfg.json --out r2.json") == 0);
    CHECK(strip_time(load("r1.json")) == strip_time(load("r2.json")));

    put("bad.json", R"({"command":"classify","options":{"net":"sq.json","alpha_max":"two"}})");
    CHECK(run("classify --config bad.json", "bad.log") == 1);
    CHECK(slurp("err_bad.log").find("$.options.alpha_max") != std::string::npos);

    put("bad2.json", R"({"command":"classify","options":{"nett":"sq.json"}})");
    CHECK(run("classify --config bad2.json", "bad.log") == 1);
    CHECK(slurp("err_bad.log").find("$.options.nett") != std::string::npos);

    put("badinit.json", R"([{"x0":1},{"x0":"far"}])");
    CHECK(run("geodesic --init badinit.json", "bad.log") == 1);
    CHECK(slurp("err_bad.log").find("$[1].x0") != std::string::npos);
}

TEST_CASE("flags override config values") {
    REQUIRE(run("embed --function 'x^2' --out sq.json") == 0);
    put("cfg3.json", R"({"command":"classify","options":{"net":"sq.json","alpha_max":1}})");
    REQUIRE(run("classify --config cfg3.json --alpha-max 2 --out r.json") == 0);
    CHECK(load("r.json")["alpha_max"] == 2);
}

TEST_CASE("dry run validates without computing") {
    CHECK(run("gtcheck --dry-run", "dry.log") == 0);
    CHECK(json::parse(slurp("dry.log"))["dry_run"] == true);
    CHECK(run("classify --net missing.json --dry-run", "bad.log") == 1);
    CHECK(run("geodesic --eps-grid 'three' --dry-run", "bad.log") == 1);
}

TEST_CASE("usage errors exit 1") {
    CHECK(run("", "bad.log") == 1);
    CHECK(run("frobnicate", "bad.log") == 1);
    CHECK(run("classify --alpha-max x --net a.json", "bad.log") == 1);
    CHECK(run("--help", "help.log") == 0);
}

TEST_CASE("thread cap from the environment and the flag give identical results") {
    REQUIRE(run("embed --function 'cos(x)' --out c.json") == 0);
    REQUIRE(run("associate --net c.json --threads 1 --out a1.json") == 0);
    fs::create_directories(kDir);
    const std::string cmd = "cd '" + kDir.string() + "' && GENCALC_THREADS=2 '" GENCALC_BIN
                            "' associate --net c.json --out a2.json > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    json a = load("a1.json"), b = load("a2.json");
    CHECK(a["records"] == b["records"]);
}
