#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using gapdiamond::cli::run;

namespace {

const fs::path kScenarios = GAPDIAMOND_SCENARIO_DIR;

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("gapdiamond-test-" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return path / name;
    }
};

struct Result {
    int code;
    std::string out, err;
};

Result call(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

const char* kStack = R"("stack": {"cover": "air", "membrane": "GaP", "gap": "air", "substrate": "diamond"})";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("missing subcommand and bad options are input errors") {
    CHECK(call({}).code == 2);
    CHECK(call({"ratio-curve"}).code == 2);
    CHECK(call({"frobnicate"}).code == 2);
    CHECK(call({"--help"}).code == 0);
    CHECK(call({"ratio-curve", "--scenario", "/nonexistent.json", "--out", "x.csv"}).code == 2);
}

TEST_CASE("empty thickness list is rejected before solving") {
    TempDir d;
    const auto sc = d.write("s.json", std::string(R"({"schema_version": 1, "wavelength_nm": 637, )") + kStack +
                                          R"(, "ratio_curve": {"thicknesses_nm": [], "gaps_nm": [0]}})");
    const auto r = call({"ratio-curve", "--scenario", sc.string(), "--out", (d.path / "o.csv").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("thicknesses_nm") != std::string::npos);
    CHECK_FALSE(fs::exists(d.path / "o.csv"));
}

TEST_CASE("unknown scenario field names its location") {
    TempDir d;
    const auto sc = d.write("s.json", std::string(R"({"schema_version": 1, "wavelength_nm": 637, )") + kStack +
                                          R"(, "ratio_curve": {"thicknesses_nm": [120], "gapz_nm": [0]}})");
    const auto r = call({"ratio-curve", "--scenario", sc.string(), "--out", (d.path / "o.csv").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("/ratio_curve/gapz_nm") != std::string::npos);
    CHECK(r.err.find("unknown field") != std::string::npos);
}

TEST_CASE("bad decay data reports the offending line") {
    TempDir d;
    d.write("decay.csv", "position_um,intensity\n0,100\n50,90\n100,-3\n150,70\n");
    const auto sc = d.write("s.json", R"({"schema_version": 1, "wavelength_nm": 637,
                                          "fit": {"kind": "loss", "data": "decay.csv"}})");
    const auto r = call({"fit", "loss", "--scenario", sc.string(), "--out", (d.path / "o.csv").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("line 4") != std::string::npos);
}

TEST_CASE("unguided cross-section exits with code 4") {
    TempDir d;
    const auto sc = d.write("s.json", std::string(R"({"schema_version": 1, "wavelength_nm": 637, )") + kStack +
                                          R"(, "mode2d": {"waveguide": {"preset": "rib-1um", "width_nm": 100,
                                          "membrane_nm": 60, "slab_nm": 40, "pitch_nm": 10}, "polarizations": ["TM"]}})");
    const auto r = call({"mode2d", "--scenario", sc.string(), "--out", (d.path / "o.csv").string()});
    CHECK(r.code == 4);
    CHECK(r.err.find("unguided") != std::string::npos);
}

TEST_CASE("design sweep with no solvable point exits with code 3") {
    TempDir d;
    const auto sc = d.write("s.json", std::string(R"({"schema_version": 1, "wavelength_nm": 637, )") + kStack +
                                          R"(, "design": {"diameters_nm": [2500], "depths_nm": [20],
                                          "membranes_nm": [120], "gaps_nm": [40], "polarizations": ["TM"], "alpha_db_per_cm": 72,
                                          "waveguide": {"preset": "ring-300nm", "pitch_nm": 20}}})");
    const auto r = call({"design", "--scenario", sc.string(), "--out", (d.path / "o.csv").string()});
    CHECK(r.code == 3);
}

TEST_CASE("coarse grids trigger a warning") {
    TempDir d;
    const auto sc = d.write("s.json", std::string(R"({"schema_version": 1, "wavelength_nm": 637, )") + kStack +
                                          R"(, "mode2d": {"waveguide": {"preset": "rib-1um", "pitch_nm": 25},
                                          "polarizations": ["TE"]}})");
    const auto r = call({"mode2d", "--scenario", sc.string(), "--out", (d.path / "o.csv").string()});
    CHECK(r.code == 0);
    CHECK(r.err.find("warning: grid pitch") != std::string::npos);
    CHECK(slurp(d.path / "o.csv").rfind("polarization,x_nm,y_nm,intensity\nTE,", 0) == 0);
}

TEST_CASE("ratio curve writes SVG only on request and is reproducible") {
    TempDir d;
    const auto sc = (kScenarios / "fig2c.json").string();
    const auto a = d.path / "a.csv", b = d.path / "b.csv";
    REQUIRE(call({"ratio-curve", "--scenario", sc, "--out", a.string(), "--jobs", "1"}).code == 0);
    CHECK_FALSE(fs::exists(d.path / "a.svg"));
    REQUIRE(call({"ratio-curve", "--scenario", sc, "--out", b.string(), "--jobs", "4", "--svg"}).code == 0);
    CHECK(fs::exists(d.path / "b.svg"));
    CHECK(slurp(d.path / "b.svg").find("<svg") != std::string::npos);
    CHECK(slurp(a) == slurp(b));
    const std::string csv = slurp(a);
    CHECK(csv.rfind("polarization,gap_nm,thickness_nm,ratio\n", 0) == 0);
    // 29 thicknesses, 2 gaps, 2 polarizations
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 29 * 4);
}

TEST_CASE("fits recover the synthetic truths") {
    TempDir d;
    auto loss = call({"fit", "loss", "--scenario", (kScenarios / "fig3b-synthetic.json").string(), "--out",
                      (d.path / "loss.csv").string()});
    CHECK(loss.code == 0);
    CHECK(loss.out.find("alpha = 72.00 +/- 0.00 dB/cm") != std::string::npos);
    CHECK(slurp(d.path / "loss.csv").rfind("kind,parameter,estimate,stderr,sse,dof\n", 0) == 0);

    auto gap = call({"fit", "gap", "--scenario", (kScenarios / "gap-fit-synthetic.json").string(), "--out",
                     (d.path / "gap.csv").string(), "--jobs", "2"});
    CHECK(gap.code == 0);
    CHECK(gap.out.find("gap = 4.70") != std::string::npos);
}

TEST_CASE("invalid worker counts are input errors") {
    TempDir d;
    const auto r = call({"fit", "loss", "--scenario", (kScenarios / "fig3b-synthetic.json").string(), "--out",
                         (d.path / "o.csv").string(), "--jobs", "0"});
    CHECK(r.code == 2);
}

}
