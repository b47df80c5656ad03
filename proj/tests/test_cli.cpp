/// @file test_cli.cpp
/// @brief Config parsing, presets, the resolved-config hash and the
///        subcommands' exit codes and output files.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "scns/commands.hpp"
#include "scns/config.hpp"

using namespace scns;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("scns_test_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const std::string kTiny = R"(
[scheme]
m = 4
N = 4
T = 0.05
alpha = 0.1
gamma = 0.005
[grid]
cells = 8x8
[initial.c]
preset = gaussian-bump
amplitude = 1.0
[initial.n]
preset = constant
offset = 1.0
[initial.u]
preset = modes
amplitude = 0.2
[ensemble]
paths = 3
seed = 5
increments = false
[check]
cancellation_samples = 5
)";

}  // namespace

TEST_CASE("parser: sections, comments, quotes and errors") {
    const ConfigMap m = parse_config_text(
        "# leading comment\ntop = 1\n[scheme]\nm = 8   # trailing\n\n[output]\ndir = \"a # b\"\n", "t");
    CHECK(m.at("top") == "1");
    CHECK(m.at("scheme.m") == "8");
    CHECK(m.at("output.dir") == "a # b");
    CHECK(m.size() == 3);
    CHECK_THROWS_AS(parse_config_text("[scheme]\nm = 1\nm = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[scheme\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("novalue\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(" = 3\n"), ConfigError);
    try {
        parse_config_text("a = 1\nb\n", "file.toml");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("file.toml:2") != std::string::npos);
    }
}

TEST_CASE("config values are validated") {
    CHECK_THROWS_AS(config_from_map({{"scheme.bogus", "1"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"scheme.m", "eight"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"scheme.m", "0"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"scheme.alpha", "nan"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"ensemble.paths", "0"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"initial.c.preset", "spiral"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"initial.u.preset", "gaussian-bump"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"grid.dim", "4"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"converge.N_list", "[8, 4]"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"converge.N_list", "[4, 12]"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"debug.break_skew", "maybe"}}), ConfigError);
    CHECK_THROWS_AS(config_from_map({{"solver.kernels", "gpu"}}), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/scns.toml"), ConfigError);

    const RunConfig rc = config_from_map(parse_config_text(kTiny));
    CHECK(rc.scheme.m == 4);
    CHECK(rc.cells[0] == 8);
    CHECK(rc.paths == 3);
    CHECK_FALSE(rc.increments);
    const SchemeParams p = rc.to_params();
    CHECK(p.grid.n[1] == 8);
    CHECK(p.T == 0.05);
}

TEST_CASE("grid specifications") {
    int dim = 2;
    auto c = parse_grid_spec("16", dim);
    CHECK(dim == 2);
    CHECK(c[0] == 16);
    CHECK(c[1] == 16);
    c = parse_grid_spec("8x6x4", dim);
    CHECK(dim == 3);
    CHECK(c[2] == 4);
    c = parse_grid_spec("12X10", dim);
    CHECK(dim == 2);
    CHECK(c[1] == 10);
    CHECK_THROWS_AS(parse_grid_spec("2x2x2x2", dim), ConfigError);
    CHECK_THROWS_AS(parse_grid_spec("ax3", dim), ConfigError);
}

TEST_CASE("presets") {
    const Grid g = Grid::cube(2, 8);
    FieldPreset p;
    CHECK(max_abs(make_field(g, p)) == 0.0);
    p.preset = "constant";
    p.amplitude = 2.0;
    p.offset = 0.5;
    for (double x : make_field(g, p).v) CHECK(x == 2.5);
    p.preset = "checkerboard";
    p.tiles = 2;
    const ScalarField cb = make_field(g, p);
    CHECK(cb.v[0] == 2.5);
    CHECK(cb.v[7] == -1.5);
    p.preset = "gaussian-bump";
    p.offset = 0.0;
    p.center = {0.5625, 0.5625, 0.5};  // the centre of cell (4, 4)
    const ScalarField gb = make_field(g, p);
    CHECK(gb.v[4 + 8 * 4] == doctest::Approx(2.0));
    CHECK(gb.v[0] < gb.v[4 + 8 * 4]);
    p.preset = "linear";
    p.amplitude = 1.0;
    const ScalarField lin = make_field(g, p);
    CHECK(lin.v[8] - lin.v[0] == doctest::Approx(1.0 / 8));
    p.preset = "bogus";
    CHECK_THROWS_AS(make_field(g, p), ConfigError);
}

TEST_CASE("resolved text and hash") {
    RunConfig a = config_from_map(parse_config_text(kTiny));
    RunConfig b = a;
    b.workers = 7;
    CHECK(a.resolved_text() == b.resolved_text());
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    b.seed = 6;
    CHECK(a.hash() != b.hash());
    // the resolved text parses back to the same configuration
    const RunConfig c = config_from_map(parse_config_text(a.resolved_text()));
    CHECK(c.resolved_text() == a.resolved_text());
    CHECK(a.resolved_text().find("workers") == std::string::npos);
    b = a;
    b.out_dir = "elsewhere";
    CHECK(a.hash() == b.hash());
    const std::string hdr = output_header(a, "run");
    CHECK(hdr.rfind("# scns version=", 0) == 0);
    CHECK(hdr.find("command=run") != std::string::npos);
    CHECK(hdr.find("config_hash=" + a.hash()) != std::string::npos);
    CHECK(hdr.find("seed=5") != std::string::npos);
}

TEST_CASE("every key in the shipped configs is documented") {
    std::set<std::string> documented;
    for (const auto& [k, doc] : config_key_docs()) {
        CHECK_FALSE(doc.empty());
        documented.insert(k);
    }
    for (const char* name : {"reference.toml", "smoke.toml", "zero.toml", "converge.toml"}) {
        const fs::path p = fs::path(SCNS_SOURCE_DIR) / "configs" / name;
        std::ifstream f(p);
        std::stringstream ss;
        ss << f.rdbuf();
        const ConfigMap m = parse_config_text(ss.str(), p.string());
        CHECK_NOTHROW(config_from_map(m));
        for (const auto& [k, v] : m) {
            // "section.*" entries document every key of that section
            bool ok = documented.count(k) == 1;
            for (const auto& d : documented)
                if (d.size() > 2 && d.ends_with(".*") && k.starts_with(d.substr(0, d.size() - 1))) ok = true;
            CHECK_MESSAGE(ok, k);
        }
    }
    // and documented keys are accepted by the loader
    const RunConfig rc = config_from_map(parse_config_text(RunConfig{}.resolved_text()));
    CHECK(rc.hash() == RunConfig{}.hash());
}

TEST_CASE("gamma hypothesis warning") {
    SchemeParams p;
    p.mu = 0.05;
    p.gamma = 0.0;
    CHECK(gamma_hypothesis_warning(p).empty());
    p.gamma = 0.05;
    const std::string w = gamma_hypothesis_warning(p);
    CHECK(w.find("1/484") != std::string::npos);
    p.gamma = std::sqrt(p.mu / 484.0) * 0.99;
    CHECK(gamma_hypothesis_warning(p).empty());
}

TEST_CASE("subcommands: exit codes and outputs") {
    const fs::path d = scratch("cmds");
    const fs::path cfg = write(d, "tiny.toml", kTiny);
    CommandOptions opt;
    opt.config_path = cfg.string();
    opt.out = (d / "run").string();
    opt.quiet = true;
    std::ostringstream out, err;
    CHECK(run_command("run", opt, out, err) == kExitOk);
    CHECK(fs::exists(d / "run" / "summary.json"));
    CHECK(fs::exists(d / "run" / "paths.csv"));
    const std::string paths_csv = slurp(d / "run" / "paths.csv");
    CHECK(paths_csv.rfind("# scns version=", 0) == 0);

    // same seed, different workers: identical files
    opt.workers = 3;
    opt.out = (d / "run3").string();
    CHECK(run_command("run", opt, out, err) == kExitOk);
    CHECK(slurp(d / "run3" / "paths.csv") == paths_csv);
    CHECK(slurp(d / "run3" / "summary.json") == slurp(d / "run" / "summary.json"));

    opt.out = (d / "check").string();
    CHECK(run_command("check", opt, out, err) == kExitOk);
    CHECK(fs::exists(d / "check" / "report.json"));

    opt.out = (d / "theta").string();
    CHECK(run_command("dump-theta", opt, out, err) == kExitOk);
    CHECK(fs::exists(d / "theta" / "theta.csv"));
    opt.out = (d / "basis").string();
    CHECK(run_command("dump-basis", opt, out, err) == kExitOk);
    CHECK(fs::exists(d / "basis" / "eigenvalues.csv"));

    // break the skew forms: the cancellation checks must fail
    const fs::path broken = write(d, "broken.toml", kTiny + "[debug]\nbreak_skew = true\n");
    CommandOptions bo = opt;
    bo.config_path = broken.string();
    bo.out = (d / "broken").string();
    CHECK(run_command("check", bo, out, err) != kExitOk);

    // configuration errors
    std::ostringstream e2;
    CommandOptions bad = opt;
    bad.config_path = write(d, "bad.toml", "[scheme]\nm = -3\n").string();
    CHECK(run_command("run", bad, out, e2) == kExitConfig);
    CHECK(e2.str().find("config error") != std::string::npos);
    bad.config_path = (d / "missing.toml").string();
    CHECK(run_command("run", bad, out, e2) == kExitConfig);
    CHECK(run_command("bogus", opt, out, e2) == kExitConfig);
    CommandOptions g = opt;
    g.grid = "8x8x8x8";
    CHECK(run_command("run", g, out, e2) == kExitConfig);

    // the gamma warning is printed
    std::ostringstream ew;
    CommandOptions gw = opt;
    std::string loud = kTiny;
    loud.replace(loud.find("gamma = 0.005"), 13, "gamma = 0.05");
    gw.config_path = write(d, "gw.toml", loud).string();
    gw.out = (d / "gw").string();
    CHECK(run_command("run", gw, out, ew) == kExitOk);
    CHECK(ew.str().find("1/484") != std::string::npos);
    fs::remove_all(d);
}

TEST_CASE("converge subcommand writes the study tables") {
    const fs::path d = scratch("conv");
    const fs::path cfg = write(d, "c.toml", kTiny + "[converge]\nN_list = [2, 4]\n");
    CommandOptions opt;
    opt.config_path = cfg.string();
    opt.out = (d / "out").string();
    opt.quiet = true;
    std::ostringstream out, err;
    CHECK(run_command("converge", opt, out, err) == kExitOk);
    const std::string csv = slurp(d / "out" / "converge.csv");
    CHECK(csv.rfind("# scns version=", 0) == 0);
    CHECK(csv.find("\nN,h,") != std::string::npos);
    CHECK(fs::exists(d / "out" / "converge_long.csv"));
    CHECK(fs::exists(d / "out" / "converge.json"));
    fs::remove_all(d);
}
